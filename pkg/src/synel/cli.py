"""Command-line frontend: configure experiments, run samplers, emit results.

Subcommands: ``bsl-run``, ``el-test``, ``bcel``, ``amis``, ``gk-bf``,
``bcop``.  Config-driven commands read a JSON file, write bulk samples to
the configured output path, and print a summary JSON document on stdout.
Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical/degeneracy
error.  Every command is deterministic given (config, seed), for any
``--threads`` value.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from .bcel import AmisConfig, BcelConfig, run_bcel, run_bcel_amis, run_bcel_resampled
from .copula import ClaytonCopula, clayton_sample, pseudo_observations, run_bcop, spearman_rho_multivariate
from .empirical_likelihood import el_test
from .errors import ConfigError, DataError, DegenerateSampleError, SynelError
from .mcmc import MCMCConfig, normalized_ess, run_mcmc_bsl
from .models import GkParams, QuantileConstraintSpec, gk_log_bayes_factor, gk_simulate, mvn_toy_simulator
from .priors import prior_from_config
from .rng import RngStream

# Stream ids hanging off the config seed: bulk data generation, observed
# summary, and the sampler itself.
_DATA_STREAM = 101
_OBS_STREAM = 102
_SAMPLER_STREAM = 103
_RESAMPLE_STREAM = 104


def _fmt(x) -> str:
    return repr(float(x))


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _require(cfg: dict, key: str, where: str = "config"):
    if key not in cfg:
        raise ConfigError(f"missing {where} key {key!r}")
    return cfg[key]


def _read_matrix(path: str) -> np.ndarray:
    """Parse a numeric CSV into an (n, d) matrix; optional header row."""
    rows = []
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            for lineno, row in enumerate(reader, start=1):
                if not row or all(cell.strip() == "" for cell in row):
                    continue
                try:
                    rows.append([float(cell) for cell in row])
                except ValueError as exc:
                    if lineno == 1:
                        continue  # header row
                    raise DataError(f"{path}: line {lineno}: {exc}") from exc
    except OSError as exc:
        raise DataError(f"cannot read data file: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no numeric rows found")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: rows have inconsistent column counts {sorted(widths)}")
    return np.asarray(rows, dtype=float)


def _histogram(values, weights, bins: int) -> dict:
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, weights=weights)
    return {"bin_edges": [float(e) for e in edges], "counts": [float(c) for c in counts]}


def _write_table(path: str, header: list[str], rows, fmt: str = "csv") -> None:
    if fmt == "json":
        payload = {"columns": header, "rows": [[float(v) for v in row] for row in rows]}
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh)
            fh.write("\n")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _emit_summary(command: str, seed: int, config: dict, results: dict, diagnostics: dict) -> None:
    doc = {
        "command": command,
        "seed": seed,
        "config": config,
        "results": results,
        "diagnostics": diagnostics,
    }
    json.dump(doc, sys.stdout)
    sys.stdout.write("\n")


def _effective_seed(cfg: dict, args) -> int:
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None:
        raise ConfigError("no seed given (config 'seed' or --seed)")
    return int(seed)


def _build_model(cfg: dict):
    name = _require(cfg, "name", "model")
    if name == "mvn-toy":
        return mvn_toy_simulator(_require(cfg, "mean", "model"), _require(cfg, "covariance", "model"))
    raise ConfigError(f"unknown model {name!r}")


# ---------------------------------------------------------------- constraints

def _constraint_from_config(cfg: dict):
    name = _require(cfg, "name", "constraint")
    if name == "mean":
        def h(y, theta):
            return np.atleast_1d(np.asarray(y, dtype=float) - theta)

        return h, None
    if name == "median":
        def h(y, theta):
            return np.atleast_1d((np.asarray(y, dtype=float) < theta).astype(float) - 0.5)

        return h, None
    if name == "prob-below":
        threshold = _require(cfg, "threshold", "constraint")

        def h(y, theta):
            return np.atleast_1d((np.asarray(y, dtype=float) < threshold).astype(float) - theta)

        return h, float(threshold)
    raise ConfigError(f"unknown constraint {name!r}")


def _load_data(cfg: dict, rng: RngStream) -> np.ndarray:
    if "file" in cfg:
        data = _read_matrix(cfg["file"])
        col = cfg.get("column")
        if col is not None:
            data = data[:, int(col)]
        elif data.shape[1] == 1:
            data = data[:, 0]
        return data
    if "generator" in cfg:
        gen_cfg = cfg["generator"]
        kind = _require(gen_cfg, "name", "data.generator")
        nobs = int(_require(gen_cfg, "n", "data.generator"))
        gen = rng.substream(_DATA_STREAM).generator()
        if kind == "normal":
            return float(gen_cfg.get("mean", 0.0)) + float(gen_cfg.get("sd", 1.0)) * gen.standard_normal(nobs)
        if kind == "gk":
            params = GkParams(*[float(v) for v in _require(gen_cfg, "params", "data.generator")])
            return gk_simulate(nobs, params, gen)
        if kind == "clayton-gk":
            dim = int(_require(gen_cfg, "dim", "data.generator"))
            psi = float(_require(gen_cfg, "psi", "data.generator"))
            params = GkParams(*[float(v) for v in _require(gen_cfg, "gk", "data.generator")])
            u = clayton_sample(nobs, ClaytonCopula(dim, psi), gen)
            from scipy.special import ndtri

            from .models import _gk_transform

            return _gk_transform(ndtri(u), params)
        raise ConfigError(f"unknown data generator {kind!r}")
    raise ConfigError("data config needs 'file' or 'generator'")


# ------------------------------------------------------------------- commands

def _cmd_bsl_run(args) -> int:
    cfg = _load_config(args.config)
    seed = _effective_seed(cfg, args)
    model = _build_model(_require(cfg, "model"))
    prior = prior_from_config(_require(cfg, "prior"))
    s_cfg = _require(cfg, "sampler")
    mcfg = MCMCConfig(
        iterations=int(_require(s_cfg, "iterations", "sampler")),
        initial=_require(s_cfg, "initial", "sampler"),
        n=int(_require(s_cfg, "n", "sampler")),
        proposal_cov=s_cfg.get("proposal_cov"),
        estimator=s_cfg.get("estimator", "plugin"),
        burn_in=int(s_cfg.get("burn_in", 0)),
        threads=args.threads,
    )
    output = _require(cfg, "output")
    fmt = cfg.get("format", "csv")
    rng = RngStream(seed)
    s_obs = cfg.get("s_obs")
    if s_obs is None:
        gen = rng.substream(_OBS_STREAM).generator()
        s_obs = model.simulate(model.reference_mean, gen)
    s_obs = np.atleast_1d(np.asarray(s_obs, dtype=float))

    t0 = time.perf_counter()
    trace = run_mcmc_bsl(model, s_obs, prior, mcfg, rng.substream(_SAMPLER_STREAM))
    runtime_ms = (time.perf_counter() - t0) * 1000.0

    if fmt == "json":
        header = ["iteration", *[f"theta_{j}" for j in range(model.param_dim)], "log_sl", "accepted"]
        rows = [
            [i, *trace.states[i], trace.log_sl[i], 0 if i == 0 else int(trace.accepted[i - 1])]
            for i in range(trace.states.shape[0])
        ]
        _write_table(output, header, rows, fmt="json")
    else:
        trace.to_csv(output)

    post = trace.post_burn_in()
    try:
        ness = [float(v) for v in normalized_ess(trace, trace.n_simulations)]
    except (SynelError, DegenerateSampleError):
        ness = None
    results = {
        "posterior_mean": [float(v) for v in post.mean(axis=0)],
        "posterior_sd": [float(v) for v in post.std(axis=0, ddof=1)],
        "acceptance_rate": trace.acceptance_rate,
        "normalized_ess": ness,
        "n_simulations": trace.n_simulations,
        "histograms": [_histogram(post[:, j], None, args.bins) for j in range(post.shape[1])],
    }
    cfg_echo = dict(cfg)
    cfg_echo["seed"] = seed
    _emit_summary("bsl-run", seed, cfg_echo, results, {"ess": ness, "runtime_ms": runtime_ms})
    return 0


def _cmd_el_test(args) -> int:
    theta = np.asarray([float(v) for v in args.theta.split(",")], dtype=float)
    c_cfg = {"name": args.constraint}
    if args.threshold is not None:
        c_cfg["threshold"] = args.threshold
    h, _ = _constraint_from_config(c_cfg)
    data = _read_matrix(args.data)
    if data.shape[1] == 1:
        data = data[:, 0]
    if args.constraint == "mean":
        want = 1 if data.ndim == 1 else data.shape[1]
        if theta.size != want:
            raise ConfigError(f"theta must have {want} coordinates for the mean constraint")
        theta_arg = theta if theta.size > 1 else float(theta[0])
    else:
        if theta.size != 1:
            raise ConfigError("theta must be scalar for this constraint")
        theta_arg = float(theta[0])

    t0 = time.perf_counter()
    res = el_test(data, theta_arg, h)
    runtime_ms = (time.perf_counter() - t0) * 1000.0
    doc = {
        "command": "el-test",
        "neg2llr": res.neg2llr if np.isfinite(res.neg2llr) else None,
        "p_value": res.p_value,
        "lambda": [float(v) for v in np.atleast_1d(res.lam)],
        "iterations": res.iterations,
        "infeasible": not res.feasible,
        "diagnostics": {"runtime_ms": runtime_ms},
    }
    json.dump(doc, sys.stdout)
    sys.stdout.write("\n")
    return 0


def _weighted_summary(sample, bins: int) -> dict:
    wn = sample.normalized_weights()
    mean = wn @ sample.points
    var = wn @ (sample.points - mean) ** 2
    return {
        "posterior_mean": [float(v) for v in mean],
        "posterior_sd": [float(np.sqrt(v)) for v in var],
        "ess": sample.ess(),
        "histograms": [
            _histogram(sample.points[:, j], wn, bins) for j in range(sample.dim)
        ],
    }


def _write_weighted(path: str, sample, fmt: str) -> None:
    header = [*[f"theta_{j}" for j in range(sample.dim)], "weight", "generation"]
    weights = sample.weights
    rows = [
        [*sample.points[i], weights[i], sample.generations[i]]
        for i in range(sample.size)
    ]
    if fmt == "json":
        _write_table(path, header, rows, fmt="json")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(sample.size):
            writer.writerow(
                [*[_fmt(v) for v in sample.points[i]], _fmt(weights[i]), str(int(sample.generations[i]))]
            )


def _bcel_common(args, amis: bool) -> int:
    cfg = _load_config(args.config)
    seed = _effective_seed(cfg, args)
    rng = RngStream(seed)
    data = _load_data(_require(cfg, "data"), rng)
    prior = prior_from_config(_require(cfg, "prior"))
    h, _ = _constraint_from_config(_require(cfg, "constraint"))
    s_cfg = _require(cfg, "sampler")
    output = _require(cfg, "output")
    fmt = cfg.get("format", "csv")

    def h_bound(y, theta):
        th = theta if prior.dim > 1 else float(np.atleast_1d(theta)[0])
        return h(y, th)

    common = dict(
        m_draws=int(_require(s_cfg, "draws", "sampler")),
        prior=prior,
        constraint=h_bound,
        flavor=s_cfg.get("flavor", "el"),
        resample_count=s_cfg.get("resample"),
    )
    t0 = time.perf_counter()
    if amis:
        config = AmisConfig(
            **common,
            generations=int(_require(s_cfg, "generations", "sampler")),
            jitter=s_cfg.get("jitter"),
            mixture=s_cfg.get("mixture", "as_printed"),
        )
        sample = run_bcel_amis(data, config, rng.substream(_SAMPLER_STREAM))
    else:
        config = BcelConfig(**common)
        sample = run_bcel(data, config, rng.substream(_SAMPLER_STREAM))
    runtime_ms = (time.perf_counter() - t0) * 1000.0

    _write_weighted(output, sample, fmt)
    results = _weighted_summary(sample, args.bins)
    if config.resample_count:
        draws = sample.resample(config.resample_count, rng.substream(_RESAMPLE_STREAM).generator())
        results["resampled"] = {
            "mean": [float(v) for v in draws.mean(axis=0)],
            "sd": [float(v) for v in draws.std(axis=0, ddof=1)],
            "count": int(config.resample_count),
        }
    cfg_echo = dict(cfg)
    cfg_echo["seed"] = seed
    command = "amis" if amis else "bcel"
    _emit_summary(command, seed, cfg_echo, results, {"ess": results["ess"], "runtime_ms": runtime_ms})
    return 0


def _cmd_bcel(args) -> int:
    return _bcel_common(args, amis=False)


def _cmd_amis(args) -> int:
    return _bcel_common(args, amis=True)


def _cmd_gk_bf(args) -> int:
    cfg = _load_config(args.config)
    seed = _effective_seed(cfg, args)
    true_params = GkParams(*[float(v) for v in _require(cfg, "true_model")])
    alts = [GkParams(*[float(v) for v in m]) for m in _require(cfg, "alt_models")]
    sizes = [int(v) for v in cfg.get("sample_sizes", [100, 500])]
    nrep = int(cfg.get("replicates", 100))
    spec = QuantileConstraintSpec(
        tuple(cfg.get("probabilities", (0.1, 0.25, 0.5, 0.75, 0.9))),
        reference_deviates=cfg.get("reference_deviates", "probability"),
    )
    output = _require(cfg, "output")
    fmt = cfg.get("format", "csv")
    if not alts or nrep < 1 or not sizes:
        raise ConfigError("need at least one alternative model, one size, one replicate")

    rng = RngStream(seed)
    header = [f"model1_vs_model{j + 2}_n{n}" for j in range(len(alts)) for n in sizes]
    t0 = time.perf_counter()
    matrix = np.empty((nrep, len(alts) * len(sizes)))
    for si, n in enumerate(sizes):
        for r in range(nrep):
            data = gk_simulate(n, true_params, rng.substream(_DATA_STREAM, si, r))
            for j, alt in enumerate(alts):
                matrix[r, j * len(sizes) + si] = gk_log_bayes_factor(data, true_params, alt, spec)
    runtime_ms = (time.perf_counter() - t0) * 1000.0

    _write_table(output, header, matrix, fmt)
    medians = {name: float(np.median(matrix[:, k])) for k, name in enumerate(header)}
    cfg_echo = dict(cfg)
    cfg_echo["seed"] = seed
    _emit_summary(
        "gk-bf",
        seed,
        cfg_echo,
        {"median_log_bf": medians, "replicates": nrep},
        {"ess": None, "runtime_ms": runtime_ms},
    )
    return 0


def _cmd_bcop(args) -> int:
    cfg = _load_config(args.config)
    seed = _effective_seed(cfg, args)
    rng = RngStream(seed)
    data = _load_data(_require(cfg, "data"), rng)
    if data.ndim != 2 or data.shape[1] < 2:
        raise DataError("bcop needs an (n, d) data matrix with d >= 2")
    prior = prior_from_config(cfg["prior"]) if "prior" in cfg else None
    b_draws = int(cfg.get("draws", 10_000))
    flavor = cfg.get("flavor", "per-observation")
    likelihood = cfg.get("likelihood", "el")
    output = _require(cfg, "output")
    fmt = cfg.get("format", "csv")

    t0 = time.perf_counter()
    sample = run_bcop(
        data,
        prior=prior,
        b_draws=b_draws,
        rng=rng.substream(_SAMPLER_STREAM),
        flavor=flavor,
        likelihood=likelihood,
    )
    runtime_ms = (time.perf_counter() - t0) * 1000.0

    header = ["rho", "weight"]
    weights = sample.weights
    if fmt == "json":
        _write_table(output, header, [[sample.points[i, 0], weights[i]] for i in range(sample.size)], "json")
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for i in range(sample.size):
                writer.writerow([_fmt(sample.points[i, 0]), _fmt(weights[i])])

    rho_hat = spearman_rho_multivariate(pseudo_observations(data))
    results = _weighted_summary(sample, args.bins)
    hist = results["histograms"][0]
    mode_bin = int(np.argmax(hist["counts"]))
    results["posterior_mode"] = 0.5 * (hist["bin_edges"][mode_bin] + hist["bin_edges"][mode_bin + 1])
    results["rho_hat"] = rho_hat
    cfg_echo = dict(cfg)
    cfg_echo["seed"] = seed
    _emit_summary("bcop", seed, cfg_echo, results, {"ess": results["ess"], "runtime_ms": runtime_ms})
    return 0


# ----------------------------------------------------------------- dispatcher

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_arg=True):
        if config_arg:
            p.add_argument("config", help="path to a JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker threads for replicate simulation (output is identical for any value)")
        p.add_argument("--bins", type=int, default=50, help="histogram bins in the summary JSON")

    p = sub.add_parser("bsl-run", help="MCMC over the synthetic-likelihood posterior")
    add_common(p)
    p.set_defaults(func=_cmd_bsl_run)

    p = sub.add_parser("el-test", help="empirical-likelihood ratio test on CSV data")
    p.add_argument("data", help="CSV file of observations")
    p.add_argument("--constraint", default="mean", choices=["mean", "median", "prob-below"])
    p.add_argument("--theta", required=True, help="comma-separated constraint value(s)")
    p.add_argument("--threshold", type=float, default=None, help="threshold for prob-below")
    p.set_defaults(func=_cmd_el_test)

    p = sub.add_parser("bcel", help="prior importance sampling with EL weights")
    add_common(p)
    p.set_defaults(func=_cmd_bcel)

    p = sub.add_parser("amis", help="adaptive multiple importance sampling with EL weights")
    add_common(p)
    p.set_defaults(func=_cmd_amis)

    p = sub.add_parser("gk-bf", help="g-and-k log Bayes factor replication matrix")
    add_common(p)
    p.set_defaults(func=_cmd_gk_bf)

    p = sub.add_parser("bcop", help="EL posterior for the multivariate Spearman rho")
    add_common(p)
    p.set_defaults(func=_cmd_bcop)
    return parser


def _error_json(kind: str, exc: Exception) -> None:
    json.dump({"error": {"type": kind, "message": str(exc)}}, sys.stdout)
    sys.stdout.write("\n")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _error_json("config", exc)
        return 2
    except DataError as exc:
        _error_json("data", exc)
        return 3
    except SynelError as exc:
        _error_json("numerical", exc)
        return 4


if __name__ == "__main__":
    sys.exit(main())
