"""Command-line front door: solve single instances from JSON, run experiment
sweeps (CSV + gnuplot script + PNG figure), and query geometry diagnostics.

Exit codes: 0 ok, 2 malformed config, 3 runtime/solver failure. stdout
carries machine-readable output only; diagnostics go to stderr.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import experiments, figures, geometry
from .linalg import dct_matrix, random_orthogonal
from .norms import ComponentSpec
from .solver import SolverConfig, SuperpositionProblem, apg_solve

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    pass


def _require(cfg, key, path):
    if key not in cfg:
        raise ConfigError(f"missing required field {path}.{key}")
    return cfg[key]


def _rotation_from(value, p, seed):
    if value in (None, "identity"):
        return np.eye(p)
    if value == "dct":
        return dct_matrix(p)
    if value == "random":
        return random_orthogonal(p, seed)
    if isinstance(value, list):
        return np.asarray(value, dtype=float)
    raise ConfigError(f"unknown rotation {value!r}")


def _component_from(cfg, p, seed, path):
    kind = _require(cfg, "norm", path)
    radius = float(_require(cfg, "radius", path))
    if kind == "l1":
        return ComponentSpec(kind="l1", radius=radius)
    if kind == "rotated_l1":
        rot = _rotation_from(cfg.get("rotation", "identity"), p, seed)
        return ComponentSpec(kind="rotated_l1", radius=radius, rotation=rot)
    if kind == "nuclear":
        shape = _require(cfg, "shape", path)
        return ComponentSpec(kind="nuclear", radius=radius, matrix_shape=tuple(shape))
    if kind == "ksupport":
        k = int(_require(cfg, "k", path))
        rot = None
        if "rotation" in cfg and cfg["rotation"] != "identity":
            rot = _rotation_from(cfg["rotation"], p, seed)
        return ComponentSpec(kind="ksupport", radius=radius, k=k, rotation=rot)
    raise ConfigError(f"unknown norm {kind!r} at {path}.norm")


def _solver_from(cfg):
    cfg = cfg or {}
    return SolverConfig(
        eta0=float(cfg.get("eta0", 1.0)),
        beta=float(cfg.get("beta", 0.5)),
        max_iter=int(cfg.get("max_iter", 5000)),
        rel_tol=float(cfg.get("rel_tol", 1e-10)),
        max_backtracks=int(cfg.get("max_backtracks", 60)),
    )


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def cmd_solve(args):
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    y = np.asarray(_require(cfg, "y", "$"), dtype=float)
    X = np.asarray(_require(cfg, "X", "$"), dtype=float)
    if X.ndim != 2:
        raise ConfigError("$.X must be a nested array (n rows of p entries)")
    comps_cfg = _require(cfg, "components", "$")
    if not comps_cfg:
        raise ConfigError("$.components must be nonempty")
    p = X.shape[1]
    components = [
        _component_from(c, p, seed + i, f"$.components[{i}]") for i, c in enumerate(comps_cfg)
    ]
    try:
        problem = SuperpositionProblem(
            y=y, X=X, components=components, ground_truth=cfg.get("ground_truth")
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = apg_solve(problem, _solver_from(cfg.get("solver")))
    out = {
        "estimates": [t.tolist() for t in result.estimates],
        "objective": result.objective,
        "iterations": result.iterations,
    }
    if result.componentwise_error is not None:
        out["componentwise_error"] = result.componentwise_error
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "result.json"), "w") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    print(json.dumps({"objective": result.objective, "iterations": result.iterations}))
    return 0


_PRESETS = {
    "fig-noise-desk": {
        "kind": "error_vs_n",
        "p": 200,
        "s1": 1,
        "s2": 1,
        "q_kind": "random_orthogonal",
        "noise_sigma": 1.0,
        "n_grid": [25, 50, 100, 200],
        "trials": 5,
        "base_seed": 0,
        "solver": {"max_iter": 1000, "rel_tol": 1e-9},
    },
}


def _mca_config_from(cfg, seed_override, **overrides):
    try:
        return experiments.McaConfig(
            p=int(_require(cfg, "p", "$")),
            s1=int(cfg.get("s1", 1)),
            s2=int(cfg.get("s2", 1)),
            q_kind=cfg.get("q_kind", "identity"),
            noise_sigma=float(cfg.get("noise_sigma", 0.0)),
            n_grid=tuple(cfg.get("n_grid", ())),
            trials=int(cfg.get("trials", 1)),
            base_seed=seed_override if seed_override is not None else int(cfg.get("base_seed", 0)),
            norm_kind=cfg.get("norm_kind", "l1"),
            **overrides,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _summary_lines(rows):
    for row in rows:
        print(",".join(_stringify(x) for x in row))


def _stringify(x):
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def cmd_experiment(args):
    cfg = _load_config(args.config)
    if "preset" in cfg:
        name = cfg["preset"]
        if name not in _PRESETS:
            raise ConfigError(f"unknown preset {name!r}")
        merged = dict(_PRESETS[name])
        merged.update({k: v for k, v in cfg.items() if k != "preset"})
        cfg = merged
    kind = _require(cfg, "kind", "$")
    solver = _solver_from(cfg.get("solver"))
    threads = args.threads or 1
    os.makedirs(args.out, exist_ok=True)

    if kind == "error_vs_n":
        config = _mca_config_from(cfg, args.seed)
        records = experiments.run_error_vs_n(config, solver, threads=threads)
        csv_path = os.path.join(args.out, "records.csv")
        experiments.emit_csv(records, csv_path)
        experiments.emit_gnuplot(os.path.join(args.out, "plot.gp"), "records.csv", mode="error")
        figures.render_error_curves({config.q_kind: records}, os.path.join(args.out, "plot.png"))
        means = experiments.mean_error_by_n(records)
        _summary_lines([("n", "mean_total_error")] + [(n, m) for n, m in means.items()])
        return 0

    if kind == "phase":
        p_grid = _require(cfg, "p_grid", "$")
        configs = [
            _mca_config_from({**cfg, "p": p, "noise_sigma": 0.0}, args.seed) for p in p_grid
        ]
        grouped = experiments.run_phase_transition(configs, solver, threads=threads)
        for p, records in grouped.items():
            experiments.emit_csv(records, os.path.join(args.out, f"records_p{p}.csv"))
        experiments.emit_gnuplot(
            os.path.join(args.out, "plot.gp"),
            f"records_p{p_grid[0]}.csv",
            mode="fraction",
            title="recovery fraction vs n",
        )
        figures.render_fraction_curves(
            {f"p={p}": recs for p, recs in grouped.items()}, os.path.join(args.out, "plot.png")
        )
        rows = [("p", "n", "fraction_recovered")]
        for p, records in grouped.items():
            rows += [(p, n, f) for n, f in experiments.fraction_recovered_by_n(records).items()]
        _summary_lines(rows)
        return 0

    if kind == "ksupport":
        config = _mca_config_from({**cfg, "norm_kind": "ksupport"}, args.seed)
        s_grid = tuple(tuple(s) for s in cfg.get("s_grid", ((2, 2), (2, 3), (3, 2), (3, 3))))
        p_grid = tuple(cfg.get("p_grid", (100, 150)))
        grouped = experiments.run_ksupport_experiment(
            config, solver, s_grid=s_grid, p_grid=p_grid, threads=threads
        )
        for (p, s1, s2), records in grouped.items():
            experiments.emit_csv(records, os.path.join(args.out, f"records_p{p}_s{s1}{s2}.csv"))
        first = next(iter(grouped))
        experiments.emit_gnuplot(
            os.path.join(args.out, "plot.gp"),
            f"records_p{first[0]}_s{first[1]}{first[2]}.csv",
            mode="error",
        )
        figures.render_error_curves(
            {f"p={p} s=({s1},{s2})": recs for (p, s1, s2), recs in grouped.items()},
            os.path.join(args.out, "plot.png"),
        )
        rows = [("p", "s1", "s2", "n", "mean_total_error")]
        for (p, s1, s2), records in grouped.items():
            rows += [(p, s1, s2, n, m) for n, m in experiments.mean_error_by_n(records).items()]
        _summary_lines(rows)
        return 0

    raise ConfigError(f"unknown experiment kind {kind!r}")


def _cone_from(cfg, seed, path):
    anchor = np.asarray(_require(cfg, "anchor", path), dtype=float)
    spec = _component_from(_require(cfg, "spec", path), anchor.size, seed, f"{path}.spec")
    return spec, anchor


def cmd_width(args):
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    method = _require(cfg, "method", "$")
    if method == "subspace":
        est = geometry.gaussian_width_subspace(
            int(_require(cfg, "dim", "$")), int(_require(cfg, "ambient", "$"))
        )
    elif method == "cone":
        spec, anchor = _cone_from(cfg, seed, "$")
        draws = int(cfg.get("draws", 1000))
        pool = int(cfg.get("pool", 1000))
        if draws < 1 or pool < 1:
            raise ConfigError("draws and pool must be >= 1")
        est = geometry.gaussian_width_cone_mc(spec, anchor, draws, pool, seed=seed)
    elif method == "l1_normal_cone":
        draws = int(cfg.get("draws", 1000))
        if draws < 1:
            raise ConfigError("draws must be >= 1")
        anchor = np.asarray(_require(cfg, "anchor", "$"), dtype=float)
        est = geometry.width_upper_bound_l1_cone(
            int(_require(cfg, "sparsity", "$")), int(_require(cfg, "p", "$")), anchor,
            draws, seed=seed,
        )
    else:
        raise ConfigError(f"unknown width method {method!r}")
    print(
        json.dumps(
            {
                "value": est.value,
                "std_error": est.std_error,
                "method": est.method,
                "draws": est.draws,
            }
        )
    )
    return 0


def cmd_sc_estimate(args):
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    cones_cfg = _require(cfg, "cones", "$")
    if not cones_cfg:
        raise ConfigError("$.cones must be nonempty")
    cones = [_cone_from(c, seed + i, f"$.cones[{i}]") for i, c in enumerate(cones_cfg)]
    tuples = int(cfg.get("tuples", 1000))
    samples = int(cfg.get("samples_per_cone", 500))
    if tuples < 1 or samples < 1:
        raise ConfigError("tuples and samples_per_cone must be >= 1")
    X = np.asarray(cfg["X"], dtype=float) if "X" in cfg else None
    report = geometry.geometry_report(
        cones, X=X, tuples=tuples, samples_per_cone=samples, seed=seed
    )
    out = {
        "rho_hat": report.rho_hat,
        "delta_hat": report.delta_hat if len(cones) >= 2 else None,
        "kappa_hat": None if math.isnan(report.kappa_hat) else report.kappa_hat,
        "bias_direction": "rho/kappa sampled minima over-estimate; delta under-estimates",
        "num_samples": report.num_samples,
        "seed": report.seed,
    }
    print(json.dumps(out))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="suprec")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, fn in (
        ("solve", cmd_solve),
        ("experiment", cmd_experiment),
        ("width", cmd_width),
        ("sc-estimate", cmd_sc_estimate),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("config", help="JSON config file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="seed override")
        sp.add_argument("--threads", type=int, default=None, help="worker threads")
        sp.set_defaults(fn=fn)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # solver / runtime failures
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
