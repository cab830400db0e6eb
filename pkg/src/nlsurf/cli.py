"""Command-line pipeline: simulate, train, calibrate, surface, mle, region, study, bench.

The CLI is a thin shell over the library modules. Every command reads a
JSON run configuration (--config), writes its artifact under --out through
a temp-then-rename so partial outputs never look complete, and drops a
provenance.json recording input hashes, seeds and library versions.

Environment: NL_LOG=debug|info|warning controls structured logging.
Exit codes: 0 success, 2 configuration error, 3 numeric error, 4 format error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import shutil
import sys
import time
from contextlib import contextmanager

import numpy as np
import scipy

from . import __version__
from .br_pairwise import (
    adjusted_surface,
    build_pair_scheme,
    load_adjustment,
    pairwise_surface,
)
from .calibrate import fit_platt, load_platt, reliability_curve, save_platt
from .errors import (
    EXIT_CONFIG,
    EXIT_FORMAT,
    EXIT_NUMERIC,
    EXIT_OK,
    ConfigurationError,
    FormatError,
    InvalidArgumentError,
    NumericError,
)
from .eval_harness import (
    EvalConfig,
    SurfaceMethod,
    run_coverage_study,
    run_estimation_study,
    run_study,
    run_timing_study,
    thread_limit,
    write_records_csv,
    write_summary_csv,
)
from .gp_likelihood import gp_surface
from .grids import GridSpec, ParameterGrid, Surface, make_parameter_grid
from .inference import (
    confidence_region,
    grid_mle,
    load_surface,
    neural_surface,
    region_area,
    save_region,
    save_surface,
)
from .neural import (
    CnnModel,
    TrainConfig,
    desk_architecture,
    forward_batch,
    load_model,
    mini_architecture,
    reference_architecture,
    save_model,
    train,
    train_with_restarts,
)
from .simulate import (
    PROCESS_BR,
    PROCESS_GP,
    SimConfig,
    build_pair_dataset,
    load_dataset,
    save_dataset,
)
from .tensorio import read_json, read_tensor, write_json

logger = logging.getLogger("nlsurf.cli")


def _setup_logging() -> None:
    level = os.environ.get("NL_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )


# ---------------------------------------------------------------------------
# Run configuration: schema-checked JSON.

_SCHEMA = {
    "process": str,
    "grid": {"side": int, "domain_min": (int, float), "domain_max": (int, float)},
    "sim": {
        "m": int,
        "n": int,
        "bounds": list,
        "seed": int,
        "n_spectral": int,
    },
    "train": {
        "architecture": (str, dict),
        "batch_size": int,
        "epochs": int,
        "lr_initial": (int, float),
        "lr_hold_epochs": int,
        "lr_decay_factor": (int, float),
        "adam_eps": (int, float),
        "seed": int,
        "max_attempts": int,
        "plateau_loss": (int, float),
        "validation_fraction": (int, float),
    },
    "calibrate": {"m": int, "n": int, "seed": int, "bounds": list},
    "surface": {"bounds": list, "counts": list},
    "eval": {
        "eval_counts": list,
        "eval_values": list,
        "replicates": int,
        "alpha": (int, float),
        "seed": int,
        "methods": list,
        "deltas": list,
        "timing_fields": int,
        "adjustment": str,
    },
}


def _check_section(doc: dict, schema: dict, path: str) -> None:
    for key, value in doc.items():
        if key not in schema:
            raise ConfigurationError(f"unknown config key {path}{key}")
        expected = schema[key]
        if isinstance(expected, dict):
            if not isinstance(value, dict):
                raise ConfigurationError(f"config key {path}{key} must be an object")
            _check_section(value, expected, f"{path}{key}.")
        elif not isinstance(value, expected):
            raise ConfigurationError(
                f"config key {path}{key} has type {type(value).__name__}"
            )


def load_config(path) -> dict:
    if path is None:
        raise ConfigurationError("--config is required for this command")
    if not os.path.exists(path):
        raise ConfigurationError(f"config file {path} does not exist")
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: config root must be a JSON object")
    _check_section(doc, _SCHEMA, "")
    return doc


def _process_of(args, config) -> str:
    raw = args.process or config.get("process")
    if raw in ("gp", PROCESS_GP):
        return PROCESS_GP
    if raw in ("br", PROCESS_BR):
        return PROCESS_BR
    raise ConfigurationError(f"process must be gp or br, got {raw!r}")


def _grid_of(config) -> GridSpec:
    g = config.get("grid")
    if g is None:
        raise ConfigurationError("config section 'grid' is missing")
    return GridSpec(g["side"], g.get("domain_min", -10.0), g.get("domain_max", 10.0))


def _surface_grid_of(config, process: str) -> ParameterGrid:
    from .simulate import param_names

    s = config.get("surface", {})
    bounds = s.get("bounds", [[0.0, 2.0], [0.0, 2.0]])
    counts = s.get("counts", [40, 40])
    return make_parameter_grid(bounds, counts, param_names(process))


def _architecture_of(train_cfg: dict, side: int):
    arch = train_cfg.get("architecture")
    if arch is None:
        from .neural import default_architecture

        return default_architecture(side)
    if isinstance(arch, dict):
        return {"conv": tuple(tuple(c) for c in arch["conv"]), "dense": tuple(arch["dense"])}
    presets = {
        "reference": reference_architecture,
        "desk": desk_architecture,
        "mini": mini_architecture,
    }
    if arch not in presets:
        raise ConfigurationError(f"unknown architecture preset {arch!r}")
    return presets[arch]()


# ---------------------------------------------------------------------------
# Output staging and provenance.


@contextmanager
def staging_dir(out_dir):
    """Yield a temp path that replaces out_dir only if the command succeeds."""
    if out_dir is None:
        raise ConfigurationError("--out is required for this command")
    out_dir = out_dir.rstrip("/")
    if os.path.exists(out_dir):
        raise ConfigurationError(f"output path {out_dir} already exists")
    parent = os.path.dirname(os.path.abspath(out_dir))
    os.makedirs(parent, exist_ok=True)
    tmp = f"{out_dir}.partial-{os.getpid()}"
    os.makedirs(tmp)
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    os.replace(tmp, out_dir)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _hash_tree(path) -> dict:
    if os.path.isfile(path):
        return {os.path.basename(path): _sha256(path)}
    out = {}
    for root, _, files in os.walk(path):
        for name in sorted(files):
            full = os.path.join(root, name)
            out[os.path.relpath(full, path)] = _sha256(full)
    return out


def write_provenance(out_dir, command: str, args, inputs: dict, seeds: dict) -> None:
    write_json(
        os.path.join(out_dir, "provenance.json"),
        {
            "command": command,
            "argv": [a for a in sys.argv[1:]],
            "inputs": {name: _hash_tree(p) for name, p in inputs.items() if p},
            "seeds": seeds,
            "versions": {
                "nlsurf": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": sys.version.split()[0],
            },
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        },
    )


# ---------------------------------------------------------------------------
# Commands.


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    process = _process_of(args, config)
    grid = _grid_of(config)
    sim = config.get("sim", {})
    seed = args.seed if args.seed is not None else sim.get("seed", 0)
    sim_config = SimConfig(
        process=process,
        grid=grid,
        m=sim.get("m", 300),
        n=sim.get("n", 50),
        seed=seed,
        bounds=tuple(tuple(b) for b in sim["bounds"]) if "bounds" in sim else None,
        n_spectral=sim.get("n_spectral", 500),
    )
    with staging_dir(args.out) as tmp:
        dataset = build_pair_dataset(sim_config)
        save_dataset(dataset, tmp)
        write_provenance(
            tmp, "simulate", args, {"config": args.config}, {"root": seed}
        )
    logger.info("dataset written to %s", args.out)
    return EXIT_OK


def _carve_validation(fields, thetas, labels, fraction: float, seed: int):
    if fraction <= 0:
        return (fields, thetas, labels), None
    n = labels.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(99,)))
    perm = rng.permutation(n)
    n_val = max(1, int(round(fraction * n)))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    return (
        (fields[train_idx], thetas[train_idx], labels[train_idx]),
        (fields[val_idx], thetas[val_idx], labels[val_idx]),
    )


def cmd_train(args) -> int:
    config = load_config(args.config)
    if args.data is None:
        raise ConfigurationError("--data (dataset directory) is required")
    dataset = load_dataset(args.data)
    tc = config.get("train", {})
    train_config = TrainConfig(
        batch_size=args.batch if args.batch is not None else tc.get("batch_size", 512),
        epochs=tc.get("epochs", 20),
        lr_initial=tc.get("lr_initial", 1e-3),
        lr_hold_epochs=tc.get("lr_hold_epochs", 5),
        lr_decay_factor=tc.get("lr_decay_factor", float(np.exp(-0.1))),
        adam_eps=tc.get("adam_eps", 1e-7),
        seed=args.seed if args.seed is not None else tc.get("seed", 0),
    )
    architecture = _architecture_of(tc, dataset.grid.side)
    fields, thetas, labels = dataset.training_arrays()
    (train_arrays_, validation) = _carve_validation(
        fields, thetas, labels, tc.get("validation_fraction", 0.0), train_config.seed
    )
    with staging_dir(args.out) as tmp:
        with thread_limit(args.threads):
            if dataset.process == PROCESS_BR:
                model, logs = train_with_restarts(
                    dataset,
                    train_config,
                    architecture,
                    max_attempts=tc.get("max_attempts", 5),
                    plateau_loss=tc.get("plateau_loss", 0.68),
                    validation=validation,
                    log_fn=lambda e: logger.info("epoch %s", e),
                )
                log_docs = [lg.epochs for lg in logs]
            else:
                from .neural import build_model, train_arrays

                tf, tt, tl = train_arrays_
                model = build_model(
                    dataset.grid.side,
                    dataset.k,
                    architecture,
                    field_transform="identity",
                    seed=train_config.seed,
                )
                log = train_arrays(
                    model,
                    tf,
                    tt,
                    tl,
                    train_config,
                    validation,
                    log_fn=lambda e: logger.info("epoch %s", e),
                )
                log_docs = [log.epochs]
        save_model(model, tmp)
        write_json(os.path.join(tmp, "training_log.json"), log_docs)
        write_provenance(
            tmp,
            "train",
            args,
            {"config": args.config, "data": args.data},
            {"train": train_config.seed},
        )
    logger.info("model written to %s", args.out)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    config = load_config(args.config)
    if args.model is None:
        raise ConfigurationError("--model (model directory) is required")
    model = load_model(args.model)
    process = _process_of(args, config)
    grid = _grid_of(config)
    cal = config.get("calibrate", {})
    seed = args.seed if args.seed is not None else cal.get("seed", 1)
    # calibration pairs come from the evaluation box, not the training box
    cal_bounds = cal.get("bounds", config.get("surface", {}).get("bounds", [[0.0, 2.0], [0.0, 2.0]]))
    sim_config = SimConfig(
        process=process,
        grid=grid,
        m=cal.get("m", 300),
        n=cal.get("n", 50),
        seed=seed,
        bounds=tuple(tuple(b) for b in cal_bounds),
        n_spectral=config.get("sim", {}).get("n_spectral", 500),
    )
    dataset = build_pair_dataset(sim_config)
    fields, thetas, labels = dataset.training_arrays()
    with thread_limit(args.threads):
        probs = forward_batch(model, fields, thetas)[:, 0]
    platt = fit_platt(probs, labels)
    curve = reliability_curve(probs, labels, n_bins=10)
    with staging_dir(args.out) as tmp:
        save_platt(platt, os.path.join(tmp, "platt.json"))
        with open(os.path.join(tmp, "reliability.csv"), "w") as fh:
            fh.write("bin_lo,bin_hi,mean_predicted,observed_frequency,count\n")
            for row in curve:
                fh.write(
                    f"{row['bin_lo']},{row['bin_hi']},{row['mean_predicted']},"
                    f"{row['observed_frequency']},{row['count']}\n"
                )
        write_provenance(
            tmp,
            "calibrate",
            args,
            {"config": args.config, "model": args.model},
            {"calibration": seed},
        )
    logger.info("calibration written to %s", args.out)
    return EXIT_OK


def _load_field(path, grid: GridSpec) -> np.ndarray:
    field = read_tensor(path).astype(np.float64)
    if field.shape != (grid.side, grid.side):
        raise ConfigurationError(
            f"field {path} has shape {field.shape}, expected {(grid.side, grid.side)}"
        )
    return field


def cmd_surface(args) -> int:
    config = load_config(args.config)
    process = _process_of(args, config)
    grid = _grid_of(config)
    param_grid = _surface_grid_of(config, process)
    if args.field is None:
        raise ConfigurationError("--field (NLT file) is required")
    y = _load_field(args.field, grid)
    method = args.method
    with thread_limit(args.threads):
        if method == "neural":
            if args.model is None:
                raise ConfigurationError("--model is required for the neural surface")
            model = load_model(args.model)
            platt = None
            if not args.no_calibration:
                if args.platt is None:
                    raise ConfigurationError(
                        "--platt is required unless --no-calibration is given"
                    )
                platt = load_platt(args.platt)
            surface = neural_surface(model, y, param_grid, platt)
        elif method == "gp-exact":
            surface = gp_surface(y, param_grid, grid)
        elif method == "pairwise":
            if args.delta is None:
                raise ConfigurationError("--delta is required for the pairwise surface")
            scheme = build_pair_scheme(grid, args.delta)
            surface = pairwise_surface(y, param_grid, scheme)
        else:
            raise ConfigurationError(f"unknown surface method {method!r}")
    with staging_dir(args.out) as tmp:
        save_surface(surface, tmp)
        write_provenance(
            tmp,
            "surface",
            args,
            {"config": args.config, "field": args.field, "model": args.model},
            {},
        )
    logger.info("surface written to %s", args.out)
    return EXIT_OK


def cmd_mle(args) -> int:
    if args.surface is None:
        raise ConfigurationError("--surface (surface directory) is required")
    surface = load_surface(args.surface)
    param, value = grid_mle(surface)
    doc = {
        "theta": param.as_dict(),
        "value": value,
        "kind": surface.kind,
    }
    if args.out:
        with staging_dir(args.out) as tmp:
            write_json(os.path.join(tmp, "mle.json"), doc)
            write_provenance(tmp, "mle", args, {"surface": args.surface}, {})
    else:
        json.dump(doc, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return EXIT_OK


def cmd_region(args) -> int:
    if args.surface is None:
        raise ConfigurationError("--surface (surface directory) is required")
    surface = load_surface(args.surface)
    region = confidence_region(surface, args.alpha)
    with staging_dir(args.out) as tmp:
        save_region(region, tmp)
        write_provenance(tmp, "region", args, {"surface": args.surface}, {})
    logger.info(
        "region written to %s (cutoff %.5f, area %.4f)",
        args.out,
        region.cutoff,
        region_area(region),
    )
    return EXIT_OK


def _study_methods(args, config, process, grid, param_grid) -> list[SurfaceMethod]:
    eval_cfg = config.get("eval", {})
    wanted = eval_cfg.get("methods", ["neural", "gp-exact"] if process == PROCESS_GP else ["neural"])
    methods: list[SurfaceMethod] = []
    for name in wanted:
        if name == "neural":
            if args.model is None:
                raise ConfigurationError("--model is required for neural methods")
            model = load_model(args.model)
            if args.no_calibration:
                methods.append(
                    SurfaceMethod(
                        "neural-uncalibrated",
                        lambda y, m=model: neural_surface(m, y, param_grid, None),
                    )
                )
            else:
                if args.platt is None:
                    raise ConfigurationError(
                        "--platt is required unless --no-calibration is given"
                    )
                platt = load_platt(args.platt)
                methods.append(
                    SurfaceMethod(
                        "neural-calibrated",
                        lambda y, m=model, p=platt: neural_surface(m, y, param_grid, p),
                    )
                )
        elif name == "gp-exact":
            methods.append(
                SurfaceMethod("gp-exact", lambda y: gp_surface(y, param_grid, grid))
            )
        elif name == "pairwise":
            deltas = eval_cfg.get("deltas") or ([args.delta] if args.delta is not None else [])
            if not deltas:
                raise ConfigurationError("pairwise methods need --delta or eval.deltas")
            for d in deltas:
                scheme = build_pair_scheme(grid, float(d))
                methods.append(
                    SurfaceMethod(
                        f"pairwise-d{d:g}",
                        lambda y, s=scheme: pairwise_surface(y, param_grid, s),
                    )
                )
        elif name == "pairwise-adjusted":
            adj_path = eval_cfg.get("adjustment")
            if adj_path is None:
                raise ConfigurationError(
                    "pairwise-adjusted needs eval.adjustment (adjustment JSON path)"
                )
            adj = load_adjustment(adj_path)
            scheme = build_pair_scheme(grid, adj.delta)
            methods.append(
                SurfaceMethod(
                    f"pairwise-adjusted-d{adj.delta:g}",
                    lambda y, s=scheme, a=adj: adjusted_surface(y, param_grid, s, a),
                )
            )
        else:
            raise ConfigurationError(f"unknown study method {name!r}")
    return methods


def _eval_config(args, config, process, grid, param_grid) -> EvalConfig:
    eval_cfg = config.get("eval", {})
    return EvalConfig(
        process=process,
        grid=grid,
        surface_grid=param_grid,
        eval_counts=tuple(eval_cfg.get("eval_counts", [9, 9])),
        eval_values=tuple(tuple(v) for v in eval_cfg["eval_values"])
        if "eval_values" in eval_cfg
        else None,
        replicates=eval_cfg.get("replicates", 200),
        alpha=args.alpha if args.alpha is not None else eval_cfg.get("alpha", 0.05),
        seed=args.seed if args.seed is not None else eval_cfg.get("seed", 0),
        n_spectral=config.get("sim", {}).get("n_spectral", 500),
    )


def cmd_study(args) -> int:
    config = load_config(args.config)
    process = _process_of(args, config)
    grid = _grid_of(config)
    param_grid = _surface_grid_of(config, process)
    methods = _study_methods(args, config, process, grid, param_grid)
    eval_config = _eval_config(args, config, process, grid, param_grid)
    with thread_limit(args.threads):
        result = run_study(eval_config, methods)
    estimation = run_estimation_study(eval_config, methods, result)
    coverage = run_coverage_study(eval_config, methods, result)
    with staging_dir(args.out) as tmp:
        write_records_csv(result, os.path.join(tmp, "records.csv"))
        write_summary_csv(estimation, os.path.join(tmp, "estimation.csv"), "estimation")
        write_summary_csv(coverage, os.path.join(tmp, "coverage.csv"), "coverage")
        with open(os.path.join(tmp, "per_truth.csv"), "w", newline="") as fh:
            fh.write("method,theta_true_0,theta_true_1,coverage,mean_area,median_abs_error\n")
            for name in coverage:
                est_rows = {
                    tuple(r["theta_true"]): r for r in estimation[name]["per_truth"]
                }
                for row in coverage[name]["per_truth"]:
                    t = tuple(row["theta_true"])
                    fh.write(
                        f"{name},{t[0]},{t[1]},{row['coverage']},{row['mean_area']},"
                        f"{est_rows[t]['median_abs_error']}\n"
                    )
        write_json(
            os.path.join(tmp, "study.json"),
            {"estimation": estimation, "coverage": coverage, "alpha": eval_config.alpha},
        )
        write_provenance(
            tmp,
            "study",
            args,
            {"config": args.config, "model": args.model, "platt": args.platt},
            {"eval": eval_config.seed},
        )
    logger.info("study written to %s", args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    config = load_config(args.config)
    process = _process_of(args, config)
    grid = _grid_of(config)
    param_grid = _surface_grid_of(config, process)
    methods = _study_methods(args, config, process, grid, param_grid)
    eval_config = _eval_config(args, config, process, grid, param_grid)
    timing_fields = config.get("eval", {}).get("timing_fields", 10)
    timings = run_timing_study(
        eval_config, methods, n_fields=timing_fields, threads=args.threads
    )
    with staging_dir(args.out) as tmp:
        write_json(os.path.join(tmp, "bench.json"), timings)
        write_summary_csv(timings, os.path.join(tmp, "bench.csv"), "timing")
        write_provenance(
            tmp,
            "bench",
            args,
            {"config": args.config, "model": args.model, "platt": args.platt},
            {"eval": eval_config.seed},
        )
    logger.info("bench written to %s", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser and entry point.


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlsurf",
        description="Likelihood surfaces for gridded spatial processes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--seed", type=int, help="root seed override")
        p.add_argument("--threads", type=int, help="thread budget (BLAS cap)")
        p.add_argument("--process", choices=["gp", "br"], help="process override")

    p = sub.add_parser("simulate", help="build a two-class training corpus")
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("train", help="train the classifier on a corpus")
    common(p)
    p.add_argument("--data", help="dataset directory from `nlsurf simulate`")
    p.add_argument("--batch", type=int, help="batch size override")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("calibrate", help="fit Platt scaling on held-out pairs")
    common(p)
    p.add_argument("--model", help="model directory from `nlsurf train`")
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("surface", help="evaluate one likelihood surface")
    common(p)
    p.add_argument("--field", help="field tensor (NLT file)")
    p.add_argument("--model", help="model directory (neural method)")
    p.add_argument("--platt", help="platt.json path (neural method)")
    p.add_argument(
        "--method", default="neural", choices=["neural", "gp-exact", "pairwise"]
    )
    p.add_argument("--delta", type=float, help="pairwise distance cutoff")
    p.add_argument("--no-calibration", action="store_true")
    p.set_defaults(fn=cmd_surface)

    p = sub.add_parser("mle", help="grid MLE of a stored surface")
    p.add_argument("--surface", help="surface directory")
    p.add_argument("--out", help="output directory (defaults to stdout)")
    p.set_defaults(fn=cmd_mle)

    p = sub.add_parser("region", help="confidence region of a stored surface")
    p.add_argument("--surface", help="surface directory")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_region)

    p = sub.add_parser("study", help="estimation + coverage study")
    common(p)
    p.add_argument("--model", help="model directory")
    p.add_argument("--platt", help="platt.json path")
    p.add_argument("--alpha", type=float, help="region level override")
    p.add_argument("--delta", type=float, help="pairwise distance cutoff")
    p.add_argument("--no-calibration", action="store_true")
    p.set_defaults(fn=cmd_study)

    p = sub.add_parser("bench", help="surface timing study")
    common(p)
    p.add_argument("--model", help="model directory")
    p.add_argument("--platt", help="platt.json path")
    p.add_argument("--alpha", type=float, help="unused; accepted for symmetry")
    p.add_argument("--delta", type=float, help="pairwise distance cutoff")
    p.add_argument("--no-calibration", action="store_true")
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigurationError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
