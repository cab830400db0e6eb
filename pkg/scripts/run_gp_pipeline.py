#!/usr/bin/env python3
"""End-to-end Gaussian process experiment: simulate, train, calibrate, study.

Desk scale (default) trains on 16x16 fields with m=300 parameters; training
takes ~15 minutes on one core and the default 9x9x100 study another ~2 hours
(the exact-likelihood baseline dominates; shrink --eval-counts or
--replicates for a quick pass). --scale full switches to the full-size
configuration (m=3000, 25x25 fields, batch 30000); expect days of CPU time,
it exists so the desk run is a flag away from the full protocol.
"""

import argparse
import json
import logging
import os
import time

from nlsurf.calibrate import fit_platt, save_platt
from nlsurf.eval_harness import (
    EvalConfig,
    SurfaceMethod,
    run_coverage_study,
    run_estimation_study,
    run_study,
    thread_limit,
    write_records_csv,
    write_summary_csv,
)
from nlsurf.gp_likelihood import gp_surface
from nlsurf.grids import GridSpec, make_parameter_grid
from nlsurf.inference import neural_surface
from nlsurf.neural import TrainConfig, forward_batch, save_model, train_with_restarts
from nlsurf.simulate import SimConfig, build_pair_dataset, save_dataset
from nlsurf.tensorio import write_json

SCALES = {
    # side, train (m, n), calibration (m, n), batch size, epochs (held, total),
    # eval replicates. The desk corpus is 10x smaller than the full one, so it
    # needs more passes (and a longer flat-lr phase) to reach a comparable fit.
    "desk": {
        "side": 16,
        "train": (300, 50),
        "cal": (300, 50),
        "batch": 512,
        "epochs": 60,
        "hold": 20,
        "replicates": 100,
    },
    "full": {
        "side": 25,
        "train": (3000, 50),
        "cal": (3000, 50),
        "batch": 30000,
        "epochs": 20,
        "hold": 5,
        "replicates": 200,
    },
}

EVAL_BOUNDS = ((0.0, 2.0), (0.0, 2.0))
TRAIN_BOUNDS = ((0.0, 2.5), (0.0, 2.5))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--scale", choices=sorted(SCALES), default="desk")
    parser.add_argument("--seed", type=int, default=0, help="root seed")
    parser.add_argument("--threads", type=int, default=None, help="BLAS thread cap")
    parser.add_argument("--replicates", type=int, default=None, help="override eval replicates")
    parser.add_argument("--eval-counts", type=int, nargs=2, default=(9, 9), metavar=("N1", "N2"))
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--no-calibration", action="store_true")
    parser.add_argument("--keep-dataset", action="store_true", help="also write the training corpus")
    parser.add_argument("--train-m", type=int, default=None, help="override training parameter count")
    parser.add_argument("--train-n", type=int, default=None, help="override replicates per parameter")
    parser.add_argument("--cal-m", type=int, default=None, help="override calibration parameter count")
    parser.add_argument("--cal-n", type=int, default=None, help="override calibration replicates")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    log = logging.getLogger("gp-pipeline")
    scale = SCALES[args.scale]
    os.makedirs(args.out, exist_ok=True)
    timings: dict[str, float] = {}

    grid = GridSpec(scale["side"], -10.0, 10.0)
    pgrid = make_parameter_grid(EVAL_BOUNDS, (40, 40), ("variance", "length_scale"))

    t0 = time.perf_counter()
    train_data = build_pair_dataset(
        SimConfig(
            process="gp",
            grid=grid,
            m=args.train_m or scale["train"][0],
            n=args.train_n or scale["train"][1],
            seed=args.seed,
            bounds=TRAIN_BOUNDS,
        )
    )
    timings["simulate_s"] = time.perf_counter() - t0
    if args.keep_dataset:
        save_dataset(train_data, os.path.join(args.out, "dataset"))

    t0 = time.perf_counter()
    with thread_limit(args.threads):
        model, logs = train_with_restarts(
            train_data,
            TrainConfig(
                batch_size=scale["batch"],
                epochs=scale["epochs"],
                lr_hold_epochs=scale["hold"],
                seed=args.seed,
            ),
            log_fn=lambda e: log.info("epoch %s", e),
        )
    timings["train_s"] = time.perf_counter() - t0
    save_model(model, os.path.join(args.out, "model"))
    write_json(os.path.join(args.out, "training_log.json"), [lg.epochs for lg in logs])
    log.info("trained in %.0f s, final loss %.4f", timings["train_s"], logs[-1].final_train_loss)

    platt = None
    if not args.no_calibration:
        t0 = time.perf_counter()
        cal_data = build_pair_dataset(
            SimConfig(
                process="gp",
                grid=grid,
                m=args.cal_m or scale["cal"][0],
                n=args.cal_n or scale["cal"][1],
                seed=args.seed + 1,
                bounds=EVAL_BOUNDS,
            )
        )
        fields, thetas, labels = cal_data.training_arrays()
        with thread_limit(args.threads):
            platt = fit_platt(forward_batch(model, fields, thetas)[:, 0], labels)
        timings["calibrate_s"] = time.perf_counter() - t0
        save_platt(platt, os.path.join(args.out, "platt.json"))
        log.info("calibration: beta0=%.4f beta1=%.4f", platt.beta0, platt.beta1)

    neural_name = "neural-uncalibrated" if platt is None else "neural-calibrated"
    methods = [
        SurfaceMethod(neural_name, lambda y: neural_surface(model, y, pgrid, platt)),
        SurfaceMethod("gp-exact", lambda y: gp_surface(y, pgrid, grid)),
    ]
    config = EvalConfig(
        process="gp",
        grid=grid,
        surface_grid=pgrid,
        eval_counts=tuple(args.eval_counts),
        replicates=args.replicates or scale["replicates"],
        alpha=args.alpha,
        seed=args.seed + 2,
    )
    t0 = time.perf_counter()
    with thread_limit(args.threads):
        result = run_study(config, methods)
    timings["study_s"] = time.perf_counter() - t0

    estimation = run_estimation_study(config, methods, result)
    coverage = run_coverage_study(config, methods, result)
    write_records_csv(result, os.path.join(args.out, "records.csv"))
    write_summary_csv(estimation, os.path.join(args.out, "estimation.csv"), "estimation")
    write_summary_csv(coverage, os.path.join(args.out, "coverage.csv"), "coverage")
    write_json(
        os.path.join(args.out, "study.json"),
        {
            "scale": args.scale,
            "seed": args.seed,
            "alpha": config.alpha,
            "estimation": estimation,
            "coverage": coverage,
            "timings": timings,
        },
    )
    print(json.dumps({name: coverage[name]["coverage"] for name in coverage}, indent=2))
    log.info("done; artifacts in %s", args.out)


if __name__ == "__main__":
    main()
