#!/usr/bin/env python3
"""Wall-clock comparison of surface construction methods.

Times three ways of building a likelihood surface on a 40x40 parameter
grid: the vectorized neural path (conv trunk once, dense head batched over
the grid), the unvectorized neural path (one full forward pass per grid
point), and the exact Gaussian likelihood (one Cholesky factorization per
grid point). Also times the pairwise likelihood on max-stable fields for a
ladder of cut-off distances, whose cost grows with the pair count.

Weights are freshly initialized: timing depends on the architecture, not
on what the network has learned.
"""

import argparse
import json
import logging
import os

import numpy as np

from nlsurf.br_pairwise import build_pair_scheme, pairwise_surface
from nlsurf.eval_harness import EvalConfig, SurfaceMethod, run_timing_study
from nlsurf.gp_likelihood import gp_surface
from nlsurf.grids import GridSpec, make_parameter_grid
from nlsurf.inference import neural_surface
from nlsurf.neural import build_model, forward, reference_architecture
from nlsurf.tensorio import write_json


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--side", type=int, default=25, help="field grid side")
    parser.add_argument("--n-fields", type=int, default=50)
    parser.add_argument("--pairwise-fields", type=int, default=2)
    parser.add_argument("--deltas", type=float, nargs="+", default=(1.0, 2.0, 5.0, 10.0))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1, help="BLAS thread cap")
    parser.add_argument("--skip-unvectorized", action="store_true")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    os.makedirs(args.out, exist_ok=True)

    grid = GridSpec(args.side, -10.0, 10.0)
    pgrid = make_parameter_grid(
        ((0.0, 2.0), (0.0, 2.0)), (40, 40), ("variance", "length_scale")
    )
    model = build_model(
        args.side, 2, reference_architecture(), field_transform="identity", seed=args.seed
    )
    points = pgrid.points()

    def unvectorized(y):
        return np.array([forward(model, y, theta)[0] for theta in points])

    methods = [
        SurfaceMethod("neural-vectorized", lambda y: neural_surface(model, y, pgrid)),
        SurfaceMethod("gp-exact", lambda y: gp_surface(y, pgrid, grid)),
    ]
    if not args.skip_unvectorized:
        methods.insert(1, SurfaceMethod("neural-unvectorized", unvectorized))
    gp_config = EvalConfig(
        process="gp", grid=grid, surface_grid=pgrid, replicates=1, seed=args.seed
    )
    timings = run_timing_study(
        gp_config, methods, theta=(1.0, 1.0), n_fields=args.n_fields, threads=args.threads
    )

    br_pgrid = make_parameter_grid(
        ((0.0, 2.0), (0.0, 2.0)), (40, 40), ("range", "smoothness")
    )
    br_methods = [
        SurfaceMethod(
            f"pairwise-d{d:g}",
            lambda y, s=build_pair_scheme(grid, d): pairwise_surface(y, br_pgrid, s),
        )
        for d in args.deltas
    ]
    br_config = EvalConfig(
        process="brown-resnick",
        grid=grid,
        surface_grid=br_pgrid,
        replicates=1,
        seed=args.seed + 1,
    )
    timings.update(
        run_timing_study(
            br_config,
            br_methods,
            theta=(1.0, 1.0),
            n_fields=args.pairwise_fields,
            threads=args.threads,
        )
    )

    write_json(os.path.join(args.out, "timings.json"), timings)
    print(
        json.dumps(
            {name: round(t["mean_seconds"], 4) for name, t in timings.items()}, indent=2
        )
    )


if __name__ == "__main__":
    main()
