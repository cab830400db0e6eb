import csv

import numpy as np
import pytest

from nlsurf.errors import InvalidArgumentError
from nlsurf.eval_harness import (
    EvalConfig,
    StudyResult,
    SurfaceMethod,
    estimation_metrics,
    run_coverage_study,
    run_estimation_study,
    run_study,
    run_timing_study,
    snap_to_grid,
    thread_limit,
    truth_points,
    write_records_csv,
    write_summary_csv,
)
from nlsurf.grids import GridSpec, Surface, make_parameter_grid


def _sgrid(counts=(10, 10)):
    return make_parameter_grid(
        [(0.0, 2.0), (0.0, 2.0)], list(counts), ["variance", "length_scale"]
    )


def _peak_method(sgrid, name="peak", sigma=0.3):
    """Fake method: a bell around the field mean's implied truth.

    The field is ignored except through a hash that perturbs nothing; the
    surface always peaks at the grid point nearest (1, 1).
    """
    pts = sgrid.points()

    def fn(y):
        center = snap_to_grid([1.0, 1.0], sgrid)
        d2 = np.sum((pts - center) ** 2, axis=1)
        return Surface(sgrid, -d2 / (2 * sigma**2), "exact-gp")

    return SurfaceMethod(name=name, fn=fn)


class TestSnapToGrid:
    def test_lattice_points_unchanged(self):
        g = _sgrid()
        for idx in (0, 5, 99):
            p = g.points()[idx]
            np.testing.assert_allclose(snap_to_grid(p, g), p)

    def test_nearest_point(self):
        g = _sgrid((10, 10))  # spacing 0.2
        np.testing.assert_allclose(snap_to_grid([0.29, 1.71], g), [0.2, 1.8])

    def test_clips_to_grid_range(self):
        g = _sgrid((10, 10))
        np.testing.assert_allclose(snap_to_grid([-5.0, 5.0], g), [0.2, 2.0])

    def test_snapped_point_is_indexable(self):
        g = _sgrid((7, 7))
        snapped = snap_to_grid([0.83, 1.21], g)
        g.index_of(snapped)  # must not raise


class TestTruthPoints:
    def _config(self, **kw):
        defaults = dict(
            process="gp",
            grid=GridSpec(4, 0.0, 3.0),
            surface_grid=_sgrid((40, 40)),
            replicates=1,
        )
        defaults.update(kw)
        return EvalConfig(**defaults)

    def test_explicit_values(self):
        vals = ((0.4, 0.7, 1.0, 1.3, 1.6), (0.4, 0.7, 1.0, 1.3, 1.6))
        pts = truth_points(self._config(eval_values=vals))
        assert pts.shape == (25, 2)
        np.testing.assert_allclose(pts[0], [0.4, 0.4])
        np.testing.assert_allclose(pts[-1], [1.6, 1.6])

    def test_counts_path_snaps_to_surface_grid(self):
        cfg = self._config(eval_counts=(3, 3))
        pts = truth_points(cfg)
        assert pts.shape == (9, 2)
        for p in pts:
            cfg.surface_grid.index_of(p)  # all on the surface lattice

    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            self._config(replicates=0)
        with pytest.raises(InvalidArgumentError):
            self._config(alpha=0.0)
        with pytest.raises(InvalidArgumentError):
            self._config(process="bad")


class TestRunStudy:
    def _config(self, replicates=2):
        return EvalConfig(
            process="gp",
            grid=GridSpec(3, 0.0, 2.0),
            surface_grid=_sgrid((10, 10)),
            eval_counts=(2, 2),
            replicates=replicates,
            alpha=0.05,
            seed=3,
        )

    def test_record_count_and_fields_shared(self):
        cfg = self._config()
        seen = {"a": [], "b": []}

        def recorder(name):
            base = _peak_method(cfg.surface_grid).fn

            def fn(y):
                seen[name].append(np.asarray(y).copy())
                return base(y)

            return SurfaceMethod(name=name, fn=fn)

        result = run_study(cfg, [recorder("a"), recorder("b")])
        assert len(result.records) == 4 * 2 * 2  # truths x replicates x methods
        assert result.methods == ("a", "b")
        for ya, yb in zip(seen["a"], seen["b"]):
            np.testing.assert_array_equal(ya, yb)

    def test_deterministic_given_seed(self):
        cfg = self._config()
        m = [_peak_method(cfg.surface_grid)]
        r1 = run_study(cfg, m)
        r2 = run_study(cfg, m)
        assert r1.records == r2.records

    def test_peak_method_estimates_its_peak(self):
        cfg = self._config(replicates=1)
        result = run_study(cfg, [_peak_method(cfg.surface_grid)])
        center = snap_to_grid([1.0, 1.0], cfg.surface_grid)
        for rec in result.records:
            np.testing.assert_allclose(rec["estimate"], center)
            assert isinstance(rec["covered"], bool)
            assert rec["area"] > 0

    def test_requires_methods(self):
        with pytest.raises(InvalidArgumentError):
            run_study(self._config(), [])


class TestMetrics:
    def _records(self, err_axis0):
        # truth (1, 1); estimates displaced along axis 0
        records = []
        for l, e in enumerate(err_axis0):
            records.append(
                {
                    "method": "m",
                    "truth_index": l // 2,
                    "theta_true": (1.0, 1.0),
                    "estimate": (1.0 + e, 1.0),
                }
            )
        return records

    def test_single_axis_displacements(self):
        # all errors have norm 0.1: rmse = mae = mmae = 0.1
        m = estimation_metrics(self._records([0.1, -0.1, 0.1, -0.1]))
        np.testing.assert_allclose(m["rmse"], 0.1)
        np.testing.assert_allclose(m["mae"], 0.1)
        np.testing.assert_allclose(m["mmae"], 0.1)
        assert m["n"] == 4

    def test_rmse_weights_large_errors(self):
        m = estimation_metrics(self._records([0.3, 0.0, 0.0, 0.0]))
        np.testing.assert_allclose(m["rmse"], np.sqrt(0.09 / 4))
        np.testing.assert_allclose(m["mae"], 0.075)

    def test_mmae_is_median_of_per_truth_medians(self):
        # truth 0 errors {0.1, 0.2} -> median 0.15; truth 1 {0.4, 0.6} -> 0.5
        m = estimation_metrics(self._records([0.1, 0.2, 0.4, 0.6]))
        np.testing.assert_allclose(m["mmae"], np.median([0.15, 0.5]))

    def test_euclidean_norm_used(self):
        records = [
            {
                "method": "m",
                "truth_index": 0,
                "theta_true": (1.0, 1.0),
                "estimate": (1.3, 1.4),
            }
        ]
        m = estimation_metrics(records)
        np.testing.assert_allclose(m["mae"], 0.5)

    def test_empty_rejected(self):
        with pytest.raises(InvalidArgumentError):
            estimation_metrics([])


class TestStudySummaries:
    def _config(self):
        return EvalConfig(
            process="gp",
            grid=GridSpec(3, 0.0, 2.0),
            surface_grid=_sgrid((10, 10)),
            eval_counts=(2, 2),
            replicates=2,
            seed=1,
        )

    def test_estimation_study_reuses_result(self):
        cfg = self._config()
        methods = [_peak_method(cfg.surface_grid)]
        result = run_study(cfg, methods)
        summary = run_estimation_study(cfg, methods, result=result)
        assert set(summary) == {"peak"}
        s = summary["peak"]
        assert {"rmse", "mae", "mmae", "n", "per_truth"} <= set(s)
        assert len(s["per_truth"]) == 4

    def test_coverage_study_aggregates(self):
        cfg = self._config()
        methods = [_peak_method(cfg.surface_grid, sigma=10.0)]  # huge region
        result = run_study(cfg, methods)
        summary = run_coverage_study(cfg, methods, result=result)
        s = summary["peak"]
        assert s["nominal"] == 0.95
        assert s["coverage"] == 1.0  # flat bell covers everything
        assert s["mean_area"] > 0
        assert len(s["per_truth"]) == 4


class TestTiming:
    def _config(self):
        return EvalConfig(
            process="gp",
            grid=GridSpec(3, 0.0, 2.0),
            surface_grid=_sgrid((5, 5)),
            replicates=1,
            seed=2,
        )

    def test_timing_structure(self):
        cfg = self._config()
        calls = []
        base = _peak_method(cfg.surface_grid).fn

        def fn(y):
            calls.append(1)
            return base(y)

        out = run_timing_study(cfg, [SurfaceMethod("m", fn)], n_fields=3)
        # one warm-up plus three timed calls
        assert len(calls) == 4
        s = out["m"]
        assert s["n_fields"] == 3
        assert s["mean_seconds"] >= 0
        assert s["total_seconds"] >= s["mean_seconds"]

    def test_invalid_n_fields(self):
        cfg = self._config()
        with pytest.raises(InvalidArgumentError):
            run_timing_study(cfg, [_peak_method(cfg.surface_grid)], n_fields=0)

    def test_thread_limit_noop_paths(self):
        with thread_limit(None):
            pass
        with thread_limit(1):
            pass


class TestCsv:
    def test_records_csv(self, tmp_path):
        cfg = EvalConfig(
            process="gp",
            grid=GridSpec(3, 0.0, 2.0),
            surface_grid=_sgrid((5, 5)),
            eval_counts=(2, 2),
            replicates=2,
            seed=0,
        )
        result = run_study(cfg, [_peak_method(cfg.surface_grid)])
        path = tmp_path / "records.csv"
        write_records_csv(result, path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:3] == ["method", "truth_index", "replicate"]
        assert len(rows) == 1 + len(result.records)

    def test_summary_csv_kinds(self, tmp_path):
        est = {"m": {"rmse": 0.1, "mae": 0.08, "mmae": 0.07, "n": 4}}
        cov = {"m": {"nominal": 0.95, "coverage": 0.93, "mean_area": 0.2, "n": 4}}
        tim = {"m": {"mean_seconds": 0.5, "std_seconds": 0.1, "total_seconds": 5.0, "n_fields": 10}}
        for kind, summary in (("estimation", est), ("coverage", cov), ("timing", tim)):
            path = tmp_path / f"{kind}.csv"
            write_summary_csv(summary, path, kind)
            with open(path) as fh:
                rows = list(csv.reader(fh))
            assert len(rows) == 2
        with pytest.raises(InvalidArgumentError):
            write_summary_csv(est, tmp_path / "x.csv", "bogus")
