"""Sweeps, randomized fidelity scans, and report round trips."""
import io
import math

import numpy as np
import pytest

from hypercnot import (
    ScanSummary,
    SweepGrid,
    SweepRow,
    ValidationError,
    emit_report,
    fidelity_scan,
    load_report,
    random_photon_spec,
    sweep_efficiency,
)
from hypercnot.analysis import REPORT_COLUMNS

ETA_1 = 0.6512926891789744


class TestSweepGrid:
    def test_axes_coerced_to_floats(self):
        grid = SweepGrid(g_ratios=[1, 2], ks_ratios=(0,))
        assert grid.g_ratios == (1.0, 2.0)
        assert grid.ks_ratios == (0.0,)

    @pytest.mark.parametrize("kwargs", [
        {"g_ratios": (), "ks_ratios": (0.1,)},
        {"g_ratios": (1.0,), "ks_ratios": ()},
        {"g_ratios": (-0.5,), "ks_ratios": (0.1,)},
        {"g_ratios": (1.0,), "ks_ratios": (-0.1,)},
        {"g_ratios": (1.0,), "ks_ratios": (0.1,), "n_targets": 0},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ValidationError):
            SweepGrid(**kwargs)


class TestSweepEfficiency:
    def test_rows_follow_grid_order(self):
        grid = SweepGrid(g_ratios=(1.0, 3.0), ks_ratios=(0.0, 0.5))
        rows = sweep_efficiency(grid)
        assert [(r.g_ratio, r.ks_ratio) for r in rows] == [
            (1.0, 0.0), (1.0, 0.5), (3.0, 0.0), (3.0, 0.5)]

    def test_reference_point(self):
        rows = sweep_efficiency(SweepGrid(g_ratios=(3.0,), ks_ratios=(0.1,)))
        row = rows[0]
        assert row.efficiency == pytest.approx(ETA_1, abs=1e-12)
        assert row.success_prob == pytest.approx(ETA_1, abs=1e-12)
        assert row.fidelity == pytest.approx(1.0, abs=1e-12)
        assert row.abs_T == pytest.approx(ETA_1 ** 0.125, abs=1e-12)

    def test_success_tracks_the_closed_form(self):
        grid = SweepGrid(g_ratios=(0.5, 2.0), ks_ratios=(0.0, 1.0), n_targets=2)
        for row in sweep_efficiency(grid):
            assert abs(row.success_prob - row.efficiency) < 1e-12
            assert row.efficiency == pytest.approx(row.abs_T ** 12, abs=1e-12)
            assert row.fidelity == pytest.approx(1.0, abs=1e-12)

    def test_monotone_in_both_axes(self):
        grid = SweepGrid(g_ratios=(0.5, 1.0, 2.0, 3.0, 5.0),
                         ks_ratios=(0.0, 0.1, 0.5, 1.0))
        rows = sweep_efficiency(grid)
        eff = {(r.g_ratio, r.ks_ratio): r.efficiency for r in rows}
        for ks in grid.ks_ratios:
            col = [eff[(g, ks)] for g in grid.g_ratios]
            assert col == sorted(col)
        for g in grid.g_ratios:
            line = [eff[(g, ks)] for ks in grid.ks_ratios]
            assert line == sorted(line, reverse=True)

    def test_uncoupled_rows_report_zero(self):
        rows = sweep_efficiency(SweepGrid(g_ratios=(0.0,), ks_ratios=(0.0, 0.1)))
        for row in rows:
            assert row.abs_T == 0.0
            assert row.efficiency == 0.0
            assert row.success_prob == 0.0
            assert row.fidelity == 0.0


class TestRandomPhotonSpec:
    def test_normalized_and_seeded(self):
        specs = [random_photon_spec(np.random.default_rng(40)) for _ in range(2)]
        assert specs[0].pol == specs[1].pol
        assert specs[0].spatial == specs[1].spatial
        for pair in (specs[0].pol, specs[0].spatial):
            assert math.fsum(abs(c) ** 2 for c in pair) == pytest.approx(
                1.0, abs=1e-12)

    def test_varies_along_a_stream(self):
        rng = np.random.default_rng(41)
        assert random_photon_spec(rng).pol != random_photon_spec(rng).pol


class TestFidelityScan:
    def test_balanced_gate_is_exact(self):
        summary = fidelity_scan(n_cases=40, seed=7)
        assert isinstance(summary, ScanSummary)
        assert summary.n_cases == 40
        assert summary.min_fidelity >= 1.0 - 1e-10
        assert summary.mean_fidelity >= summary.min_fidelity
        assert summary.max_success_deviation < 1e-12
        assert summary.max_conservation_error < 1e-12

    def test_deterministic(self):
        assert fidelity_scan(20, seed=8) == fidelity_scan(20, seed=8)

    def test_multi_target(self):
        summary = fidelity_scan(n_cases=10, seed=9, n_targets=3)
        assert summary.n_targets == 3
        assert summary.min_fidelity >= 1.0 - 1e-10

    def test_unbalanced_mirrors_show_up(self):
        summary = fidelity_scan(n_cases=10, seed=10, mirror_scale=0.8)
        assert summary.min_fidelity < 1.0 - 1e-6

    @pytest.mark.parametrize("kwargs", [
        {"n_cases": 0, "seed": 1},
        {"n_cases": 5, "seed": 1, "n_targets": 0},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ValidationError):
            fidelity_scan(**kwargs)


class TestReports:
    @pytest.fixture
    def rows(self):
        return sweep_efficiency(SweepGrid(g_ratios=(0.7, 3.0),
                                          ks_ratios=(0.0, 0.3)))

    def test_csv_round_trip_is_exact(self, rows, tmp_path):
        path = tmp_path / "sweep.csv"
        emit_report(rows, "csv", path)
        assert load_report(path, "csv") == rows
        header = path.read_text().splitlines()[0]
        assert header == "g_ratio,ks_ratio,abs_T,efficiency,success_prob,fidelity"

    def test_json_round_trip_is_exact(self, rows, tmp_path):
        path = tmp_path / "sweep.json"
        emit_report(rows, "json", path)
        assert load_report(path, "json") == rows

    def test_stream_destination_and_source(self, rows):
        buf = io.StringIO()
        emit_report(rows, "csv", buf)
        assert load_report(io.StringIO(buf.getvalue()), "csv") == rows

    def test_csv_row_count(self, rows, tmp_path):
        path = tmp_path / "sweep.csv"
        emit_report(rows, "csv", path)
        lines = path.read_text().splitlines()
        assert len(lines) == 1 + len(rows)

    def test_empty_rows_rejected(self):
        with pytest.raises(ValidationError, match="no rows"):
            emit_report([], "csv", io.StringIO())

    def test_unknown_format_rejected(self, rows):
        with pytest.raises(ValidationError, match="unknown report format"):
            emit_report(rows, "yaml", io.StringIO())
        with pytest.raises(ValidationError, match="unknown report format"):
            load_report(io.StringIO("x"), "yaml")

    def test_write_error_names_the_path(self, rows):
        with pytest.raises(OSError, match="cannot write report"):
            emit_report(rows, "csv", "/nonexistent-dir/sweep.csv")

    def test_read_error_names_the_path(self, tmp_path):
        with pytest.raises(OSError, match="cannot read report"):
            load_report(tmp_path / "missing.csv", "csv")

    def test_bad_header_rejected(self):
        stream = io.StringIO("a,b,c\n1,2,3\n")
        with pytest.raises(ValidationError, match="bad report header"):
            load_report(stream, "csv")

    def test_bad_json_rejected(self):
        with pytest.raises(ValidationError, match="bad JSON report"):
            load_report(io.StringIO("{not json"), "json")
        with pytest.raises(ValidationError, match="expected a list"):
            load_report(io.StringIO('{"g_ratio": 1}'), "json")

    def test_row_fields_match_the_header(self):
        assert REPORT_COLUMNS == tuple(SweepRow.__dataclass_fields__)
