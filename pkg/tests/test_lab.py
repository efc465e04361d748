"""Tests for sweeps, report tables, serialization, slope fits, and the CLI."""

import json
import re
import subprocess
import sys

import pytest

from mixmodes import (
    PrecisionContext,
    SweepRecord,
    VarianceBoundError,
    bounds_rows,
    density,
    fit_slope,
    make_gamma,
    records_from_csv,
    records_from_json,
    records_to_csv,
    records_to_json,
    render_svg,
    required_bits,
    run_prop1,
    run_prop2,
    run_prop3,
    truncation_rows,
)

CSV_HEADER = "N,A,a,dim,mode_count,certified_count,variance,precision_bits,wall_time_ms"


def _run_cli(*args, **kw):
    return subprocess.run(
        [sys.executable, "-m", "mixmodes", *args],
        capture_output=True,
        text=True,
        **kw,
    )


def _strip_wall_time(csv_text: str) -> str:
    lines = csv_text.strip().splitlines()
    return "\n".join(",".join(line.split(",")[:-1]) for line in lines)


def _fake_record(i: int, A: float, count: int) -> SweepRecord:
    return SweepRecord(
        N=i,
        A=A,
        a=1.0,
        dim=1,
        mode_count=count,
        certified_count=count,
        variance=None,
        precision_bits=53,
        wall_time_ms=0,
    )


class TestSweeps:
    def test_prop1_single_record(self):
        recs, violations = run_prop1([5])
        assert violations == []
        r = recs[0]
        assert (r.N, r.dim) == (5, 1)
        assert r.A == 7.926654595212021
        assert r.a == 1.5853309190424043
        assert r.mode_count == 5
        assert r.certified_count == 5
        assert r.variance is None
        assert r.precision_bits == 76
        assert r.wall_time_ms >= 0

    def test_prop1_parity_pattern(self):
        recs, violations = run_prop1([6, 7])
        assert violations == []
        by_n = {r.N: r for r in recs}
        assert (by_n[6].mode_count, by_n[6].certified_count) == (7, 5)
        assert (by_n[7].mode_count, by_n[7].certified_count) == (7, 7)

    def test_prop1_rejects_small_n(self):
        with pytest.raises(ValueError):
            run_prop1([1])

    def test_prop1_respects_bits_override(self):
        recs, violations = run_prop1([30], bits=53)
        assert recs[0].precision_bits == 53
        assert violations  # the drop is below double resolution

    def test_prop1_deterministic_modulo_wall_time(self):
        a, _ = run_prop1([4, 5])
        b, _ = run_prop1([4, 5])
        strip = lambda r: r.__class__(**{**r.__dict__, "wall_time_ms": 0})
        assert [strip(r) for r in a] == [strip(r) for r in b]

    def test_prop2_single_record(self):
        recs, n0 = run_prop2([1])
        assert n0 == 1
        r = recs[0]
        assert r.A == 10.634723105433096
        assert r.a == 3.5449077018110318
        assert (r.mode_count, r.certified_count) == (3, 3)
        assert r.variance == 0.7777777777777778
        assert r.precision_bits == required_bits(1)

    def test_prop2_counts_and_variance_growth(self):
        recs, n0 = run_prop2([1, 2, 3, 5, 8])
        assert n0 == 1
        for r in recs:
            assert r.certified_count >= 2 * (r.N - 1) + 1
            assert r.variance <= 1.0
        vs = [r.variance for r in recs]
        assert vs == sorted(vs)

    def test_prop2_variance_guard(self):
        with pytest.raises(VarianceBoundError):
            run_prop2([1], alpha=0.49)

    def test_prop3_central_cube(self):
        recs, violations = run_prop3([2], d=2)
        assert violations == []
        r = recs[0]
        assert r.A == 5.0132565492620005
        assert r.a == 2.5066282746310002
        assert (r.mode_count, r.certified_count) == (1, 1)
        assert r.dim == 2
        assert r.precision_bits == 128

    def test_prop3_floor_pattern(self):
        recs, violations = run_prop3([3, 4], d=2)
        assert violations == []
        counts = {r.N: r.certified_count for r in recs}
        assert counts[3] == 9
        assert counts[4] == 9
        for r in recs:
            assert r.certified_count >= (r.N - 1) ** 2

    def test_prop3_d1_matches_interval_logic(self):
        recs, violations = run_prop3([4], d=1)
        assert violations == []
        assert recs[0].certified_count >= 3


class TestReports:
    def test_bounds_rows_clean_on_grid(self):
        grid = [0.3 + 0.3 * i for i in range(20)]
        rows, violations = bounds_rows(grid)
        assert len(rows) == 20
        assert violations == []
        for r in rows:
            assert r.lower <= r.upper
            assert r.dual_residual <= 1e-20

    def test_bounds_rows_rejects_empty(self):
        with pytest.raises(ValueError):
            bounds_rows([])

    def test_truncation_rows_subset(self):
        rows, violations = truncation_rows([2, 5, 10])
        assert violations == []
        byn = {r.N: r for r in rows}
        assert byn[10].bound == pytest.approx(2.2496624680069074e-10, rel=1e-13)
        for r in rows:
            assert r.sampled_sup <= r.bound


class TestSlopeFit:
    def test_recovers_exact_power_laws(self):
        for p in (1, 2, 3):
            recs = [_fake_record(i, A, A**p) for i, A in enumerate((2.0, 4.0, 8.0, 16.0))]
            fit = fit_slope(recs)
            assert fit.slope == pytest.approx(p, abs=1e-12)
            assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
            assert fit.n_points == 4

    def test_requires_three_points(self):
        recs = [_fake_record(i, A, 4) for i, A in enumerate((2.0, 4.0))]
        with pytest.raises(ValueError):
            fit_slope(recs)

    def test_requires_spread_in_A(self):
        recs = [_fake_record(i, 2.0, 4) for i in range(4)]
        with pytest.raises(ValueError):
            fit_slope(recs)


class TestSerialization:
    def test_csv_round_trip_exact(self):
        recs, _ = run_prop1([4, 5])
        text = records_to_csv(recs)
        assert text.splitlines()[0] == CSV_HEADER
        assert "7.9266545952120211" in text
        back = records_from_csv(text)
        assert list(back) == list(recs)

    def test_csv_empty_variance_field(self):
        recs, _ = run_prop1([4])
        row = records_to_csv(recs).splitlines()[1]
        assert row.split(",")[6] == ""

    def test_csv_rejects_bad_header(self):
        with pytest.raises(ValueError):
            records_from_csv("nope,nope\n1,2\n")

    def test_json_round_trip_exact(self):
        recs, n0 = run_prop2([1, 2])
        text = records_to_json(recs, n0=n0)
        obj = json.loads(text)
        assert obj["n0"] == 1
        assert len(obj["records"]) == 2
        back = records_from_json(text)
        assert list(back) == list(recs)

    def test_record_validation(self):
        with pytest.raises(ValueError):
            SweepRecord(
                N=-1, A=1.0, a=1.0, dim=1, mode_count=0, certified_count=0,
                variance=None, precision_bits=53, wall_time_ms=0,
            )
        with pytest.raises(ValueError):
            SweepRecord(
                N=2, A=1.0, a=1.0, dim=1, mode_count=1, certified_count=1,
                variance=None, precision_bits=53, wall_time_ms=-3,
            )


class TestCli:
    def test_prop1_csv_stdout(self):
        p = _run_cli("prop1", "--n", "4,5")
        assert p.returncode == 0
        lines = p.stdout.strip().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 3

    def test_prop1_out_file_and_determinism(self, tmp_path):
        f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert _run_cli("prop1", "--n", "4,5", "--out", str(f1)).returncode == 0
        assert _run_cli("prop1", "--n", "4,5", "--out", str(f2)).returncode == 0
        assert _strip_wall_time(f1.read_text()) == _strip_wall_time(f2.read_text())

    def test_prop1_violation_exit_code(self):
        p = _run_cli("prop1", "--n", "30", "--bits", "53")
        assert p.returncode == 1

    def test_usage_error_exit_code(self):
        assert _run_cli("prop1", "--n", "4", "--bogus").returncode == 2
        assert _run_cli("prop1").returncode == 2
        assert _run_cli("slope", "--in", "/nonexistent/x.csv").returncode == 2

    def test_prop2_reports_threshold(self):
        p = _run_cli("prop2", "--n", "1,2,3", "--format", "json")
        assert p.returncode == 0
        obj = json.loads(p.stdout)
        assert obj["n0"] == 1
        assert obj["violations"] == []
        assert "N0 = 1" in p.stderr

    def test_prop2_variance_guard_exit_code(self):
        p = _run_cli("prop2", "--n", "1", "--alpha", "0.49")
        assert p.returncode == 1

    def test_prop3_json(self):
        p = _run_cli("prop3", "--d", "2", "--n", "2,3")
        assert p.returncode == 0
        assert p.stdout.startswith(CSV_HEADER)

    def test_bounds_text(self):
        p = _run_cli("bounds", "--a-grid", "0.5:2.5:0.5")
        assert p.returncode == 0
        assert "dual_resid" in p.stdout

    def test_slope_round_trip(self, tmp_path):
        f = tmp_path / "sweep.csv"
        assert (
            _run_cli("prop1", "--n", "4,8,16", "--out", str(f)).returncode == 0
        )
        p = _run_cli("slope", "--in", str(f))
        assert p.returncode == 0
        m = re.search(r"slope = ([0-9.]+)", p.stdout)
        assert m and 1.5 < float(m.group(1)) < 2.5


class TestSvg:
    def test_structure_and_marks(self):
        xs = [0.0, 1.0, 2.0]
        ys = [0.5, 1.5, 0.25]
        svg = render_svg(xs, ys, marks=((1.0, 1.5),), title="demo")
        assert svg.startswith("<svg")
        assert "polyline" in svg and "circle" in svg and "demo" in svg

    def test_plot_samples_match_independent_density(self, tmp_path):
        a = 1.5853309190424043
        out = tmp_path / "fig.svg"
        p = _run_cli(
            "plot", "--construction", "gamma", "--a", repr(a), "--n", "5",
            "--samples", "200", "--out", str(out),
        )
        assert p.returncode == 0
        svg = out.read_text()
        pts = re.search(r'<polyline[^>]*points="([^"]+)"', svg).group(1)
        pairs = [tuple(map(float, q.split(","))) for q in pts.split()]
        assert len(pairs) == 200
        m = make_gamma(a, 5)
        ctx = PrecisionContext()
        for x, y in pairs[::17]:
            assert y == density(m, x, ctx)
