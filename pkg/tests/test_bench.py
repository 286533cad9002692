"""Benchmark harness: rows, CSV and SVG rendering, slope fitting."""

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from statefuse import (
    BenchConfig,
    BenchRow,
    ValidationError,
    bench_csv,
    bench_svg,
    cross_peak_bytes,
    fit_loglog_slope,
    op_count_cross_attention,
    op_count_ssm,
    run_bench,
    ssm_peak_bytes,
)

TINY = BenchConfig(n_list=(16, 32), repetitions=3, warmup=0)


# --- slope fitting ---

def test_slope_linear():
    xs = np.array([10.0, 20.0, 40.0, 80.0])
    assert abs(fit_loglog_slope(xs, 3.0 * xs) - 1.0) <= 1e-12


def test_slope_quadratic():
    xs = np.array([4.0, 8.0, 16.0, 32.0])
    assert abs(fit_loglog_slope(xs, 0.5 * xs**2) - 2.0) <= 1e-12


def test_slope_constant():
    xs = np.array([1.0, 2.0, 4.0])
    assert abs(fit_loglog_slope(xs, np.full(3, 7.0))) <= 1e-12


def test_slope_needs_three_distinct_positive_points():
    with pytest.raises(ValidationError):
        fit_loglog_slope([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ValidationError):
        fit_loglog_slope([1.0, 2.0, -3.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValidationError):
        fit_loglog_slope([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])


# --- running ---

def test_run_bench_row_grid():
    rows = run_bench(TINY)
    assert len(rows) == 4
    key = [(r.mechanism, r.n) for r in rows]
    assert key == sorted(key)
    assert {r.mechanism for r in rows} == {"ssm", "cross_attention"}
    assert all(r.wall_nanos > 0 for r in rows)


def test_run_bench_op_count_column():
    for row in run_bench(TINY):
        if row.mechanism == "ssm":
            assert row.op_count == op_count_ssm(row.n, row.k, row.d, row.m)
        else:
            assert row.op_count == op_count_cross_attention(row.n, row.k, row.d)


def test_run_bench_single_mechanism():
    cfg = BenchConfig(n_list=(16, 32), repetitions=3, warmup=0, mechanism="ssm")
    rows = run_bench(cfg)
    assert [r.mechanism for r in rows] == ["ssm", "ssm"]


def test_analytic_bytes_affine_in_n():
    cfg = BenchConfig(n_list=(16, 32, 64), repetitions=3, warmup=0, mechanism="ssm")
    rows = run_bench(cfg)
    n = [r.n for r in rows]
    b = [r.peak_bytes for r in rows]
    assert (b[1] - b[0]) * (n[2] - n[0]) == (b[2] - b[0]) * (n[1] - n[0])
    e = cfg.k * cfg.d
    assert b[0] == ssm_peak_bytes(n[0], e, cfg.state_dim)
    assert all(r.peak_bytes_source == "analytic" for r in rows)


def test_cross_bytes_model_quadratic():
    e = 64
    assert cross_peak_bytes(10, e) == 8 * (5 * 10 * e + 2 * 100)
    gaps = [
        cross_peak_bytes(2 * n, e) - 4 * cross_peak_bytes(n, e) for n in (8, 16)
    ]
    # doubling N quadruples the quadratic term, leaving a linear remainder
    assert gaps[0] == -8 * (5 * 8 * e * 2)
    assert gaps[1] == -8 * (5 * 16 * e * 2)


def test_tracemalloc_source():
    cfg = BenchConfig(
        n_list=(8, 16), repetitions=3, warmup=0, mechanism="cross_attention",
        measure_memory=True,
    )
    rows = run_bench(cfg)
    assert all(r.peak_bytes_source == "tracemalloc" for r in rows)
    assert all(r.peak_bytes > 0 for r in rows)


# --- rendering ---

def test_csv_layout():
    rows = run_bench(TINY)
    text = bench_csv(rows)
    lines = text.split("\n")
    assert lines[0] == (
        "mechanism,n,k,d,m,wall_nanos,peak_bytes,peak_bytes_source,op_count,timer_ok"
    )
    assert lines[-1] == ""
    assert len(lines) == 2 + len(rows)
    first = lines[1].split(",")
    assert first[0] in ("ssm", "cross_attention")
    assert first[-1] in ("0", "1")


def test_csv_pure_function_of_rows():
    rows = run_bench(TINY)
    assert bench_csv(rows) == bench_csv(list(rows))


def test_svg_pure_function_of_rows():
    rows = run_bench(TINY)
    a = bench_svg(rows)
    b = bench_svg([BenchRow(**vars(r)) for r in rows])
    assert a == b


def test_svg_well_formed():
    rows = run_bench(TINY)
    text = bench_svg(rows)
    root = ET.fromstring(text)
    assert root.tag.endswith("svg")
    assert "polyline" in text
    assert text.endswith("\n")


def test_bench_row_validation():
    with pytest.raises(ValidationError):
        BenchRow("warp", 1, 1, 1, 1, 10, 0, "analytic", 1, True)
    with pytest.raises(ValidationError):
        BenchRow("ssm", 1, 1, 1, 1, 0, 0, "analytic", 1, True)
    with pytest.raises(ValidationError):
        BenchRow("ssm", 1, 1, 1, 1, 10, -1, "analytic", 1, True)


def test_bench_config_validation():
    with pytest.raises(ValidationError):
        BenchConfig(repetitions=2)
    with pytest.raises(ValidationError):
        BenchConfig(n_list=(32, 16))
    with pytest.raises(ValidationError):
        BenchConfig(n_list=(16, 16))
    with pytest.raises(ValidationError):
        BenchConfig(mechanism="gpu")
    with pytest.raises(ValidationError):
        BenchConfig.from_dict({"n_list": [8], "bogus": 1})


def test_bench_config_round_trip():
    cfg = BenchConfig(n_list=(8, 16), repetitions=4, mechanism="ssm", dtype="float32")
    again = BenchConfig.from_dict(cfg.to_dict())
    assert again == cfg


def test_float32_dtype_runs():
    cfg = BenchConfig(n_list=(8, 16), repetitions=3, warmup=0, dtype="float32")
    rows = run_bench(cfg)
    assert len(rows) == 4
