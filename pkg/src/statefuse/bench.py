"""Wall-time and memory scaling benchmarks for the two fusion mechanisms.

Both workloads are dedicated benchmark kernels that mirror the arithmetic
shape of the real paths: the state-space kernel is the per-step gated
recurrence (linear in sequence length), the cross-attention kernel is a
full attention pass with an N x N score matrix (quadratic).  Timing uses
the median of repeated ``perf_counter_ns`` runs after warmup; a row is
flagged unreliable when the median is under 100 timer ticks.

Peak bytes default to an analytic allocation model of each kernel's
dominant arrays (the state-space model is exactly affine in N).  Pass
``measure_memory`` to use tracemalloc instead.
"""

from __future__ import annotations

import json
import statistics
import time
import tracemalloc
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .numerics import softmax
from .pipeline import op_count_cross_attention, op_count_ssm

MECHANISMS = ("ssm", "cross_attention")
DTYPES = ("float64", "float32")
TIMER_MIN_TICKS = 100

BENCH_CSV_HEADER = (
    "mechanism,n,k,d,m,wall_nanos,peak_bytes,peak_bytes_source,op_count,timer_ok"
)


@dataclass(frozen=True)
class BenchConfig:
    n_list: tuple = (64, 128, 256, 512, 1024, 2048)
    k: int = 4
    d: int = 16
    state_dim: int = 16
    repetitions: int = 5
    warmup: int = 2
    mechanism: str = "both"
    seed: int = 0
    dtype: str = "float64"
    measure_memory: bool = False

    def __post_init__(self):
        n_list = tuple(int(n) for n in self.n_list)
        if len(n_list) < 1 or any(n < 1 for n in n_list):
            raise ValidationError("n_list must hold positive lengths")
        if any(b <= a for a, b in zip(n_list, n_list[1:])):
            raise ValidationError("n_list must be strictly increasing")
        object.__setattr__(self, "n_list", n_list)
        for name in ("k", "d", "state_dim"):
            v = int(getattr(self, name))
            if v < 1:
                raise ValidationError(f"{name} must be >= 1")
            object.__setattr__(self, name, v)
        if int(self.repetitions) < 3:
            raise ValidationError("repetitions must be >= 3 for a stable median")
        object.__setattr__(self, "repetitions", int(self.repetitions))
        if int(self.warmup) < 0:
            raise ValidationError("warmup must be >= 0")
        object.__setattr__(self, "warmup", int(self.warmup))
        if self.mechanism not in MECHANISMS + ("both",):
            raise ValidationError(f"mechanism must be one of {MECHANISMS + ('both',)}")
        if self.dtype not in DTYPES:
            raise ValidationError(f"dtype must be one of {DTYPES}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "measure_memory", bool(self.measure_memory))

    @property
    def mechanisms(self) -> tuple:
        return MECHANISMS if self.mechanism == "both" else (self.mechanism,)

    def to_dict(self) -> dict:
        return {
            "n_list": list(self.n_list),
            "k": self.k,
            "d": self.d,
            "state_dim": self.state_dim,
            "repetitions": self.repetitions,
            "warmup": self.warmup,
            "mechanism": self.mechanism,
            "seed": self.seed,
            "dtype": self.dtype,
            "measure_memory": self.measure_memory,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "BenchConfig":
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown bench config keys: {sorted(unknown)}")
        return cls(**raw)


@dataclass(frozen=True)
class BenchRow:
    mechanism: str
    n: int
    k: int
    d: int
    m: int
    wall_nanos: int
    peak_bytes: int
    peak_bytes_source: str
    op_count: int
    timer_ok: bool

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValidationError(f"mechanism must be one of {MECHANISMS}")
        if self.peak_bytes_source not in ("analytic", "tracemalloc"):
            raise ValidationError("peak_bytes_source must be analytic or tracemalloc")
        if min(self.n, self.k, self.d, self.m) < 1:
            raise ValidationError("n, k, d, m must all be >= 1")
        if self.wall_nanos <= 0:
            raise ValidationError("wall_nanos must be positive")
        if self.peak_bytes < 0 or self.op_count < 0:
            raise ValidationError("peak_bytes and op_count must be non-negative")


def ssm_peak_bytes(n: int, e: int, m: int, itemsize: int = 8) -> int:
    """Affine-in-N allocation model of the gated scan's dominant arrays."""
    return itemsize * (11 * n * e + 2 * e * m)


def cross_peak_bytes(n: int, e: int, itemsize: int = 8) -> int:
    """Allocation model of the attention pass; the N x N scores dominate."""
    return itemsize * (5 * n * e + 2 * n * n)


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of ln(y) against ln(x)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValidationError("xs and ys must be 1-d arrays of equal length")
    if xs.size < 3:
        raise ValidationError("need at least 3 points to fit a slope")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise ValidationError("log-log fit needs strictly positive values")
    if np.unique(xs).size < 3:
        raise ValidationError("need at least 3 distinct x values")
    lx = np.log(xs)
    ly = np.log(ys)
    dx = lx - lx.mean()
    return float(np.dot(dx, ly - ly.mean()) / np.dot(dx, dx))


def _ssm_inputs(n: int, e: int, m: int, seed, dtype):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, e)).astype(dtype)
    a = (-rng.uniform(0.05, 0.95, size=(e, m))).astype(dtype)
    a = np.exp(a)  # decay factors in (0, 1)
    b = rng.standard_normal((e, m)).astype(dtype)
    c = rng.standard_normal((e, m)).astype(dtype)
    d = rng.standard_normal(e).astype(dtype)
    return x, a, b, c, d


def _ssm_workload(x, a, b, c, d):
    n, e = x.shape
    h = np.zeros_like(a)
    out = np.empty((n, e), dtype=x.dtype)
    for t in range(n):
        h = a * h + b * x[t, :, None]
        out[t] = (c * h).sum(axis=1) + d * x[t]
    return out


def _cross_inputs(n: int, e: int, seed, dtype):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, e)).astype(dtype)
    wq, wk, wv, wo = (rng.standard_normal((e, e)).astype(dtype) for _ in range(4))
    return x, wq, wk, wv, wo


def _cross_workload(x, wq, wk, wv, wo):
    e = x.shape[1]
    q = x @ wq
    k = x @ wk
    v = x @ wv
    scores = (q @ k.T) / np.sqrt(np.asarray(e, dtype=x.dtype))
    attn = softmax(scores, axis=1)
    return (attn.astype(x.dtype) @ v) @ wo


def _timer_tick_nanos() -> float:
    return time.get_clock_info("perf_counter").resolution * 1e9


def _time_once(fn) -> int:
    start = time.perf_counter_ns()
    fn()
    return time.perf_counter_ns() - start


def _measure(fn, cfg: BenchConfig):
    for _ in range(cfg.warmup):
        fn()
    samples = [_time_once(fn) for _ in range(cfg.repetitions)]
    # a sub-tick zero median is clamped; timer_ok already flags it unreliable
    wall = max(int(statistics.median(samples)), 1)
    return wall, wall >= TIMER_MIN_TICKS * _timer_tick_nanos()


def _tracemalloc_peak(fn) -> int:
    tracemalloc.start()
    try:
        fn()
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    return int(peak)


def run_bench(cfg: BenchConfig | None = None) -> list:
    """Run the configured benchmark grid and return one row per point."""
    cfg = BenchConfig() if cfg is None else cfg
    dtype = np.dtype(cfg.dtype)
    e = cfg.k * cfg.d
    rows = []
    for mech_idx, mech in enumerate(cfg.mechanisms):
        for n in cfg.n_list:
            seed = [cfg.seed, mech_idx, n]
            if mech == "ssm":
                args = _ssm_inputs(n, e, cfg.state_dim, seed, dtype)
                fn = lambda a=args: _ssm_workload(*a)
                analytic = ssm_peak_bytes(n, e, cfg.state_dim, dtype.itemsize)
                ops = op_count_ssm(n, cfg.k, cfg.d, cfg.state_dim)
            else:
                args = _cross_inputs(n, e, seed, dtype)
                fn = lambda a=args: _cross_workload(*a)
                analytic = cross_peak_bytes(n, e, dtype.itemsize)
                ops = op_count_cross_attention(n, cfg.k, cfg.d)
            wall, timer_ok = _measure(fn, cfg)
            if cfg.measure_memory:
                peak, source = _tracemalloc_peak(fn), "tracemalloc"
            else:
                peak, source = analytic, "analytic"
            rows.append(
                BenchRow(
                    mechanism=mech,
                    n=n,
                    k=cfg.k,
                    d=cfg.d,
                    m=cfg.state_dim,
                    wall_nanos=wall,
                    peak_bytes=peak,
                    peak_bytes_source=source,
                    op_count=ops,
                    timer_ok=timer_ok,
                )
            )
    rows.sort(key=lambda r: (r.mechanism, r.n))
    return rows


def bench_csv(rows) -> str:
    lines = [BENCH_CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                (
                    r.mechanism,
                    str(r.n),
                    str(r.k),
                    str(r.d),
                    str(r.m),
                    str(r.wall_nanos),
                    str(r.peak_bytes),
                    r.peak_bytes_source,
                    str(r.op_count),
                    "1" if r.timer_ok else "0",
                )
            )
        )
    return "\n".join(lines) + "\n"


_SERIES_COLORS = {"ssm": "#1f77b4", "cross_attention": "#d62728"}


def bench_svg(rows) -> str:
    """Hand-built SVG 1.1 log-log chart of wall time against length."""
    rows = list(rows)
    if not rows:
        raise ValidationError("no benchmark rows to plot")
    width, height = 640.0, 480.0
    left, right, top, bottom = 70.0, 20.0, 40.0, 50.0
    xs = sorted({r.n for r in rows})
    ys = [max(r.wall_nanos, 1) for r in rows]
    lx0, lx1 = np.log10(xs[0]), np.log10(xs[-1])
    ly0, ly1 = np.log10(min(ys)), np.log10(max(ys))
    if lx1 <= lx0:
        lx1 = lx0 + 1.0
    if ly1 <= ly0:
        ly1 = ly0 + 1.0

    def px(n):
        return left + (np.log10(n) - lx0) / (lx1 - lx0) * (width - left - right)

    def py(w):
        return height - bottom - (np.log10(max(w, 1)) - ly0) / (ly1 - ly0) * (
            height - top - bottom
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="#ffffff"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">'
        "wall time vs sequence length (log-log)</text>",
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" '
        f'y2="{height - bottom}" stroke="#333333"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" '
        f'stroke="#333333"/>',
    ]
    for n in xs:
        x = px(n)
        parts.append(
            f'<line x1="{x:.1f}" y1="{height - bottom}" x2="{x:.1f}" '
            f'y2="{height - bottom + 5}" stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{height - bottom + 20:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{n}</text>'
        )
    for frac in (0.0, 0.5, 1.0):
        lw = ly0 + frac * (ly1 - ly0)
        y = py(10.0 ** lw)
        label = f"{10.0 ** lw / 1e6:.3g}"
        parts.append(
            f'<line x1="{left - 5}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" '
            f'stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{left - 9:.1f}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{label}</text>'
        )
    parts.append(
        f'<text x="{(left + width - right) / 2:.1f}" y="{height - 10:.1f}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">'
        "sequence length N</text>"
    )
    parts.append(
        f'<text x="18" y="{(top + height - bottom) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 18 {(top + height - bottom) / 2:.1f})">'
        "median wall time (ms)</text>"
    )
    legend_y = top + 8.0
    for mech in MECHANISMS:
        series = sorted((r for r in rows if r.mechanism == mech), key=lambda r: r.n)
        if not series:
            continue
        color = _SERIES_COLORS[mech]
        points = " ".join(
            f"{px(r.n):.1f},{py(r.wall_nanos):.1f}" for r in series
        )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="2"/>'
        )
        for r in series:
            parts.append(
                f'<circle cx="{px(r.n):.1f}" cy="{py(r.wall_nanos):.1f}" r="3" '
                f'fill="{color}"/>'
            )
        parts.append(
            f'<rect x="{width - right - 150:.1f}" y="{legend_y - 9:.1f}" '
            f'width="10" height="10" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{width - right - 135:.1f}" y="{legend_y:.1f}" '
            f'font-family="sans-serif" font-size="12">{mech}</text>'
        )
        legend_y += 18.0
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
