"""Why a scan: measured wall time against sequence length, on a log-log axis.

Cross-attention fusion touches every pair of frames, so its cost curve
bends quadratic; the scan walks the sequence once. This script times both
mechanisms over a doubling ladder of lengths, fits log-log slopes, and
writes the chart as an SVG.
"""

from statefuse import BenchConfig, bench_csv, bench_svg, fit_loglog_slope, run_bench


def main():
    cfg = BenchConfig(n_list=(64, 128, 256, 512, 1024), repetitions=5, warmup=1)
    rows = run_bench(cfg)
    print(bench_csv(rows), end="")

    for mech in ("ssm", "cross_attention"):
        mine = [r for r in rows if r.mechanism == mech]
        slope = fit_loglog_slope(
            [r.n for r in mine], [r.wall_nanos for r in mine]
        )
        print(f"{mech:>16}: log-log wall-time slope {slope:.3f}")

    out = "bench_scaling.svg"
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(bench_svg(rows))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
