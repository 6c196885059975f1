"""Run an exponent ladder on a disk or square and print the rung table.

Examples:

    python3 scripts/ladder_sweep.py --shape disk --profile power --alpha 2
    python3 scripts/ladder_sweep.py --shape square --profile constant --r 1
    python3 scripts/ladder_sweep.py --shape square --profile sqrt --ladder 16 64 256
"""

import argparse
import time

from plaplab import (
    Disk,
    Rectangle,
    SolverOptions,
    build_grid_domain,
)
from plaplab.asymptotics import (
    QProfile,
    SweepOptions,
    q0_limit_check,
    run_sweep,
    sup_norm_trend,
)


def make_profile(args):
    if args.profile == "constant":
        return QProfile.constant(args.r)
    if args.profile == "proportional":
        return QProfile.proportional(args.big_q)
    if args.profile == "power":
        return QProfile.power(args.alpha)
    return QProfile.sqrt()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shape", choices=("disk", "square"), default="disk")
    ap.add_argument("--h", type=float, default=1.0 / 32)
    ap.add_argument("--ladder", type=float, nargs="+", default=[4, 8, 16, 32])
    ap.add_argument("--profile", default="power",
                    choices=("constant", "proportional", "power", "sqrt"))
    ap.add_argument("--r", type=float, default=2.0)
    ap.add_argument("--big-q", type=float, default=1.0)
    ap.add_argument("--alpha", type=float, default=2.0)
    ap.add_argument("--grad-tol", type=float, default=1e-5)
    args = ap.parse_args()

    geom = (Disk((0.0, 0.0), 1.0) if args.shape == "disk"
            else Rectangle(1.0, 1.0))
    dom = build_grid_domain(geom, args.h)
    profile = make_profile(args)
    print(f"{args.shape}, h={args.h:g}, {profile.describe()}, "
          f"ladder {[int(p) if p == int(p) else p for p in args.ladder]}")

    t0 = time.time()
    report = run_sweep(dom, args.ladder, profile,
                       SweepOptions(solver=SolverOptions(grad_tol=args.grad_tol,
                                                         max_iters=12000)))
    wall = time.time() - t0

    print(f"predicted limit {report.predicted:.6f}")
    head = f"{'p':>6} {'q':>8} {'lam^(1/p)':>10} {'err':>8} {'sup':>8} " \
           f"{'gap_cone':>9} {'iters':>6}"
    print(head)
    for row in report.rows:
        print(f"{row.p:6.0f} {row.q:8.1f} {row.lam_root:10.4f} "
              f"{row.limit_error:8.4f} {row.sup_norm:8.4f} "
              f"{row.gap_cone:9.4f} {row.iterations:6d}")
    for p, msg in report.failures:
        print(f"  rung p={p} failed: {msg}")

    v = report.limit_verdict()
    print(f"limit verdict: {v.status} ({v.detail})")
    if profile.kind == "custom":
        v = q0_limit_check(dom, report)
        print(f"shape gap verdict: {v.status} ({v.detail})")
    elif profile.q_to_infinity:
        v = sup_norm_trend(report)
        print(f"sup norm verdict: {v.status} ({v.detail})")
    print(f"wall time {wall:.1f}s")


if __name__ == "__main__":
    main()
