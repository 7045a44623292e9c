"""Grid-refinement table for the manufactured problem, both boundary schemes."""

import argparse

from twopoint_wave.verification import convergence_study, default_dt_rule, fixed_dt_rule


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, nargs="+", default=[5, 10, 20, 40, 80])
    ap.add_argument("--fixed-dt", action="store_true", help="dt = 0.08 for every N")
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    rule = fixed_dt_rule if args.fixed_dt else default_dt_rule

    for scheme in ("half-cell", "unit-weight"):
        print(f"\n{scheme}")
        print(f"{'N':>5} {'dt':>9} {'max_abs':>11} {'order':>6}")
        for r in convergence_study(args.N, rule, boundary_scheme=scheme, workers=args.workers):
            order = "" if r.observed_order is None else f"{r.observed_order:6.2f}"
            print(f"{r.N:5d} {r.dt:9.5f} {r.max_abs:11.3e} {order:>6}  {r.status}")


if __name__ == "__main__":
    main()
