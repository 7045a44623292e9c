"""Blow-up of the homogeneous problem from u0 = const: H series and detection time vs dt."""

import argparse
from dataclasses import replace

from twopoint_wave.config import preset
from twopoint_wave.diagnostics import functional_H, nondecreasing_within
from twopoint_wave.solver import run_simulation, step_doubling_estimates


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--u0", type=float, default=5.0)
    ap.add_argument("--dt", type=float, nargs="+", default=[0.005, 0.0025, 0.00125])
    args = ap.parse_args()

    base = preset("blowup")
    data = replace(base.data, u0=repr(args.u0))
    h = base.diagnostics.h_tilde
    for dt in args.dt:
        solver = replace(base.solver, dt=dt)
        tr, ser = run_simulation(solver, base.params, data, base.grid, base.diagnostics)
        est = step_doubling_estimates(tr, base.params, data, base.grid,
                                      lambda s: functional_H(s, base.params, base.grid, h))
        ok, _ = nondecreasing_within(ser["H"], est)
        print(f"dt={dt:<8g} H(0)={ser['H'][0]:.4f}  {tr.termination.kind} at t={tr.termination.t:g}  "
              f"H nondecreasing within tolerance: {ok}")


if __name__ == "__main__":
    main()
