"""Exponential decay of the energy from small data: eta*, fitted rate, sandwich."""

import argparse
from dataclasses import replace

import numpy as np

from twopoint_wave.config import preset
from twopoint_wave.diagnostics import fit_exponential_decay
from twopoint_wave.solver import run_simulation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--u0", type=float, nargs="+", default=[0.05, 0.1, 0.2])
    ap.add_argument("--t-final", type=float, default=10.0)
    args = ap.parse_args()

    base = preset("decay")
    solver = replace(base.solver, t_final=args.t_final)
    print(f"{'u0':>6} {'eta*':>8} {'min I':>10} {'gamma':>7} {'resid':>7} sandwich")
    for u0 in args.u0:
        data = replace(base.data, u0=repr(u0))
        tr, ser = run_simulation(solver, base.params, data, base.grid, base.diagnostics)
        c = ser.constants
        E, sL = ser["E"], ser["script_L"]
        fit = fit_exponential_decay(ser.times, E, (args.t_final / 2, args.t_final))
        ok = np.all(c["beta1"] * E <= sL + 1e-10) and np.all(sL <= c["beta2"] * E + 1e-10)
        print(f"{u0:6g} {c['eta_star']:8.4f} {np.min(ser['I']):10.2e} {fit.gamma:7.3f} {fit.residual:7.3f} {bool(ok)}")


if __name__ == "__main__":
    main()
