"""Refine uniform grids and watch -H o rho approach the classical Hamiltonian.

quadratic   min int u^2, x' = u, x(0) = 0, x(1) = 1      classical -H = 1
damped      min int x^2 + u^2, x' = u, x(0) = 1, p(1) = 0 classical -H = -1/cosh(1)^2
"""

import argparse
import math

import numpy as np

from tsnoether import forward_backward_sweep, make_problem, make_uniform, time_translation
from tsnoether.builtin import quadratic_extremal, quadratic_problem
from tsnoether.noether import conserved_quantity_time_state

CASES = {
    "quadratic": 1.0,
    "damped": -1.0 / math.cosh(1.0) ** 2,
}


def extremal(case, h):
    ts = make_uniform(0, 1, h)
    if case == "quadratic":
        prob = quadratic_problem(ts, 0.0, 1.0)
        return prob, quadratic_extremal(prob, 0.0, 1.0)
    prob = make_problem("x^2 + u^2", ["u"], ts, x_a=[1.0])
    return prob, forward_backward_sweep(prob, p_b=[0.0])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=float, nargs="+", default=[0.1, 0.05, 0.025, 0.0125])
    args = ap.parse_args()
    for case, classical in CASES.items():
        print(f"{case}: classical value {classical:.12f}")
        print(f"  {'h':>8} {'max error':>12} {'error / h':>10}")
        for h in args.steps:
            prob, ext = extremal(case, h)
            rep = conserved_quantity_time_state(prob, ext, time_translation(prob), check_invariance_first=False)
            err = float(np.max(np.abs(rep.values.values - classical)))
            print(f"  {h:8.4g} {err:12.4e} {err / h:10.4f}")


if __name__ == "__main__":
    main()
