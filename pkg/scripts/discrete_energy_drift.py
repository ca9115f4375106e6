"""How constant is H o rho along a swept extremal of a non-trivial autonomous problem?

For min int (x^2 + u^2) with x^Delta = u the problem is autonomous, yet on a
uniform grid the discrete Hamiltonian changes between steps by
-h^2 (u_k^2 + x_{k+1}^2).  The drift therefore shrinks like h, and the
time-translation check reports it as a (failing) deviation rather than hiding it.
"""

import argparse

import numpy as np

from tsnoether import forward_backward_sweep, make_problem, make_uniform, time_translation, verify_extremal
from tsnoether.noether import conserved_quantity_time_state
from tsnoether.ocp import hamiltonian_rho


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025])
    args = ap.parse_args()
    print(f"{'h':>8} {'max |dH|':>12} {'|dH - pred|':>12} {'deviation':>12}  passed")
    for h in args.steps:
        prob = make_problem("x^2 + u^2", ["u"], make_uniform(0, 1, h), x_a=[1.0])
        ext = forward_backward_sweep(prob, p_b=[0.0])
        assert verify_extremal(prob, ext).ok()
        t = prob.scale.points
        H = np.array([hamiltonian_rho(prob, ext, ti) for ti in t[1:]])
        x, u = ext.x.values[:, 0], ext.u.values[:, 0]
        predicted = -h * h * (u[:-1] ** 2 + x[1:-1] ** 2)
        mismatch = np.max(np.abs(np.diff(H) - predicted))
        rep = conserved_quantity_time_state(prob, ext, time_translation(prob), check_invariance_first=False)
        print(f"{h:8.4g} {np.max(np.abs(np.diff(H))):12.4e} {mismatch:12.4e} {rep.max_deviation:12.4e}  {rep.passed}")


if __name__ == "__main__":
    main()
