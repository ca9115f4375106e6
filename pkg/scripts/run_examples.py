"""Run the bundled examples on several scales and tabulate the checks."""

import argparse

from tsnoether.builtin import EXAMPLES
from tsnoether.extremal import verify_extremal
from tsnoether.noether import STATE_ONLY, check_invariance, conserved_quantity_state_only, conserved_quantity_time_state

DEFAULT_SCALES = ["uniform:0,1,0.25", "uniform:0,1,0.05", "qscale:2,0,4", "explicit:0,0.1,0.2,0.4,0.8,1.6"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scales", nargs="+", default=DEFAULT_SCALES)
    ap.add_argument("--examples", nargs="+", default=sorted(EXAMPLES), choices=sorted(EXAMPLES))
    args = ap.parse_args()
    print(f"{'example':<10} {'scale':<34} {'family':<16} {'extremal':>9} {'invariance':>10} {'C(a)':>12} {'deviation':>10}")
    for name in args.examples:
        for spec in args.scales:
            ex = EXAMPLES[name](spec)
            ext = ex.make_extremal()
            rep = verify_extremal(ex.problem, ext)
            for fam in ex.families:
                inv = check_invariance(ex.problem, fam, ext.x, ext.u)
                conserve = conserved_quantity_state_only if fam.kind == STATE_ONLY else conserved_quantity_time_state
                cons = conserve(ex.problem, ext, fam)
                print(
                    f"{name:<10} {spec:<34} {fam.name:<16} {rep.max_residual:9.1e} {inv:10.1e} "
                    f"{cons.reference:12.6g} {cons.max_deviation:10.1e}"
                )


if __name__ == "__main__":
    main()
