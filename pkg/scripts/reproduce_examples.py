"""Recompute the bound constants and certificates of the two worked examples.

Prints the comparison table, both Delta forms, the uniqueness contraction
constant over a sweep of l_f, and the existence threshold in both forms.
"""

import argparse
import io

from fracbvp.certify import delta_bounds, existence_certificate, uniqueness_certificate
from fracbvp.cli import RunConfig, run
from fracbvp.problem import LipschitzData, example


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--tau", type=float, default=0.5, help="Hoelder parameter for the L^(1/tau) form")
    args = p.parse_args()

    buf = io.StringIO()
    run(RunConfig(command="examples"), buf)
    print(buf.getvalue())

    spec, lip = example(1)
    print("Delta, constant l_f:   ", ", ".join(f"{x:.6f}" for x in delta_bounds(spec, constant_lf=True)))
    print(f"Delta, Hoelder tau={args.tau}:", ", ".join(f"{x:.6f}" for x in delta_bounds(spec, tau=args.tau)))
    print("\nexample 1 uniqueness (constant l_f, l_g = 1):")
    for lf in (0.0, 0.05, 0.09, 0.15, 1.0):
        rep = uniqueness_certificate(spec, LipschitzData(lf, lip.l_g), constant_lf=True)
        print(f"  l_f={lf:<5} q={rep.contraction_constant:.6f}  {rep.verdict}")

    spec2, growth = example(2)
    print("\nexample 2 existence:")
    for constant_lf, label in ((True, "constant l_f"), (False, f"Hoelder tau={args.tau}")):
        rep = existence_certificate(spec2, growth, constant_lf=constant_lf, tau=None if constant_lf else args.tau)
        print(f"  {label:<16} K_threshold={rep.K_threshold}  {rep.verdict}")


if __name__ == "__main__":
    main()
