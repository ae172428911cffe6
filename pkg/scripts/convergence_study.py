"""Refinement study for the manufactured solution u*(t) = t^gamma.

For each grid size the linear problem is solved and the max-node error, the
differential-equation residual and the boundary-row defects are tabulated,
along with the observed reduction factor per doubling.
"""

import argparse

import numpy as np

from fracbvp.fracops import UniformGrid
from fracbvp.problem import example, manufactured
from fracbvp.solver import picard_solve


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--gamma", type=float, default=3.0)
    p.add_argument("--grids", type=int, nargs="+", default=[129, 257, 513, 1025])
    args = p.parse_args()

    spec, _ = example(1)
    print(f"{'N':>6} {'error':>11} {'factor':>7} {'ode_res':>11} {'factor':>7} {'max_row':>11}")
    prev = None
    for N in args.grids:
        grid = UniformGrid(spec.T, N)
        m = manufactured(spec, args.gamma, grid)
        sol = picard_solve(m.spec, grid, tol=1e-12, max_iter=10)
        err = float(np.max(np.abs(sol.u.values - m.u(grid.nodes))))
        res = sol.residuals.ode_residual_sup
        row = max(sol.residuals.boundary_residuals)
        fe = f"{prev[0] / err:7.3f}" if prev and err > 0 else " " * 7
        fr = f"{prev[1] / res:7.3f}" if prev and res > 0 else " " * 7
        print(f"{N:>6} {err:11.3e} {fe} {res:11.3e} {fr} {row:11.3e}")
        prev = (err, res)


if __name__ == "__main__":
    main()
