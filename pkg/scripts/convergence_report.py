#!/usr/bin/env python3
"""Grid- and route-convergence study for the steady-state solver.

Reports, at N = 6e4 photons:
  * chemical potential shift vs. radial resolution (fixed-point route),
  * fixed-point vs. imaginary-time agreement on each grid,
  * the flat-kernel vs. finite-difference heat-route difference.
"""

import sys

import numpy as np

from photonbec import (RadialGrid, default_config, derive,
                       imaginary_time_ground_state, solve_curved, solve_flat)
from photonbec.steady import _flat_kernel, _heating_rate, _modal_solver


def main():
    cfg = default_config()
    d = derive(cfg)
    n_bec = 6e4
    print(f"{'n_points':>8} {'mu_curved':>14} {'mu_flat':>14} "
          f"{'|fp-it|/mu (flat)':>18}")
    previous = None
    for n_points in (96, 192, 384, 768):
        grid = RadialGrid(r_max=5 * d.r_bec, n_points=n_points)
        mu_c = solve_curved(cfg, n_bec, grid).mu
        mu_f = solve_flat(cfg, n_bec, grid).mu
        mu_it = imaginary_time_ground_state(cfg, n_bec, grid, "flat").mu
        print(f"{n_points:8d} {mu_c:14.6e} {mu_f:14.6e} "
              f"{abs(mu_f / mu_it - 1):18.2e}")
        if previous is not None:
            print(f"{'':8} refinement shift: {abs(mu_c / previous - 1):.2e}")
        previous = mu_c

    grid = RadialGrid(r_max=5 * d.r_bec, n_points=384)
    n2d = n_bec / (np.pi * d.r_bec**2) * np.exp(-(grid.nodes / d.r_bec) ** 2)
    q_heat = _heating_rate(cfg)
    via_kernel = _flat_kernel(grid, cfg.L, cfg.q).temperature(n2d, q_heat)
    via_fd, _ = _modal_solver(grid, cfg.L, cfg.q).temperatures(n2d, q_heat)
    print(f"heat routes, peak dT: kernel {via_kernel[0]:.6e} K, "
          f"finite-difference {via_fd[0]:.6e} K "
          f"(rel diff {abs(via_fd[0] / via_kernel[0] - 1):.2e})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
