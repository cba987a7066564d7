"""
A forced run and its interval bookkeeping
=========================================

Drive the truncated vorticity dynamics from rest with band-limited
white noise and watch the per-unit-interval records: enstrophy, the
activity functional D_n, and the residual of the interval balance
identity 0.5*||w(n)||^2 - 0.5*||w(n-1)||^2 + 2*int||grad w||^2
= R + martingale part.
"""

import numpy as np

from vortmix.diagnostics import diagnostic_series
from vortmix.forcing import uniform_spec
from vortmix.integrator import simulate
from vortmix.seeding import derive_rng
from vortmix.spectral import SpectralGrid, zero_field

# a modest lattice: modes up to |k1|,|k2| <= 8, forcing on |k|^2 <= 2,
# one unit of total forcing rate split evenly over the band
grid = SpectralGrid(kmax=8, n_force=2)
fspec = uniform_spec(grid, total_r=1.0)
print(f"modes: {grid.n_modes}, forced band: {fspec.low_indices.size}, "
      f"R = {fspec.total_r}, rho = {fspec.rho:.4f}")

# integrate 12 time units from rest; the noise stream is derived from a
# single master seed, so this script prints the same numbers every run
traj = simulate(zero_field(grid), fspec, t_final=12, dt=2e-3,
                rng=derive_rng(20260822, "noise"))

# the series object recomputes everything the run recorded per unit
series = diagnostic_series(traj, fspec)

print("\n  n   enstrophy        D_n     balance residual")
for n in range(len(series.times)):
    print(f"  {int(series.times[n]):2d}   {series.enstrophy[n]:9.5f}   "
          f"{series.dn[n]:8.4f}   {series.residual[n]:+.2e}")

# from rest the enstrophy climbs toward its statistical steady level,
# of the order of R over twice the lowest dissipation rate; D_n hovers
# a little above the running enstrophy because it adds the dissipation
# integral on top of the supremum
print(f"\nmean D_n over the run: {series.dn.mean():.4f}")
print(f"worst |balance residual|: {np.max(np.abs(series.residual)):.2e} "
      "(pure time-discretization error; shrinks linearly with dt)")
