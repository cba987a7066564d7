"""
Reweighting driftless paths into forced ones
============================================

The law of the band path under the full dynamics has a density against
the driftless Wiener walk with the same covariance.  Sampling the walk
and attaching exp(log-density) weights therefore estimates expectations
under the dynamics without ever integrating the drift - the classical
importance-sampling trade: cheap paths, noisy weights.

The weights degenerate quickly as the horizon grows, so this script
also shows the clipped variant: log-weights capped at a fixed level,
which caps the variance at the price of a small bias.  Clipped numbers
are flagged; only the raw weights carry the exact normalization
E[weight] = 1.
"""

import numpy as np

from vortmix.forcing import uniform_spec
from vortmix.girsanov import log_density, reference_s_path, reweighted_expectation
from vortmix.integrator import simulate
from vortmix.seeding import derive_rng
from vortmix.spectral import SpectralGrid, l2sq_array, sample_gaussian_field

grid = SpectralGrid(kmax=4, n_force=2)
fspec = uniform_spec(grid, total_r=1.0)
field = sample_gaussian_field(grid, 0.3, derive_rng(31, "initial"))
t_final, dt = 0.5, 2e-3

def enstrophy(w):
    return 0.5 * l2sq_array(w)

# -- the reweighted estimate ----------------------------------------------

est = reweighted_expectation(fspec, field, t_final, dt, enstrophy,
                             n_paths=4000, rng=derive_rng(31, "paths"))
print(f"mean weight     : {est['mean_weight']:.4f} "
      f"+/- {est['se_weight']:.4f}   (exact value: 1)")
print(f"effective paths : {est['ess']:.0f} of {est['n_paths']}")
print(f"reweighted E[enstrophy(t)] : {est['estimate']:.5f}")
print(f"unweighted (walk) estimate : {est['reference_estimate']:.5f}")

# -- the direct answer, for comparison ------------------------------------

# simulated horizons are whole units, so run one unit with the dense
# record and read the state off at the half-unit mark
rng = derive_rng(31, "direct")
vals = []
for _ in range(2000):
    traj = simulate(field.copy(), fspec, 1, dt, rng, record="dense")
    vals.append(enstrophy(traj.state_at(t_final).coeffs))
direct = float(np.mean(vals))
se = float(np.std(vals, ddof=1) / np.sqrt(len(vals)))
print(f"direct simulation ensemble : {direct:.5f} +/- {se:.5f}")

# -- clipped log-weights: less variance, some bias, clearly flagged -------

s0 = field.coeffs[fspec.low_indices]
l0 = np.where(grid.low_mask, 0.0 + 0.0j, field.coeffs)
rng = derive_rng(31, "clip")
raw, clipped = [], []
for _ in range(2000):
    spath, db = reference_s_path(fspec, s0, t_final, dt, rng)
    raw.append(log_density(spath, l0, fspec, increments=db).log_weight)
    clipped.append(
        log_density(spath, l0, fspec, increments=db, clip=2.0).log_weight
    )
raw = np.exp(raw)
clipped = np.exp(clipped)
print(f"\nraw weights     : mean {raw.mean():.4f}, sd {raw.std():.2f}")
print(f"clipped at e^2  : mean {clipped.mean():.4f}, sd {clipped.std():.2f}"
      "   [CLIPPED: biased low, variance capped]")
