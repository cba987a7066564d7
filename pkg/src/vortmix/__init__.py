"""Pseudo-spectral laboratory for stochastically forced 2D vorticity dynamics.

The package simulates the vorticity form of the randomly forced
Navier-Stokes equation on the 2-pi torus, truncated to a finite Fourier
lattice, and provides the machinery to verify the structural claims that
make the dynamics mix: pathwise contraction of the high modes driven by
the low-mode history, exact change of measure for the low-mode marginal,
enstrophy-balance and tail diagnostics, and the dyadic interval-partition
combinatorics used to organize dissipation along a path.
"""

from .spectral import (
    SpectralGrid,
    VorticityField,
    VelocitySpectrum,
    project_low,
    project_high,
    velocity_from_vorticity,
    l2_norm_sq,
    h1_seminorm_sq,
    sample_gaussian_field,
    read_snapshot,
    write_snapshot,
)
from .dynamics import (
    DriftEval,
    constant_a,
    drift,
    nonlinear_direct,
    nonlinear_fast,
    reduced_drift,
)
from .forcing import ForcingSpec, gamma_inv_inner, sample_increment, uniform_spec
from .integrator import Trajectory, simulate, step
from .reduction import (
    LPath,
    SPath,
    contraction_report,
    extract_s_path,
    semigroup_check,
    solve_l,
)
from .girsanov import GirsanovLog, log_density, reference_s_path, reweighted_expectation
from .diagnostics import (
    DiagnosticSeries,
    balance_residuals,
    compute_dn,
    diagnostic_series,
    exp_moment_check,
    tail_probability_check,
    tail_sum_check,
)
from .partition import (
    IntervalPartition,
    PartitionParams,
    beta_of,
    classify,
    gamma_of,
    phi,
    verify_small_large,
    verify_concatenation,
)
from .mixing import CouplingReport, correlation_decay, couple, stationary_sample

__version__ = "0.1.0"
