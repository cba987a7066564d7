"""utests for the band split: exact high-mode reconstruction and contraction.

The reconstruction assertions are bitwise (np.array_equal, no tolerance):
the high-band solver executes the same arithmetic as the full integrator,
so anything short of equality would mean the reduction is not the one the
integrator implements.
"""

import numpy as np
import pytest

from vortmix.dynamics import constant_a
from vortmix.forcing import uniform_spec
from vortmix.integrator import simulate, steps_per_unit
from vortmix.reduction import (
    SPath,
    contraction_report,
    extract_s_path,
    semigroup_check,
    solve_l,
    solve_l_final,
)
from vortmix.spectral import SpectralGrid, l2sq_array, sample_gaussian_field

_grids = {}
_trajs = {}


def get_grid(kmax=4, n_force=2):
    if (kmax, n_force) not in _grids:
        _grids[(kmax, n_force)] = SpectralGrid(kmax, n_force)
    return _grids[(kmax, n_force)]


def dense_traj(seed=0, kmax=4, t_final=2, dt=0.01):
    key = (seed, kmax, t_final, dt)
    if key not in _trajs:
        g = get_grid(kmax, 2)
        f = sample_gaussian_field(g, 0.5, np.random.default_rng(seed))
        _trajs[key] = simulate(
            f, uniform_spec(g, 1.0), t_final, dt, np.random.default_rng(500 + seed),
            record="dense",
        )
    return _trajs[key]


def high_of(grid, coeffs):
    return np.where(grid.high_mask, coeffs, 0.0 + 0.0j)


def random_high(grid, seed, amplitude=0.3):
    f = sample_gaussian_field(grid, amplitude, np.random.default_rng(seed))
    return high_of(grid, f.coeffs)


# -- band path extraction --------------------------------------------------


def test_extract_s_path():
    traj = dense_traj(seed=1)
    sp = extract_s_path(traj)
    assert sp.dt == traj.dt
    assert sp.n_steps == len(traj.times) - 1
    assert np.array_equal(sp.values, traj.states[:, traj.grid.low_mask])
    assert np.array_equal(sp.times, traj.times)


def test_extract_s_path_needs_dense_record():
    g = get_grid()
    f = sample_gaussian_field(g, 0.5, np.random.default_rng(2))
    traj = simulate(f, uniform_spec(g, 1.0), 2, 0.01, np.random.default_rng(3))
    with pytest.raises(ValueError, match="dense"):
        extract_s_path(traj)


def test_spath_accessors():
    traj = dense_traj(seed=1)
    sp = extract_s_path(traj)
    full = sp.full_at(3)
    assert np.array_equal(full[sp.grid.low_mask], sp.values[3])
    assert np.all(full[sp.grid.high_mask] == 0.0)
    sub = sp.restrict(10, 25)
    assert sub.n_steps == 15
    assert sub.times[0] == 0.0
    assert np.allclose(sub.times, np.arange(16) * sp.dt)
    assert np.array_equal(sub.values, sp.values[10:26])
    with pytest.raises(ValueError, match=r"\(n_times, n_low\)"):
        SPath(sp.grid, sp.dt, sp.times, sp.values[:, :2])


# -- high-band solver ------------------------------------------------------


def test_solve_l_reconstructs_the_simulation_bitwise():
    traj = dense_traj(seed=4)
    g = traj.grid
    sp = extract_s_path(traj)
    l0 = high_of(g, traj.states[0])
    lp = solve_l(sp, l0)
    expect = np.where(g.high_mask, traj.states, 0.0 + 0.0j)
    assert np.array_equal(lp.values, expect)


def test_solve_l_h1_matches_trajectory_integral():
    traj = dense_traj(seed=4)
    g = traj.grid
    sp = extract_s_path(traj)
    lp = solve_l(sp, high_of(g, traj.states[0]), with_h1=True)
    per = steps_per_unit(traj.dt)
    # the reference h1 integral is over s + l, which here is the full state
    for n in range(1, 3):
        assert abs(lp.h1_omega1[n * per] - traj.h1_integral[n]) < 1e-10


def test_solve_l_final_matches_last_row():
    traj = dense_traj(seed=5)
    sp = extract_s_path(traj)
    l0 = high_of(traj.grid, traj.states[0])
    lp = solve_l(sp, l0)
    assert np.array_equal(solve_l_final(sp, l0), lp.values[-1])
    assert np.array_equal(lp.final, lp.values[-1])


def test_solve_l_batched_matches_single():
    traj = dense_traj(seed=6, t_final=1)
    g = traj.grid
    sp = extract_s_path(traj)
    stack = np.stack([random_high(g, 60 + i) for i in range(3)])
    lp = solve_l(sp, stack)
    assert lp.values.shape == (3, sp.n_steps + 1, g.n_modes)
    for i in range(3):
        single = solve_l(sp, stack[i]).values
        assert np.max(np.abs(lp.values[i] - single)) < 1e-13


def test_solve_l_input_validation():
    traj = dense_traj(seed=6, t_final=1)
    g = traj.grid
    sp = extract_s_path(traj)
    with pytest.raises(ValueError, match="support on the forcing band"):
        solve_l(sp, np.ones(g.n_modes, dtype=np.complex128))
    with pytest.raises(ValueError, match="full coefficient array"):
        solve_l(sp, np.zeros(g.n_modes - 1, dtype=np.complex128))


# -- semigroup property ----------------------------------------------------


def test_semigroup_defect_is_zero():
    traj = dense_traj(seed=7)
    sp = extract_s_path(traj)
    l0 = random_high(traj.grid, 70)
    for i_mid in (0, 1, sp.n_steps // 2, sp.n_steps - 1, sp.n_steps):
        assert semigroup_check(sp, l0, i_mid) == 0.0
    with pytest.raises(ValueError, match="outside the path"):
        semigroup_check(sp, l0, sp.n_steps + 1)


# -- contraction estimate --------------------------------------------------


def test_contraction_report_structure():
    traj = dense_traj(seed=8)
    g = traj.grid
    sp = extract_s_path(traj)
    l1 = high_of(g, traj.states[0])
    l2 = random_high(g, 80)
    rep = contraction_report(sp, l1, l2)
    d0 = float(np.sqrt(l2sq_array(l1 - l2)))
    assert rep.rate == float(g.n_force)
    assert rep.rate_alt == float(g.n_force + 1)
    assert abs(rep.coupling_a - constant_a()) == 0.0
    assert rep.lhs[0] == d0
    assert rep.rhs[0] == d0
    assert rep.lhs.shape == rep.rhs.shape == rep.times.shape
    assert np.all(rep.rhs_alt <= rep.rhs + 1e-15)


def test_contraction_holds_on_simulated_paths():
    for seed in (9, 10, 11):
        traj = dense_traj(seed=seed)
        g = traj.grid
        sp = extract_s_path(traj)
        rep = contraction_report(
            sp, high_of(g, traj.states[0]), random_high(g, 90 + seed)
        )
        assert rep.ok
        assert rep.max_ratio <= 1.0 + 1e-3
        assert np.all(rep.ratio() <= 1.0 + 1e-3)


def test_contraction_rate_override():
    traj = dense_traj(seed=9)
    g = traj.grid
    sp = extract_s_path(traj)
    l1 = high_of(g, traj.states[0])
    l2 = random_high(g, 99)
    loose = contraction_report(sp, l1, l2, rate=0.5)
    assert loose.rate == 0.5
    assert loose.ok
    # an absurd rate must fail: the report does not grade on a curve
    harsh = contraction_report(sp, l1, l2, rate=50.0)
    assert not harsh.ok
    assert harsh.max_ratio > 1.0
