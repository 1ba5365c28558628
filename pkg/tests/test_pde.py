import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mosquito_sit import ode
from mosquito_sit.config import SimConfig, preset
from mosquito_sit.diagnostics import LyapunovWeights, fit_decay_rate, l1_mass
from mosquito_sit.params import BioParams, ParameterError, ode_decay_rate_c0
from mosquito_sit.pde import (
    GridSpec,
    KFieldParams,
    NumericalAbort,
    PdeState,
    carrying_capacity_field,
    cfl_dt,
    diffusion_dt_bound,
    equilibrium_initial_condition,
    laplacian_neumann,
    reaction_loss_rate,
    step,
)
from mosquito_sit.simulation import run

DEFAULT_GRID = GridSpec()


def state_of(*fields):
    return PdeState(*(np.array(f, dtype=float) for f in fields))


def test_grid_geometry():
    assert DEFAULT_GRID.dx == pytest.approx(0.1)
    assert DEFAULT_GRID.cell_area == pytest.approx(0.01)
    X, Y = DEFAULT_GRID.centers()
    assert X.shape == (50, 50)
    assert X[0, 0] == pytest.approx(0.05) and X[-1, 0] == pytest.approx(4.95)
    assert Y[0, 0] == pytest.approx(0.05) and Y[0, -1] == pytest.approx(4.95)
    with pytest.raises(ParameterError):
        GridSpec(nx=0)


def test_k_field_mass():
    K = carrying_capacity_field(DEFAULT_GRID, KFieldParams())
    assert np.all(K > 0)
    assert l1_mass(K, DEFAULT_GRID.cell_area) == pytest.approx(1.33e6, rel=0.10)


def test_k_field_at_first_site():
    # a grid whose single row of centers sits at y = 4 and has a center at x = 2.5
    g = GridSpec(nx=5, ny=1, lx=5.0, ly=8.0)
    K = carrying_capacity_field(g, KFieldParams())
    with mpmath.workdps(30):
        x, y = mpmath.mpf("2.5"), mpmath.mpf(4)
        ref = 500 + sum(
            lam * mpmath.exp(-((x - mu) ** 2 + (y - xi) ** 2))
            for lam, mu, xi in ((2e5, 2.5, 4), (1.5e5, 1.5, 1.5), (1e5, 4, 1.5))
        )
    assert K[2, 0] == pytest.approx(float(ref), rel=1e-13)
    assert K[2, 0] == pytest.approx(200627, abs=1)


def test_k_field_far_from_sites():
    g = GridSpec(nx=40, ny=40, lx=40.0, ly=40.0)
    K = carrying_capacity_field(g, KFieldParams())
    assert 0 <= K[-1, -1] - 500.0 < 1.0


def test_k_field_uniform():
    K = carrying_capacity_field(GridSpec(3, 4), KFieldParams.uniform(123.0))
    assert np.all(K == 123.0)


def test_laplacian_constant_is_zero():
    assert not laplacian_neumann(np.full((7, 9), 3.7), GridSpec(7, 9)).any()


@pytest.mark.parametrize("n", [25, 50, 100])
def test_laplacian_neumann_eigenfunction(n):
    g = GridSpec(nx=n, ny=n)
    X, Y = g.centers()
    f = np.cos(math.pi * X / g.lx)
    lap = laplacian_neumann(f, g)
    err = np.max(np.abs(lap + (math.pi / g.lx) ** 2 * f))
    # second order, the cell-centered mirror keeps the boundary rows consistent
    assert err <= 2.0 * (math.pi / g.lx) ** 4 * g.dx**2 / 12 * 1.5
    fy = np.cos(2 * math.pi * Y / g.ly)
    err_y = np.max(np.abs(laplacian_neumann(fy, g) + (2 * math.pi / g.ly) ** 2 * fy))
    assert err_y <= (2 * math.pi / g.ly) ** 4 * g.dy**2 / 12 * 1.5


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), nx=st.integers(1, 30), ny=st.integers(1, 30))
def test_laplacian_sums_to_zero(seed, nx, ny):
    g = GridSpec(nx=nx, ny=ny)
    f = np.random.default_rng(seed).uniform(0, 1e5, (nx, ny))
    total = np.sum(laplacian_neumann(f, g)) * g.cell_area
    assert abs(total) <= 1e-10 * np.sum(np.abs(f)) * g.cell_area


def test_cfl_examples(defaults):
    g = GridSpec()
    assert diffusion_dt_bound(defaults, g) == pytest.approx(0.025)
    assert cfl_dt(defaults, g, 2.0) == pytest.approx(0.9 * 0.025)
    assert cfl_dt(defaults, g, 100.0) == pytest.approx(0.9 / 100.0)
    assert cfl_dt(defaults, g, 0.0) == pytest.approx(0.9 * 0.025)
    nodiff = defaults.replace(d1=0.0, d2=0.0, d3=0.0)
    assert cfl_dt(nodiff, g, 4.0) == pytest.approx(0.9 / 4.0)
    assert cfl_dt(nodiff, g, 0.0) == math.inf


def test_equilibrium_initial_condition(defaults):
    K = carrying_capacity_field(DEFAULT_GRID, KFieldParams())
    E0, F0, M0 = equilibrium_initial_condition(defaults, K)
    assert np.all(E0 > 0)
    assert np.allclose(F0 / E0, 0.6125, rtol=1e-14)
    assert np.allclose(M0 / E0, 0.255, rtol=1e-14)
    assert np.allclose(E0, (1 - 1 / 61.25) * K, rtol=1e-14)
    with pytest.raises(ParameterError):
        equilibrium_initial_condition(BioParams(beta_E=0.1), K)


def test_step_zero_state_stays_zero(defaults):
    z = np.zeros((5, 5))
    s = step(state_of(z, z, z, z), defaults, np.full((5, 5), 500.0), GridSpec(5, 5), 0.01)
    assert not any(f.any() for f in s.fields().values())
    assert s.t == pytest.approx(0.01)


def test_diffusion_only_conserves_mass(defaults, rng):
    g = GridSpec(20, 30)
    s = state_of(*(rng.uniform(0, 1e4, g.shape) for _ in range(4)))
    K = carrying_capacity_field(g, KFieldParams())
    dt = cfl_dt(defaults, g, 0.0)
    masses0 = [l1_mass(f, g.cell_area) for f in s.fields().values()]
    for _ in range(1000):
        s = step(s, defaults, K, g, dt, reactions=False)
    for m0, f in zip(masses0, s.fields().values()):
        assert abs(l1_mass(f, g.cell_area) - m0) <= 1e-10 * m0
        assert np.all(f >= 0)


def test_uniform_state_matches_ode_euler(defaults):
    g = GridSpec(6, 4)
    K = np.full(g.shape, 500.0)
    y = np.array([120.0, 80.0, 30.0, 400.0])
    s = state_of(*(np.full(g.shape, v) for v in y))
    dt = 0.01
    out = step(s, defaults, K, g, dt, u=np.full(g.shape, 7.0))
    expected = y + dt * ode.sit_rhs(y, defaults, 500.0, u=7.0)
    for f, v in zip(out.fields().values(), expected):
        assert np.max(np.abs(f - v)) <= 1e-12 * max(1.0, abs(v))


def test_e_update_consistent_with_exact_exponential(defaults):
    # with F and M frozen, E' = a(1 - E/K) - bE is linear with an exact solution
    g = GridSpec(1, 1)
    Kv, E, F, M = 500.0, 100.0, 200.0, 60.0
    a = defaults.beta_E * F * defaults.eta * M / (1 + defaults.eta * M)
    lam = a / Kv + defaults.nu_E + defaults.delta_E
    errs = []
    for dt in (1e-2, 5e-3):
        s = step(state_of([[E]], [[F]], [[M]], [[0.0]]), defaults, np.array([[Kv]]), g, dt)
        exact = a / lam + (E - a / lam) * math.exp(-lam * dt)
        errs.append(abs(s.E[0, 0] - exact))
    assert errs[0] <= 0.5 * lam**2 * abs(E - a / lam) * 1e-4 * 1.01
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_step_abort_reports_cell(defaults):
    g = GridSpec(3, 3)
    s = state_of(*(np.full(g.shape, 10.0) for _ in range(4)))
    with pytest.raises(NumericalAbort, match=r"\[0, 0\]"):
        step(s, defaults, np.full(g.shape, 500.0), g, 100.0)


def test_reaction_loss_rate(defaults):
    g = GridSpec(2, 2)
    s = state_of(*(np.zeros(g.shape) for _ in range(4)))
    assert reaction_loss_rate(s, defaults, np.full(g.shape, 500.0)) == pytest.approx(0.12)
    s.F[0, 0], s.M[0, 0] = 100.0, 10.0
    expected = 0.08 + 8 * 100 * 7 / 8 / 500
    assert reaction_loss_rate(s, defaults, np.full(g.shape, 500.0)) == pytest.approx(expected)


def small_config(**kw):
    base = SimConfig(grid=GridSpec(10, 10), t_max=60.0)
    return base.replace(**kw)


def test_zero_length_run():
    rep = run(small_config(t_max=0.0))
    assert rep.series["t"].tolist() == [0.0]
    assert rep.steps == 0
    assert rep.series["mass_E"][0] == pytest.approx(l1_mass(rep.initial_state.E, 0.25))


def test_positivity_and_e_cap_uncontrolled():
    cfg = small_config(t_max=100.0, initial="fraction", initial_fraction=1.5)
    rep = run(cfg)
    E0 = rep.initial_state.E
    for f in rep.final_state.fields().values():
        assert np.all(f >= 0)
    assert np.all(rep.final_state.E <= np.maximum(rep.K, E0) + 1e-9)


def test_e_cap_along_trajectory(defaults):
    g = GridSpec(8, 8)
    K = carrying_capacity_field(g, KFieldParams(mu=(1.0, 3.0, 2.0), xi=(1.0, 3.0, 0.5)))
    rng = np.random.default_rng(5)
    s = PdeState(K * rng.uniform(0, 1.2, g.shape), *(rng.uniform(0, 300, g.shape) for _ in range(3)))
    E0 = s.E.copy()
    for _ in range(2000):
        s = step(s, defaults, K, g, cfl_dt(defaults, g, reaction_loss_rate(s, defaults, K)))
        assert np.all(s.E <= np.maximum(K, E0) + 1e-9)


def test_uncontrolled_low_r_decay(low_r):
    cfg = SimConfig(
        params=low_r,
        grid=GridSpec(10, 10),
        t_max=600.0,
        initial="fraction",
        initial_fraction=0.5,
        output_interval=5.0,
    )
    rep = run(cfg)
    L = rep.series["lyapunov_L"]
    assert np.all(np.diff(L) <= 1e-12 * L[:-1])
    w = LyapunovWeights.plain(low_r)
    direct = w.wE * rep.series["mass_E"] + w.wF * rep.series["mass_F"] + rep.series["mass_M"]
    assert np.allclose(L, direct, rtol=1e-12)
    slope = fit_decay_rate(rep.series["t"], L)
    assert slope <= -0.9 * ode_decay_rate_c0(low_r)


def test_determinism():
    cfg = preset("paper-global").replace(grid=GridSpec(12, 12), t_max=30.0, snapshot_times=(10.0,))
    a, b = run(cfg), run(cfg)
    for k in a.series:
        assert np.array_equal(a.series[k], b.series[k], equal_nan=True)
    assert np.array_equal(a.snapshots[10.0]["Ms"], b.snapshots[10.0]["Ms"])


@pytest.mark.slow
def test_grid_refinement_day_200():
    base = preset("paper-global").replace(t_max=200.0, snapshot_times=())
    coarse = run(base)
    fine = run(base.replace(grid=GridSpec(100, 100)))
    for k in ("mass_E", "mass_F", "mass_M", "mass_Ms"):
        assert fine.series[k][-1] == pytest.approx(coarse.series[k][-1], rel=0.05)
