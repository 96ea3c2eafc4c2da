import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpmix import grid as G
from fpmix.model import Mixture, MixtureParams, MomentState, SpeciesSpec, SpeciesState, maxwell_state


def field_1d(values, x):
    g = G.VelocityGrid((x,), 1, 0)
    return G.DistributionField(g, np.asarray(values, dtype=float))


def gauss(x, mu, var):
    return np.exp(-0.5 * (x - mu) ** 2 / var) / math.sqrt(2 * math.pi * var)


def mixture_1d():
    species = (SpeciesSpec(1.0, d=1, l=1, c_self=0.5), SpeciesSpec(1.2, d=1, l=1, c_self=0.5))
    return Mixture(species, MixtureParams(c_21=1.0, eps=1.0, delta=0.6, alpha=0.7, gamma=0.2))


def test_bernoulli_small_argument_branch():
    x = np.array([-1e-9, 0.0, 1e-9, 1.0, -30.0, 800.0])
    b = G._bernoulli(x)
    assert b[1] == 1.0
    assert b[3] == pytest.approx(1 / math.expm1(1.0))
    assert b[4] == pytest.approx(30.0, rel=1e-12)
    assert b[5] == 0.0


@given(st.floats(-1.0, 1.0), st.floats(0.3, 2.0), st.floats(0.2, 3.0))
@settings(max_examples=30)
def test_operator_conserves_mass(center, D, rate):
    x = G.VelocityGrid.uniform([0.0], [6.0], 64, 1).axes[0]
    f = gauss(x, 0.4, 0.7) + 0.3 * gauss(x, -1.0, 0.3)
    out = G.fp_apply(field_1d(f, x), [center], D, None, rate, 1.0)
    assert abs(out.sum()) <= 1e-14 * np.abs(out).sum()


def test_matched_gaussian_is_discrete_steady_state():
    x = G.VelocityGrid.uniform([0.1], [5.0], 48, 1).axes[0]
    mu, var = G.match_gaussian(x, 0.1, 0.8)
    f = gauss(x, mu, var)
    h = x[1] - x[0]
    w = f / f.sum()
    assert float(w @ x) == pytest.approx(0.1, abs=1e-14)
    assert float(w @ (x - 0.1) ** 2) == pytest.approx(0.8, rel=1e-13)
    out = G.fp_apply(field_1d(f, x), [0.1], 0.8, None, 1.0, 1.0)
    assert np.abs(out).max() < 1e-12 * f.max() / h


def test_first_and_second_moment_rates():
    x = G.VelocityGrid.uniform([0.0], [8.0], 256, 1).axes[0]
    h = x[1] - x[0]
    f = gauss(x, 0.3, 0.5)
    rate, center, lam, m = 1.3, -0.2, 1.1, 1.0
    out = G.fp_apply(field_1d(f, x), [center], lam, None, rate, m)
    dmean = float(out @ x) * h
    assert dmean == pytest.approx(-rate * (0.3 - center), rel=1e-3)
    dvar = float(out @ (x - 0.3) ** 2) * h
    assert dvar == pytest.approx(2 * rate * (lam / m - 0.5), rel=1e-3)


def test_zero_rate_is_zero():
    x = np.linspace(-3, 3, 16)
    assert not G.fp_apply(field_1d(np.ones(16), x), [0.0], 1.0, None, 0.0, 1.0).any()
    assert G.positivity_dt(G.VelocityGrid((x,), 1, 0), [0.0], 1.0, None, 0.0, 1.0) == math.inf


def test_positivity_dt_is_sharp():
    x = G.VelocityGrid.uniform([0.0], [6.0], 64, 1).axes[0]
    g = G.VelocityGrid((x,), 1, 0)
    f = np.zeros_like(x)
    f[10] = 1.0  # a spike is the worst case for the diagonal
    dt = G.positivity_dt(g, [0.0], 1.0, None, 2.0, 1.0)
    out = G.fp_apply(field_1d(f, x), [0.0], 1.0, None, 2.0, 1.0)
    assert (f + dt * out).min() >= -1e-15
    assert (f + 1.05 * dt * out).min() < 0


def test_step_beyond_bound_raises():
    mix = mixture_1d()
    st0 = MomentState((SpeciesState(1.0, [0.3], 1.2, 0.8, 0.9), SpeciesState(0.8, [-0.2], 0.9, 1.1, 1.05)))
    cfg = G.SolverConfig(nodes=32)
    gs = G.initial_grid_state(mix, st0, cfg)
    dt = G.choose_dt(mix, gs, cfg)
    with pytest.raises(G.CFLError):
        G.step(mix, gs, 3 * dt / cfg.safety, cfg)


def test_central_scheme_can_go_negative():
    x = G.VelocityGrid.uniform([0.0], [6.0], 16, 1).axes[0]
    f = np.zeros_like(x)
    f[2] = 1.0
    fld = field_1d(f, x)
    dt = G.positivity_dt(fld.grid, [0.0], 0.05, None, 1.0, 1.0, scheme="central")
    out = G.fp_apply(fld, [0.0], 0.05, None, 1.0, 1.0, scheme="central")
    assert (f + dt * out).min() < 0
    out_cc = G.fp_apply(fld, [0.0], 0.05, None, 1.0, 1.0)
    dt_cc = G.positivity_dt(fld.grid, [0.0], 0.05, None, 1.0, 1.0)
    assert (f + dt_cc * out_cc).min() >= 0


@pytest.mark.parametrize("shape", ["maxwellian", "double_gaussian"])
def test_sampled_field_reproduces_moments(shape):
    sp = SpeciesSpec(1.3, d=2, l=1)
    s = SpeciesState(0.9, [0.2, -0.1], 1.1, 0.7, 0.8)
    grid = G.build_grid(sp, s.u, math.sqrt(1.5 / sp.mass), 0.5, nodes=48)
    fld = G.sample_field(grid, sp, s, shape, shift=0.4)
    got = G.moments_from_field(fld, sp)
    assert got.n == pytest.approx(0.9, rel=1e-6)
    assert got.u == pytest.approx(s.u, abs=1e-6)
    assert got.T_t == pytest.approx(1.1, rel=1e-5)
    assert got.T_r == pytest.approx(0.7, rel=1e-6)


def test_unknown_shape_rejected():
    sp = SpeciesSpec(1.0, d=1)
    grid = G.build_grid(sp, np.zeros(1), 1.0, 0.0, nodes=16)
    with pytest.raises(ValueError, match="shape"):
        G.sample_field(grid, sp, SpeciesState(1.0, [0.0], 1.0), "box")


def test_equilibrium_stays_put():
    mix = mixture_1d()
    st0 = maxwell_state(mix, (1.0, 0.8), [0.1], 1.0)
    cfg = G.SolverConfig(t_end=0.5, nodes=32)
    gs0 = G.initial_grid_state(mix, st0, cfg)
    run = G.run(mix, gs0, cfg)
    for k in (0, 1):
        f0 = gs0.fields[k].values
        assert np.abs(run.final.fields[k].values - f0).max() < 1e-13 * f0.max()


@pytest.mark.parametrize("integrator", ["euler", "rk2"])
def test_short_run_positive_and_conservative(integrator):
    mix = mixture_1d()
    st0 = MomentState((SpeciesState(1.0, [0.3], 1.2, 0.8, 0.9), SpeciesState(0.8, [-0.2], 0.9, 1.1, 1.05)))
    cfg = G.SolverConfig(t_end=0.5, nodes=48, integrator=integrator, stride=5)
    run = G.run(mix, G.initial_grid_state(mix, st0, cfg, ("double_gaussian", "maxwellian"), (0.6, 0.0)), cfg)
    assert run.times[-1] == pytest.approx(0.5)
    assert all(f.values.min() >= 0 for f in run.final.fields)
    last = run.records[-1]
    assert last.mass_drift < 1e-13
    assert last.energy_drift < 1e-3
    H = run.H()
    assert np.all(np.isfinite(H))


def test_solver_config_validation():
    with pytest.raises(ValueError, match="scheme"):
        G.SolverConfig(scheme="upwind")
    with pytest.raises(ValueError, match="integrator"):
        G.SolverConfig(integrator="rk4")
    with pytest.raises(ValueError, match="safety"):
        G.SolverConfig(safety=1.5)


def test_default_node_counts():
    assert [G.default_nodes(n) for n in (1, 2, 3, 4, 5)] == [64, 64, 32, 32, 16]


def test_moments_of_empty_field_fail():
    x = np.linspace(-1, 1, 8)
    with pytest.raises(G.DegenerateFieldError):
        G.moments_from_field(field_1d(np.zeros(8), x), SpeciesSpec(1.0, d=1))


def test_replace_keeps_grid():
    x = np.linspace(-1, 1, 8)
    f = field_1d(np.ones(8), x)
    g = replace(f, values=2 * f.values)
    assert g.grid is f.grid and g.mass() == pytest.approx(2 * f.mass())
