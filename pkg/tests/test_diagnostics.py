import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from strategies import cases

from fpmix import diagnostics as diag
from fpmix.model import equilibrium_state, maxwell_state


def test_gaussian_entropy_matches_quadrature():
    x = np.linspace(-10, 10, 4001)
    h = x[1] - x[0]
    f = 1.3 * np.exp(-0.5 * 2.0 * x**2 / 0.7) / math.sqrt(2 * math.pi * 0.7 / 2.0)
    assert diag.f_log_f(f, h) == pytest.approx(diag.gaussian_entropy(1.3, 0.7, None, 2.0, 1, 0), rel=1e-10)


def test_f_log_f_ignores_zeros():
    assert diag.f_log_f(np.array([0.0, 1.0, np.e]), 1.0) == pytest.approx(np.e)


@given(st.lists(st.floats(0.0, 5.0), min_size=1, max_size=20), st.lists(st.floats(0.01, 5.0), min_size=20, max_size=20))
def test_relative_entropy_density_non_negative(f, g):
    f = np.array(f)
    g = np.array(g[: f.size])
    r = diag.relative_entropy_density(f, g)
    assert np.all(r >= -1e-15)
    assert np.all(diag.relative_entropy_density(g, g) == 0)


@given(cases(mode="h_theorem"))
def test_entropy_excess_agrees_with_difference(case):
    mix, state = case
    u, T = equilibrium_state(mix, state)
    eq = maxwell_state(mix, (state[0].n, state[1].n), u, T)

    def H(s):
        fl = [diag.gaussian_entropy(x.n, x.T_t, x.T_r, sp.mass, sp.d, sp.l) for sp, x in zip(mix.species, s)]
        return diag.entropy_H(mix, s, fl)[0]

    excess = diag.entropy_excess(mix, state, (0.0, 0.0), T)
    assert excess == pytest.approx(H(state) - H(eq), rel=1e-8, abs=1e-10 * (1 + abs(H(eq))))
    assert diag.entropy_excess(mix, eq, (0.0, 0.0), T) == pytest.approx(0.0, abs=1e-14)


def test_monotonicity_check():
    ok = diag.entropy_monotonicity_check([3.0, 2.0, 2.0 + 1e-12, 1.0])
    assert ok.status == "pass"
    bad = diag.entropy_monotonicity_check([3.0, 2.0, 2.1, 1.0])
    assert bad.status == "fail" and bad.worst_index == 1 and bad.worst == pytest.approx(0.1)
    assert diag.entropy_monotonicity_check([1.0, 2.0], mode="positivity").status == "n/a"
    # excess differences take precedence over the raw series
    assert diag.entropy_monotonicity_check([1.0, 1.0], excess=[1e-3, 2e-3]).status == "fail"


def test_equilibrium_distance_zero_at_equilibrium():
    from test_model import diatomic_pair

    mix = diatomic_pair()
    st_eq = maxwell_state(mix, (1.0, 0.8), [0.1, 0.0, 0.0], 1.2)
    assert diag.equilibrium_distance(mix, st_eq) == pytest.approx(0.0, abs=1e-15)
    hot = st_eq.replace(0, T_t=1.32, T_r=1.32 - 0.12 * 3 / 2)
    assert diag.equilibrium_distance(mix, hot) == pytest.approx(0.18 / 1.14, rel=1e-12)


def test_fit_decay_rate():
    t = np.linspace(0, 5, 50)
    assert diag.fit_decay_rate(t, -0.3 * np.exp(-1.7 * t)) == pytest.approx(1.7, rel=1e-12)
    assert math.isnan(diag.fit_decay_rate(t, np.zeros_like(t)))


def test_record_drifts():
    from test_model import diatomic_pair

    mix = diatomic_pair()
    a = maxwell_state(mix, (1.0, 0.8), [0.1, 0.0, 0.0], 1.2)
    ref = diag.conserved_totals(mix, a)
    b = a.replace(0, T_t=1.2 * (1 + 1e-3), T_r=1.2 * (1 + 1e-3), theta=1.2 * (1 + 1e-3))
    rec = diag.make_record(mix, 0.5, b, ref, diag.momentum_scale(mix, a))
    assert rec.mass_drift == 0 and rec.momentum_drift == 0
    assert rec.energy_drift == pytest.approx(0.5 * 5 * 1.2e-3 / ref.energy, rel=1e-6)
    assert math.isnan(rec.H)
