"""Quadrature derivation of the moment relaxation rates.

Each species is represented by a mixture of Gaussian bumps in one velocity
dimension and at most one internal dimension.  The drift-diffusion right-hand
side is evaluated pointwise from analytic derivatives and its moments are
integrated on a fine trapezoidal grid.  Nothing here calls ``fpmix.macro``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Mixture, MomentState, SpeciesState, exchange_quantities

__all__ = ["GaussianBumps", "bumps_state", "quadrature_rates", "fit_rate_coefficients"]


@dataclass(frozen=True)
class GaussianBumps:
    """``f(v, eta) = sum_i w_i N(v; mu_i, s_i^2) N(eta; 0, q_i^2)``; ``q`` empty when monoatomic."""

    w: tuple[float, ...]
    mu: tuple[float, ...]
    s: tuple[float, ...]
    q: tuple[float, ...] = ()

    def mass(self) -> float:
        return float(sum(self.w))


def _gauss(x, mu, s):
    return np.exp(-0.5 * ((x - mu) / s) ** 2) / (np.sqrt(2 * np.pi) * s)


def _op_1d(x, mu, s, center, D):
    """``d/dx((x - center) g) + D g''`` for the unit Gaussian ``g = N(mu, s^2)``."""
    g = _gauss(x, mu, s)
    dg = -(x - mu) / s**2 * g
    d2g = ((x - mu) ** 2 / s**4 - 1 / s**2) * g
    return g + (x - center) * dg + D * d2g


def _grids(bumps: GaussianBumps, width=14.0, npts=6001):
    lo = min(m - width * s for m, s in zip(bumps.mu, bumps.s))
    hi = max(m + width * s for m, s in zip(bumps.mu, bumps.s))
    v = np.linspace(lo, hi, npts)
    eta = None
    if bumps.q:
        qm = max(bumps.q)
        eta = np.linspace(-width * qm, width * qm, 2001)
    return v, eta


def bumps_state(bumps: GaussianBumps, m: float, theta: float | None = None) -> SpeciesState:
    """Exact moments of a bump mixture (analytic, no quadrature)."""
    w, mu, s = map(np.asarray, (bumps.w, bumps.mu, bumps.s))
    n = w.sum()
    u = (w * mu).sum() / n
    T_t = m * (w * (s**2 + (mu - u) ** 2)).sum() / n
    if bumps.q:
        q = np.asarray(bumps.q)
        T_r = m * (w * q**2).sum() / n
        return SpeciesState(float(n), np.array([u]), float(T_t), float(T_r), theta)
    return SpeciesState(float(n), np.array([u]), float(T_t))


def _kinetic_moment_rates(bumps, m, attractors, l):
    """d/dt of (n, n u, int v^2 f, int eta^2 f) under a sum of attractors.

    ``attractors`` is a list of ``(rate, center, lam, theta)``.
    """
    v, eta = _grids(bumps)
    dv = v[1] - v[0]
    out = np.zeros(4)
    for w, mu, s, *rest in zip(bumps.w, bumps.mu, bumps.s, *( [bumps.q] if bumps.q else [] )):
        gv = _gauss(v, mu, s)
        for rate, center, lam, theta in attractors:
            # rhs = rate * [L_v g_v * g_eta + g_v * L_eta g_eta]; integrate separably
            lv = _op_1d(v, mu, s, center, lam / m)
            mom_v = np.array([np.trapezoid(lv, dx=dv), np.trapezoid(v * lv, dx=dv), np.trapezoid(v**2 * lv, dx=dv)])
            out[:3] += w * rate * mom_v  # g_eta integrates to 1
            if l:
                q = rest[0]
                de = eta[1] - eta[0]
                le = _op_1d(eta, 0.0, q, 0.0, theta / m)
                # L_eta g_eta contributes to eta^2 only (its mass and v-moments vanish)
                out[3] += w * rate * np.trapezoid(eta**2 * le, dx=de) * np.trapezoid(gv, dx=dv)
                out[0] += w * rate * np.trapezoid(le, dx=de) * np.trapezoid(gv, dx=dv)
    return out


def quadrature_rates(mixture: Mixture, bumps: tuple[GaussianBumps, GaussianBumps], thetas=(None, None)):
    """Moment rates obtained by integrating the kinetic right-hand side.

    Returns, per species, a dict with ``dn``, ``du``, ``dT_t``, ``dT_r``,
    ``dtheta`` and the state the rates refer to.  ``dtheta`` comes from the
    internal-energy moment of the auxiliary attractor equation applied to the
    current Maxwellian ``M_k``.
    """
    states = []
    for k in (0, 1):
        sp = mixture.species[k]
        st = bumps_state(bumps[k], sp.mass, thetas[k] if sp.l else None)
        states.append(st)
    state = MomentState(tuple(states))
    if mixture.d != 1:
        raise ValueError("quadrature oracle works in one velocity dimension")
    xq = exchange_quantities(mixture, state)
    results = []
    for k in (0, 1):
        j = 1 - k
        sp, st = mixture.species[k], state[k]
        m = sp.mass
        a = sp.c_self * st.n
        b = mixture.cross_rate(k) * state[j].n
        lam = st.lam(sp)
        theta = st.theta if sp.l else lam
        attract = [(a, st.u[0], lam, theta), (b, xq.u[k][0], xq.lam[k], xq.lam[k])]
        dn, dnu, dv2, de2 = _kinetic_moment_rates(bumps[k], m, attract, sp.l)
        n, u = st.n, st.u[0]
        du = dnu / n
        dT_t = m * (dv2 - 2 * n * u * du) / n
        res = dict(state=st, dn=dn, du=du, dT_t=dT_t, dT_r=None, dtheta=None)
        if sp.l:
            res["dT_r"] = m * de2 / (sp.l * n)
            # auxiliary equation acts on M_k = Maxwellian(n, u, lam, theta)
            t_k = (sp.d * lam + sp.l * st.theta) / (sp.d + sp.l)
            maxw = GaussianBumps((n,), (u,), (np.sqrt(lam / m),), (np.sqrt(st.theta / m),))
            aux = [(a / sp.z_rot * (sp.d + sp.l) / sp.d, u, t_k, t_k), (b, xq.u[k][0], xq.lam[k], xq.lam[k])]
            _, _, _, de2m = _kinetic_moment_rates(maxw, m, aux, sp.l)
            res["dtheta"] = m * de2m / (sp.l * n)
        results.append(res)
    return state, xq, results


def fit_rate_coefficients(mixture: Mixture, state: MomentState, xq, results) -> list[dict]:
    """Express quadrature rates in terms of the relaxation structure.

    For species k, with ``a = c_kk n_k``, ``b = c_kj n_j``, solve

    ``F = dT_t / [a (Lambda_k - T_t) + b (Lambda_kj - T_t)]``

    and the work-term coefficient ``W`` left over once ``F = 2`` is imposed,

    ``W = (dT_t - 2 [...]) / (b (m_k/d) |u_kj - u_k|^2)``.

    Analogous factors are reported for ``u``, ``T_r`` and ``Theta``.
    """
    out = []
    for k in (0, 1):
        j = 1 - k
        sp, st, res = mixture.species[k], state[k], results[k]
        a = sp.c_self * st.n
        b = mixture.cross_rate(k) * state[j].n
        lam = st.lam(sp)
        relax = a * (lam - st.T_t) + b * (xq.lam[k] - st.T_t)
        work = b * (sp.mass / sp.d) * float(np.sum((xq.u[k] - st.u) ** 2))
        factor_t = res["dT_t"] / relax
        coeffs = dict(factor_t=factor_t, work=(res["dT_t"] - 2.0 * relax) / work if work else 0.0,
                      factor_u=res["du"] / (b * (xq.u[k][0] - st.u[0])))
        if sp.l:
            coeffs["factor_r"] = res["dT_r"] / (a * (st.theta - st.T_r) + b * (xq.lam[k] - st.T_r))
            coeffs["factor_theta"] = res["dtheta"] / ((a / sp.z_rot) * (lam - st.theta) + b * (xq.lam[k] - st.theta))
        out.append(coeffs)
    return out
