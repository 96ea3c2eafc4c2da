"""Closed moment system of the space-homogeneous kinetic model.

The relaxation rates below are the exact second-moment rates of the
drift-diffusion operators (a factor 2 on every temperature rate, none on the
velocity rate).  ``fpmix.oracle`` re-derives them by quadrature of the
kinetic right-hand side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .model import (
    InvalidStateError,
    Mixture,
    MomentState,
    SpeciesState,
    exchange_quantities,
)

__all__ = [
    "SpeciesRates",
    "ode_rhs",
    "decay_rate",
    "theta_lambda_decay",
    "integrate",
    "Trajectory",
    "pack",
    "unpack",
]

# A constant-density trajectory state is just a MomentState.
MomentOdeState = MomentState


class SpeciesRates(NamedTuple):
    du: np.ndarray
    dT_t: float
    dT_r: float | None
    dtheta: float | None


def ode_rhs(mixture: Mixture, state: MomentState) -> tuple[SpeciesRates, SpeciesRates]:
    """Time derivative of ``(u_k, T_k^t, T_k^r, Theta_k)`` for both species."""
    xq = exchange_quantities(mixture, state)
    out = []
    for k in (0, 1):
        j = 1 - k
        spec, st = mixture.species[k], state[k]
        a = spec.c_self * st.n
        b = mixture.cross_rate(k) * state[j].n
        lam = st.lam(spec)
        t_cross = xq.lam[k]
        du = b * (xq.u[k] - st.u)
        dT_t = 2 * a * (lam - st.T_t) + 2 * b * (t_cross - st.T_t)
        if spec.l:
            dT_r = 2 * a * (st.theta - st.T_r) + 2 * b * (t_cross - st.T_r)
            dtheta = 2 * (a / spec.z_rot) * (lam - st.theta) + 2 * b * (t_cross - st.theta)
        else:
            dT_r = dtheta = None
        out.append(SpeciesRates(du, dT_t, dT_r, dtheta))
    return out[0], out[1]


def decay_rate(mixture: Mixture, state: MomentState, k: int) -> float:
    """Exponential rate of ``Theta_k - Lambda_k``.

    The gap obeys a closed linear equation whose coefficient depends only on
    the (constant) densities, so the decay is exactly exponential.
    """
    spec = mixture.species[k]
    if spec.l == 0:
        return math.nan
    a = spec.c_self * state[k].n
    b = mixture.cross_rate(k) * state[1 - k].n
    return 2.0 * ((a / spec.z_rot) * (spec.d + spec.l) / spec.d + b)


def theta_lambda_decay(mixture: Mixture, state: MomentState, k: int, t) -> np.ndarray:
    """Analytic ``Theta_k(t) - Lambda_k(t)`` starting from ``state``."""
    spec, st = mixture.species[k], state[k]
    t = np.asarray(t, dtype=float)
    if spec.l == 0:
        return np.zeros_like(t)
    gap0 = st.theta - st.lam(spec)
    return gap0 * np.exp(-decay_rate(mixture, state, k) * t)


def pack(state: MomentState) -> np.ndarray:
    parts = [state[0].u, state[1].u, [state[0].T_t, state[1].T_t]]
    for st in state:
        if st.T_r is not None:
            parts.append([st.T_r, st.theta])
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def unpack(y: np.ndarray, like: MomentState) -> MomentState:
    d = like[0].u.shape[0]
    u1, u2 = y[:d], y[d : 2 * d]
    T_t = y[2 * d : 2 * d + 2]
    pos = 2 * d + 2
    out = []
    for k, (st, u) in enumerate(zip(like, (u1, u2))):
        if st.T_r is not None:
            T_r, theta = y[pos], y[pos + 1]
            pos += 2
        else:
            T_r = theta = None
        out.append(SpeciesState(st.n, u.copy(), float(T_t[k]), T_r if T_r is None else float(T_r),
                                theta if theta is None else float(theta)))
    return MomentState(tuple(out))


def _rhs_vec(mixture: Mixture, y: np.ndarray, like: MomentState) -> np.ndarray:
    r1, r2 = ode_rhs(mixture, unpack(y, like))
    parts = [r1.du, r2.du, [r1.dT_t, r2.dT_t]]
    for r in (r1, r2):
        if r.dT_r is not None:
            parts.append([r.dT_r, r.dtheta])
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[MomentState] = field(default_factory=list)

    def series(self, fn) -> np.ndarray:
        return np.array([fn(s) for s in self.states])


def _check_positive(state: MomentState, mixture: Mixture, t: float) -> None:
    for k, (sp, st) in enumerate(zip(mixture.species, state)):
        temps = [st.T_t] + ([st.T_r, st.theta] if sp.l else [])
        if min(temps) <= 0:
            raise InvalidStateError(f"non-positive temperature for species {k + 1} at t={t}: {temps}")
        st.lam(sp)


def integrate(mixture: Mixture, initial: MomentState, dt: float, t_end: float, stride: int = 1) -> Trajectory:
    """Classical RK4 with a fixed step, output every ``stride`` steps.

    ``dt`` is shrunk slightly if needed so that ``t_end`` is hit exactly.
    """
    initial.check(mixture)
    nsteps = max(int(math.ceil(t_end / dt - 1e-9)), 0)
    h = t_end / nsteps if nsteps else 0.0
    y = pack(initial)
    like = initial
    traj = Trajectory(times=np.empty(0))
    times = [0.0]
    traj.states.append(initial)
    f = lambda yy: _rhs_vec(mixture, yy, like)
    for i in range(1, nsteps + 1):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if i % stride == 0 or i == nsteps:
            st = unpack(y, like)
            _check_positive(st, mixture, i * h)
            times.append(i * h)
            traj.states.append(st)
    traj.times = np.array(times)
    return traj
