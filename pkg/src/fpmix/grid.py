"""Deterministic tensor-grid solver for the space-homogeneous mixture.

Each species lives on a uniform cell-centred grid over ``d`` velocity axes and
``l`` internal axes.  Both collision terms of a species are drift-diffusion
operators with linear drift, so their sum is again one such operator with a
combined rate, centre and diffusivity; it is discretised with Chang-Cooper
(exponentially fitted) fluxes.  The sampled Gaussian of the combined attractor
is an exact discrete steady state and zero-flux boundaries make the scheme
mass-conservative to rounding.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numba import njit

from . import diagnostics as diag
from .model import (
    InvalidStateError,
    Mixture,
    MomentState,
    SpeciesSpec,
    SpeciesState,
    equilibrium_state,
    exchange_quantities,
    internal_energy,
)

log = logging.getLogger(__name__)

__all__ = [
    "VelocityGrid",
    "DistributionField",
    "SolverConfig",
    "GridState",
    "GridRun",
    "SchemeFailure",
    "CFLError",
    "DegenerateFieldError",
    "default_nodes",
    "build_grid",
    "grids_for",
    "sample_field",
    "fp_apply",
    "positivity_dt",
    "moments_from_field",
    "attractor",
    "step",
    "run",
    "initial_grid_state",
    "choose_dt",
    "match_gaussian",
    "nongaussianity",
]


class SchemeFailure(RuntimeError):
    """The discrete solution lost positivity."""


class CFLError(ValueError):
    """Time step exceeds the positivity bound of the explicit scheme."""


class DegenerateFieldError(ValueError):
    """Distribution with zero mass."""


def default_nodes(n_axes: int) -> int:
    if n_axes <= 2:
        return 64
    if n_axes <= 4:
        return 32
    return 16


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform cell-centred nodes; the first ``d`` axes are velocities."""

    axes: tuple[np.ndarray, ...]
    d: int
    l: int

    @classmethod
    def uniform(cls, centers: Sequence[float], half_widths: Sequence[float], nodes: int | Sequence[int], d: int):
        nax = len(centers)
        if isinstance(nodes, (int, np.integer)):
            nodes = [int(nodes)] * nax
        axes = []
        for c, L, N in zip(centers, half_widths, nodes):
            h = 2.0 * L / N
            axes.append(c - L + (np.arange(N) + 0.5) * h)
        return cls(tuple(axes), d, nax - d)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(float(a[1] - a[0]) for a in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def broadcast(self, axis: int, arr: np.ndarray) -> np.ndarray:
        shape = [1] * len(self.axes)
        shape[axis] = arr.size
        return arr.reshape(shape)


@dataclass(frozen=True)
class DistributionField:
    grid: VelocityGrid
    values: np.ndarray
    species: int = 0

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)


def _temperature_ceiling(mixture: Mixture, state: MomentState) -> float:
    """Largest temperature the run can plausibly reach."""
    temps = []
    for sp, st in zip(mixture.species, state):
        temps += [st.T_t, st.lam(sp)]
        if sp.l:
            temps += [st.T_r, st.theta]
    _, T_inf = equilibrium_state(mixture, state)
    temps.append(T_inf)
    # with l_1 != l_2 the attractor equalises energy per particle instead
    u_inf, _ = equilibrium_state(mixture, state)
    thermal = 0.0
    for sp, st in zip(mixture.species, state):
        thermal += 0.5 * sp.mass * st.n * float(np.sum((st.u - u_inf) ** 2)) + 0.5 * st.n * internal_energy(sp, st)
    e_common = 2 * thermal / (state[0].n + state[1].n)
    temps += [e_common / (sp.d + sp.l) for sp in mixture.species]
    return max(temps)


def build_grid(spec: SpeciesSpec, center: np.ndarray, sigma: float, offset: float, extent: float = 6.0,
               nodes: int | None = None) -> VelocityGrid:
    """Grid symmetric about ``center`` (velocity) and 0 (internal axes).

    Velocity half-width is ``extent * sigma + offset``; internal half-width is
    ``extent * sigma``.
    """
    nax = spec.d + spec.l
    nodes = nodes or default_nodes(nax)
    centers = list(np.atleast_1d(center)) + [0.0] * spec.l
    half = [extent * sigma + offset] * spec.d + [extent * sigma] * spec.l
    return VelocityGrid.uniform(centers, half, nodes, spec.d)


def grids_for(mixture: Mixture, state: MomentState, extent: float = 6.0, nodes: int | Sequence[int | None] | None = None):
    T_max = _temperature_ceiling(mixture, state)
    gap = float(np.max(np.abs(state[0].u - state[1].u)))
    if nodes is None or isinstance(nodes, (int, np.integer)):
        nodes = (nodes, nodes)
    out = []
    for k, (sp, st) in enumerate(zip(mixture.species, state)):
        sigma = math.sqrt(T_max / sp.mass)
        out.append(build_grid(sp, st.u, sigma, gap, extent, nodes[k]))
    return tuple(out)


def _gauss(x, mu, var):
    return np.exp(-0.5 * (x - mu) ** 2 / var) / math.sqrt(2 * math.pi * var)


def sample_field(grid: VelocityGrid, spec: SpeciesSpec, st: SpeciesState, shape: str = "maxwellian",
                 shift: float = 0.0, species: int = 0, matched: bool = True) -> DistributionField:
    """Point values of an analytic distribution with the moments of ``st``.

    ``shape="double_gaussian"`` splits the first velocity axis into two bumps
    at ``u_0 +- shift``; the bump variance is reduced so the translational
    temperature is still ``st.T_t``.  With ``matched`` the Gaussian factors
    are adjusted so the midpoint moments equal ``st`` exactly.
    """

    def gauss(x, mu, var):
        if not matched:
            return _gauss(x, mu, var)
        g = _gauss(x, *match_gaussian(x, mu, var))
        return g / (g.sum() * (x[1] - x[0]))

    m = spec.mass
    var = st.T_t / m
    f = np.asarray(st.n, dtype=float)
    for a in range(spec.d):
        x = grid.axes[a]
        if a == 0 and shape == "double_gaussian" and shift:
            var0 = var - shift**2 / spec.d
            if var0 <= 0:
                raise InvalidStateError(f"shift {shift} too large for T_t={st.T_t}")
            prof = 0.5 * (_gauss(x, st.u[0] + shift, var0) + _gauss(x, st.u[0] - shift, var0))
        elif shape == "double_gaussian" and shift:
            # remaining axes give up the variance the split axis gained
            prof = gauss(x, st.u[a], var - shift**2 / spec.d)
        elif shape in ("maxwellian", "double_gaussian"):
            prof = gauss(x, st.u[a], var)
        else:
            raise ValueError(f"unknown initial shape {shape!r}")
        f = f * grid.broadcast(a, prof)
    for b in range(spec.l):
        a = spec.d + b
        f = f * grid.broadcast(a, gauss(grid.axes[a], 0.0, st.T_r / m))
    return DistributionField(grid, np.ascontiguousarray(np.broadcast_to(f, grid.shape)), species)


def moments_from_field(field: DistributionField, spec: SpeciesSpec) -> SpeciesState:
    """Midpoint-rule moments; ``theta`` is left unset (it is not a moment of f)."""
    g = field.grid
    f = field.values
    vol = g.cell_volume
    nax = f.ndim
    n = float(f.sum()) * vol
    if not n > 0:
        raise DegenerateFieldError("distribution has no mass")
    means, seconds = [], []
    for a in range(nax):
        marg = f.sum(axis=tuple(i for i in range(nax) if i != a)) * vol
        x = g.axes[a]
        mu = float(np.dot(x, marg)) / n
        means.append(mu)
        seconds.append(float(np.dot((x - mu) ** 2, marg)))
    d, l = spec.d, spec.l
    u = np.array(means[:d])
    T_t = spec.mass * sum(seconds[:d]) / (d * n)
    if l:
        T_r = spec.mass * sum(seconds[d:]) / (l * n)
        return SpeciesState(n, u, T_t, T_r, None, np.array(means[d:]))
    return SpeciesState(n, u, T_t)


def _bernoulli(x: np.ndarray) -> np.ndarray:
    """``x / (exp(x) - 1)`` with the removable singularity at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = x / np.expm1(x)
    out[small] = 1.0 - 0.5 * x[small]
    return out


def _face_weights(x: np.ndarray, center: float, D: float, scheme: str):
    """Coefficients ``(cp, cm)`` of the face flux ``G = cp f[i+1] - cm f[i]``."""
    h = x[1] - x[0]
    A = 0.5 * (x[1:] + x[:-1]) - center
    if scheme == "chang_cooper":
        w = A * h / D
        return (D / h) * _bernoulli(-w), (D / h) * _bernoulli(w)
    if scheme == "central":
        return 0.5 * A + D / h, D / h - 0.5 * A
    raise ValueError(f"unknown scheme {scheme!r}")


def match_gaussian(x: np.ndarray, mean: float, var: float, tol: float = 1e-15, maxiter: int = 40):
    """Centre and variance parameters of the sampled Gaussian on nodes ``x``
    whose discrete mean and variance are exactly ``mean`` and ``var``.

    Newton iteration in natural parameters; the Jacobian is the discrete
    covariance of ``(z, z^2)``.  Returns ``(mean, var)`` unchanged when the
    target is not representable on the nodes.
    """
    z = x - mean
    zz = np.stack([z, z * z])
    target = np.array([0.0, var])
    nat = np.array([0.0, -0.5 / var])
    for _ in range(maxiter):
        e = nat[0] * z + nat[1] * z * z
        w = np.exp(e - e.max())
        w /= w.sum()
        mom = zz @ w
        resid = target - mom
        if abs(resid[0]) <= tol * math.sqrt(var) and abs(resid[1]) <= tol * var:
            break
        cov = (zz * w) @ zz.T - np.outer(mom, mom)
        try:
            nat = nat + np.linalg.solve(cov, resid)
        except np.linalg.LinAlgError:
            return mean, var
        if not nat[1] < 0:
            return mean, var
    else:
        log.debug("gaussian matching did not converge (mean=%g, var=%g)", mean, var)
        return mean, var
    D = -0.5 / nat[1]
    return mean + nat[0] * D, D


def _axis_params(grid: VelocityGrid, center, lam, theta, mass, matched: bool = False):
    out = []
    for a in range(len(grid.axes)):
        c, D = (float(center[a]), lam / mass) if a < grid.d else (0.0, theta / mass)
        if matched:
            c, D = match_gaussian(grid.axes[a], c, D)
        out.append((c, D))
    return out


@njit(cache=True)
def _axis_flux_div(f3, cp, cm, out3):
    # f3 viewed as (before, axis, after); face i+1/2 carries cp[i] f[i+1] - cm[i] f[i]
    P, N, Q = f3.shape
    for p in range(P):
        for i in range(N - 1):
            a = cp[i]
            b = cm[i]
            for q in range(Q):
                g = a * f3[p, i + 1, q] - b * f3[p, i, q]
                out3[p, i, q] += g
                out3[p, i + 1, q] -= g


def fp_apply(field: DistributionField, center, lam: float, theta: float | None, rate: float, mass: float,
             scheme: str = "chang_cooper", matched: bool = True) -> np.ndarray:
    """Discrete ``rate * [div_v((v - c) f) + lam/m lap_v f + div_eta(eta f) + theta/m lap_eta f]``.

    Zero flux through the outermost faces; the output sums to zero up to
    rounding.  With ``matched`` (Chang-Cooper only) the per-axis centre and
    diffusivity are nudged so that the discrete steady state has exactly the
    target mean and variance under midpoint quadrature.
    """
    f = np.ascontiguousarray(field.values)
    out = np.zeros_like(f)
    if rate == 0:
        return out
    g = field.grid
    center = np.atleast_1d(center)
    shape = f.shape
    matched = matched and scheme == "chang_cooper"
    for a, (c, D) in enumerate(_axis_params(g, center, lam, theta, mass, matched)):
        x = g.axes[a]
        h = x[1] - x[0]
        cp, cm = _face_weights(x, c, D, scheme)
        view = (math.prod(shape[:a]), shape[a], math.prod(shape[a + 1:]))
        _axis_flux_div(f.reshape(view), cp * (rate / h), cm * (rate / h), out.reshape(view))
    return out


def positivity_dt(grid: VelocityGrid, center, lam: float, theta: float | None, rate: float, mass: float,
                  scheme: str = "chang_cooper", matched: bool = True) -> float:
    """Largest explicit-Euler step keeping every new value non-negative.

    For the central scheme this is only the diffusive bound (no positivity
    guarantee when the cell Peclet number exceeds 2).
    """
    if rate == 0:
        return math.inf
    total = 0.0
    center = np.atleast_1d(center)
    matched = matched and scheme == "chang_cooper"
    for a, (c, D) in enumerate(_axis_params(grid, center, lam, theta, mass, matched)):
        x = grid.axes[a]
        h = x[1] - x[0]
        if scheme == "central":
            total += 2 * D / h**2
            continue
        cp, cm = _face_weights(x, c, D, scheme)
        diag_ = np.zeros(x.size)
        diag_[:-1] += cm
        diag_[1:] += cp
        total += float(diag_.max()) / h
    return 1.0 / (rate * total)


def attractor(mixture: Mixture, state: MomentState, k: int, xq=None):
    """Combined ``(rate, center, lam, theta)`` of the two collision terms of species ``k``."""
    if xq is None:
        xq = exchange_quantities(mixture, state)
    sp, st = mixture.species[k], state[k]
    a = sp.c_self * st.n
    b = mixture.cross_rate(k) * state[1 - k].n
    r = a + b
    center = (a * st.u + b * xq.u[k]) / r
    lam = (a * st.lam(sp) + b * xq.lam[k]) / r
    theta = (a * st.theta + b * xq.lam[k]) / r if sp.l else None
    return r, center, lam, theta


@dataclass
class SolverConfig:
    """Time stepping and discretisation settings."""

    t_end: float = 1.0
    dt: float | None = None
    stride: int = 1
    scheme: str = "chang_cooper"
    integrator: str = "euler"
    safety: float = 0.9
    extent: float = 6.0
    nodes: int | None = None
    matched: bool = True

    def __post_init__(self):
        if self.scheme not in ("chang_cooper", "central"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.integrator not in ("euler", "rk2"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not 0 < self.safety <= 1:
            raise ValueError("safety must lie in (0, 1]")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass(frozen=True)
class GridState:
    fields: tuple[DistributionField, DistributionField]
    thetas: tuple[float | None, float | None]
    t: float = 0.0

    def moments(self, mixture: Mixture) -> MomentState:
        out = []
        for k, (sp, fld) in enumerate(zip(mixture.species, self.fields)):
            st = moments_from_field(fld, sp)
            out.append(replace(st, theta=self.thetas[k]) if sp.l else st)
        return MomentState(tuple(out))


def initial_grid_state(mixture: Mixture, state: MomentState, config: SolverConfig,
                       shapes: Sequence[str] = ("maxwellian", "maxwellian"), shifts: Sequence[float] = (0.0, 0.0),
                       grids=None) -> GridState:
    state.check(mixture)
    if grids is None:
        grids = grids_for(mixture, state, config.extent, config.nodes)
    fields = tuple(
        sample_field(g, sp, st, shape, shift, k, matched=config.matched)
        for k, (g, sp, st, shape, shift) in enumerate(zip(grids, mixture.species, state, shapes, shifts))
    )
    return GridState(fields, (state[0].theta, state[1].theta))


def _rhs(mixture: Mixture, gs: GridState, config: SolverConfig):
    state = gs.moments(mixture)
    xq = exchange_quantities(mixture, state)
    dfs, dths, limits = [], [], []
    for k, sp in enumerate(mixture.species):
        r, c, lam, th = attractor(mixture, state, k, xq)
        fld = gs.fields[k]
        dfs.append(fp_apply(fld, c, lam, th, r, sp.mass, config.scheme, config.matched))
        limits.append(positivity_dt(fld.grid, c, lam, th, r, sp.mass, config.scheme, config.matched))
        if sp.l:
            st = state[k]
            a = sp.c_self * st.n
            b = mixture.cross_rate(k) * state[1 - k].n
            dths.append(2 * (a / sp.z_rot) * (st.lam(sp) - st.theta) + 2 * b * (xq.lam[k] - st.theta))
        else:
            dths.append(None)
    return state, dfs, dths, min(limits)


def _advance(gs: GridState, dfs, dths, dt: float) -> GridState:
    fields = tuple(replace(f, values=f.values + dt * df) for f, df in zip(gs.fields, dfs))
    thetas = tuple(None if th is None else th + dt * dth for th, dth in zip(gs.thetas, dths))
    return GridState(fields, thetas, gs.t + dt)


def _check_positive(gs: GridState) -> None:
    for k, f in enumerate(gs.fields):
        vmin, vmax = float(f.values.min()), float(f.values.max())
        if vmin < -1e-14 * vmax:
            raise SchemeFailure(f"species {k + 1}: min f = {vmin:.3e} (max {vmax:.3e}) at t={gs.t}")


def _check_cfl(dt: float, limit: float, config: SolverConfig, t: float) -> None:
    if config.scheme == "chang_cooper" and dt > limit * (1 + 1e-12):
        raise CFLError(f"dt={dt:.4g} exceeds the positivity bound {limit:.4g} at t={t:.4g}")


def step(mixture: Mixture, gs: GridState, dt: float, config: SolverConfig | None = None, _rhs0=None) -> GridState:
    """One explicit step of the kinetic equations plus the ``Theta_k`` equations.

    Exchange quantities are refreshed from the start-of-step moments.
    """
    config = config or SolverConfig()
    state, dfs, dths, limit = _rhs0 if _rhs0 is not None else _rhs(mixture, gs, config)
    _check_cfl(dt, limit, config, gs.t)
    new = _advance(gs, dfs, dths, dt)
    if config.integrator == "rk2":
        # Heun: average of two Euler slopes, positivity carries over
        _, dfs2, dths2, limit2 = _rhs(mixture, new, config)
        _check_cfl(dt, limit2, config, gs.t)
        new = _advance(gs, [0.5 * (a + b) for a, b in zip(dfs, dfs2)],
                       [None if a is None else 0.5 * (a + b) for a, b in zip(dths, dths2)], dt)
    _check_positive(new)
    return new


def choose_dt(mixture: Mixture, gs: GridState, config: SolverConfig) -> float:
    """``safety`` times the positivity bound, also evaluated at the hottest attractor."""
    state = gs.moments(mixture)
    T_max = _temperature_ceiling(mixture, state)
    xq = exchange_quantities(mixture, state)
    limits = []
    for k, sp in enumerate(mixture.species):
        r, c, lam, th = attractor(mixture, state, k, xq)
        g = gs.fields[k].grid
        for L, Th in ((lam, th), (T_max, T_max if sp.l else None)):
            limits.append(positivity_dt(g, c, L, Th, r, sp.mass, "chang_cooper", config.matched))
    return config.safety * min(limits)


@dataclass
class GridRun:
    records: list[diag.DiagnosticsRecord]
    final: GridState
    dt: float
    steps: int

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def H(self) -> np.ndarray:
        return np.array([r.H for r in self.records])


def nongaussianity(field: DistributionField, spec: SpeciesSpec, st: SpeciesState) -> float:
    """Relative entropy of ``f`` to the Gaussian carrying its own midpoint moments."""
    g = field.grid
    G = np.asarray(st.n, dtype=float)
    for a in range(len(g.axes)):
        if a < g.d:
            mu, var = st.u[a], st.T_t / spec.mass
        else:
            mu, var = st.eta_bar[a - g.d], st.T_r / spec.mass
        G = G * g.broadcast(a, _gauss(g.axes[a], mu, var))
    vol = g.cell_volume
    G = np.broadcast_to(G, g.shape)
    return float(diag.relative_entropy_density(field.values, G).sum() * vol + (st.n - G.sum() * vol))


def _record(mixture, gs, state, ref, p_scale, T_ref):
    flogf = [diag.f_log_f(f.values, f.grid.cell_volume) for f in gs.fields]
    nongauss = [nongaussianity(f, sp, st) for f, sp, st in zip(gs.fields, mixture.species, state)]
    return diag.make_record(mixture, gs.t, state, ref, p_scale, flogf, nongauss, T_ref)


def run(mixture: Mixture, initial: GridState, config: SolverConfig, progress=None) -> GridRun:
    """Iterate :func:`step` to ``config.t_end`` with diagnostics every ``stride`` steps."""
    dt = config.dt or choose_dt(mixture, initial, config)
    nsteps = int(math.ceil(config.t_end / dt - 1e-9)) if config.t_end > 0 else 0
    if nsteps:
        dt = config.t_end / nsteps
    state0 = initial.moments(mixture)
    ref = diag.conserved_totals(mixture, state0)
    p_scale = diag.momentum_scale(mixture, state0)
    _, T_ref = equilibrium_state(mixture, state0)
    log.info("grid run: dt=%.4g steps=%d shapes=%s", dt, nsteps, [f.grid.shape for f in initial.fields])
    gs = initial
    records = []
    for i in range(nsteps):
        rhs0 = _rhs(mixture, gs, config)
        if i % config.stride == 0:
            records.append(_record(mixture, gs, rhs0[0], ref, p_scale, T_ref))
            if progress:
                progress(records[-1])
        gs = step(mixture, gs, dt, config, _rhs0=rhs0)
        gs = replace(gs, t=(i + 1) * dt)
    records.append(_record(mixture, gs, gs.moments(mixture), ref, p_scale, T_ref))
    return GridRun(records, gs, dt, nsteps)
