"""Particle (Monte Carlo) solver.

Each drift-diffusion operator generates an Ornstein-Uhlenbeck process, so the
kinetic equations are sampled by moving particles with Euler-Maruyama and
refreshing the mean-field coefficients from empirical moments every step.

Random numbers come from Philox keyed by ``(seed, species, block)`` with the
step index in the counter, so a given particle sees the same noise however
the blocks are scheduled.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from . import diagnostics as diag
from .model import ExchangeQuantities, Mixture, MomentState, SpeciesSpec, SpeciesState, exchange_quantities

log = logging.getLogger(__name__)

__all__ = [
    "BLOCK_SIZE",
    "ParticleEnsemble",
    "OUCoefficients",
    "ParticleConfig",
    "ParticleRun",
    "block_normals",
    "sample_ensemble",
    "empirical_moments",
    "drift_diffusion_coeffs",
    "em_step",
    "run",
    "initial_ensembles",
    "monte_carlo_band",
]

BLOCK_SIZE = 16384
MIN_PARTICLES = 1000


def _block_key(seed: int, species: int, block: int) -> np.ndarray:
    ss = np.random.SeedSequence(seed, spawn_key=(species, block))
    return ss.generate_state(2, np.uint64)


def block_normals(seed: int, species: int, step: int, n_particles: int, width: int, phase: int = 0) -> np.ndarray:
    """Standard normals of shape ``(n_particles, width)``, block by block.

    ``phase`` separates initial sampling (1) from time steps (0).
    """
    out = np.empty((n_particles, width))
    for b, start in enumerate(range(0, n_particles, BLOCK_SIZE)):
        stop = min(start + BLOCK_SIZE, n_particles)
        bitgen = np.random.Philox(key=_block_key(seed, species, b),
                                  counter=np.array([0, 0, step, phase], dtype=np.uint64))
        out[start:stop] = np.random.Generator(bitgen).standard_normal((stop - start, width))
    return out


@dataclass(frozen=True)
class ParticleEnsemble:
    """``N`` equally weighted particles of one species."""

    species: int
    v: np.ndarray  # (N, d)
    eta: np.ndarray  # (N, l), empty second axis when monoatomic
    weight: float
    seed: int

    def __post_init__(self):
        if self.v.shape[0] < MIN_PARTICLES:
            raise ValueError(f"need at least {MIN_PARTICLES} particles, got {self.v.shape[0]}")

    @property
    def size(self) -> int:
        return self.v.shape[0]

    @property
    def density(self) -> float:
        return self.weight * self.size


def sample_ensemble(spec: SpeciesSpec, st: SpeciesState, n_particles: int, seed: int, species: int,
                    shape: str = "maxwellian", shift: float = 0.0) -> ParticleEnsemble:
    """Draw particles from the same analytic shapes the grid solver samples."""
    m = spec.mass
    width = spec.d + spec.l
    xi = block_normals(seed, species, 0, n_particles, width + 1, phase=1)
    var = st.T_t / m
    if shape == "double_gaussian" and shift:
        var_bump = var - shift**2 / spec.d
        if var_bump <= 0:
            raise ValueError(f"shift {shift} too large for T_t={st.T_t}")
        v = st.u + xi[:, : spec.d] * math.sqrt(var_bump)
        # last column picks the bump
        v[:, 0] += np.where(xi[:, width] > 0, shift, -shift)
    elif shape in ("maxwellian", "double_gaussian"):
        v = st.u + xi[:, : spec.d] * math.sqrt(var)
    else:
        raise ValueError(f"unknown initial shape {shape!r}")
    eta = xi[:, spec.d : width] * math.sqrt(st.T_r / m) if spec.l else np.empty((n_particles, 0))
    return ParticleEnsemble(species, v, eta, st.n / n_particles, seed)


def empirical_moments(ens: ParticleEnsemble, spec: SpeciesSpec, theta: float | None = None):
    """Plain-average moments and their standard errors.

    Returns ``(SpeciesState, stderr)`` with ``stderr`` keys ``u``, ``T_t`` and,
    for polyatomic species, ``T_r``.
    """
    N = ens.size
    m = spec.mass
    u = ens.v.mean(axis=0)
    dv = ens.v - u
    e_t = m * np.einsum("ij,ij->i", dv, dv) / spec.d
    se = {"u": dv.std(axis=0) / math.sqrt(N), "T_t": float(e_t.std()) / math.sqrt(N)}
    if spec.l:
        deta = ens.eta - ens.eta.mean(axis=0)
        e_r = m * np.einsum("ij,ij->i", deta, deta) / spec.l
        se["T_r"] = float(e_r.std()) / math.sqrt(N)
        st = SpeciesState(ens.density, u, float(e_t.mean()), float(e_r.mean()), theta, ens.eta.mean(axis=0))
    else:
        st = SpeciesState(ens.density, u, float(e_t.mean()))
    return st, se


@dataclass(frozen=True)
class OUCoefficients:
    """Drift ``-rate (v - center)``, ``-rate eta`` and diffusivities ``D_v``, ``D_eta``."""

    rate: float
    center: np.ndarray
    D_v: float
    D_eta: float | None


def drift_diffusion_coeffs(mixture: Mixture, state: MomentState, xq: ExchangeQuantities | None = None):
    """Combined OU coefficients of both collision terms, per species."""
    if xq is None:
        xq = exchange_quantities(mixture, state)
    out = []
    for k, (sp, st) in enumerate(zip(mixture.species, state)):
        a = sp.c_self * st.n
        b = mixture.cross_rate(k) * state[1 - k].n
        r = a + b
        center = (a * st.u + b * xq.u[k]) / r if r else st.u.copy()
        D_v = (a * st.lam(sp) + b * xq.lam[k]) / sp.mass
        D_eta = (a * st.theta + b * xq.lam[k]) / sp.mass if sp.l else None
        out.append(OUCoefficients(r, center, D_v, D_eta))
    return tuple(out)


def em_step(ens: ParticleEnsemble, coeffs: OUCoefficients, dt: float, step: int) -> ParticleEnsemble:
    """One Euler-Maruyama step; noise is fixed by ``(seed, species, step)``."""
    if coeffs.rate * dt >= 0.5:
        raise ValueError(f"dt * rate = {coeffs.rate * dt:.3g} must stay below 0.5")
    if coeffs.rate == 0 and coeffs.D_v == 0 and not coeffs.D_eta:
        return ens
    d, l = ens.v.shape[1], ens.eta.shape[1]
    xi = block_normals(ens.seed, ens.species, step, ens.size, d + l)
    v = ens.v - coeffs.rate * dt * (ens.v - coeffs.center) + math.sqrt(2 * coeffs.D_v * dt) * xi[:, :d]
    eta = ens.eta
    if l:
        eta = eta - coeffs.rate * dt * eta + math.sqrt(2 * coeffs.D_eta * dt) * xi[:, d:]
    return replace(ens, v=v, eta=eta)


@dataclass
class ParticleConfig:
    t_end: float = 1.0
    dt: float = 2e-3
    stride: int = 1
    n_particles: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.n_particles < MIN_PARTICLES:
            raise ValueError(f"n_particles must be >= {MIN_PARTICLES}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass
class ParticleRun:
    records: list[diag.DiagnosticsRecord]
    final: tuple[ParticleEnsemble, ParticleEnsemble]
    thetas: tuple[float | None, float | None]
    dt: float
    steps: int

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])


def _moments(mixture, ensembles, thetas):
    pairs = [empirical_moments(e, sp, th) for e, sp, th in zip(ensembles, mixture.species, thetas)]
    return MomentState(tuple(p[0] for p in pairs)), [p[1] for p in pairs]


def initial_ensembles(mixture: Mixture, state: MomentState, config: ParticleConfig,
                      shapes=("maxwellian", "maxwellian"), shifts=(0.0, 0.0)):
    state.check(mixture)
    return tuple(
        sample_ensemble(sp, st, config.n_particles, config.seed, k, shape, shift)
        for k, (sp, st, shape, shift) in enumerate(zip(mixture.species, state, shapes, shifts))
    )


def run(mixture: Mixture, ensembles, thetas, config: ParticleConfig, progress=None) -> ParticleRun:
    """Mean-field Euler-Maruyama to ``config.t_end``.

    ``thetas`` are the initial ``Theta_k`` (``None`` for a monoatomic
    species); they follow the same ODE as in the grid solver, driven by
    empirical moments.  Records carry standard errors and no entropy.
    """
    nsteps = int(math.ceil(config.t_end / config.dt - 1e-9)) if config.t_end > 0 else 0
    dt = config.t_end / nsteps if nsteps else config.dt
    state0, _ = _moments(mixture, ensembles, thetas)
    ref = diag.conserved_totals(mixture, state0)
    p_scale = diag.momentum_scale(mixture, state0)
    log.info("particle run: N=%d dt=%.4g steps=%d", ensembles[0].size, dt, nsteps)
    records = []
    thetas = tuple(thetas)

    def record(t, state, se):
        rec = diag.make_record(mixture, t, state, ref, p_scale)
        rec.stderr = {f"{key}_{k + 1}": val for k, s in enumerate(se) for key, val in s.items()}
        records.append(rec)
        if progress:
            progress(rec)

    for i in range(nsteps):
        state, se = _moments(mixture, ensembles, thetas)
        if i % config.stride == 0:
            record(i * dt, state, se)
        xq = exchange_quantities(mixture, state)
        coeffs = drift_diffusion_coeffs(mixture, state, xq)
        ensembles = tuple(em_step(e, c, dt, i) for e, c in zip(ensembles, coeffs))
        new_thetas = []
        for k, (sp, st) in enumerate(zip(mixture.species, state)):
            if not sp.l:
                new_thetas.append(None)
                continue
            a = sp.c_self * st.n
            b = mixture.cross_rate(k) * state[1 - k].n
            dth = 2 * (a / sp.z_rot) * (st.lam(sp) - st.theta) + 2 * b * (xq.lam[k] - st.theta)
            new_thetas.append(st.theta + dt * dth)
        thetas = tuple(new_thetas)
    state, se = _moments(mixture, ensembles, thetas)
    record(nsteps * dt, state, se)
    return ParticleRun(records, ensembles, thetas, dt, nsteps)


def _initial_covariance(mixture: Mixture, ensembles) -> np.ndarray:
    """Sampling covariance of the packed initial moment estimates."""
    blocks = []
    for sp, ens in zip(mixture.species, ensembles):
        m, N = sp.mass, ens.size
        dv = ens.v - ens.v.mean(axis=0)
        cols = [dv, (m * np.einsum("ij,ij->i", dv, dv) / sp.d)[:, None]]
        if sp.l:
            de = ens.eta - ens.eta.mean(axis=0)
            cols.append((m * np.einsum("ij,ij->i", de, de) / sp.l)[:, None])
        blocks.append(np.atleast_2d(np.cov(np.hstack(cols), rowvar=False)) / N)
    layout = _layout(mixture)
    P = np.zeros((layout["size"],) * 2)
    for k, sp in enumerate(mixture.species):
        idx = list(layout["u"][k]) + [layout["T_t"][k]] + ([layout["T_r"][k]] if sp.l else [])
        P[np.ix_(idx, idx)] = blocks[k]
    return P


def _layout(mixture: Mixture) -> dict:
    """Positions of each moment in the packed moment vector."""
    d = mixture.d
    lay = {"u": (range(0, d), range(d, 2 * d)), "T_t": (2 * d, 2 * d + 1), "T_r": [None, None],
           "theta": [None, None]}
    pos = 2 * d + 2
    for k, sp in enumerate(mixture.species):
        if sp.l:
            lay["T_r"][k], lay["theta"][k] = pos, pos + 1
            pos += 2
    lay["size"] = pos
    return lay


def monte_carlo_band(mixture: Mixture, ensembles, state0: MomentState, dt: float, t_end: float, stride: int = 1):
    """Oracle trajectory and the standard deviation of the empirical moments around it.

    The empirical moments obey a closed stochastic recursion: deterministic
    moment dynamics plus martingale noise from the Gaussian increments.  Its
    covariance is propagated in linearised form, ``P <- J P J^T + Q``, along
    the oracle trajectory, starting from the sampling covariance of the
    initial ensembles.  This accounts for the random walk of conserved totals
    that the per-time cross-sectional standard error misses.

    Returns ``(times, states, sigma)`` with ``sigma`` in packed moment order.
    """
    from . import macro

    traj = macro.integrate(mixture, state0, dt, t_end, stride=1)
    h = traj.times[1] - traj.times[0] if len(traj.times) > 1 else dt
    lay = _layout(mixture)
    n_particles = [e.size for e in ensembles]
    P = _initial_covariance(mixture, ensembles)
    eye = np.eye(lay["size"])

    def jac(st):
        y = macro.pack(st)
        J = np.empty((y.size, y.size))
        for i in range(y.size):
            eps = 1e-6 * max(1.0, abs(y[i]))
            yp, ym = y.copy(), y.copy()
            yp[i] += eps
            ym[i] -= eps
            J[:, i] = (macro._rhs_vec(mixture, yp, st) - macro._rhs_vec(mixture, ym, st)) / (2 * eps)
        return J

    times, states, sig = [traj.times[0]], [traj.states[0]], [np.sqrt(np.diag(P))]
    nsteps = len(traj.times) - 1
    for n in range(nsteps):
        st = traj.states[n]
        coeffs = drift_diffusion_coeffs(mixture, st)
        Q = np.zeros_like(P)
        for k, (sp, c) in enumerate(zip(mixture.species, coeffs)):
            N, m, s = n_particles[k], sp.mass, st[k]
            for i in lay["u"][k]:
                Q[i, i] = 2 * c.D_v * h / N
            Q[lay["T_t"][k], lay["T_t"][k]] = 8 * m * c.D_v * h * s.T_t / (sp.d * N)
            if sp.l:
                Q[lay["T_r"][k], lay["T_r"][k]] = 8 * m * c.D_eta * h * s.T_r / (sp.l * N)
        J = eye + h * jac(st)
        P = J @ P @ J.T + Q
        if (n + 1) % stride == 0 or n + 1 == nsteps:
            times.append(traj.times[n + 1])
            states.append(traj.states[n + 1])
            sig.append(np.sqrt(np.diag(P)))
    return np.array(times), states, np.array(sig)
