"""Physical parameters, exchange-parameter algebra and Maxwellians.

Everything here is a pure function over frozen value types.  A species with
``l == 0`` internal degrees of freedom is monoatomic: its ``T_r`` and ``theta``
are ``None`` and every internal-energy term drops out of the formulas.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

__all__ = [
    "SpeciesSpec",
    "MixtureParams",
    "Mixture",
    "SpeciesState",
    "MomentState",
    "ExchangeQuantities",
    "ValidationReport",
    "ParameterRegimeError",
    "InvalidStateError",
    "ZRatioWarning",
    "lambda_from_theta",
    "equilibrium_temperature",
    "t_kj",
    "mixture_velocities",
    "mixture_energy_params",
    "exchange_quantities",
    "maxwellian_eval",
    "energy_flux",
    "validate_params",
    "equilibrium_state",
    "internal_energy",
    "maxwell_state",
]


class ParameterRegimeError(ValueError):
    """Free interaction parameters leave the admissible regime."""


class InvalidStateError(ValueError):
    """A macroscopic state is unphysical (non-positive temperature, ...)."""


class ZRatioWarning(UserWarning):
    """Relaxation numbers were given in the inverted ratio."""


@dataclass(frozen=True)
class SpeciesSpec:
    """Constants of one species.

    Parameters
    ----------
    mass : float
        Molecular mass ``m_k``.
    d : int
        Number of translational dimensions.
    l : int
        Number of internal (rotational/vibrational) degrees of freedom.
    c_self : float
        Intra-species friction constant ``c_kk``.
    z_rot : float
        Relaxation number ``Z_k^r`` of the internal/translational exchange.
    """

    mass: float
    d: int = 3
    l: int = 0
    c_self: float = 1.0
    z_rot: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be an integer >= 1, got {self.d}")
        if int(self.l) != self.l or self.l < 0:
            raise ValueError(f"l must be an integer >= 0, got {self.l}")
        if not self.c_self > 0:
            raise ValueError(f"c_self must be > 0, got {self.c_self}")
        if not self.z_rot > 0:
            raise ValueError(f"z_rot must be > 0, got {self.z_rot}")

    @property
    def dof(self) -> int:
        return self.d + self.l


@dataclass(frozen=True)
class MixtureParams:
    """Free interaction parameters; ``c_12 = eps * c_21`` is derived."""

    c_21: float
    eps: float
    delta: float
    alpha: float
    gamma: float

    def __post_init__(self):
        if not self.c_21 > 0:
            raise ValueError(f"c_21 must be > 0, got {self.c_21}")
        if not 0 < self.eps <= 1:
            raise ValueError(f"eps must satisfy 0 < eps <= 1, got {self.eps}")

    @property
    def c_12(self) -> float:
        return self.eps * self.c_21


@dataclass(frozen=True)
class Mixture:
    """Two species plus their interaction parameters."""

    species: tuple[SpeciesSpec, SpeciesSpec]
    params: MixtureParams

    def __post_init__(self):
        s1, s2 = self.species
        if s1.d != s2.d:
            raise ValueError("both species must share the same translational dimension d")
        object.__setattr__(self, "species", (s1, s2))

    @property
    def d(self) -> int:
        return self.species[0].d

    def cross_rate(self, k: int) -> float:
        """Inter-species friction ``c_kj`` for species index ``k`` (0 or 1)."""
        return self.params.c_12 if k == 0 else self.params.c_21

    @property
    def z_weight(self) -> float:
        """Entropy weight ``z = Z_1^r d / (d + l_1)``."""
        s = self.species[0]
        return s.z_rot * s.d / (s.d + s.l)


@dataclass(frozen=True)
class SpeciesState:
    """Macroscopic state of one species.

    ``T_r`` and ``theta`` are ``None`` for a monoatomic species.
    """

    n: float
    u: np.ndarray
    T_t: float
    T_r: float | None = None
    theta: float | None = None
    eta_bar: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "u", np.atleast_1d(np.asarray(self.u, dtype=float)))
        if self.eta_bar is not None:
            object.__setattr__(self, "eta_bar", np.atleast_1d(np.asarray(self.eta_bar, dtype=float)))

    def lam(self, spec: SpeciesSpec) -> float:
        return lambda_from_theta(spec, self.T_t, self.T_r, self.theta)

    def check(self, spec: SpeciesSpec) -> None:
        if not self.n > 0:
            raise InvalidStateError(f"density must be > 0, got {self.n}")
        if self.u.shape != (spec.d,):
            raise InvalidStateError(f"velocity must have length {spec.d}, got shape {self.u.shape}")
        if not self.T_t > 0:
            raise InvalidStateError(f"T_t must be > 0, got {self.T_t}")
        if spec.l > 0:
            if self.T_r is None or self.theta is None:
                raise InvalidStateError("polyatomic species needs T_r and theta")
            if not (self.T_r > 0 and self.theta > 0):
                raise InvalidStateError(f"T_r and theta must be > 0, got {self.T_r}, {self.theta}")
        self.lam(spec)


@dataclass(frozen=True)
class MomentState:
    """Per-species macroscopic state of the two-species mixture."""

    species: tuple[SpeciesState, SpeciesState]

    def __getitem__(self, k: int) -> SpeciesState:
        return self.species[k]

    def __iter__(self):
        return iter(self.species)

    def replace(self, k: int, **changes) -> "MomentState":
        new = list(self.species)
        new[k] = replace(new[k], **changes)
        return MomentState(tuple(new))

    def check(self, mixture: Mixture) -> None:
        for s, spec in zip(self.species, mixture.species):
            s.check(spec)


@dataclass(frozen=True)
class ExchangeQuantities:
    """Parameters of the inter-species attractors ``M_12`` and ``M_21``.

    ``Lambda_kj == Theta_kj`` always, so the temperature ``T_kj`` of the
    attractor equals ``lam[k]``.
    """

    n: tuple[float, float]
    u: tuple[np.ndarray, np.ndarray]
    lam: tuple[float, float]

    @property
    def theta(self) -> tuple[float, float]:
        return self.lam

    @property
    def T(self) -> tuple[float, float]:
        return self.lam


@dataclass
class ValidationReport:
    mode: str
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def raise_if_failed(self) -> None:
        if self.violations:
            raise ParameterRegimeError("; ".join(self.violations))


def lambda_from_theta(spec: SpeciesSpec, T_t: float, T_r: float | None, theta: float | None) -> float:
    """Translational relaxation temperature from the internal-energy closure."""
    if spec.l == 0:
        lam = T_t
    else:
        lam = T_t + (spec.l / spec.d) * (T_r - theta)
    if not lam > 0:
        raise InvalidStateError(
            f"Lambda = {lam} <= 0: theta={theta} too large for stored energy (T_t={T_t}, T_r={T_r})"
        )
    return lam


def equilibrium_temperature(spec: SpeciesSpec, lam: float, theta: float | None) -> float:
    if spec.l == 0:
        return lam
    return (spec.d * lam + spec.l * theta) / (spec.d + spec.l)


def t_kj(spec: SpeciesSpec, lam_kj: float, theta_kj: float | None) -> float:
    return equilibrium_temperature(spec, lam_kj, theta_kj)


def internal_energy(spec: SpeciesSpec, s: SpeciesState) -> float:
    """``d*Lambda + l*Theta``, equal to ``d*T_t + l*T_r`` by the closure."""
    if spec.l == 0:
        return spec.d * s.T_t
    return spec.d * s.T_t + spec.l * s.T_r


def mixture_velocities(mp: MixtureParams, m1: float, m2: float, u1, u2) -> tuple[np.ndarray, np.ndarray]:
    u1 = np.atleast_1d(np.asarray(u1, dtype=float))
    u2 = np.atleast_1d(np.asarray(u2, dtype=float))
    if u1.shape != u2.shape:
        raise ValueError(f"velocity dimension mismatch: {u1.shape} vs {u2.shape}")
    u12 = mp.delta * u1 + (1.0 - mp.delta) * u2
    u21 = u2 - (m1 / m2) * mp.eps * (1.0 - mp.delta) * (u2 - u1)
    return u12, u21


def mixture_energy_params(mixture: Mixture, state: MomentState) -> tuple[float, float]:
    """``Lambda_12 = Theta_12`` and ``Lambda_21 = Theta_21`` from energy conservation."""
    mp = mixture.params
    (s1, s2), (st1, st2) = mixture.species, state.species
    d = mixture.d
    e1 = internal_energy(s1, st1)
    e2 = internal_energy(s2, st2)
    du2 = float(np.sum((st1.u - st2.u) ** 2))
    lam12 = (mp.alpha * e1 + (1 - mp.alpha) * e2 + mp.gamma * du2) / (d + s1.l)
    lam21 = (
        (mp.eps * s1.mass * (1 - mp.delta) - mp.eps * mp.gamma) * du2
        + (1 - mp.eps * (1 - mp.alpha)) * e2
        + mp.eps * (1 - mp.alpha) * e1
    ) / (d + s2.l)
    if not lam12 > 0:
        raise ParameterRegimeError(f"Lambda_12 = {lam12} <= 0 (check alpha)")
    if not lam21 > 0:
        raise ParameterRegimeError(
            f"Lambda_21 = {lam21} <= 0: requires 0 <= gamma <= m_1 (1 - delta)"
        )
    return lam12, lam21


def exchange_quantities(mixture: Mixture, state: MomentState) -> ExchangeQuantities:
    s1, s2 = mixture.species
    u12, u21 = mixture_velocities(mixture.params, s1.mass, s2.mass, state[0].u, state[1].u)
    lam12, lam21 = mixture_energy_params(mixture, state)
    return ExchangeQuantities(n=(state[0].n, state[1].n), u=(u12, u21), lam=(lam12, lam21))


def maxwellian_eval(n, u, lam, theta, m, v, eta=None, single_temperature: float | None = None):
    """Evaluate a Maxwellian at points ``v`` (shape ``(..., d)``) and ``eta`` (``(..., l)``).

    With ``single_temperature=T`` the variant with one temperature in both
    blocks is returned (``lam`` and ``theta`` are then ignored).
    """
    v = np.asarray(v, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if single_temperature is not None:
        lam = theta = single_temperature
    d = u.shape[0]
    if v.ndim == 0 or v.shape[-1] != d:
        v = v[..., None] if d == 1 else v
    out = n * (2 * math.pi * lam / m) ** (-d / 2) * np.exp(-m * np.sum((v - u) ** 2, axis=-1) / (2 * lam))
    if eta is not None:
        eta = np.asarray(eta, dtype=float)
        if eta.ndim == 0:
            eta = eta[..., None]
        l = eta.shape[-1]
        if l:
            out = out * (2 * math.pi * theta / m) ** (-l / 2) * np.exp(-m * np.sum(eta**2, axis=-1) / (2 * theta))
    return out


def energy_flux(mixture: Mixture, state: MomentState, xq: ExchangeQuantities | None = None) -> tuple[float, float]:
    """Energy exchanged towards species 1 and towards species 2 per unit time."""
    if xq is None:
        xq = exchange_quantities(mixture, state)
    n1, n2 = state[0].n, state[1].n
    out = []
    for k in (0, 1):
        spec, st = mixture.species[k], state[k]
        lam = st.lam(spec)
        work = spec.mass * float(np.dot(st.u, xq.u[k] - st.u))
        heat = spec.d * (xq.lam[k] - lam)
        if spec.l:
            heat += spec.l * (xq.lam[k] - st.theta)
        out.append(mixture.cross_rate(k) * n1 * n2 * (work + heat))
    return out[0], out[1]


def _close(a: float, b: float, rtol: float = 1e-12) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


def validate_params(mixture: Mixture, mode: str = "positivity") -> ValidationReport:
    """Check the free parameters against the positivity or H-theorem regime.

    Returns a report; nothing is raised.  Each violation names the inequality.
    """
    if mode not in ("positivity", "h_theorem"):
        raise ValueError(f"unknown mode {mode!r}")
    mp = mixture.params
    s1, s2 = mixture.species
    d, l1, l2 = mixture.d, s1.l, s2.l
    rep = ValidationReport(mode)
    if mp.delta > 1:
        rep.violations.append(f"δ ≤ 1 violated (δ={mp.delta})")
    if mp.gamma < 0:
        rep.violations.append(f"γ ≥ 0 violated (γ={mp.gamma})")
    upper = s1.mass * (1 - mp.delta)
    if mp.gamma > upper * (1 + 1e-12) + 1e-300:
        rep.violations.append(f"γ ≤ m_1(1-δ) violated (γ={mp.gamma}, bound={upper})")
    if mode == "positivity":
        return rep

    gamma_h = mp.eps / (1 + mp.eps) * s1.mass * (1 - mp.delta)
    if not _close(mp.gamma, gamma_h) and not (gamma_h == 0 and mp.gamma == 0):
        rep.violations.append(f"γ = ε/(1+ε) m_1 (1-δ) violated (γ={mp.gamma}, required={gamma_h})")
    delta_lo = max(1 / (1 + mp.eps), (1 + mp.eps * (1 - s1.mass / s2.mass)) / (1 + mp.eps))
    if mp.delta < delta_lo * (1 - 1e-12):
        rep.violations.append(f"δ ≥ {delta_lo} violated (δ={mp.delta})")
    alpha_lo = mp.eps * (l1 + d) / (2 * d + l1 + l2)
    if mp.alpha < alpha_lo * (1 - 1e-12):
        rep.violations.append(f"α ≥ ε(l_1+d)/(2d+l_1+l_2) = {alpha_lo} violated (α={mp.alpha})")
    ratio = s2.z_rot / s1.z_rot
    consistent = (d + l2) / (d + l1)
    if not _close(ratio, consistent):
        rep.violations.append(
            f"Z_2/Z_1 = (d+l_2)/(d+l_1) = {consistent} violated (Z_2/Z_1={ratio})"
        )
        literal = (d + l1) / (d + l2)
        if _close(ratio, literal):
            msg = (
                "Z_2/Z_1 = (d+l_1)/(d+l_2) does not make z species-independent; "
                "use Z_2 = Z_1 (d+l_2)/(d+l_1)"
            )
            rep.warnings.append(msg)
            warnings.warn(msg, ZRatioWarning, stacklevel=2)
    return rep


def equilibrium_state(mixture: Mixture, state: MomentState) -> tuple[np.ndarray, float]:
    """Common velocity and temperature fixed by total momentum and energy.

    The temperature assumes all eight temperature quantities coincide.
    """
    rho = [sp.mass * st.n for sp, st in zip(mixture.species, state)]
    u_inf = (rho[0] * state[0].u + rho[1] * state[1].u) / (rho[0] + rho[1])
    energy = 0.0
    dof = 0.0
    for sp, st, r in zip(mixture.species, state, rho):
        energy += 0.5 * r * float(np.sum(st.u**2)) + 0.5 * st.n * internal_energy(sp, st)
        dof += 0.5 * (sp.d + sp.l) * st.n
    energy -= 0.5 * (rho[0] + rho[1]) * float(np.sum(u_inf**2))
    return u_inf, energy / dof


def maxwell_state(mixture: Mixture, n: Sequence[float], u, T: float) -> MomentState:
    """Both species Maxwellian at a common velocity and temperature."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = []
    for sp, nk in zip(mixture.species, n):
        if sp.l:
            out.append(SpeciesState(nk, u.copy(), T, T, T))
        else:
            out.append(SpeciesState(nk, u.copy(), T))
    return MomentState(tuple(out))
