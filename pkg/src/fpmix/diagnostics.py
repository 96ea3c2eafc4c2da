"""Conserved totals, the mixture entropy and equilibrium checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .model import Mixture, MomentState, equilibrium_state, internal_energy

__all__ = [
    "Totals",
    "conserved_totals",
    "gaussian_entropy",
    "f_log_f",
    "entropy_H",
    "MonotonicityResult",
    "entropy_monotonicity_check",
    "equilibrium_distance",
    "DiagnosticsRecord",
    "make_record",
    "momentum_scale",
    "fit_decay_rate",
    "entropy_excess",
    "relative_entropy_density",
]

# cells below this fraction of max f contribute nothing to f ln f
LOG_FLOOR = 1e-300


class Totals(NamedTuple):
    mass: tuple[float, float]
    momentum: np.ndarray
    energy: float


def conserved_totals(mixture: Mixture, state: MomentState) -> Totals:
    mom = sum(sp.mass * st.n * st.u for sp, st in zip(mixture.species, state))
    energy = 0.0
    for sp, st in zip(mixture.species, state):
        energy += 0.5 * sp.mass * st.n * float(np.sum(st.u**2)) + 0.5 * st.n * internal_energy(sp, st)
    return Totals((state[0].n, state[1].n), np.asarray(mom, dtype=float), energy)


def momentum_scale(mixture: Mixture, state: MomentState) -> float:
    """Scale for relative momentum drift, ``sum m n (|u| + thermal speed)``."""
    return sum(
        sp.mass * st.n * (float(np.linalg.norm(st.u)) + math.sqrt(st.T_t / sp.mass))
        for sp, st in zip(mixture.species, state)
    )


def gaussian_entropy(n: float, lam: float, theta: float | None, m: float, d: int, l: int) -> float:
    """Closed form of the integral of ``M ln M`` for a Maxwellian."""
    s = n * (math.log(n) - 0.5 * d * math.log(2 * math.pi * math.e * lam / m))
    if l:
        s -= n * 0.5 * l * math.log(2 * math.pi * math.e * theta / m)
    return s


def f_log_f(values: np.ndarray, cell_volume: float) -> float:
    """Quadrature of ``f ln f`` with ``0 ln 0 = 0``."""
    f = np.asarray(values)
    cut = LOG_FLOOR * float(f.max())
    mask = f > cut
    fm = f[mask]
    return float(np.sum(fm * np.log(fm)) * cell_volume)


def entropy_H(mixture: Mixture, state: MomentState, flogf: Sequence[float]) -> tuple[float, list[float]]:
    """Total entropy and its four pieces ``[f1 ln f1, z M1 ln M1, f2 ln f2, z M2 ln M2]``.

    ``flogf`` holds the kinetic integrals of ``f_k ln f_k``; the Maxwellian
    part uses the closed form.
    """
    z = mixture.z_weight
    if not z > 0:
        raise ValueError(f"entropy weight z must be > 0, got {z}")
    pieces = []
    for sp, st, fl in zip(mixture.species, state, flogf):
        lam = st.lam(sp)
        pieces += [fl, z * gaussian_entropy(st.n, lam, st.theta, sp.mass, sp.d, sp.l)]
    return float(sum(pieces)), pieces


def _log_ratio(x: float, ref: float) -> float:
    return math.log1p((x - ref) / ref)


def entropy_excess(mixture: Mixture, state: MomentState, nongauss: Sequence[float], T_ref: float) -> float:
    """``H - H_ref`` without cancellation, ``H_ref`` being both species Maxwellian at ``T_ref``.

    ``nongauss[k]`` is the relative entropy of ``f_k`` to the Gaussian with its
    own moments (zero under a Gaussian closure).  Every temperature enters via
    ``log1p`` of its offset from ``T_ref``, so the result keeps full precision
    when ``H`` is near its minimum.
    """
    z = mixture.z_weight
    out = 0.0
    for sp, st, dk in zip(mixture.species, state, nongauss):
        lam = st.lam(sp)
        own = sp.d * _log_ratio(st.T_t, T_ref)
        att = sp.d * _log_ratio(lam, T_ref)
        if sp.l:
            own += sp.l * _log_ratio(st.T_r, T_ref)
            att += sp.l * _log_ratio(st.theta, T_ref)
        out += dk - 0.5 * st.n * (own + z * att)
    return out


def relative_entropy_density(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Pointwise ``f ln(f/g) - f + g``, non-negative and accurate when ``f ~ g``."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x = (f - g) / g
        near = g * ((1 + x) * np.log1p(x) - x)
        far = f * (np.log(f) - np.log(g)) - f + g
    # the log1p form only pays off near f = g; far from it, it can hit 0 * log(0)
    out = np.where(np.abs(x) < 0.5, near, far)
    out = np.where(f > 0, out, g)
    return np.where(g > 0, out, 0.0)


@dataclass
class MonotonicityResult:
    status: str  # "pass", "fail" or "n/a"
    worst: float = 0.0
    worst_index: int = -1
    reason: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "fail"


def entropy_monotonicity_check(H: Sequence[float], mixture: Mixture | None = None, mode: str = "h_theorem",
                               slack: float = 1e-10, excess: Sequence[float] | None = None) -> MonotonicityResult:
    """``H[i+1] <= H[i] + slack (1 + |H[i]|)`` for every consecutive pair.

    When ``excess`` (``H`` minus a constant, computed without cancellation)
    is given, its differences replace those of ``H``.  Outside the H-theorem
    regime the check is not applicable.
    """
    if mode != "h_theorem":
        return MonotonicityResult("n/a", reason="parameters not in h_theorem mode")
    if mixture is not None:
        from .model import validate_params

        rep = validate_params(mixture, "h_theorem")
        if not rep.ok:
            return MonotonicityResult("n/a", reason="; ".join(rep.violations))
    H = np.asarray(H, dtype=float)
    if H.size < 2:
        return MonotonicityResult("pass")
    dH = np.diff(H if excess is None else np.asarray(excess, dtype=float))
    over = dH - slack * (1 + np.abs(H[:-1]))
    i = int(np.argmax(over))
    return MonotonicityResult("fail" if over[i] > 0 else "pass", float(dH[i]), i)


def equilibrium_distance(mixture: Mixture, state: MomentState) -> float:
    """Max of the relative temperature spread and the scaled velocity gap.

    The spread is ``(max - min) / min`` over ``T_t, T_r, Lambda, Theta`` of
    both species (internal ones skipped for a monoatomic species).
    """
    temps = []
    for sp, st in zip(mixture.species, state):
        temps += [st.T_t, st.lam(sp)]
        if sp.l:
            temps += [st.T_r, st.theta]
    spread = (max(temps) - min(temps)) / min(temps)
    _, T_inf = equilibrium_state(mixture, state)
    m_min = min(sp.mass for sp in mixture.species)
    gap = float(np.linalg.norm(state[0].u - state[1].u)) / math.sqrt(T_inf / m_min)
    return max(spread, gap)


@dataclass
class DiagnosticsRecord:
    t: float
    state: MomentState
    mass: tuple[float, float]
    momentum: np.ndarray
    energy: float
    H: float = math.nan
    H_excess: float = math.nan
    entropy_pieces: list[float] = field(default_factory=list)
    mass_drift: float = 0.0
    momentum_drift: float = 0.0
    energy_drift: float = 0.0
    eq_distance: float = math.nan
    stderr: dict | None = None


def make_record(mixture: Mixture, t: float, state: MomentState, ref: Totals, p_scale: float,
                flogf: Sequence[float] | None = None, nongauss: Sequence[float] | None = None,
                T_ref: float | None = None) -> DiagnosticsRecord:
    tot = conserved_totals(mixture, state)
    rec = DiagnosticsRecord(t, state, tot.mass, tot.momentum, tot.energy)
    rec.mass_drift = max(abs(a - b) / b for a, b in zip(tot.mass, ref.mass))
    rec.momentum_drift = float(np.linalg.norm(tot.momentum - ref.momentum)) / p_scale
    rec.energy_drift = abs(tot.energy - ref.energy) / abs(ref.energy)
    rec.eq_distance = equilibrium_distance(mixture, state)
    if flogf is not None:
        rec.H, rec.entropy_pieces = entropy_H(mixture, state, flogf)
    if nongauss is not None and T_ref is not None:
        rec.H_excess = entropy_excess(mixture, state, nongauss, T_ref)
    return rec


def fit_decay_rate(t: np.ndarray, gap: np.ndarray, floor: float = 1e-8) -> float:
    """Least-squares exponential rate of ``gap(t)``; nan if the gap vanishes.

    Points below ``floor`` times the largest gap are dropped (rounding noise).
    """
    t = np.asarray(t, dtype=float)
    gap = np.asarray(gap, dtype=float)
    scale = np.max(np.abs(gap)) if gap.size else 0.0
    if scale == 0:
        return math.nan
    keep = np.abs(gap) > max(floor * scale, 1e-280)
    if keep.sum() < 3:
        return math.nan
    slope = np.polyfit(t[keep], np.log(np.abs(gap[keep])), 1)[0]
    return float(-slope)
