"""Hypothesis strategies for admissible mixtures and states."""
import numpy as np
from hypothesis import strategies as st

from fpmix.model import Mixture, MixtureParams, MomentState, SpeciesSpec, SpeciesState

pos = st.floats(0.2, 3.0)
unit = st.floats(0.0, 1.0)


@st.composite
def mixtures(draw, d=None, l1=None, l2=None, mode="positivity", strict=False):
    """``strict`` keeps alpha, delta < 1 so the two species stay coupled."""
    d = draw(st.integers(1, 3)) if d is None else d
    l1 = draw(st.integers(0, 3)) if l1 is None else l1
    l2 = draw(st.integers(0, 3)) if l2 is None else l2
    m1, m2 = draw(pos), draw(pos)
    eps = draw(st.floats(0.05, 1.0))
    z1 = draw(st.floats(0.5, 2.0))
    if mode == "h_theorem":
        lo = max(1 / (1 + eps), (1 + eps * (1 - m1 / m2)) / (1 + eps))
        delta = draw(st.floats(min(lo, 0.99), 0.99 if strict else 1.0))
        gamma = eps / (1 + eps) * m1 * (1 - delta)
        alpha_lo = eps * (l1 + d) / (2 * d + l1 + l2)
        alpha = draw(st.floats(alpha_lo, 0.99 if strict else 1.0))
        z2 = z1 * (d + l2) / (d + l1)
    else:
        delta = draw(unit)
        gamma = draw(unit) * m1 * (1 - delta)
        alpha = draw(unit)
        z2 = draw(st.floats(0.5, 2.0))
    species = (
        SpeciesSpec(m1, d=d, l=l1, c_self=draw(pos), z_rot=z1),
        SpeciesSpec(m2, d=d, l=l2, c_self=draw(pos), z_rot=z2),
    )
    return Mixture(species, MixtureParams(c_21=draw(pos), eps=eps, delta=delta, alpha=alpha, gamma=gamma))


@st.composite
def species_states(draw, spec):
    n = draw(pos)
    u = np.array(draw(st.lists(st.floats(-1.5, 1.5), min_size=spec.d, max_size=spec.d)))
    T_t = draw(pos)
    if not spec.l:
        return SpeciesState(n, u, T_t)
    T_r = draw(pos)
    # keep Lambda = T_t + (l/d)(T_r - theta) comfortably positive
    theta = draw(st.floats(0.05, 0.9)) * (T_r + spec.d * T_t / spec.l)
    return SpeciesState(n, u, T_t, T_r, theta)


@st.composite
def cases(draw, mode="positivity", **kw):
    mix = draw(mixtures(mode=mode, **kw))
    state = MomentState(tuple(draw(species_states(sp)) for sp in mix.species))
    return mix, state
