"""PNG figures for a finished run (matplotlib, non-interactive backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .model import Mixture  # noqa: E402


def render_figures(mixture: Mixture, records, out_dir: str | Path, title: str = "") -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t = np.array([r.t for r in records])
    paths = []

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for k, sp in enumerate(mixture.species):
        ax.plot(t, [r.state[k].T_t for r in records], label=f"T_t species {k + 1}")
        ax.plot(t, [r.state[k].lam(sp) for r in records], "--", label=f"Lambda species {k + 1}")
        if sp.l:
            ax.plot(t, [r.state[k].T_r for r in records], label=f"T_r species {k + 1}")
            ax.plot(t, [r.state[k].theta for r in records], ":", label=f"Theta species {k + 1}")
    ax.set_xlabel("t")
    ax.set_ylabel("temperature")
    ax.set_title(title)
    ax.legend(fontsize="small", ncol=2)
    paths.append(_save(fig, out_dir / "temperatures.png"))

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for k in range(2):
        ax.plot(t, [r.state[k].u[0] for r in records], label=f"u species {k + 1} (first axis)")
    ax.set_xlabel("t")
    ax.set_ylabel("mean velocity")
    ax.legend(fontsize="small")
    paths.append(_save(fig, out_dir / "velocities.png"))

    H = np.array([r.H for r in records])
    if np.isfinite(H).all():
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.plot(t, H)
        ax.set_xlabel("t")
        ax.set_ylabel("H")
        paths.append(_save(fig, out_dir / "entropy.png"))

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.semilogy(t, np.maximum([r.eq_distance for r in records], 1e-300), label="equilibrium distance")
    for key in ("momentum_drift", "energy_drift"):
        vals = np.array([getattr(r, key) for r in records])
        if np.any(vals > 0):
            ax.semilogy(t[vals > 0], vals[vals > 0], label=key.replace("_", " "))
    ax.set_xlabel("t")
    ax.legend(fontsize="small")
    paths.append(_save(fig, out_dir / "residuals.png"))
    return paths


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path
