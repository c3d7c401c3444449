"""Figure rendering for the report path.

Solve and verify write PNG figures next to the trace CSV: a residual
convergence curve, optionally overlaid with the proven geometric bound.
Batch output only; there is no interactive backend.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_convergence(trace, path, bound=None, title="feasibility residual") -> None:
    """Semilog residual curve; ``bound`` is an optional (c, q) pair."""
    ks = np.arange(trace.iterations_used + 1)
    res = np.asarray(trace.residual_max, float)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    positive = res > 0
    if np.any(positive):
        ax.semilogy(ks, np.where(positive, res, np.nan), "o-", ms=3, lw=1,
                    label=r"$\max_i d(x^k, C_i)$")
    else:
        ax.plot(ks, res, "o-", ms=3, lw=1, label=r"$\max_i d(x^k, C_i)$")
    if bound is not None:
        c, q = bound
        ax.semilogy(ks, c * q**ks, "--", lw=1, color="crimson", label=rf"$c\,q^k$, q={q:.4g}")
    if trace.step_norms.size:
        ax.semilogy(ks[1:], np.where(trace.step_norms > 0, trace.step_norms, np.nan),
                    ":", lw=1, color="gray", label=r"$\|x^{k+1}-x^k\|$")
    ax.set_xlabel("iteration k")
    ax.set_ylabel("residual")
    ax.set_title(f"{title} ({trace.mode} mode)")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_band(band_entries, path, title="residual band") -> None:
    """Scatter of checked inequality slacks per iteration index."""
    if not band_entries:
        return
    ks = np.array([e.k for e in band_entries])
    slacks = np.array([e.slack for e in band_entries])

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(ks, slacks, ".", ms=4, alpha=0.6)
    ax.axhline(0.0, color="crimson", lw=1)
    ax.set_xlabel("iteration k")
    ax.set_ylabel("bound slack (rhs - lhs)")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
