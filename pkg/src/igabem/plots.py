"""Figure rendering for the report path.

Figures are written straight to files (Agg backend); the CSV tables next to
them carry the same data for downstream processing.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def save_deformed_boundary(path, rows, exaggerate: float) -> None:
    """Original and deformed boundary polylines from the sample rows."""
    xs = [r[1] for r in rows]
    ys = [r[2] for r in rows]
    xd = [r[1] + exaggerate * r[3] for r in rows]
    yd = [r[2] + exaggerate * r[4] for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    ax.plot(xs + xs[:1], ys + ys[:1], "-", color="0.55", lw=1.2, label="undeformed")
    ax.plot(xd + xd[:1], yd + yd[:1], "-", color="C3", lw=1.4,
            label=f"deformed (x{exaggerate:g})")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_convergence(path, records) -> None:
    """Relative error against DOF count, one curve per method, log-log."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    methods = sorted({rec.method for rec in records})
    for i, method in enumerate(methods):
        recs = sorted((r for r in records if r.method == method), key=lambda r: r.dofs)
        ax.loglog(
            [r.dofs for r in recs],
            [max(r.rel_error, 1e-300) for r in recs],
            marker="os^v"[i % 4],
            label=method,
        )
    ax.set_xlabel("degrees of freedom")
    ax.set_ylabel("relative L2 error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
