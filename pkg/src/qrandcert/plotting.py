"""Rendering of sweep results to SVG line charts.

Uses the Agg backend so no display is required.  The hash salt and the
stripped date metadata keep the emitted SVG stable across reruns.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_SERIES = (
    ("hmin_tomo", "tomographic", "tab:green", "o"),
    ("hmin_1sdi", "one-sided", "tab:orange", "s"),
    ("hmin_di", "device-independent", "tab:blue", "^"),
)


def _new_axes():
    plt.rcParams["svg.hashsalt"] = "qrandcert"
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_xlabel("visibility V")
    ax.set_ylabel(r"certified $H_{\min}$ [bits]")
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_sweep(rows, path):
    """Min-entropy versus visibility, one curve per characterization level."""
    fig, ax = _new_axes()
    for attr, label, color, marker in _SERIES:
        pts = [(r.V, getattr(r, attr)) for r in rows if getattr(r, attr) is not None]
        if not pts:
            continue
        xs, ys = zip(*pts)
        ax.plot(xs, ys, color=color, marker=marker, markersize=3.5,
                linewidth=1.2, label=label)
    ax.legend(loc="upper left")
    _save(fig, path)


def render_functional_sweep(rows, path, label="functional"):
    """Min-entropy versus visibility certified from a Bell value alone."""
    fig, ax = _new_axes()
    pts = [(r.V, r.hmin_di) for r in rows if r.hmin_di is not None]
    if pts:
        xs, ys = zip(*pts)
        ax.plot(xs, ys, color="tab:red", marker="d", markersize=3.5,
                linewidth=1.2, label=label)
    ax.legend(loc="upper left")
    _save(fig, path)
