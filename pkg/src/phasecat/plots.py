"""Figure rendering for the report paths.

Uses the object-oriented matplotlib API with the Agg canvas so no backend
or global state is touched; every report command can drop a PNG next to
its CSV/JSON output.  PNG metadata is stripped to keep repeated runs
comparable.
"""

from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

_SAVE_KW = {"dpi": 130, "metadata": {"Software": None}}


def _new_fig(nrows=1, ncols=1, height=3.2):
    fig = Figure(figsize=(4.2 * ncols, height * nrows), constrained_layout=True)
    FigureCanvasAgg(fig)
    axes = fig.subplots(nrows, ncols)
    return fig, axes


def save_report_figure(report, path, title) -> None:
    """Norm rows across the family order: invariant norms vs the gradient sup."""
    ns = [r.n for r in report.rows]
    fig, (ax1, ax2) = _new_fig(ncols=2)
    ax1.plot(ns, [r.norms.l2 for r in report.rows], "o-", label="L2")
    ax1.plot(ns, [r.norms.h1_seminorm for r in report.rows], "s-", label="H1 seminorm")
    ax1.plot(ns, [r.norms.sup for r in report.rows], "^-", label="sup")
    ax1.set_xscale("log", base=2)
    ax1.set_xlabel("n")
    ax1.legend(fontsize=8)
    ax1.set_title(f"{title}: norms")
    ax2.plot(ns, [r.norms.sup_grad for r in report.rows], "o-", color="crimson")
    ax2.set_xscale("log", base=2)
    ax2.set_xlabel("n")
    ax2.set_title(f"sup |f'|  (verdict: {report.verdict})")
    fig.savefig(path, **_SAVE_KW)


def save_members_figure(members, path) -> None:
    """Overlay of family members (x, values) tuples keyed by n."""
    fig, ax = _new_fig(height=3.4)
    for n, x, vals in members:
        ax.plot(x, np.real(vals), lw=0.9, label=f"n={n}")
    ax.set_xlabel("x")
    ax.legend(fontsize=8, ncols=2)
    ax.set_title("family members")
    fig.savefig(path, **_SAVE_KW)


def save_scattering_figure(sd, path) -> None:
    k = np.asarray(sd.k_grid)
    order = np.argsort(k)
    fig, (ax1, ax2) = _new_fig(ncols=2)
    ax1.plot(k[order], np.abs(sd.s11)[order], label="|s11|")
    ax1.plot(k[order], np.abs(sd.s12)[order], label="|s12|")
    ax1.set_xlabel("k")
    ax1.legend(fontsize=8)
    ax1.set_title("moduli")
    ax2.plot(k[order], np.angle(sd.s11)[order], label="arg s11")
    ax2.set_xlabel("k")
    ax2.legend(fontsize=8)
    ax2.set_title(f"{len(sd.bound_states)} bound state(s)")
    fig.savefig(path, **_SAVE_KW)


def save_potential_figure(x, q_values, path, title="potential") -> None:
    fig, ax = _new_fig(height=3.0)
    ax.plot(x, np.real(q_values), color="teal")
    ax.set_xlabel("x")
    ax.set_ylabel("q")
    ax.set_title(title)
    fig.savefig(path, **_SAVE_KW)


def save_phase_figure(ps, path) -> None:
    k = np.asarray(ps.k_grid)
    order = np.argsort(k)
    fig, (ax1, ax2) = _new_fig(ncols=2)
    ax1.plot(k[order], ps.phi[order], color="indigo")
    ax1.set_xlabel("k")
    ax1.set_title(f"phase (winding {ps.winding})")
    good = ps.sin_phi_mask[order]
    ax2.plot(k[order][good], ps.u[order][good], ".", ms=2.5, label="U")
    ax2.plot(k[order][good], ps.v[order][good], ".", ms=2.5, label="V")
    ax2.set_xlabel("k")
    ax2.legend(fontsize=8)
    ax2.set_title(f"recovered transform ({np.count_nonzero(~good)} masked)")
    fig.savefig(path, **_SAVE_KW)
