"""Figure rendering for experiment reports.

Figures are a convenience layer next to the delimited artifacts; the CSV and
JSON files remain the machine contract. All renderers save PNG files and
never open interactive windows.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["energy_figure", "margin_figure", "certify_figure",
           "representation_figure"]


def energy_figure(trace, path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    E = np.maximum(trace.energies, 1e-300)
    ax.semilogy(trace.times, E, "k-", lw=1.5, label="total")
    for key, style in (("memory", "C0--"), ("bending", "C1:"),
                       ("shear", "C2-.")):
        if key in trace.splits:
            ax.semilogy(trace.times, np.maximum(trace.splits[key], 1e-300),
                        style, lw=1.0, label=key)
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend(frameon=False, fontsize="small")
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def margin_figure(scan, path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(scan.lams, scan.margins, "k.-", ms=2.5, lw=0.6)
    ax.axhline(scan.min_margin, color="C3", lw=0.8, ls="--",
               label=f"min {scan.min_margin:.3g} at lam = {scan.argmin:.3g}")
    ax.set_xlabel("lambda")
    ax.set_ylabel("resolvent margin")
    ax.legend(frameon=False, fontsize="small")
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def certify_figure(verdict, path) -> None:
    fig, axes = plt.subplots(1, 3, figsize=(11.5, 3.6))
    idx = np.arange(len(verdict.levels))
    axes[0].semilogy(idx, verdict.scan_min_margins, "o-")
    axes[0].set_title("scan min margin")
    axes[1].semilogy(idx, verdict.memory_margins, "s-", color="C1")
    axes[1].set_title("memory-route margin")
    axes[2].semilogy(idx, [max(abs(a), 1e-16) for a in verdict.abscissae],
                     "d-", color="C2")
    axes[2].set_title("|spectral abscissa|")
    for ax in axes:
        ax.set_xlabel("refinement level")
        ax.set_xticks(idx)
        ax.grid(True, which="both", alpha=0.3)
    fig.suptitle(f"verdict: {verdict.verdict}")
    fig.tight_layout()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def representation_figure(rows, path) -> None:
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    J = [r[1] for r in rows]
    res = [r[3] for r in rows]
    ax.loglog(J, res, "o-", label="max residual")
    ax.loglog(J, [res[0] * J[0] / j for j in J], "k--", lw=0.8,
              label="first order")
    ax.set_xlabel("history nodes")
    ax.set_ylabel("representation residual")
    ax.legend(frameon=False, fontsize="small")
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
