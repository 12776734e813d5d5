"""Figure rendering for the curve-producing commands.

Each report is a single PNG written next to the delimited output file; the
core library stays plot-free and all matplotlib use is confined here.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .table import ResultTable


def _axes(title, xlabel, ylabel):
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=130)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3, linewidth=0.5)
    return fig, ax


def _column(table: ResultTable, name: str) -> np.ndarray:
    idx = table.columns.index(name)
    return np.array([row[idx] for row in table.rows], dtype=float)


def render(command: str, table: ResultTable, png_path: str) -> bool:
    """Render the standard figure for `command`; returns False when the
    command has no graphical report (e.g. verify)."""
    if command == "density":
        fig, ax = _axes("microscopic spectral density", r"$\zeta$", r"$\rho(\zeta)$")
        zeta = _column(table, "zeta")
        for name in table.columns[1:]:
            ax.plot(zeta, _column(table, name), label=name, linewidth=1.2)
        ax.legend(fontsize=8)
    elif command == "phase":
        fig, ax = _axes("saddle-point phase analysis", table.columns[0], "value")
        x = _column(table, table.columns[0])
        ax.plot(x, _column(table, "t_c"), label="t_c", linewidth=1.2)
        ax.plot(x, _column(table, "xi"), label="condensate", linewidth=1.2)
        ax.axhline(1.0, color="gray", linewidth=0.8, linestyle="--")
        ax.legend(fontsize=8)
    elif command == "mc":
        fig, ax = _axes("Monte Carlo spectral density", "bin", "density")
        lo, hi = _column(table, "bin_lo"), _column(table, "bin_hi")
        mid = 0.5 * (lo + hi)
        ax.errorbar(mid, _column(table, "density"), yerr=_column(table, "stderr"),
                    fmt=".", markersize=3, linewidth=0.8, capsize=2, label="sampled")
        if "analytic" in table.columns:
            ax.plot(mid, _column(table, "analytic"), "-", linewidth=1.2,
                    color="crimson", label="analytic")
        ax.legend(fontsize=8)
    elif command == "converge":
        fig, ax = _axes("finite-N convergence to the limiting density", "N", "sup-norm error")
        ax.loglog(_column(table, "N"), _column(table, "sup_norm_error"), "o-")
    elif command == "correlate":
        fig, ax = _axes("correlation function", "row", table.columns[-1])
        ax.plot(range(len(table.rows)), _column(table, table.columns[-1]), "o-")
    elif command == "kernel-eval":
        fig, ax = _axes("kernel values", "row", table.columns[2])
        for name in table.columns[2:]:
            ax.plot(range(len(table.rows)), _column(table, name), "o-", label=name)
        ax.legend(fontsize=8)
    else:
        return False
    fig.tight_layout()
    fig.savefig(png_path)
    plt.close(fig)
    return True
