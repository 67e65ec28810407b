"""Figure rendering for sweep and convergence records.

Renders alongside the delimited output: TV-rise curves on a log10 axis
against lambda, and error-versus-dt convergence lines with their fitted
slopes.  Import is deferred and the Agg backend forced so headless runs
never touch a display.
"""

import math

from .harness import ConvergenceRecord, SweepRecord, _PLOT_FLOOR

__all__ = ["render_sweeps", "render_convergence"]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def render_sweeps(records, path, threshold=1e-12, title=None):
    """Plot log10 of the worst stage TV rise against lambda, one curve per
    sweep record, with the observation threshold marked."""
    if isinstance(records, SweepRecord):
        records = [records]
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    markers = ["o", "*", "s", "d", "^", "v", "<", ">"]
    for rec, marker in zip(records, markers * (len(records) // 8 + 1)):
        ys = [math.log10(max(r, _PLOT_FLOOR)) for r in rec.rises]
        label = f"{rec.method} (a={rec.a:g})"
        ax.plot(rec.lambdas, ys, marker=marker, ms=4, lw=1, label=label)
    ax.axhline(math.log10(threshold), color="0.4", lw=0.8, ls="--")
    ax.set_xlabel(r"$\lambda = \Delta t/\Delta x$")
    ax.set_ylabel(r"$\log_{10}$ max TV rise per stage")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_convergence(records, path, title=None):
    """Log-log error plot with the fitted slope in the legend."""
    if isinstance(records, ConvergenceRecord):
        records = [records]
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for rec in records:
        ax.loglog(
            rec.dts, rec.errors, "o-", ms=4, lw=1,
            label=f"{rec.method} (slope {rec.slope:.2f})",
        )
    ax.set_xlabel(r"$\Delta t$")
    ax.set_ylabel("max-norm error at final time")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
