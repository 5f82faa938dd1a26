"""Figure rendering for the report path.

Every CLI command that writes delimited output can also render a PNG
next to it; figures are derived from the same in-memory results, never
re-read from disk.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _new_axes(n_rows, n_cols, width=11.0, height=7.0):
    fig, axes = plt.subplots(n_rows, n_cols, figsize=(width, height), dpi=130)
    return fig, np.atleast_1d(axes).ravel()


def render_trace_figure(trace, path, support_bound=None, title=""):
    """Four panels: energies, max|u_t|, velocity integral, support."""
    fig, ax = _new_axes(2, 2)
    t = trace.t

    ax[0].plot(t, trace.E0, "-", lw=1.4, label="E0")
    ax[0].plot(t, trace.E1, "--", lw=1.0, label="E1")
    ax[0].set_xlabel("t")
    ax[0].set_ylabel("energy")
    ax[0].legend(fontsize=8)

    ax[1].semilogy(t, np.maximum(trace.max_abs_v, 1e-300), "-", lw=1.2)
    ax[1].set_xlabel("t")
    ax[1].set_ylabel("max |u_t|")

    ax[2].plot(t, trace.W, "-", lw=1.2)
    ax[2].set_xlabel("t")
    ax[2].set_ylabel("velocity integral W")

    ax[3].plot(t, trace.support_radius, "-", lw=1.2, label="support radius")
    if support_bound is not None:
        ax[3].plot(
            t,
            [support_bound(ti) for ti in t],
            "k--",
            lw=1.0,
            label="A(t)+R bound",
        )
    ax[3].set_xlabel("t")
    ax[3].set_ylabel("radius")
    ax[3].legend(fontsize=8)

    for a in ax:
        a.grid(True, alpha=0.3)
    if title:
        fig.suptitle(title, fontsize=11)
    fig.tight_layout()
    fig.savefig(Path(path), bbox_inches="tight")
    plt.close(fig)


def render_sweep_figure(sweep, path, fit=None, title=""):
    """Lifespan against 1/epsilon on log-log axes with the fitted line."""
    fig, ax = _new_axes(1, 1, width=6.5, height=4.5)
    ax = ax[0]
    live = [pt for pt in sweep.points if not pt.censored]
    dead = [pt for pt in sweep.points if pt.censored]
    if live:
        x = np.array([1.0 / pt.epsilon for pt in live])
        y = np.array([pt.T for pt in live])
        ax.loglog(x, y, "o", ms=6, label="blow-up points")
        if fit is not None and fit.model == "power_law":
            xs = np.geomspace(x.min(), x.max(), 64)
            ax.loglog(
                xs,
                np.exp(fit.intercept) * xs**fit.slope,
                "-",
                lw=1.2,
                label=f"slope {fit.slope:.3f}",
            )
    if dead:
        ax.loglog(
            [1.0 / pt.epsilon for pt in dead],
            [pt.T for pt in dead],
            "x",
            ms=7,
            label="censored (survived)",
        )
    ax.set_xlabel("1 / epsilon")
    ax.set_ylabel("lifespan T")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(Path(path), bbox_inches="tight")
    plt.close(fig)


def render_comparison_figure(comparison, sweep, path, title=""):
    """Predicted-vs-fitted exponents plus compensated-ratio spreads."""
    fig, ax = _new_axes(1, 2, width=10.0, height=4.2)

    labels, predicted, fitted = [], [], []
    for c in comparison.checks:
        if c.predicted is not None and c.fitted is not None:
            labels.append(c.law)
            predicted.append(c.predicted)
            fitted.append(c.fitted)
    if labels:
        pos = np.arange(len(labels))
        ax[0].bar(pos - 0.17, predicted, width=0.34, label="predicted")
        ax[0].bar(pos + 0.17, fitted, width=0.34, label="fitted")
        ax[0].set_xticks(pos)
        ax[0].set_xticklabels(labels, rotation=20, ha="right", fontsize=7)
        ax[0].set_ylabel("exponent")
        ax[0].legend(fontsize=8)
    else:
        ax[0].text(0.5, 0.5, "no exponent checks", ha="center", va="center")
    ax[0].grid(True, alpha=0.3)

    live = [pt for pt in sweep.points if not pt.censored]
    drew = False
    for c in comparison.checks:
        comp = c.details.get("compensated") or c.details.get("ratios")
        if comp and live and len(comp) == len(live):
            eps = [pt.epsilon for pt in live]
            ax[1].semilogx(eps, comp, "o-", ms=5, lw=1.0, label=c.law)
            drew = True
    if drew:
        ax[1].set_xlabel("epsilon")
        ax[1].set_ylabel("compensated ratio")
        ax[1].legend(fontsize=8)
    else:
        ax[1].text(0.5, 0.5, "no ratio checks", ha="center", va="center")
    ax[1].grid(True, which="both", alpha=0.3)

    verdict = "PASS" if comparison.overall_pass else "FAIL"
    fig.suptitle(title or f"scaling comparison: {verdict}", fontsize=11)
    fig.tight_layout()
    fig.savefig(Path(path), bbox_inches="tight")
    plt.close(fig)


def render_oracle_figure(t, W, path, blowup_time=None, title=""):
    fig, ax = _new_axes(1, 1, width=6.5, height=4.2)
    ax = ax[0]
    w = np.array(W, dtype=float)
    finite = np.isfinite(w) & (w > 0)
    ax.semilogy(np.array(t)[finite], w[finite], "-", lw=1.2)
    if blowup_time is not None:
        ax.axvline(blowup_time, color="r", ls="--", lw=1.0,
                   label=f"blow-up t = {blowup_time:.6g}")
        ax.legend(fontsize=8)
    ax.set_xlabel("t")
    ax.set_ylabel("W")
    ax.grid(True, which="both", alpha=0.3)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(Path(path), bbox_inches="tight")
    plt.close(fig)
