"""Figure rendering for the report path: SVG files next to the CSVs.

Figures are a convenience view of the delimited output, rendered with
matplotlib as 800x600 SVG.  The SVG hash salt is pinned and no date
metadata is embedded, so reruns produce stable files.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .engine import IBOKind, SweepResult  # noqa: E402
from .pathologies import DivergenceRow  # noqa: E402

plt.rcParams["svg.hashsalt"] = "ibolab"

LN2 = math.log(2.0)


def _scale(values, units: str):
    return [v / LN2 for v in values] if units == "bits" else list(values)


def _save(fig, path: str) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def information_plane_figure(result: SweepResult, units: str, path: str) -> None:
    """Scatter of the sweep in the information plane, one labeled point per nu.

    x is the regularized quantity I2 and y the target I1 of the objective
    family, so the frontier reads left to right as the multiplier grows.
    """
    rows = result.rows
    i_p = [r.I_t_xP for r in rows]
    i_f = [r.I_t_second for r in rows]
    if result.kind is IBOKind.IBP:
        xs, ys = i_f, i_p
        xlabel, ylabel = "I(t;xF)", "I(t;xP)"
    elif result.kind is IBOKind.PIBP:
        xs, ys = i_p, i_f
        xlabel, ylabel = "I(t;xP)", "I(t;xF)"
    else:
        xs = i_p
        ys = [p - f for p, f in zip(i_p, i_f)]
        xlabel, ylabel = "I(t;xP)", "I(t;xP|xF)"
    xs, ys = _scale(xs, units), _scale(ys, units)
    fig, ax = plt.subplots(figsize=(800 / 72, 600 / 72))
    ax.plot(xs, ys, "o-", color="tab:blue")
    for r, x, y in zip(rows, xs, ys):
        ax.annotate(f"{r.nu:g}", (x, y), textcoords="offset points", xytext=(5, 5), fontsize=8)
    ax.set_xlabel(f"{xlabel} [{units}]")
    ax.set_ylabel(f"{ylabel} [{units}]")
    ax.set_title(f"{result.kind.value} information plane")
    ax.grid(True, alpha=0.3)
    _save(fig, path)


def divergence_figure(rows: list[DivergenceRow], units: str, path: str) -> None:
    """Quantized self-information against bin count on a log-2 axis."""
    from .pathologies import divergence_log_slope

    ks = [r.k for r in rows]
    i_vals = _scale([r.I for r in rows], units)
    h_vals = _scale([r.H_X for r in rows], units)
    fig, ax = plt.subplots(figsize=(800 / 72, 600 / 72))
    ax.plot(ks, i_vals, "o-", color="tab:red", label="I(X_k; f(X)_k)")
    ax.plot(ks, h_vals, "s--", color="tab:gray", label="H(X_k)")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("bins k")
    ax.set_ylabel(f"information [{units}]")
    slope = divergence_log_slope(rows) if len(rows) >= 2 else float("nan")
    ax.set_title(f"quantization refinement (slope vs ln k: {slope:.4f} nats)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    _save(fig, path)
