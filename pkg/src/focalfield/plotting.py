"""Static SVG line plots of sweep results."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_SVG_META = {"Date": None, "Creator": "focalfield"}


def _save(fig, path) -> Path:
    path = Path(path)
    with matplotlib.rc_context({"svg.hashsalt": "focalfield", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def plot_temperature(result, path, measured: float | None = None):
    """Extinction versus temperature (shown in microkelvin) with the trap band."""
    t_uK = result.x * 1e6
    eps = result.epsilon
    lo = [r[2] for r in result.records]
    hi = [r[3] for r in result.records]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t_uK, eps, color="C0", label="thermal average")
    ax.plot(t_uK, lo, color="C0", linestyle=":", label="trap-frequency band")
    ax.plot(t_uK, hi, color="C0", linestyle=":")
    if measured is not None:
        ax.axhline(measured, color="C3", linestyle="--", label=f"measured {measured:g}")
    ax.set_xlabel("temperature (uK)")
    ax.set_ylabel("extinction")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def plot_focusing(results, path, points=None):
    """Extinction versus focusing, one curve (with band) per temperature."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for n, res in enumerate(results):
        color = f"C{n}"
        T = res.parameters.get("temperature_K", 0.0)
        ax.plot(res.x, res.epsilon, color=color, label=f"T = {T * 1e6:g} uK")
        if T > 0:
            ax.plot(res.x, [r[2] for r in res.records], color=color, linestyle=":")
            ax.plot(res.x, [r[3] for r in res.records], color=color, linestyle=":")
    for p in points or []:
        ax.errorbar([p["u"]], [p["extinction"]], yerr=[p["extinction_uncertainty"]], fmt="o",
                    color="k")
    ax.set_xlabel("focusing parameter u")
    ax.set_ylabel("extinction")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)
