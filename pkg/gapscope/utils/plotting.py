"""SVG figures for scaling series."""
import logging
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from gapscope.services.asymptotics import ExponentFit, ScalingSeries  # noqa: E402

logger = logging.getLogger(__name__)

# fixed ids and no timestamp, so reruns give identical files
matplotlib.rcParams["svg.hashsalt"] = "gapscope"
SVG_METADATA = {"Date": None}


def plot_series(
    path: str,
    series: Sequence[ScalingSeries],
    reference_level: Optional[float] = None,
    reference_label: str = "",
    fit: Optional[ExponentFit] = None,
    title: str = "",
) -> None:
    """Log-log polyline per series, with an optional horizontal reference and fitted line.

    Non-positive values cannot be drawn on log axes and are left out.
    """
    fig, ax = plt.subplots(figsize=(7, 5))
    for item in series:
        sizes, values = item.sizes, item.values
        keep = values > 0
        if not np.any(keep):
            logger.warning(f"series '{item.spec_family}' has no positive values to plot")
            continue
        ax.loglog(sizes[keep], values[keep], marker="o", markersize=3, label=f"{item.spec_family}")

    if reference_level is not None:
        ax.axhline(reference_level, color="gray", linestyle="--", linewidth=1, label=reference_label)

    if fit is not None:
        n = np.geomspace(fit.window[0], fit.window[1], 50)
        ax.loglog(
            n,
            fit.prefactor * n ** (-fit.exponent),
            color="black",
            linestyle=":",
            label=f"fit N^-{fit.exponent:.3f}",
        )

    ax.set_xlabel("N = 2k + 1")
    if series:
        ax.set_ylabel(series[0].quantity.value)
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    logger.info(f"Wrote plot {path}")
