"""SVG output for sweeps and sparsity maps (matplotlib, Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

AXIS_LABELS = {"snr_db": "SNR (dB)", "t_samples": "Number of sampling points T"}
# stable element ids and no timestamp, so reruns produce identical files
matplotlib.rcParams["svg.hashsalt"] = "nfupa"
SVG_META = {"Date": None}

MARKERS = {"2d-pcsbl": "o", "pcsbl": "s", "bomp": "^", "polar-omp": "d"}


def nmse_chart(summary, axis: str, path: str | Path) -> Path:
    """One NMSE polyline per estimator against ``axis`` (``snr_db`` or ``t_samples``)."""
    if axis not in AXIS_LABELS:
        raise ValueError(f"axis must be one of {sorted(AXIS_LABELS)}")
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for name in dict.fromkeys(p.estimator for p in summary):
        pts = sorted((getattr(p, axis), p.mean_nmse_db) for p in summary if p.estimator == name)
        x, y = zip(*pts)
        ax.plot(x, y, marker=MARKERS.get(name, "x"), label=name)
    ax.set_xlabel(AXIS_LABELS[axis])
    ax.set_ylabel("NMSE (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_META)
    plt.close(fig)
    return Path(path)


def sparsity_heatmap(sigma: np.ndarray, path: str | Path, block_size: int | None = None) -> Path:
    """Heatmap of ``|Sigma|`` with optional block-grid overlay."""
    mag = np.abs(sigma)
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    im = ax.imshow(mag, origin="lower", aspect="auto", cmap="viridis", interpolation="nearest")
    if block_size:
        for k in range(block_size, mag.shape[0], block_size):
            ax.axhline(k - 0.5, color="w", lw=0.4, alpha=0.5)
        for k in range(block_size, mag.shape[1], block_size):
            ax.axvline(k - 0.5, color="w", lw=0.4, alpha=0.5)
    ax.set_xlabel("vertical-axis index")
    ax.set_ylabel("horizontal-axis index")
    fig.colorbar(im, ax=ax, label="|coefficient|")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_META)
    plt.close(fig)
    return Path(path)
