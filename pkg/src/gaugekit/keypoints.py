"""Dense-heatmap keypoint decoding and the matching training-style renderer.

Notch detectors hand over per-pixel probability maps; decoding collects the
pixels above 0.5 (strictly) and runs flat-kernel mean-shift on their indices
to one sub-pixel mode per notch. The renderer builds the same kind of map
from known centers so decode quality is testable without any model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSigma

DETECTION_THRESHOLD = 0.5
CONVERGENCE_SHIFT = 1e-3
MAX_ITERATIONS = 100


@dataclass(frozen=True)
class Heatmap:
    """Row-major grid of detection scores, all within [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("heatmap values must be a 2-D grid")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ValueError("heatmap values must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def render_gaussian_heatmap(size: tuple[int, int], centers, sigma: float) -> Heatmap:
    """Max-composed Gaussian blobs, one per center.

    Pixel (x, y) gets max_c exp(-|q - c|^2 / (2 sigma^2)); max rather than
    sum keeps overlapping blobs within [0, 1]. Centers must lie inside the
    grid.
    """
    if sigma <= 0 or not np.isfinite(sigma):
        raise InvalidSigma(f"sigma must be positive, got {sigma}")
    w, h = int(size[0]), int(size[1])
    if w <= 0 or h <= 0:
        raise ValueError("heatmap size must be positive")
    values = np.zeros((h, w))
    xs = np.arange(w)[None, :]
    ys = np.arange(h)[:, None]
    for center in centers:
        cx, cy = float(center[0]), float(center[1])
        if not (0.0 <= cx < w and 0.0 <= cy < h):
            raise ValueError(f"center ({cx}, {cy}) outside the heatmap")
        d2 = (xs - cx) ** 2 + (ys - cy) ** 2
        np.maximum(values, np.exp(-d2 / (2.0 * sigma * sigma)), out=values)
    return Heatmap(values)


def default_bandwidth(size: tuple[int, int]) -> float:
    """Window size used when the caller has no better prior: 5% of the short side."""
    return 0.05 * min(size)


def extract_keypoints_meanshift(heatmap: Heatmap, bandwidth: float) -> list[np.ndarray]:
    """Sub-pixel keypoints from a heatmap via flat-kernel mean-shift.

    Every pixel strictly above 0.5 seeds a shift toward the unweighted mean
    of the thresholded pixels within `bandwidth`; iteration stops once the
    largest shift drops below CONVERGENCE_SHIFT px (or after MAX_ITERATIONS).
    Converged modes closer than bandwidth/2 merge. Returns (x, y) modes
    sorted lexicographically; empty when nothing clears the threshold.
    """
    if bandwidth <= 0 or not np.isfinite(bandwidth):
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    rows, cols = np.nonzero(heatmap.values > DETECTION_THRESHOLD)
    if rows.size == 0:
        return []
    support = np.column_stack([cols, rows]).astype(float)

    modes = support.copy()
    bw2 = bandwidth * bandwidth
    for _ in range(MAX_ITERATIONS):
        d2 = ((modes[:, None, :] - support[None, :, :]) ** 2).sum(axis=2)
        window = d2 <= bw2
        counts = window.sum(axis=1)
        shifted = (window @ support) / counts[:, None]
        if float(np.abs(shifted - modes).max()) < CONVERGENCE_SHIFT:
            modes = shifted
            break
        modes = shifted

    # Deterministic merge: visit modes in lexicographic order, grouping
    # everything within half a bandwidth of the group seed.
    order = np.lexsort((modes[:, 1], modes[:, 0]))
    modes = modes[order]
    merge2 = (bandwidth / 2.0) ** 2
    taken = np.zeros(len(modes), dtype=bool)
    results = []
    for i in range(len(modes)):
        if taken[i]:
            continue
        group = ((modes - modes[i]) ** 2).sum(axis=1) <= merge2
        group &= ~taken
        taken |= group
        results.append(modes[group].mean(axis=0))
    results.sort(key=lambda p: (p[0], p[1]))
    return results
