"""Interference grids, masks, granularity-level labels, and heatmap rendering.

The physics lives on a 64×64 grid of cell centers. Co-channel aggregation is
done in the linear (mW) domain: only bands carrying two or more transmitters
contribute. Labels derive from the min-max normalized grid:

* mask: cell positive iff its normalized value exceeds the 75th-percentile
  (linear-interpolation quantile over all 4096 cells), giving ~25% positives;
* severity: low / moderate / high from the positive fraction;
* hottest quadrant: argmax of per-quadrant means, ties NW>NE>SW>SE;
* 16×16 mask: 4×4 block mean >= 0.5.

Rendering is visualization only. The grid is converted to dBm (zero cells
floored at -200 dBm), min-max normalized in the dBm domain, bilinearly
upsampled 64→448, and mapped through a five-anchor blue→red colormap. Labels
never depend on the rendered image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .propagation import received_power
from .scenarios import TransmitterSet

GRID_RESOLUTION = 64
MASK_GT_RESOLUTION = 16
RENDER_RESOLUTION = 448
DBM_FLOOR = -200.0

QUADRANT_ORDER = ("NW", "NE", "SW", "SE")

SEVERITY_LEVELS = ("low", "moderate", "high")
SEVERITY_LOW_BELOW = 0.15
SEVERITY_HIGH_FROM = 0.35

# value -> RGB anchors, linearly interpolated per channel
DEFAULT_COLORMAP = (
    (0.00, (0, 0, 255)),
    (0.25, (0, 255, 255)),
    (0.50, (0, 255, 0)),
    (0.75, (255, 255, 0)),
    (1.00, (255, 0, 0)),
)

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


@dataclass(frozen=True)
class InterferenceGrid:
    """Per-cell aggregate co-channel interference in mW (linear domain)."""

    values: np.ndarray
    cell_size_km: float


@dataclass(frozen=True)
class GroundTruthLabels:
    positive_fraction: float
    severity: str
    hottest_quadrant: str
    quadrant_means: tuple[float, float, float, float]
    mask64: np.ndarray
    mask16: np.ndarray
    severity_mode: str = "quantile"


def cell_centers(area_km: float, resolution: int = GRID_RESOLUTION):
    """Meshgrid of cell-center coordinates; row 0 = north, col 0 = west."""
    cell = area_km / resolution
    coords = (np.arange(resolution) + 0.5) * cell
    x = np.broadcast_to(coords[None, :], (resolution, resolution))
    y = np.broadcast_to(coords[:, None], (resolution, resolution))
    return x, y


def total_interference_grid(
    transmitter_set: TransmitterSet, resolution: int = GRID_RESOLUTION
) -> InterferenceGrid:
    """Aggregate interference over all shared bands, in mW per cell.

    A band contributes only when at least two transmitters occupy it; cells
    covered solely by unshared bands stay exactly zero.
    """
    if not transmitter_set.transmitters:
        raise ValueError("transmitter set is empty")
    x, y = cell_centers(transmitter_set.area_km, resolution)
    total = np.zeros((resolution, resolution), dtype=float)
    for band, members in transmitter_set.by_band().items():
        if len(members) < 2:
            continue
        for tx in members:
            total += 10.0 ** (received_power(tx, (x, y)) / 10.0)
    return InterferenceGrid(values=total, cell_size_km=transmitter_set.area_km / resolution)


def normalize(values: np.ndarray) -> np.ndarray:
    """Min-max normalize to [0, 1]; a constant grid maps to all zeros."""
    vmin = values.min()
    span = values.max() - vmin
    if span == 0:
        return np.zeros_like(values, dtype=float)
    return (values - vmin) / span


def interference_mask(normalized: np.ndarray) -> np.ndarray:
    """Boolean mask of cells strictly above the 75th-percentile value."""
    # mask bits are part of the reproducibility contract, so the quantile
    # definition (linear interpolation between order statistics) is pinned
    q75 = np.quantile(normalized, 0.75, method="linear")
    return normalized > q75


def positive_fraction(mask: np.ndarray) -> float:
    return float(np.asarray(mask, dtype=float).mean())


def severity_from_fraction(rho: float) -> str:
    if rho < SEVERITY_LOW_BELOW:
        return "low"
    if rho < SEVERITY_HIGH_FROM:
        return "moderate"
    return "high"


def severity_label(mask: np.ndarray) -> str:
    return severity_from_fraction(positive_fraction(mask))


def quadrant_means(values: np.ndarray) -> np.ndarray:
    """Means over NW, NE, SW, SE quadrants (image orientation)."""
    n = values.shape[0]
    if values.shape != (n, n) or n % 2:
        raise ValueError("quadrant analysis needs a square grid with even side")
    half = n // 2
    return np.array(
        [
            values[:half, :half].mean(),
            values[:half, half:].mean(),
            values[half:, :half].mean(),
            values[half:, half:].mean(),
        ]
    )


def hottest_quadrant(values: np.ndarray) -> str:
    """Quadrant with the highest mean; argmax order breaks ties NW>NE>SW>SE."""
    return QUADRANT_ORDER[int(np.argmax(quadrant_means(values)))]


def downsample_mask(mask64: np.ndarray) -> np.ndarray:
    """16×16 mask: each 4×4 block positive iff its mean is >= 0.5."""
    if mask64.shape != (GRID_RESOLUTION, GRID_RESOLUTION):
        raise ValueError(f"expected {GRID_RESOLUTION}x{GRID_RESOLUTION} mask")
    block = GRID_RESOLUTION // MASK_GT_RESOLUTION
    means = (
        mask64.astype(float)
        .reshape(MASK_GT_RESOLUTION, block, MASK_GT_RESOLUTION, block)
        .mean(axis=(1, 3))
    )
    return means >= 0.5


def connected_hotspots(mask: np.ndarray) -> tuple[int, tuple[tuple[float, float], ...]]:
    """4-connected components of the positive mask with their centroids.

    Centroids are (row, col) means in cell coordinates, ordered by first
    appearance in raster scan order.
    """
    labeled, count = ndimage.label(mask, structure=_FOUR_CONNECTED)
    if count == 0:
        return 0, ()
    centroids = ndimage.center_of_mass(mask, labeled, range(1, count + 1))
    return int(count), tuple((float(r), float(c)) for r, c in centroids)


def to_dbm(values_mw: np.ndarray, floor_dbm: float = DBM_FLOOR) -> np.ndarray:
    """mW -> dBm with zero (and anything below the floor) clamped to the floor."""
    out = np.full(values_mw.shape, floor_dbm, dtype=float)
    pos = values_mw > 0
    out[pos] = 10.0 * np.log10(values_mw[pos])
    return np.maximum(out, floor_dbm)


def ground_truth_labels(
    grid: InterferenceGrid, *, absolute_threshold_dbm: float | None = None
) -> GroundTruthLabels:
    """Derive all granularity-level labels from one interference grid.

    With ``absolute_threshold_dbm`` set, the severity fraction counts cells
    above that fixed dBm level instead of the per-sample quantile; the 64/16
    masks (localization ground truth) always stay quantile-based.
    """
    normalized = normalize(grid.values)
    mask64 = interference_mask(normalized)
    if absolute_threshold_dbm is None:
        rho = positive_fraction(mask64)
        mode = "quantile"
    else:
        rho = float((to_dbm(grid.values) > absolute_threshold_dbm).mean())
        mode = "absolute"
    return GroundTruthLabels(
        positive_fraction=rho,
        severity=severity_from_fraction(rho),
        hottest_quadrant=hottest_quadrant(normalized),
        quadrant_means=tuple(float(v) for v in quadrant_means(normalized)),
        mask64=mask64,
        mask16=downsample_mask(mask64),
        severity_mode=mode,
    )


def bilinear_upsample(values: np.ndarray, out_size: int) -> np.ndarray:
    """Separable bilinear resize with half-pixel center alignment."""
    n = values.shape[0]
    scale = out_size / n
    pos = np.clip((np.arange(out_size) + 0.5) / scale - 0.5, 0.0, n - 1.0)
    lo = np.minimum(pos.astype(int), n - 2)
    t = pos - lo
    rows = values[lo, :] * (1.0 - t)[:, None] + values[lo + 1, :] * t[:, None]
    return rows[:, lo] * (1.0 - t)[None, :] + rows[:, lo + 1] * t[None, :]


def apply_colormap(values01: np.ndarray, anchors=DEFAULT_COLORMAP) -> np.ndarray:
    """Map values in [0, 1] to RGB uint8 via per-channel linear interpolation."""
    xs = np.array([a[0] for a in anchors])
    out = np.empty(values01.shape + (3,), dtype=np.uint8)
    for ch in range(3):
        ys = np.array([a[1][ch] for a in anchors], dtype=float)
        out[..., ch] = np.rint(np.interp(values01, xs, ys)).astype(np.uint8)
    return out


def render_heatmap(
    grid: InterferenceGrid | np.ndarray,
    *,
    out_size: int = RENDER_RESOLUTION,
    anchors=DEFAULT_COLORMAP,
) -> np.ndarray:
    """448×448 RGB heatmap of the grid, normalized in the dBm domain."""
    values = grid.values if isinstance(grid, InterferenceGrid) else grid
    dbm = to_dbm(np.asarray(values, dtype=float))
    return apply_colormap(bilinear_upsample(normalize(dbm), out_size), anchors)


def write_png(image: np.ndarray, path) -> None:
    from PIL import Image

    # Low compression keeps bulk generation fast; the encode stays
    # deterministic, which the reproducibility contract relies on.
    Image.fromarray(image, mode="RGB").save(path, format="PNG", compress_level=1)
