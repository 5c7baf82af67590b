"""End-to-end experiment drivers: replacement series and stability studies.

Desk-scale defaults keep the full pipeline tractable (hundreds of
points, degree 0); scaling up is a matter of passing larger clouds.
Every driver takes a root seed and derives per-stage seeds from it, so
a run is reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bifiltration import Bifiltration, build_function_rips, coarsen
from .bipersistence import HilbertGrid, hilbert_function
from .distance import MatchingDistanceResult, matching_distance
from .geometry import GridSpec, PointCloud, derive_seeds, distance_matrix, replace_points
from .stats import NullModel, PixelTestReport, cv_null, large_scale_test

__all__ = [
    "ReplacementSeries",
    "PlateauReport",
    "run_replacement_series",
    "detect_plateaus",
    "quantization_study",
    "QuantizationStudy",
    "stability_study",
    "StabilityReport",
    "series_grid",
]


@dataclass(frozen=True)
class ReplacementSeries:
    """Matching distance from a base cloud to its replaced variants."""

    schedule: tuple[int, ...]
    distances: np.ndarray
    realizing_angles: np.ndarray
    realizing_offsets: np.ndarray
    grid: GridSpec
    degree: int


@dataclass(frozen=True)
class PlateauReport:
    """Runs of equal consecutive distances and the steps between them."""

    values: np.ndarray  # one value per plateau, in schedule order
    run_lengths: np.ndarray
    steps: np.ndarray  # differences between consecutive plateau values

    @property
    def n_plateaus(self) -> int:
        return len(self.values)


def series_grid(base: PointCloud, pool: PointCloud, bins: tuple[int, int] = (20, 20)) -> GridSpec:
    """One fixed grid covering the base, the pool, and every mixture.

    The scale range tops out at the largest pairwise distance over the
    union of both clouds, which bounds the enclosing radius of any
    replacement mixture.
    """
    union = PointCloud(
        np.vstack([base.points, pool.points]), np.zeros(base.n_points + pool.n_points)
    )
    max_d = float(distance_matrix(union).max())
    fmin, fmax = float(base.func.min()), float(base.func.max())
    if fmax <= fmin:
        fmax = fmin + 1.0
    return GridSpec(bins[0], bins[1], (fmin, fmax), (0.0, max_d if max_d > 0 else 1.0))


def _series_bifiltration(cloud: PointCloud, grid: GridSpec, degree: int) -> Bifiltration:
    max_scale = np.nextafter(grid.scale_range[1], np.inf)
    bif = build_function_rips(cloud, max_dim=degree + 1, max_scale=max_scale)
    return coarsen(bif, grid)


def run_replacement_series(
    base: PointCloud,
    pool: PointCloud,
    schedule,
    grid: GridSpec | None = None,
    degree: int = 0,
    seed: int = 0,
    bins: tuple[int, int] = (20, 20),
    num_angles: int = 20,
    num_offsets: int = 20,
    jobs: int = 1,
) -> ReplacementSeries:
    """Matching distance between ``base`` and each replaced dataset.

    Replacement sets are nested along the schedule (the k-th dataset's
    replaced points contain the (k-1)-th's), driven by one seed.
    """
    schedule = tuple(int(k) for k in schedule)
    if any(b >= a for a, b in zip(schedule[1:], schedule)):
        raise ValueError("schedule must be strictly increasing")
    if schedule and (schedule[0] < 0 or schedule[-1] > base.n_points):
        raise ValueError("schedule entries must lie in [0, n_base]")
    if grid is None:
        grid = series_grid(base, pool, bins)
    replace_seed = derive_seeds(seed, 1)[0]
    bif_base = _series_bifiltration(base, grid, degree)
    distances, angles, offsets = [], [], []
    for k in schedule:
        replaced = replace_points(base, pool, k, replace_seed)
        bif_k = _series_bifiltration(replaced, grid, degree)
        res: MatchingDistanceResult = matching_distance(
            bif_base, bif_k, degree, num_angles, num_offsets, grid=grid, jobs=jobs
        )
        distances.append(res.value)
        angles.append(res.realizing_line.angle_deg)
        offsets.append(res.realizing_line.offset)
    return ReplacementSeries(
        schedule, np.array(distances), np.array(angles), np.array(offsets), grid, degree
    )


def detect_plateaus(distances, tol: float = 1e-9) -> PlateauReport:
    """Group consecutive distances equal within ``tol`` into plateaus."""
    distances = np.asarray(distances, dtype=np.float64)
    if not len(distances):
        return PlateauReport(np.zeros(0), np.zeros(0, dtype=np.int64), np.zeros(0))
    values, lengths = [distances[0]], [1]
    for d in distances[1:]:
        if abs(d - values[-1]) <= tol:
            lengths[-1] += 1
        else:
            values.append(d)
            lengths.append(1)
    values = np.array(values)
    return PlateauReport(values, np.array(lengths), np.abs(np.diff(values)))


@dataclass(frozen=True)
class QuantizationStudy:
    """Replacement series at several bin settings plus step-size ratios."""

    bins_list: tuple[int, ...]
    series: tuple[ReplacementSeries, ...]
    plateaus: tuple[PlateauReport, ...]
    median_steps: np.ndarray
    step_ratios: np.ndarray  # ratio of consecutive settings' median steps


def quantization_study(
    base: PointCloud,
    pool: PointCloud,
    schedule,
    bins_list=(20, 40),
    degree: int = 0,
    seed: int = 0,
    num_angles: int = 20,
    num_offsets: int = 20,
    plateau_tol: float = 1e-9,
    jobs: int = 1,
) -> QuantizationStudy:
    """Replacement series per bin setting; reports plateau step ratios.

    The same seed drives every setting, so the replaced clouds are
    identical across settings and only the discretization varies.
    """
    bins_list = tuple(int(b) for b in bins_list)
    if len(bins_list) < 2:
        raise ValueError("need at least two bin settings to compare")
    all_series, reports, medians = [], [], []
    for b in bins_list:
        s = run_replacement_series(
            base,
            pool,
            schedule,
            degree=degree,
            seed=seed,
            bins=(b, b),
            num_angles=num_angles,
            num_offsets=num_offsets,
            jobs=jobs,
        )
        all_series.append(s)
        rep = detect_plateaus(s.distances, plateau_tol)
        reports.append(rep)
        medians.append(float(np.median(rep.steps)) if len(rep.steps) else np.nan)
    medians = np.array(medians)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = medians[:-1] / medians[1:]
    return QuantizationStudy(
        bins_list, tuple(all_series), tuple(reports), medians, ratios
    )


@dataclass(frozen=True)
class StabilityReport:
    null: NullModel
    pixel_report: PixelTestReport
    replacement_counts: tuple[int, ...]
    distance_trace: np.ndarray


def stability_study(
    originals,
    pool: PointCloud,
    replacements,
    bins: tuple[int, int] = (20, 20),
    degree: int = 0,
    seed: int = 0,
    n_experiments: int = 500,
    split: tuple[int, int] = (7, 8),
    percentile_mode: str = "pooled",
    num_angles: int = 20,
    num_offsets: int = 20,
    jobs: int = 1,
) -> StabilityReport:
    """Perturbation study: replace points of one original cloud step by step.

    Builds the cross-validated null from the original clouds' Hilbert
    grids, tests originals against the replacement grids, and traces the
    matching distance from the chosen original (the first one) to each
    replacement dataset.
    """
    originals = list(originals)
    if len(originals) != split[0] + split[1]:
        raise ValueError("number of original clouds must match the null split")
    replacements = tuple(int(k) for k in replacements)
    null_seed, replace_seed = derive_seeds(seed, 2)
    grid = series_grid(originals[0], pool, bins)

    def grid_of(cloud: PointCloud) -> HilbertGrid:
        return hilbert_function(_series_bifiltration(cloud, grid, degree), grid, degree)

    original_grids = [grid_of(c) for c in originals]
    null = cv_null(original_grids, n_experiments=n_experiments, split=split, seed=null_seed)

    chosen = originals[0]
    bif_chosen = _series_bifiltration(chosen, grid, degree)
    replaced_grids, trace = [], []
    for k in replacements:
        replaced = replace_points(chosen, pool, k, replace_seed)
        bif_r = _series_bifiltration(replaced, grid, degree)
        replaced_grids.append(hilbert_function(bif_r, grid, degree))
        res = matching_distance(
            bif_chosen, bif_r, degree, num_angles, num_offsets, grid=grid, jobs=jobs
        )
        trace.append(res.value)
    report = large_scale_test(original_grids, replaced_grids, null, percentile_mode)
    return StabilityReport(null, report, replacements, np.array(trace))
