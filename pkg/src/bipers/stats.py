"""Pixelwise large-scale testing, bootstrap nulls, and bar-length tests.

Conventions, fixed for golden tests:

* Welch (unequal-variance) two-sample t statistics, oriented so that t
  is positive when the *second* sample has the larger mean.  Pixels
  where both groups have zero variance get t = 0 for equal means and a
  ``SENTINEL = 1e9`` with the sign of ``mean(b) - mean(a)`` otherwise;
  sentinel pixels are excluded from all standardization moments.
* z-scores standardize a t statistic by the empirical mean/sd of the
  per-experiment t ensemble from the cross-validated null, so observed
  and null statistics live on one common scale.  (Standardizing by the
  moments of the experiment-averaged t values, which concentrate near
  zero, would wreck the false-positive calibration; the averaged grid
  is still reported for inspection.)
* Percentiles are empirical quantiles with linear interpolation.
* Resampling draws indices against the canonically sorted inputs, so
  every procedure is invariant to input order given the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bipersistence import HilbertGrid
from .geometry import rng

__all__ = [
    "SENTINEL",
    "welch_t",
    "pixelwise_tests",
    "cv_null",
    "NullModel",
    "large_scale_test",
    "PixelTestReport",
    "bootstrap_mean_null",
    "BootstrapDistribution",
    "matching_distance_test",
    "MatchingDistanceTestReport",
    "bar_length_test",
    "BarLengthTestReport",
    "save_pixel_report",
]

SENTINEL = 1e9


def welch_t(a, b) -> tuple[float, float]:
    """Welch t statistic and Welch-Satterthwaite degrees of freedom.

    Positive t means sample ``b`` has the larger mean.  With zero
    variance on both sides the statistic degenerates: equal means give
    t = 0, unequal means give the signed SENTINEL; dof falls back to
    ``len(a) + len(b) - 2`` in either case.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError("each sample needs at least two values")
    ma, mb = a.mean(), b.mean()
    va, vb = a.var(ddof=1), b.var(ddof=1)
    se2 = va / na + vb / nb
    if se2 == 0.0:
        dof = float(na + nb - 2)
        if ma == mb:
            return 0.0, dof
        return float(np.sign(mb - ma)) * SENTINEL, dof
    t = (mb - ma) / np.sqrt(se2)
    dof = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    return float(t), float(dof)


def _stack(grids, spec=None) -> tuple[np.ndarray, object]:
    """Stack HilbertGrids or arrays into (k, m, n), checking compatibility."""
    grids = list(grids)
    if not grids:
        raise ValueError("empty group")
    values = []
    for g in grids:
        if isinstance(g, HilbertGrid):
            if spec is None:
                spec = g.grid
            elif g.grid != spec:
                raise ValueError("grids do not share a GridSpec")
            values.append(np.asarray(g.values, dtype=np.float64))
        else:
            values.append(np.asarray(g, dtype=np.float64))
    shape = values[0].shape
    if any(v.shape != shape for v in values):
        raise ValueError("grids do not share a shape")
    return np.stack(values), spec


def _canonical(stack: np.ndarray) -> np.ndarray:
    order = sorted(range(len(stack)), key=lambda i: stack[i].tobytes())
    return stack[order]


def _welch_grid(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na, nb = a.shape[0], b.shape[0]
    ma, mb = a.mean(axis=0), b.mean(axis=0)
    va, vb = a.var(axis=0, ddof=1), b.var(axis=0, ddof=1)
    se2 = va / na + vb / nb
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (mb - ma) / np.sqrt(se2)
    degenerate = se2 == 0.0
    t = np.where(degenerate & (ma == mb), 0.0, t)
    t = np.where(degenerate & (ma != mb), np.sign(mb - ma) * SENTINEL, t)
    return t


def pixelwise_tests(group_a, group_b) -> np.ndarray:
    """Per-pixel Welch t between two groups of grids (t grid of shape m x n)."""
    a, spec = _stack(group_a)
    b, _ = _stack(group_b, spec)
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("each group needs at least two grids")
    if a.shape[1:] != b.shape[1:]:
        raise ValueError("groups do not share a grid shape")
    return _welch_grid(a, b)


@dataclass(frozen=True)
class NullModel:
    """Cross-validated null for pixelwise tests.

    ``mu``/``sigma`` standardize any t grid onto the null scale;
    ``pooled_q95`` and ``per_pixel_q95`` are the two rejection levels
    (pooled is the default mode).  ``mean_t`` is the experiment-averaged
    t per pixel, kept for inspection.
    """

    mean_t: np.ndarray
    mu: float
    sigma: float
    null_z: np.ndarray  # pooled standardized per-experiment t values (1d)
    pooled_q95: float
    per_pixel_q95: np.ndarray
    n_experiments: int
    split: tuple[int, int]

    def z_scores(self, t_grid: np.ndarray) -> np.ndarray:
        return (np.asarray(t_grid) - self.mu) / self.sigma


def cv_null(grids, n_experiments: int = 500, split: tuple[int, int] = (7, 8), seed: int = 0) -> NullModel:
    """Null distribution from repeated random splits of one group.

    Each experiment partitions the (canonically sorted) grids into two
    subsets of the given sizes and computes a pixelwise Welch t.  The
    ensemble of all experiment t values defines the z standardization
    and the rejection thresholds.
    """
    stacked, _ = _stack(grids)
    values = _canonical(stacked)
    if len(values) != split[0] + split[1]:
        raise ValueError("number of grids must equal split[0] + split[1]")
    if min(split) < 2:
        raise ValueError("each split side needs at least two grids")
    g = rng(seed)
    t_all = np.empty((n_experiments,) + values.shape[1:])
    for e in range(n_experiments):
        perm = g.permutation(len(values))
        t_all[e] = _welch_grid(values[perm[: split[0]]], values[perm[split[0] :]])
    finite = np.abs(t_all) < SENTINEL
    pool = t_all[finite]
    mu = float(pool.mean()) if pool.size else 0.0
    sigma = float(pool.std(ddof=1)) if pool.size > 1 else 0.0
    if sigma == 0.0:
        sigma = 1.0
    null_z = (pool - mu) / sigma
    pooled_q95 = float(np.quantile(null_z, 0.95)) if null_z.size else np.inf
    z_all = np.where(finite, (t_all - mu) / sigma, np.nan)
    with np.errstate(all="ignore"):
        per_pixel = np.nanquantile(z_all, 0.95, axis=0)
    per_pixel = np.where(np.isnan(per_pixel), np.inf, per_pixel)
    return NullModel(
        mean_t=t_all.mean(axis=0),
        mu=mu,
        sigma=sigma,
        null_z=np.sort(null_z),
        pooled_q95=pooled_q95,
        per_pixel_q95=per_pixel,
        n_experiments=n_experiments,
        split=(int(split[0]), int(split[1])),
    )


@dataclass(frozen=True)
class PixelTestReport:
    """Outcome of a large-scale pixelwise test.

    ``power`` is the fraction of significant pixels:
    ``mask.sum() / (m * n)``, with ``mask = z > threshold``.
    """

    z_scores: np.ndarray
    threshold: float | np.ndarray
    significant_mask: np.ndarray
    power: float
    percentile_mode: str


def large_scale_test(wiki, rand, null: NullModel, percentile_mode: str = "pooled") -> PixelTestReport:
    """Pixelwise Welch test of two groups against a cross-validated null.

    A pixel is significant when its z-score (t standardized by the null
    model) lies above the null's 95th percentile, pooled across pixels
    by default or per pixel with ``percentile_mode="per-pixel"``.
    """
    if percentile_mode not in ("pooled", "per-pixel"):
        raise ValueError("percentile_mode must be 'pooled' or 'per-pixel'")
    t = pixelwise_tests(wiki, rand)
    z = null.z_scores(t)
    threshold = null.pooled_q95 if percentile_mode == "pooled" else null.per_pixel_q95
    mask = z > threshold
    return PixelTestReport(
        z_scores=z,
        threshold=threshold,
        significant_mask=mask,
        power=float(mask.mean()),
        percentile_mode=percentile_mode,
    )


@dataclass(frozen=True)
class BootstrapDistribution:
    """Bootstrap distribution of the sample mean.

    The 95th percentile uses the linear-interpolation empirical
    quantile (numpy default).
    """

    estimators: np.ndarray
    mean: float
    sd: float
    q95: float


def bootstrap_mean_null(values, n_bootstrap: int = 1000, seed: int = 0) -> BootstrapDistribution:
    """``n_bootstrap`` resampled means of ``values`` (with replacement).

    Resampling indices are drawn against the ascending sort of the
    input, so the result does not depend on input order.
    """
    values = np.sort(np.asarray(values, dtype=np.float64))
    if values.size == 0:
        raise ValueError("values must be nonempty")
    if n_bootstrap < 1:
        raise ValueError("need at least one bootstrap draw")
    idx = rng(seed).integers(0, len(values), size=(n_bootstrap, len(values)))
    means = values[idx].mean(axis=1)
    sd = float(means.std(ddof=1)) if len(means) > 1 else 0.0
    return BootstrapDistribution(
        estimators=means,
        mean=float(means.mean()),
        sd=sd,
        q95=float(np.quantile(means, 0.95)),
    )


@dataclass(frozen=True)
class MatchingDistanceTestReport:
    null: BootstrapDistribution
    observed: np.ndarray
    exceeds: np.ndarray
    fraction_exceeding: float


def matching_distance_test(
    pairs_aa, observed_ab, n_bootstrap: int = 1000, seed: int = 0
) -> MatchingDistanceTestReport:
    """Bootstrap null from independent same-population distances.

    ``pairs_aa`` must come from disjoint dataset pairs so the distances
    are independent.  Reports which observed distances exceed the null's
    95th percentile.
    """
    null = bootstrap_mean_null(pairs_aa, n_bootstrap, seed)
    observed = np.asarray(observed_ab, dtype=np.float64)
    exceeds = observed > null.q95
    return MatchingDistanceTestReport(
        null=null,
        observed=observed,
        exceeds=exceeds,
        fraction_exceeding=float(exceeds.mean()) if observed.size else 0.0,
    )


@dataclass(frozen=True)
class BarLengthTestReport:
    null: BootstrapDistribution
    observed_mean: float
    ci_low: float
    ci_high: float
    significant: bool
    n_null_longer_than_observed_max: int


def bar_length_test(
    null_lengths, observed_lengths, n_bootstrap: int = 1000, seed: int = 0
) -> BarLengthTestReport:
    """Two-sided bootstrap test of the observed mean bar length.

    The observed mean is compared against the central 95% interval of
    the bootstrapped null mean.  Also counts how many null-side bars are
    longer than the longest observed bar.
    """
    null_lengths = np.asarray(null_lengths, dtype=np.float64)
    observed = np.asarray(observed_lengths, dtype=np.float64)
    if null_lengths.size == 0 or observed.size == 0:
        raise ValueError("length sequences must be nonempty")
    boot = bootstrap_mean_null(null_lengths, n_bootstrap, seed)
    lo = float(np.quantile(boot.estimators, 0.025))
    hi = float(np.quantile(boot.estimators, 0.975))
    obs_mean = float(observed.mean())
    return BarLengthTestReport(
        null=boot,
        observed_mean=obs_mean,
        ci_low=lo,
        ci_high=hi,
        significant=bool(obs_mean < lo or obs_mean > hi),
        n_null_longer_than_observed_max=int(np.count_nonzero(null_lengths > observed.max())),
    )


def save_pixel_report(report: PixelTestReport, prefix: str) -> list[str]:
    """Write ``<prefix>_z.csv``, ``<prefix>_mask.csv`` and ``<prefix>_summary.txt``."""
    paths = [f"{prefix}_z.csv", f"{prefix}_mask.csv", f"{prefix}_summary.txt"]
    with open(paths[0], "w", encoding="utf-8") as fh:
        for row in report.z_scores:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    with open(paths[1], "w", encoding="utf-8") as fh:
        for row in report.significant_mask:
            fh.write(",".join("1" if v else "0" for v in row) + "\n")
    thr = report.threshold
    thr_txt = repr(float(thr)) if np.ndim(thr) == 0 else "per-pixel"
    n_sig = int(report.significant_mask.sum())
    with open(paths[2], "w", encoding="utf-8") as fh:
        fh.write(
            "\n".join(
                [
                    f"percentile_mode: {report.percentile_mode}",
                    f"threshold: {thr_txt}",
                    f"significant_pixels: {n_sig}",
                    f"total_pixels: {report.significant_mask.size}",
                    f"power: {repr(report.power)}",
                ]
            )
            + "\n"
        )
    return paths
