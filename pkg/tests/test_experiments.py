import numpy as np
import pytest

from bipers.experiments import (
    detect_plateaus,
    quantization_study,
    run_replacement_series,
    series_grid,
    stability_study,
)
from bipers.geometry import assign_ranks, sample_clustered_cloud, sample_gaussian_cloud


def _structured(n=40, d=8, seed=1):
    return assign_ranks(sample_clustered_cloud(n, d, 4, separation=8.0, sd=1.0, seed=seed), seed + 1)


def _pool(n=40, d=8, seed=2):
    return assign_ranks(sample_gaussian_cloud(n, d, mean=0.0, sd=2.0, seed=seed), seed + 1)


def test_series_zero_replacements_distance_zero():
    base, pool = _structured(), _pool()
    series = run_replacement_series(
        base, pool, [0], bins=(6, 6), num_angles=3, num_offsets=3, seed=3
    )
    assert series.distances.tolist() == [0.0]


def test_series_deterministic():
    base, pool = _structured(), _pool()
    kwargs = dict(bins=(6, 6), num_angles=3, num_offsets=3, seed=5)
    a = run_replacement_series(base, pool, [0, 2, 5], **kwargs)
    b = run_replacement_series(base, pool, [0, 2, 5], **kwargs)
    assert np.array_equal(a.distances, b.distances)
    assert np.array_equal(a.realizing_angles, b.realizing_angles)


def test_series_rejects_bad_schedule():
    base, pool = _structured(), _pool()
    with pytest.raises(ValueError):
        run_replacement_series(base, pool, [0, 5, 5], bins=(4, 4))
    with pytest.raises(ValueError):
        run_replacement_series(base, pool, [0, 99], bins=(4, 4))


def test_series_grid_covers_both_clouds():
    base, pool = _structured(), _pool()
    grid = series_grid(base, pool, bins=(10, 10))
    assert grid.func_range == (1.0, 40.0)
    assert grid.scale_range[1] > 0


def test_detect_plateaus():
    rep = detect_plateaus([0.0, 0.1, 0.1, 0.1, 0.3, 0.3, 0.7])
    assert rep.n_plateaus == 4
    assert rep.values.tolist() == [0.0, 0.1, 0.3, 0.7]
    assert rep.run_lengths.tolist() == [1, 3, 2, 1]
    assert np.allclose(rep.steps, [0.1, 0.2, 0.4])
    empty = detect_plateaus([])
    assert empty.n_plateaus == 0


def test_detect_plateaus_tolerance():
    rep = detect_plateaus([1.0, 1.0 + 1e-12, 2.0], tol=1e-9)
    assert rep.n_plateaus == 2


def test_quantization_identical_bin_settings_identical_series():
    base, pool = _structured(), _pool()
    study = quantization_study(
        base, pool, [0, 3, 8], bins_list=(8, 8), seed=4, num_angles=3, num_offsets=3
    )
    assert np.array_equal(study.series[0].distances, study.series[1].distances)


def test_quantization_single_entry_schedule_has_no_steps():
    base, pool = _structured(), _pool()
    study = quantization_study(
        base, pool, [4], bins_list=(6, 12), seed=4, num_angles=3, num_offsets=3
    )
    for rep in study.plateaus:
        assert len(rep.steps) == 0
    assert np.isnan(study.median_steps).all()


def test_quantization_requires_two_settings():
    base, pool = _structured(), _pool()
    with pytest.raises(ValueError):
        quantization_study(base, pool, [0, 2], bins_list=(6,))


def test_stability_study_smoke_and_structure():
    originals = [_structured(n=16, d=5, seed=10 + k) for k in range(4)]
    pool = _pool(n=16, d=5, seed=99)
    report = stability_study(
        originals,
        pool,
        replacements=(2, 8, 16),
        bins=(5, 5),
        degree=0,
        seed=11,
        n_experiments=40,
        split=(2, 2),
        num_angles=3,
        num_offsets=3,
    )
    assert report.distance_trace.shape == (3,)
    assert np.all(report.distance_trace >= 0)
    assert 0.0 <= report.pixel_report.power <= 1.0
    assert report.pixel_report.z_scores.shape == (5, 5)
    # full replacement of structured data by Gaussian noise is detectable
    assert report.distance_trace[-1] > 0


def test_stability_study_wrong_split_rejected():
    originals = [_structured(n=10, d=4, seed=k) for k in range(3)]
    with pytest.raises(ValueError):
        stability_study(originals, _pool(10, 4, 50), (1,), split=(2, 2), bins=(4, 4))


def test_stability_full_replacement_beats_calibration():
    # structured originals vs fully replaced (random) datasets: the
    # pixelwise test must fire well above the 5%-level false-positive rate
    originals = [_structured(n=24, d=6, seed=30 + k) for k in range(5)]
    pool = _pool(n=24, d=6, seed=77)
    report = stability_study(
        originals,
        pool,
        replacements=(22, 23, 24),
        bins=(6, 6),
        degree=0,
        seed=13,
        n_experiments=60,
        split=(2, 3),
        num_angles=3,
        num_offsets=3,
    )
    assert report.pixel_report.power > 0.12
    # monotonicity of the trace is reported, not asserted: count violations
    violations = int(np.sum(np.diff(report.distance_trace) < -1e-9))
    assert violations >= 0
