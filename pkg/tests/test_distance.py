import math

import numpy as np
import pytest

from bipers.bifiltration import Bifiltration, build_function_rips
from bipers.bipersistence import SliceLine
from bipers.distance import (
    MatchingDistanceResult,
    bottleneck_distance,
    bottleneck_matching,
    common_grid,
    matching_distance,
    realizing_bar_lengths,
    sample_lines,
)
from bipers.geometry import GridSpec, assign_ranks, rng, sample_gaussian_cloud
from bipers.persistence import PersistenceDiagram
from oracles import bottleneck_exhaustive

INF = float("inf")


def _diagram(points, degree=0):
    return PersistenceDiagram(degree, np.array(points, dtype=float).reshape(-1, 2))


def test_identical_diagrams_zero():
    d = _diagram([(0.0, 2.0), (1.0, 3.0), (1.0, INF)])
    assert bottleneck_distance(d, d) == 0.0


def test_single_point_vs_empty():
    assert bottleneck_distance(_diagram([(0.0, 2.0)]), _diagram([])) == 1.0


def test_direct_match_beats_double_diagonal():
    assert bottleneck_distance(_diagram([(0.0, 4.0)]), _diagram([(1.0, 4.0)])) == 1.0


def test_infinite_bar_count_mismatch_is_infinite():
    assert bottleneck_distance(_diagram([(0.0, INF)]), _diagram([])) == INF


def test_infinite_bars_match_on_birth():
    d1 = _diagram([(0.0, INF), (3.0, INF)])
    d2 = _diagram([(1.0, INF), (3.5, INF)])
    assert bottleneck_distance(d1, d2) == 1.0


def test_degree_mismatch_rejected():
    with pytest.raises(ValueError):
        bottleneck_distance(_diagram([(0, 1)], 0), _diagram([(0, 1)], 1))


def _random_diagram(g, max_points=5, with_inf=True):
    k = int(g.integers(0, max_points + 1))
    points = []
    for _ in range(k):
        b = round(float(g.uniform(0, 3)), 2)
        if with_inf and g.random() < 0.2:
            points.append((b, INF))
        else:
            points.append((b, b + round(float(g.uniform(0, 2)), 2)))
    return points


def test_bottleneck_matches_exhaustive_oracle():
    g = rng(7)
    for _ in range(150):
        p1 = _random_diagram(g)
        p2 = _random_diagram(g)
        got = bottleneck_distance(_diagram(p1), _diagram(p2))
        expected = bottleneck_exhaustive(p1, p2)
        if math.isinf(expected):
            assert math.isinf(got)
        else:
            assert got == pytest.approx(expected, abs=1e-9)


def test_bottleneck_symmetry_and_triangle_inequality():
    g = rng(13)
    for _ in range(40):
        d1 = _diagram(_random_diagram(g, 6, with_inf=False))
        d2 = _diagram(_random_diagram(g, 6, with_inf=False))
        d3 = _diagram(_random_diagram(g, 6, with_inf=False))
        ab = bottleneck_distance(d1, d2)
        ba = bottleneck_distance(d2, d1)
        assert ab == ba
        ac = bottleneck_distance(d1, d3)
        cb = bottleneck_distance(d3, d2)
        assert ab <= ac + cb + 1e-9


def test_bottleneck_matching_is_consistent():
    d1 = _diagram([(0.0, 4.0), (1.0, 2.0)])
    d2 = _diagram([(0.5, 4.0)])
    value, matching = bottleneck_matching(d1, d2)
    assert value == 0.5
    assert matching.cost == value
    matched_costs = [
        max(abs(p[0] - q[0]), abs(p[1] - q[1])) for p, q in matching.pairs
    ]
    diag_costs = [(d - b) / 2 for b, d in matching.diagonal_1]
    diag_costs += [(d - b) / 2 for b, d in matching.diagonal_2]
    realized = max(matched_costs + diag_costs)
    assert realized == pytest.approx(value, abs=1e-12)


def test_zero_length_bars_do_not_change_distance():
    d1 = _diagram([(0.0, 4.0), (2.0, 2.0), (3.0, 3.0)])
    d2 = _diagram([(1.0, 4.0)])
    plain = bottleneck_distance(_diagram([(0.0, 4.0)]), d2)
    assert bottleneck_distance(d1, d2) == plain


def test_sample_lines_counts_and_ranges():
    grid = GridSpec(4, 4, (0.0, 2.0), (0.0, 3.0))
    lines = sample_lines(grid, 20, 20)
    assert len(lines) == 400
    assert all(0.0 < ln.angle_deg < 90.0 for ln in lines)
    angles = sorted({ln.angle_deg for ln in lines})
    assert len(angles) == 20


def test_matchdist_self_is_zero():
    cloud = assign_ranks(sample_gaussian_cloud(12, 3, seed=2), 5)
    bif = build_function_rips(cloud, max_dim=1)
    res = matching_distance(bif, bif, 0, num_angles=4, num_offsets=4)
    assert res.value == 0.0
    assert len(res.per_line) == 16


def test_matchdist_symmetry():
    a = build_function_rips(assign_ranks(sample_gaussian_cloud(10, 2, seed=3), 1), max_dim=1)
    b = build_function_rips(assign_ranks(sample_gaussian_cloud(10, 2, seed=4), 2), max_dim=1)
    grid = common_grid(a, b, 8, 8)
    ab = matching_distance(a, b, 0, 5, 5, grid=grid)
    ba = matching_distance(b, a, 0, 5, 5, grid=grid)
    assert ab.value == ba.value


def test_matchdist_single_line_oracle():
    c = 1.0
    a = Bifiltration.from_simplices([((0,), (0.0, 0.0))])
    b = Bifiltration.from_simplices(
        [((0,), (0.0, 0.0)), ((1,), (0.0, 0.0)), ((0, 1), (c, c))]
    )
    grid = GridSpec(2, 2, (0.0, c), (0.0, c))
    res = matching_distance(a, b, 0, num_angles=1, num_offsets=1, grid=grid)
    assert res.realizing_line.angle_deg == 45.0
    assert res.realizing_line.offset == pytest.approx(0.0, abs=1e-15)
    # one immortal generator matches; the extra one dies at c*sqrt(2) on the
    # line, costing (c*sqrt(2))/2 against the diagonal, weighted by 1/sqrt(2)
    assert res.value == pytest.approx(c / 2, abs=1e-12)


def test_matchdist_refining_lines_never_decreases():
    a = build_function_rips(assign_ranks(sample_gaussian_cloud(10, 2, seed=5), 3), max_dim=1)
    b = build_function_rips(assign_ranks(sample_gaussian_cloud(10, 2, seed=6), 4), max_dim=1)
    grid = common_grid(a, b, 6, 6)
    coarse = matching_distance(a, b, 0, num_angles=1, num_offsets=1, grid=grid)
    fine = matching_distance(a, b, 0, num_angles=3, num_offsets=3, grid=grid)
    # angle/offset sets nest: k/(n+1) grids with n=1 and n=3
    assert fine.value >= coarse.value - 1e-12


def test_weighted_value_below_unweighted():
    a = build_function_rips(assign_ranks(sample_gaussian_cloud(9, 2, seed=7), 5), max_dim=1)
    b = build_function_rips(assign_ranks(sample_gaussian_cloud(9, 2, seed=8), 6), max_dim=1)
    res = matching_distance(a, b, 0, 4, 4)
    for row in res.per_line:
        assert row.weighted <= row.bottleneck + 1e-15
        assert row.weight <= 1 / math.sqrt(2) + 1e-15


def test_matchdist_parallel_equals_serial():
    a = build_function_rips(assign_ranks(sample_gaussian_cloud(14, 3, seed=9), 7), max_dim=1)
    b = build_function_rips(assign_ranks(sample_gaussian_cloud(14, 3, seed=10), 8), max_dim=1)
    grid = common_grid(a, b, 8, 8)
    serial = matching_distance(a, b, 0, 4, 4, grid=grid, jobs=1)
    parallel = matching_distance(a, b, 0, 4, 4, grid=grid, jobs=3)
    assert serial.value == parallel.value
    assert serial.per_line == parallel.per_line


def _fake_result(d1, d2, grid, line):
    return MatchingDistanceResult(0.0, line, (d1, d2), (), grid, 0)


def test_realizing_bar_lengths_examples():
    grid = GridSpec(2, 2, (0.0, 10.0), (0.0, 10.0))
    line = SliceLine(45.0, 0.0)
    empty = _diagram([])
    mean, (l1, l2) = realizing_bar_lengths(_fake_result(empty, empty, grid, line))
    assert mean == 0.0 and len(l1) == 0 and len(l2) == 0

    one = _diagram([(0.0, 2.0)])
    mean, _ = realizing_bar_lengths(_fake_result(one, empty, grid, line))
    assert mean == 2.0

    da = _diagram([(0.0, 1.0), (0.0, 3.0)])
    db = _diagram([(1.0, 2.0)])
    mean, (l1, l2) = realizing_bar_lengths(_fake_result(da, db, grid, line))
    assert mean == pytest.approx(5.0 / 3.0, abs=1e-12)  # (1 + 3 + 1) / 3
    assert sorted(l1.tolist()) == [1.0, 3.0]
    assert l2.tolist() == [1.0]


def test_realizing_bar_lengths_truncates_infinite_bars():
    grid = GridSpec(2, 2, (0.0, 2.0), (0.0, 2.0))
    line = SliceLine(45.0, 0.0)  # exit parameter 2*sqrt(2)
    da = _diagram([(1.0, INF)])
    mean, (l1, _) = realizing_bar_lengths(_fake_result(da, _diagram([]), grid, line))
    assert l1.tolist() == pytest.approx([2 * math.sqrt(2.0) - 1.0], abs=1e-12)
    assert mean == pytest.approx(2 * math.sqrt(2.0) - 1.0, abs=1e-12)
