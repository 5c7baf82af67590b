"""Two-parameter persistent homology toolkit.

Function-Rips bifiltrations of point clouds carrying a real-valued
function, their grid invariants (Hilbert function, bigraded Betti
numbers), slice barcodes, bottleneck and matching distances, and the
statistical comparison procedures built on top of them.
"""

from .bifiltration import Bifiltration, Simplex, build_function_rips, coarsen
from .bipersistence import (
    BettiGrid,
    HilbertGrid,
    SliceLine,
    bigraded_betti,
    hilbert_function,
    push_to_line,
    slice_barcode,
)
from .distance import (
    MatchingDistanceResult,
    bottleneck_distance,
    matching_distance,
    realizing_bar_lengths,
)
from .geometry import (
    GridSpec,
    PointCloud,
    assign_ranks,
    distance_matrix,
    replace_points,
    sample_clustered_cloud,
    sample_gaussian_cloud,
)
from .persistence import FilteredComplex, PersistenceDiagram, betti_at, reduce_and_extract
from .stats import (
    bar_length_test,
    bootstrap_mean_null,
    cv_null,
    large_scale_test,
    matching_distance_test,
    pixelwise_tests,
    welch_t,
)

__version__ = "0.1.0"

__all__ = [
    "Bifiltration",
    "Simplex",
    "build_function_rips",
    "coarsen",
    "BettiGrid",
    "HilbertGrid",
    "SliceLine",
    "bigraded_betti",
    "hilbert_function",
    "push_to_line",
    "slice_barcode",
    "MatchingDistanceResult",
    "bottleneck_distance",
    "matching_distance",
    "realizing_bar_lengths",
    "GridSpec",
    "PointCloud",
    "assign_ranks",
    "distance_matrix",
    "replace_points",
    "sample_clustered_cloud",
    "sample_gaussian_cloud",
    "FilteredComplex",
    "PersistenceDiagram",
    "betti_at",
    "reduce_and_extract",
    "bar_length_test",
    "bootstrap_mean_null",
    "cv_null",
    "large_scale_test",
    "matching_distance_test",
    "pixelwise_tests",
    "welch_t",
]
