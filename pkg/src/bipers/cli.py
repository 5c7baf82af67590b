"""Command-line entry point.

Subcommands cover the full pipeline: cloud generation, bifiltration
construction, grid invariants, slices, distances, the statistical
procedures, and the experiment drivers.  Every run logs its resolved
configuration to stderr; all randomness derives from ``--seed``; output
files are written atomically (temp file, then rename) and are
byte-identical across reruns with the same seed, including under
``--jobs`` parallelism.

Exit codes: 0 success, 2 input validation error (the message names the
offending flag), 1 internal error.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys
import tempfile
import traceback
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import bifiltration as bf
from . import bipersistence as bp
from . import distance as dist_mod
from . import experiments as exp
from . import geometry as geo
from . import persistence as ph
from . import stats as st
from . import svgplot

log = logging.getLogger("bipers")

SUBCOMMANDS = (
    "gen",
    "bifiltration",
    "hilbert",
    "betti",
    "slice",
    "bottleneck",
    "matchdist",
    "stats-pixels",
    "stats-matchdist",
    "stats-barlength",
    "experiment-replace",
    "experiment-stability",
    "plot",
)


class CliError(Exception):
    """Input validation failure; the message names the offending flag."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration; logged before any computation."""

    subcommand: str
    options: dict

    def log(self) -> None:
        payload = json.dumps(self.options, sort_keys=True, default=str)
        log.info("subcommand=%s config=%s", self.subcommand, payload)


@contextmanager
def _atomic(path):
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-bipers-")
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_bins(text: str) -> tuple[int, int]:
    try:
        m, n = text.lower().split("x")
        m, n = int(m), int(n)
    except ValueError:
        raise CliError(f"--bins: expected MxN (e.g. 20x20), got {text!r}") from None
    if m < 1 or n < 1:
        raise CliError("--bins: both counts must be >= 1")
    return m, n


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise CliError(f"{flag}: expected comma-separated integers, got {text!r}") from None


def _expand_paths(text: str, flag: str) -> list[str]:
    paths = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        matches = sorted(glob.glob(item))
        if not matches:
            if any(ch in item for ch in "*?["):
                raise CliError(f"{flag}: pattern {item!r} matches no files")
            matches = [item]
        paths.extend(matches)
    if not paths:
        raise CliError(f"{flag}: no input files")
    return paths


def _load_cloud(path: str, flag: str) -> geo.PointCloud:
    try:
        return geo.load_cloud_csv(path)
    except (OSError, ValueError) as e:
        raise CliError(f"{flag}: cannot read cloud {path!r}: {e}") from None


def _load_bifiltration_input(path: str, flag: str, max_dim: int) -> bf.Bifiltration:
    if path.endswith(".csv"):
        cloud = _load_cloud(path, flag)
        return bf.build_function_rips(cloud, max_dim=max_dim)
    try:
        # the text format carries whatever dimensions were built
        return bf.load_bifiltration(path, max_dim=2)
    except (OSError, ValueError) as e:
        raise CliError(f"{flag}: cannot read bifiltration {path!r}: {e}") from None


def _load_values(path: str, flag: str) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [line.strip() for line in fh if line.strip()]
    except OSError as e:
        raise CliError(f"{flag}: cannot read {path!r}: {e}") from None
    values = []
    for i, line in enumerate(lines):
        cell = line.split(",")[0]
        try:
            values.append(float(cell))
        except ValueError:
            if i == 0:
                continue  # header line
            raise CliError(f"{flag}: non-numeric value {cell!r} in {path!r}") from None
    if not values:
        raise CliError(f"{flag}: no values in {path!r}")
    return np.array(values)


def _save_values(path, values, header: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for v in values:
            fh.write(repr(float(v)) + "\n")


def _save_line_table(path, per_line) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("angle_deg,offset,slope,weight,bottleneck,weighted\n")
        for row in per_line:
            fh.write(
                ",".join(
                    repr(float(v))
                    for v in (
                        row.angle_deg,
                        row.offset,
                        row.slope,
                        row.weight,
                        row.bottleneck,
                        row.weighted,
                    )
                )
                + "\n"
            )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bipers",
        description="Two-parameter persistence invariants, distances and statistics.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("gen", help="generate a synthetic point cloud CSV")
    p.add_argument("--n", type=int, required=True, help="number of points")
    p.add_argument("--dim", type=int, required=True, help="ambient dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mean", type=float, default=0.0)
    p.add_argument("--sd", type=float, default=1.0)
    p.add_argument("--clusters", type=int, default=0, help="planted clusters (0 = plain Gaussian)")
    p.add_argument("--separation", type=float, default=8.0, help="cluster center radius")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bifiltration", help="build the function-Rips bifiltration")
    p.add_argument("--input", required=True, help="cloud CSV")
    p.add_argument("--max-dim", type=int, choices=(1, 2), default=2)
    p.add_argument("--max-scale", type=float, default=None)
    p.add_argument("--bins", default=None, help="optional MxN coarsening grid")
    p.add_argument("--out", required=True)

    for name, help_txt in (
        ("hilbert", "Hilbert function grid CSV"),
        ("betti", "bigraded Betti numbers CSV"),
    ):
        p = sub.add_parser(name, help=help_txt)
        p.add_argument("--input", required=True, help="cloud CSV or bifiltration text file")
        p.add_argument("--degree", type=int, choices=(0, 1), default=0)
        p.add_argument("--bins", default="20x20")
        p.add_argument("--out", required=True)

    p = sub.add_parser("slice", help="barcode along one slice line")
    p.add_argument("--input", required=True)
    p.add_argument("--degree", type=int, choices=(0, 1), default=0)
    p.add_argument("--angle", type=float, required=True, help="degrees in (0, 90)")
    p.add_argument("--offset", type=float, required=True)
    p.add_argument("--bins", default="20x20")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bottleneck", help="bottleneck distance between two diagram files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--degree", type=int, default=None)

    p = sub.add_parser("matchdist", help="matching distance between two datasets")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--degree", type=int, choices=(0, 1), default=0)
    p.add_argument("--bins", default="20x20")
    p.add_argument("--angles", type=int, default=20)
    p.add_argument("--offsets", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None, help="per-line table CSV")
    p.add_argument("--diagrams-out", default=None, help="prefix for realizing diagrams")

    p = sub.add_parser("stats-pixels", help="large-scale pixelwise test of two grid groups")
    p.add_argument("--group-a", required=True, help="comma/glob list of Hilbert CSVs")
    p.add_argument("--group-b", required=True, help="comma/glob list; null is built from this group")
    p.add_argument("--experiments", type=int, default=500)
    p.add_argument("--split", default="7,8")
    p.add_argument("--percentile-mode", choices=("pooled", "per-pixel"), default="pooled")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--svg", default=None, help="optional significance overlay SVG")

    p = sub.add_parser("stats-matchdist", help="bootstrap test on matching distances")
    p.add_argument("--null", required=True, help="file of null distances (one per line)")
    p.add_argument("--observed", required=True)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("stats-barlength", help="bootstrap test on bar lengths")
    p.add_argument("--null", required=True, help="file of null bar lengths")
    p.add_argument("--observed", required=True)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("experiment-replace", help="replacement series of matching distances")
    p.add_argument("--base", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--schedule", required=True, help="comma-separated replacement counts")
    p.add_argument("--bins", default="20x20")
    p.add_argument("--degree", type=int, choices=(0, 1), default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--angles", type=int, default=20)
    p.add_argument("--offsets", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("experiment-stability", help="stability of grids under replacement")
    p.add_argument("--originals", required=True, help="comma/glob list of cloud CSVs")
    p.add_argument("--pool", required=True)
    p.add_argument("--replacements", required=True, help="max count or comma list")
    p.add_argument("--bins", default="20x20")
    p.add_argument("--degree", type=int, choices=(0, 1), default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--experiments", type=int, default=500)
    p.add_argument("--split", default="7,8")
    p.add_argument("--percentile-mode", choices=("pooled", "per-pixel"), default="pooled")
    p.add_argument("--angles", type=int, default=20)
    p.add_argument("--offsets", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output prefix")

    p = sub.add_parser("plot", help="SVG plot of a Hilbert grid (plus dots / mask)")
    p.add_argument("--hilbert", required=True)
    p.add_argument("--betti", default=None)
    p.add_argument("--mask", default=None)
    p.add_argument("--degree", type=int, choices=(0, 1), default=0)
    p.add_argument("--out", required=True)

    return parser


def _grid_for(bif: bf.Bifiltration, bins: tuple[int, int]) -> geo.GridSpec:
    return dist_mod.common_grid(bif, bif, bins[0], bins[1])


def _cmd_gen(args) -> int:
    if args.n < 1:
        raise CliError("--n: must be >= 1")
    if args.dim < 1:
        raise CliError("--dim: must be >= 1")
    if args.sd <= 0:
        raise CliError("--sd: must be > 0")
    if args.clusters < 0 or args.clusters > args.n:
        raise CliError("--clusters: must lie in [0, n]")
    cloud_seed, rank_seed = geo.derive_seeds(args.seed, 2)
    if args.clusters:
        cloud = geo.sample_clustered_cloud(
            args.n, args.dim, args.clusters, args.separation, args.sd, cloud_seed
        )
    else:
        cloud = geo.sample_gaussian_cloud(args.n, args.dim, args.mean, args.sd, cloud_seed)
    cloud = geo.assign_ranks(cloud, rank_seed)
    with _atomic(args.out) as tmp:
        geo.save_cloud_csv(cloud, tmp)
    return 0


def _cmd_bifiltration(args) -> int:
    cloud = _load_cloud(args.input, "--input")
    if args.max_scale is not None and args.max_scale <= 0:
        raise CliError("--max-scale: must be > 0")
    bif = bf.build_function_rips(cloud, max_dim=args.max_dim, max_scale=args.max_scale)
    if args.bins is not None:
        bins = _parse_bins(args.bins)
        bif = bf.coarsen(bif, _grid_for(bif, bins))
    with _atomic(args.out) as tmp:
        bf.save_bifiltration(bif, tmp)
    return 0


def _cmd_hilbert(args) -> int:
    bins = _parse_bins(args.bins)
    bif = _load_bifiltration_input(args.input, "--input", max_dim=args.degree + 1)
    grid = bif.grid or _grid_for(bif, bins)
    hg = bp.hilbert_function(bif, grid, args.degree)
    with _atomic(args.out) as tmp:
        bp.save_hilbert_csv(hg, tmp)
    return 0


def _cmd_betti(args) -> int:
    bins = _parse_bins(args.bins)
    bif = _load_bifiltration_input(args.input, "--input", max_dim=args.degree + 1)
    grid = bif.grid or _grid_for(bif, bins)
    bg = bp.bigraded_betti(bif, grid, args.degree)
    with _atomic(args.out) as tmp:
        bp.save_betti_csv(bg, tmp)
    return 0


def _cmd_slice(args) -> int:
    if not 0 < args.angle < 90:
        raise CliError("--angle: must lie strictly between 0 and 90 degrees")
    bins = _parse_bins(args.bins)
    bif = _load_bifiltration_input(args.input, "--input", max_dim=args.degree + 1)
    grid = bif.grid or _grid_for(bif, bins)
    bif = bf.coarsen(bif, grid)
    diagram = bp.slice_barcode(bif, bp.SliceLine(args.angle, args.offset), args.degree)
    with _atomic(args.out) as tmp:
        ph.save_diagrams(diagram, tmp)
    return 0


def _cmd_bottleneck(args) -> int:
    da = ph.load_diagrams(args.a)
    db = ph.load_diagrams(args.b)
    if not da or not db:
        raise CliError("--a/--b: empty diagram file")
    if args.degree is None:
        common = sorted(set(da) & set(db))
        if len(common) != 1:
            raise CliError("--degree: required when files carry multiple degrees")
        degree = common[0]
    else:
        degree = args.degree
    if degree not in da or degree not in db:
        raise CliError(f"--degree: degree {degree} missing from an input file")
    print(repr(dist_mod.bottleneck_distance(da[degree], db[degree])))
    return 0


def _cmd_matchdist(args) -> int:
    if args.angles < 1:
        raise CliError("--angles: must be >= 1")
    if args.offsets < 1:
        raise CliError("--offsets: must be >= 1")
    if args.jobs < 1:
        raise CliError("--jobs: must be >= 1")
    bins = _parse_bins(args.bins)
    max_dim = args.degree + 1
    a = _load_bifiltration_input(args.a, "--a", max_dim)
    b = _load_bifiltration_input(args.b, "--b", max_dim)
    grid = dist_mod.common_grid(a, b, bins[0], bins[1])
    result = dist_mod.matching_distance(
        a, b, args.degree, args.angles, args.offsets, grid=grid, jobs=args.jobs
    )
    print(repr(result.value))
    if args.out:
        with _atomic(args.out) as tmp:
            _save_line_table(tmp, result.per_line)
    if args.diagrams_out:
        for suffix, diagram in zip(("a", "b"), result.diagrams):
            with _atomic(f"{args.diagrams_out}_{suffix}.txt") as tmp:
                ph.save_diagrams(diagram, tmp)
    return 0


def _load_grid_group(text: str, flag: str) -> list[bp.HilbertGrid]:
    grids = []
    for path in _expand_paths(text, flag):
        try:
            grids.append(bp.load_hilbert_csv(path))
        except (OSError, ValueError) as e:
            raise CliError(f"{flag}: cannot read Hilbert CSV {path!r}: {e}") from None
    return grids


def _cmd_stats_pixels(args) -> int:
    group_a = _load_grid_group(args.group_a, "--group-a")
    group_b = _load_grid_group(args.group_b, "--group-b")
    split = _parse_int_list(args.split, "--split")
    if len(split) != 2:
        raise CliError("--split: expected two comma-separated sizes")
    if split[0] + split[1] != len(group_b):
        raise CliError("--split: sizes must sum to the group-b count")
    try:
        null = st.cv_null(group_b, n_experiments=args.experiments, split=tuple(split), seed=args.seed)
        report = st.large_scale_test(group_a, group_b, null, args.percentile_mode)
    except ValueError as e:
        raise CliError(f"--group-a/--group-b: {e}") from None
    tmp_prefix = os.path.join(
        os.path.dirname(args.out) or ".", f".tmp-bipers-{os.path.basename(args.out)}"
    )
    final = [f"{args.out}_z.csv", f"{args.out}_mask.csv", f"{args.out}_summary.txt"]
    written = st.save_pixel_report(report, tmp_prefix)
    for src, dst in zip(written, final):
        os.replace(src, dst)
    if args.svg:
        with _atomic(args.svg) as tmp:
            svgplot.save_plot_svg(tmp, group_a[0], mask=report.significant_mask)
    print(repr(report.power))
    return 0


def _cmd_stats_matchdist(args) -> int:
    null_values = _load_values(args.null, "--null")
    observed = _load_values(args.observed, "--observed")
    report = st.matching_distance_test(null_values, observed, args.bootstrap, args.seed)
    summary = [
        f"null_mean: {repr(report.null.mean)}",
        f"null_sd: {repr(report.null.sd)}",
        f"null_q95: {repr(report.null.q95)}",
        f"n_observed: {len(report.observed)}",
        f"n_exceeding: {int(report.exceeds.sum())}",
        f"fraction_exceeding: {repr(report.fraction_exceeding)}",
    ]
    if args.out:
        with _atomic(args.out) as tmp:
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write("\n".join(summary) + "\n")
    print(repr(report.fraction_exceeding))
    return 0


def _cmd_stats_barlength(args) -> int:
    null_values = _load_values(args.null, "--null")
    observed = _load_values(args.observed, "--observed")
    report = st.bar_length_test(null_values, observed, args.bootstrap, args.seed)
    summary = [
        f"null_mean: {repr(report.null.mean)}",
        f"null_sd: {repr(report.null.sd)}",
        f"ci_low: {repr(report.ci_low)}",
        f"ci_high: {repr(report.ci_high)}",
        f"observed_mean: {repr(report.observed_mean)}",
        f"significant: {report.significant}",
        f"n_null_longer_than_observed_max: {report.n_null_longer_than_observed_max}",
    ]
    if args.out:
        with _atomic(args.out) as tmp:
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write("\n".join(summary) + "\n")
    print(repr(report.observed_mean))
    return 0


def _cmd_experiment_replace(args) -> int:
    base = _load_cloud(args.base, "--base")
    pool = _load_cloud(args.pool, "--pool")
    schedule = _parse_int_list(args.schedule, "--schedule")
    if not schedule:
        raise CliError("--schedule: must contain at least one count")
    if schedule != sorted(set(schedule)):
        raise CliError("--schedule: counts must be strictly increasing")
    if schedule[-1] > base.n_points:
        raise CliError("--schedule: counts cannot exceed the base cloud size")
    bins = _parse_bins(args.bins)
    series = exp.run_replacement_series(
        base,
        pool,
        schedule,
        degree=args.degree,
        seed=args.seed,
        bins=bins,
        num_angles=args.angles,
        num_offsets=args.offsets,
        jobs=args.jobs,
    )
    with _atomic(args.out) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write("n,distance,realizing_angle,realizing_offset\n")
            for k, d, a, o in zip(
                series.schedule, series.distances, series.realizing_angles, series.realizing_offsets
            ):
                fh.write(f"{k},{repr(float(d))},{repr(float(a))},{repr(float(o))}\n")
    return 0


def _cmd_experiment_stability(args) -> int:
    originals = [_load_cloud(p, "--originals") for p in _expand_paths(args.originals, "--originals")]
    pool = _load_cloud(args.pool, "--pool")
    if "," in args.replacements:
        replacements = _parse_int_list(args.replacements, "--replacements")
    else:
        try:
            top = int(args.replacements)
        except ValueError:
            raise CliError("--replacements: expected an integer or comma list") from None
        if top < 1:
            raise CliError("--replacements: must be >= 1")
        replacements = list(range(1, top + 1))
    split = _parse_int_list(args.split, "--split")
    if len(split) != 2 or split[0] + split[1] != len(originals):
        raise CliError("--split: sizes must sum to the number of original clouds")
    report = exp.stability_study(
        originals,
        pool,
        replacements,
        bins=_parse_bins(args.bins),
        degree=args.degree,
        seed=args.seed,
        n_experiments=args.experiments,
        split=tuple(split),
        percentile_mode=args.percentile_mode,
        num_angles=args.angles,
        num_offsets=args.offsets,
        jobs=args.jobs,
    )
    with _atomic(f"{args.out}_trace.csv") as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write("n,distance\n")
            for k, d in zip(report.replacement_counts, report.distance_trace):
                fh.write(f"{k},{repr(float(d))}\n")
    tmp_prefix = os.path.join(
        os.path.dirname(args.out) or ".", f".tmp-bipers-{os.path.basename(args.out)}"
    )
    final = [f"{args.out}_z.csv", f"{args.out}_mask.csv", f"{args.out}_summary.txt"]
    written = st.save_pixel_report(report.pixel_report, tmp_prefix)
    for src, dst in zip(written, final):
        os.replace(src, dst)
    print(repr(report.pixel_report.power))
    return 0


def _cmd_plot(args) -> int:
    try:
        hg = bp.load_hilbert_csv(args.hilbert, degree=args.degree)
    except (OSError, ValueError) as e:
        raise CliError(f"--hilbert: {e}") from None
    betti = None
    if args.betti:
        try:
            betti = bp.load_betti_csv(args.betti, degree=args.degree)
        except (OSError, ValueError) as e:
            raise CliError(f"--betti: {e}") from None
    mask = None
    if args.mask:
        try:
            rows = [
                [int(c) for c in line.split(",")]
                for line in open(args.mask, encoding="utf-8")
                if line.strip()
            ]
            mask = np.array(rows, dtype=bool)
        except (OSError, ValueError) as e:
            raise CliError(f"--mask: {e}") from None
        if mask.shape != (hg.grid.m, hg.grid.n):
            raise CliError("--mask: shape does not match the Hilbert grid")
    with _atomic(args.out) as tmp:
        svgplot.save_plot_svg(tmp, hg, betti, mask)
    return 0


_DISPATCH = {
    "gen": _cmd_gen,
    "bifiltration": _cmd_bifiltration,
    "hilbert": _cmd_hilbert,
    "betti": _cmd_betti,
    "slice": _cmd_slice,
    "bottleneck": _cmd_bottleneck,
    "matchdist": _cmd_matchdist,
    "stats-pixels": _cmd_stats_pixels,
    "stats-matchdist": _cmd_stats_matchdist,
    "stats-barlength": _cmd_stats_barlength,
    "experiment-replace": _cmd_experiment_replace,
    "experiment-stability": _cmd_experiment_stability,
    "plot": _cmd_plot,
}


def run(argv) -> int:
    """Run the CLI; returns the process exit code."""
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    config = RunConfig(args.subcommand, {k: v for k, v in vars(args).items() if k != "subcommand"})
    config.log()
    try:
        return _DISPATCH[args.subcommand](args)
    except CliError as e:
        print(f"bipers: error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        # contract violations from the library are input errors
        print(f"bipers: error: {e}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
