"""Command-line surface: cluster | segment | modes | bench.

Reports are line-delimited key/value text (`key=<json value>` per line, one
document per run) so they are machine-readable without binding a heavier
serialization format; see README for the schema. All file writes go through
a write-temp-then-rename step, and every command is deterministic under a
fixed --seed (timing fields aside).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time

import numpy as np

from .data import Dataset, SeedSpec
from .ppm import ImageFeatureSpec, PpmError, image_features, read_ppm, write_ppm
from .quickshift import (
    QuickShiftConfig,
    exact_quickshift,
    extract_labels,
    extract_modes,
    lsh_quickshift,
)
from .metrics import adjusted_mutual_info, adjusted_rand_index
from .synthetic import random_mixture

__all__ = [
    "EXIT_OK",
    "EXIT_USAGE",
    "EXIT_PARSE",
    "EXIT_INTERNAL",
    "InputError",
    "load_csv",
    "load_ppm",
    "format_report",
    "parse_report",
    "TIMING_KEYS",
    "main",
]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_INTERNAL = 3

TIMING_KEYS = ("build_ms", "kde_ms", "graph_ms", "label_ms", "total_ms")


class InputError(Exception):
    """Unreadable or malformed input file (exit code 2)."""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


# -- input ---------------------------------------------------------------


def load_csv(path, has_header: bool = False, label_column: int | None = None) -> Dataset:
    """Parse a numeric CSV into a Dataset.

    The optional label column is pulled out of the features into
    Dataset.labels. Ragged rows and non-numeric feature cells raise
    InputError naming the 1-based line.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    start = 1 if has_header else 0
    rows, labels = [], []
    width = None
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
            if label_column is not None and not 0 <= label_column < width:
                raise InputError(
                    f"label column {label_column} out of range for {width} columns")
        elif len(cells) != width:
            raise InputError(
                f"line {lineno}: expected {width} cells, got {len(cells)}")
        values = []
        for col, cell in enumerate(cells):
            if col == label_column:
                try:
                    labels.append(int(float(cell)))
                except ValueError:
                    raise InputError(
                        f"line {lineno}: non-numeric label {cell.strip()!r}") from None
            else:
                try:
                    values.append(float(cell))
                except ValueError:
                    raise InputError(
                        f"line {lineno}: non-numeric value {cell.strip()!r}") from None
        rows.append(values)
    if not rows:
        raise InputError(f"{path}: no data rows")
    try:
        return Dataset(rows, labels=labels if label_column is not None else None)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_ppm(path, spec: ImageFeatureSpec):
    """Read a PPM into per-pixel features: (Dataset, width, height).

    One 5-d row per pixel in row-major order; see ImageFeatureSpec for the
    feature layout. Malformed images raise InputError.
    """
    try:
        pixels = read_ppm(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except PpmError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return image_features(pixels, spec), pixels.shape[1], pixels.shape[0]


# -- report --------------------------------------------------------------


def format_report(report: dict) -> str:
    return "".join(f"{key}={json.dumps(value)}\n" for key, value in report.items())


def parse_report(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition("=")
        out[key] = json.loads(value)
    return out


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".out-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def report_path(output_path: str) -> str:
    return output_path + ".report"


# -- shared pipeline ------------------------------------------------------


def _run_forest(data: Dataset, args, bandwidth: float | None = None):
    """Run the configured pipeline; returns (forest, labels, modes)."""
    h = args.bandwidth if bandwidth is None else bandwidth
    if args.exact:
        forest = exact_quickshift(data, h=h, tau=args.c * h)
    else:
        cfg = QuickShiftConfig(
            bandwidth=h, c=args.c, epsilon=args.epsilon, estimator=args.estimator,
            seed=SeedSpec(args.seed), lsh_tables=args.lsh_tables,
            lsh_concat=args.lsh_concat, lsh_width=args.bucket_width)
        forest = lsh_quickshift(data, cfg)
    t0 = time.perf_counter()
    labels = extract_labels(forest)
    label_ms = (time.perf_counter() - t0) * 1e3
    forest.stage_ms["label_ms"] = label_ms
    forest.stage_ms["total_ms"] = sum(
        forest.stage_ms.get(k, 0.0) for k in ("build_ms", "kde_ms", "graph_ms", "label_ms"))
    modes = extract_modes(forest, data)
    return forest, labels, modes


def _base_report(command: str, args, data: Dataset, forest, labels, modes,
                 bandwidth: float | None = None) -> dict:
    params = getattr(forest, "lsh_params", None)
    report = {
        "command": command,
        "n": data.n,
        "d": data.dim,
        "bandwidth": args.bandwidth if bandwidth is None else bandwidth,
        "c": args.c,
        "epsilon": args.epsilon,
        "estimator": "exact" if args.exact else args.estimator,
        "exact_graph": bool(args.exact),
        "seed": args.seed,
        "lsh_tables": params.tables if params else None,
        "lsh_concat": params.concat if params else None,
        "bucket_width": params.width if params else None,
        "num_clusters": labels.num_clusters,
        "mode_ids": [int(i) for i in modes.ids],
        "mode_coords": [[float(v) for v in row] for row in modes.coords],
        "mode_densities": [float(forest.densities.values[i]) for i in modes.ids],
    }
    for key in ("build_ms", "kde_ms", "graph_ms", "label_ms", "total_ms"):
        report[key] = forest.stage_ms.get(key, 0.0)
    return report


def _write_labels(path, labels) -> None:
    _atomic_write(path, "".join(f"{int(v)}\n" for v in labels))


# -- commands --------------------------------------------------------------


def cmd_cluster(args) -> int:
    data = load_csv(args.input, has_header=args.has_header,
                    label_column=args.labels_col)
    bandwidth = args.bandwidth
    report_extra = {}
    if args.sweep:
        if data.labels is None:
            raise _UsageError("--sweep needs ground-truth labels (--labels-col)")
        lo, hi, steps = _parse_sweep(args.sweep)
        sweep_values = np.linspace(lo, hi, steps)
        scores = []
        for h in sweep_values:
            _, lab, _ = _run_forest(data, args, bandwidth=float(h))
            scores.append(adjusted_rand_index(data.labels, lab.label))
        best = int(np.argmax(scores))
        bandwidth = float(sweep_values[best])
        report_extra = {
            "sweep_bandwidths": [float(h) for h in sweep_values],
            "sweep_ari": scores,
            "sweep_best_bandwidth": bandwidth,
        }
    forest, labels, modes = _run_forest(data, args, bandwidth=bandwidth)
    report = _base_report("cluster", args, data, forest, labels, modes,
                          bandwidth=bandwidth)
    report["input"] = args.input
    report.update(report_extra)
    if data.labels is not None:
        report["ari"] = adjusted_rand_index(data.labels, labels.label)
        report["ami"] = adjusted_mutual_info(data.labels, labels.label)
    _write_labels(args.output, labels.label)
    _atomic_write(report_path(args.output), format_report(report))
    sys.stdout.write(format_report(report))
    return EXIT_OK


def cmd_segment(args) -> int:
    try:
        pixels = read_ppm(args.input)
    except OSError as exc:
        raise InputError(f"cannot read {args.input}: {exc}") from exc
    except PpmError as exc:
        raise InputError(f"{args.input}: {exc}") from exc
    spec = ImageFeatureSpec(spatial_weight=args.spatial_weight)
    data = image_features(pixels, spec)
    forest, labels, modes = _run_forest(data, args)

    flat = pixels.reshape(-1, 3).astype(np.float64)
    out = np.empty_like(flat)
    for root in np.unique(labels.label):
        members = labels.label == root
        out[members] = flat[members].mean(axis=0)
    segmented = np.clip(np.rint(out), 0, 255).astype(np.uint8).reshape(pixels.shape)
    write_ppm(args.output, segmented)

    report = _base_report("segment", args, data, forest, labels, modes)
    report["input"] = args.input
    report["spatial_weight"] = args.spatial_weight
    report["image_width"] = int(pixels.shape[1])
    report["image_height"] = int(pixels.shape[0])
    report["num_segments"] = labels.num_clusters
    _atomic_write(report_path(args.output), format_report(report))
    sys.stdout.write(format_report(report))
    return EXIT_OK


def cmd_modes(args) -> int:
    data = load_csv(args.input, has_header=args.has_header,
                    label_column=args.labels_col)
    forest, labels, modes = _run_forest(data, args)
    dens = forest.densities.values[modes.ids]
    order = np.lexsort((modes.ids, -dens))  # density desc, id asc
    lines = []
    for pos in order:
        coords = ",".join(repr(float(v)) for v in modes.coords[pos])
        lines.append(f"{coords},{float(dens[pos])!r}\n")
    _atomic_write(args.output, "".join(lines))
    report = _base_report("modes", args, data, forest, labels, modes)
    report["input"] = args.input
    _atomic_write(report_path(args.output), format_report(report))
    sys.stdout.write(format_report(report))
    return EXIT_OK


def cmd_bench(args) -> int:
    sizes = _parse_sizes(args.sizes)
    # untimed warmup pass so allocator and cache effects don't land on the
    # first timed size
    _run_forest(random_mixture(200, args.dim, args.components, seed=args.seed),
                args)
    rows = []
    for n in sizes:
        samples = []
        for rep in range(args.repeats):
            data = random_mixture(n, args.dim, args.components, seed=args.seed)
            forest, _, _ = _run_forest(data, args)
            samples.append([forest.stage_ms[k] for k in
                            ("build_ms", "kde_ms", "graph_ms", "total_ms")])
        med = np.median(np.asarray(samples), axis=0)
        rows.append((n, *med))
    text = "n,build_ms,kde_ms,graph_ms,total_ms\n" + "".join(
        f"{n},{b:.3f},{k:.3f},{g:.3f},{t:.3f}\n" for n, b, k, g, t in rows)
    _atomic_write(args.output, text)
    sys.stdout.write(text)
    return EXIT_OK


# -- argument plumbing -----------------------------------------------------


def _parse_sweep(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise _UsageError(f"--sweep must be H_MIN:H_MAX:STEPS, got {text!r}")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise _UsageError(f"--sweep must be H_MIN:H_MAX:STEPS, got {text!r}") from None
    if lo <= 0 or hi < lo or steps < 1:
        raise _UsageError(f"bad --sweep range {text!r}")
    return lo, hi, steps


def _parse_sizes(text: str):
    try:
        sizes = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise _UsageError(f"--sizes must be comma-separated integers, got {text!r}") from None
    if not sizes or any(s < 1 for s in sizes):
        raise _UsageError(f"bad --sizes {text!r}")
    return sizes


def _add_shared(parser: argparse.ArgumentParser, with_input=True):
    if with_input:
        parser.add_argument("--input", required=True, help="input file path")
    parser.add_argument("--output", required=True, help="output file path")
    parser.add_argument("--bandwidth", type=float, required=True,
                        help="kernel bandwidth h (> 0)")
    parser.add_argument("--c", type=float, default=1.5,
                        help="neighbor approximation factor (> 1)")
    parser.add_argument("--epsilon", type=float, default=0.1,
                        help="density estimator accuracy target")
    parser.add_argument("--estimator", choices=("exact", "hbe"), default="hbe",
                        help="density estimator")
    parser.add_argument("--exact", action="store_true",
                        help="force the exact quadratic pipeline")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--lsh-tables", type=int, default=None,
                        help="hash table count (default: sized from n)")
    parser.add_argument("--lsh-concat", type=int, default=None,
                        help="hashes concatenated per key (default: ~log2 n)")
    parser.add_argument("--bucket-width", type=float, default=None,
                        help="hash bucket width (default: bandwidth)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lshqs",
                     description="Density-based clustering via hashed Quick Shift")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", parents=[], help="cluster a numeric CSV")
    _add_shared(p)
    p.add_argument("--labels-col", type=int, default=None,
                   help="0-based ground-truth label column (excluded from features)")
    p.add_argument("--has-header", action="store_true",
                   help="skip the first CSV line")
    p.add_argument("--sweep", default=None, metavar="H_MIN:H_MAX:STEPS",
                   help="grid-search bandwidth by ARI (needs --labels-col)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("segment", help="segment a PPM image")
    _add_shared(p)
    p.add_argument("--lambda", dest="spatial_weight", type=float, default=0.2,
                   help="spatial coordinate weight in pixel features")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("modes", help="emit estimated density modes as CSV")
    _add_shared(p)
    p.add_argument("--labels-col", type=int, default=None,
                   help="0-based label column to exclude from features")
    p.add_argument("--has-header", action="store_true",
                   help="skip the first CSV line")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("bench", help="scaling benchmark on synthetic mixtures")
    _add_shared(p, with_input=False)
    p.add_argument("--sizes", default="1000,2000,4000,8000",
                   help="comma-separated dataset sizes")
    p.add_argument("--dim", type=int, default=8, help="dimensionality")
    p.add_argument("--components", type=int, default=5,
                   help="mixture component count")
    p.add_argument("--repeats", type=int, default=1,
                   help="repeats per size; timings are medians")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # invariant violation or bug
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
