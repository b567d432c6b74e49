"""Command-line front end.

Four subcommands: ``compress`` (one-shot compression of a target into K
points), ``sample-next`` (incremental non-repeating sampling against a
persistent history ledger), ``evaluate`` (quality metrics as one JSON line)
and ``plot`` (standalone SVG scatter).

Every output-producing run writes a JSON manifest next to its output; a run
can be reproduced bit for bit with ``--manifest <file>`` (for sample-next
the ledger must first be restored to the row count recorded in the
manifest, since the command extends whatever ledger it finds).

Exit codes: 0 success, 2 argument or target-spec error, 3 I/O or file
format error, 4 numeric failure (non-finite loss).  Concurrent invocations
against one ledger file are unsupported: the last atomic rename wins.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .core import (
    CompressionConfig,
    HistoryLedger,
    NonFiniteLossError,
    compress,
    sample_next,
)
from .diagnostics import allocation_counts, mc_energy_distance_sq, min_pairwise_distance
from .distributions import GridMixture, TargetSpecError, parse_target_spec
from .io import (
    PointFileError,
    read_ledger_csv,
    read_points_csv,
    write_ledger_csv,
    write_points_csv,
)
from .kernel import Kernel
from .rng import SeededRng, derive_seed

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

_CANVAS = 800
_MARGIN_FRACTION = 0.10


def _add_solver_flags(sub, with_out=True):
    sub.add_argument("--target", help="target spec: gaussian:dim=N | grid:rows=..,cols=..[,spacing=..,sigma=..] | csv:PATH")
    sub.add_argument("--seed", type=int, default=0, help="unsigned 64-bit seed (default 0)")
    sub.add_argument("--batch", type=int, default=256, help="batch size B (default 256)")
    sub.add_argument("--iters", type=int, default=1000, help="optimizer iterations (default 1000)")
    sub.add_argument("--step", type=float, default=0.05, help="step size (default 0.05)")
    sub.add_argument("--kernel-a", type=float, default=1e-6, help="kernel smoothing a (default 1e-6)")
    sub.add_argument("--optimizer", choices=["adam", "sgd"], default="adam", help="first-order method (default adam)")
    if with_out:
        sub.add_argument("--out", help="output CSV path")
    sub.add_argument("--history", help="history ledger CSV path")
    sub.add_argument("--manifest", help="re-run from a recorded manifest (overrides all other flags)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="energyquant",
        description="Compress probability distributions into point sets; sample without repeating.",
    )
    parser.add_argument("--version", action="version", version=f"energyquant {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress a target into K points")
    _add_solver_flags(p)
    p.add_argument("--k", type=int, help="number of points to produce")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("sample-next", help="emit new points that avoid the ledger history")
    _add_solver_flags(p, with_out=False)
    p.add_argument("--count", type=int, default=1, help="number of points to emit (default 1)")
    p.set_defaults(func=cmd_sample_next)

    p = sub.add_parser("evaluate", help="print quality metrics for a points file as JSON")
    p.add_argument("--points", required=True, help="points CSV to evaluate")
    p.add_argument("--target", required=True, help="target spec to compare against")
    p.add_argument("--samples", type=int, default=100_000, help="Monte-Carlo sample count (default 100000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernel-a", type=float, default=1e-6)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot", help="render points (and optional centers) to an SVG scatter")
    p.add_argument("--points", required=True, help="points or ledger CSV")
    p.add_argument("--centers", help="optional centers CSV, drawn in red")
    p.add_argument("--labels", action="store_true", help="label each point with its index")
    p.add_argument("--out", required=True, help="output SVG path")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TargetSpecError as exc:
        print(f"energyquant: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PointFileError as exc:
        print(f"energyquant: {exc}", file=sys.stderr)
        return EXIT_IO
    except NonFiniteLossError as exc:
        print(f"energyquant: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"energyquant: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"energyquant: {exc}", file=sys.stderr)
        return EXIT_IO


def _require(args, name: str):
    value = getattr(args, name)
    if value is None:
        raise ValueError(f"--{name.replace('_', '-')} is required")
    return value


def _config_from_args(args, k: int) -> CompressionConfig:
    return CompressionConfig(
        k=k,
        batch_size=args.batch,
        iterations=args.iters,
        step_size=args.step,
        optimizer=args.optimizer,
        kernel_a=args.kernel_a,
        seed=args.seed,
    )


def _load_manifest(path) -> dict:
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise PointFileError(f"{path}: not a valid manifest: {exc}") from None
    if not isinstance(manifest, dict) or "command" not in manifest:
        raise PointFileError(f"{path}: not a valid manifest (missing command)")
    return manifest


def _apply_manifest(args, manifest: dict, expected_command: str) -> None:
    if manifest["command"] != expected_command:
        raise ValueError(
            f"manifest records command {manifest['command']!r}, "
            f"expected {expected_command!r}"
        )
    mapping = {
        "target": "target",
        "seed": "seed",
        "batch_size": "batch",
        "iterations": "iters",
        "step_size": "step",
        "optimizer": "optimizer",
        "kernel_a": "kernel_a",
        "history": "history",
        "out": "out",
        "k": "k",
        "count": "count",
    }
    for key, attr in mapping.items():
        if key in manifest and hasattr(args, attr):
            setattr(args, attr, manifest[key])


def _sidecar_paths(out_path: str):
    root, _ = os.path.splitext(out_path)
    return root + ".loss.csv", root + ".manifest.json"


def _write_manifest(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_loss_trace(path, trace: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("iteration,loss\n")
        for i, value in enumerate(trace):
            fh.write(f"{i},{float(value)!r}\n")


def cmd_compress(args) -> int:
    if args.manifest:
        _apply_manifest(args, _load_manifest(args.manifest), "compress")
    target_spec = _require(args, "target")
    k = _require(args, "k")
    out = _require(args, "out")
    target = parse_target_spec(target_spec)
    history = (
        HistoryLedger(read_ledger_csv(args.history))
        if args.history
        else HistoryLedger.empty()
    )
    config = _config_from_args(args, k)
    result = compress(target, history, config)
    loss_path, manifest_path = _sidecar_paths(out)
    write_points_csv(out, result.points)
    _write_loss_trace(loss_path, result.loss_trace)
    _write_manifest(
        manifest_path,
        {
            "tool": "energyquant",
            "version": __version__,
            "command": "compress",
            "target": target_spec,
            "k": k,
            "batch_size": config.batch_size,
            "iterations": config.iterations,
            "step_size": config.step_size,
            "optimizer": config.optimizer,
            "kernel_a": config.kernel_a,
            "seed": config.seed,
            "history": args.history,
            "out": out,
            "loss_trace": loss_path,
            "final_loss": result.final_loss,
        },
    )
    return EXIT_OK


def cmd_sample_next(args) -> int:
    rows_required = None
    if args.manifest:
        manifest = _load_manifest(args.manifest)
        _apply_manifest(args, manifest, "sample-next")
        rows_required = manifest.get("ledger_rows_before")
    target_spec = _require(args, "target")
    ledger_path = _require(args, "history")
    count = args.count
    if count < 1:
        raise ValueError(f"--count must be >= 1, got {count}")
    target = parse_target_spec(target_spec)
    ledger = (
        HistoryLedger(read_ledger_csv(ledger_path))
        if os.path.exists(ledger_path)
        else HistoryLedger.empty()
    )
    rows_before = len(ledger)
    if rows_required is not None and rows_before != rows_required:
        raise ValueError(
            f"ledger {ledger_path} has {rows_before} rows but the manifest was "
            f"recorded with {rows_required}; restore the ledger to reproduce the run"
        )
    for _ in range(count):
        emission_index = len(ledger) + 1
        config = CompressionConfig(
            k=1,
            batch_size=args.batch,
            iterations=args.iters,
            step_size=args.step,
            optimizer=args.optimizer,
            kernel_a=args.kernel_a,
            seed=derive_seed(args.seed, emission_index),
        )
        point = sample_next(target, ledger, config)
        ledger = ledger.extended(point)
        write_ledger_csv(ledger_path, ledger.points)
    _write_manifest(
        ledger_path + ".manifest.json",
        {
            "tool": "energyquant",
            "version": __version__,
            "command": "sample-next",
            "target": target_spec,
            "count": count,
            "batch_size": args.batch,
            "iterations": args.iters,
            "step_size": args.step,
            "optimizer": args.optimizer,
            "kernel_a": args.kernel_a,
            "seed": args.seed,
            "history": ledger_path,
            "ledger_rows_before": rows_before,
        },
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    points = read_points_csv(args.points)
    target = parse_target_spec(args.target)
    kernel = Kernel(args.kernel_a)
    rng = SeededRng(args.seed)
    energy = mc_energy_distance_sq(points, target, args.samples, kernel, rng)
    report = {
        "energy_distance_sq": energy,
        "min_pairwise_distance": (
            min_pairwise_distance(points) if len(points) >= 2 else None
        ),
        "allocation_counts": (
            [int(c) for c in allocation_counts(points, target.centers())]
            if isinstance(target, GridMixture)
            else None
        ),
    }
    print(json.dumps(report))
    return EXIT_OK


def _read_plot_file(path):
    """Points plus 1-based labels; ledger files keep their emission indices."""
    with open(path, newline="") as fh:
        first = fh.readline()
    if first.split(",")[0].strip() == "index":
        points = read_ledger_csv(path)
        if len(points) == 0:
            raise PointFileError(f"{path}: no data rows")
    else:
        points = read_points_csv(path)
    return points, np.arange(1, len(points) + 1)


def _as_xy(points: np.ndarray) -> np.ndarray:
    if points.shape[1] == 1:
        return np.column_stack([points[:, 0], np.zeros(len(points))])
    if points.shape[1] == 2:
        return points
    raise ValueError(f"plot supports 1D or 2D points, got dimension {points.shape[1]}")


def _svg_scatter(points, centers=None, labels=None) -> str:
    drawn = points if centers is None else np.vstack([points, centers])
    low = drawn.min(axis=0)
    high = drawn.max(axis=0)
    span = np.where(high - low > 0, high - low, 1.0)
    pad = _MARGIN_FRACTION * span
    low = low - pad
    high = high + pad

    def to_px(xy):
        px = (xy[:, 0] - low[0]) / (high[0] - low[0]) * _CANVAS
        py = (high[1] - xy[:, 1]) / (high[1] - low[1]) * _CANVAS
        return px, py

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_CANVAS}" height="{_CANVAS}" '
        f'viewBox="0 0 {_CANVAS} {_CANVAS}">',
        f'<rect width="{_CANVAS}" height="{_CANVAS}" fill="white"/>',
    ]
    if centers is not None:
        cx, cy = to_px(centers)
        for x, y in zip(cx, cy):
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="6" fill="red"/>')
    px, py = to_px(points)
    for x, y in zip(px, py):
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="blue"/>')
    if labels is not None:
        for x, y, label in zip(px, py, labels):
            parts.append(
                f'<text x="{x + 7:.2f}" y="{y - 7:.2f}" font-size="14" '
                f'font-family="sans-serif">{label}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_plot(args) -> int:
    points, indices = _read_plot_file(args.points)
    points = _as_xy(points)
    centers = None
    if args.centers:
        centers = _as_xy(read_points_csv(args.centers))
    svg = _svg_scatter(points, centers, indices if args.labels else None)
    with open(args.out, "w") as fh:
        fh.write(svg)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
