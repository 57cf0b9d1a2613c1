"""Command-line pipeline driver.

Subcommands cover the full workflow: generate a field, build an
SR-octree under an error bound, reduce it to a coarse uniform grid,
reconstruct at full resolution with a chosen 2x backend (including
external model servers), and score the result.

Exit codes: 0 success, 2 usage error, 1 runtime error (one line on
stderr).  Outputs are deterministic functions of the inputs.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import backend as model_backend
from .errors import BadSpec, HierSRError
from .formats import read_tree, read_volume, write_tree, write_volume
from .hier import blockwise_upscale, hierarchical_downscale, hierarchical_upscale
from .metrics import evaluate
from .octree import (
    BuildConfig,
    build_sr_octree,
    level_histogram,
    level_map,
    reduction_factor,
)
from .resample import Downscaler, UpscalerHierarchy, upscale2x_linear, upscale2x_nearest
from .volume import SYNTHETIC_KINDS, gen_synthetic


def worker_cap() -> int:
    """Parallelism ceiling from HIERSR_THREADS (0 or unset = auto).

    Current kernels are single-threaded numpy, so any cap is honored;
    the knob is validated here so future parallel kernels share it.
    """
    raw = os.environ.get("HIERSR_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise HierSRError(f"HIERSR_THREADS={raw!r} is not an integer") from None
    if cap < 0:
        raise HierSRError(f"HIERSR_THREADS={cap} must be >= 0")
    return cap or (os.cpu_count() or 1)


def _parse_dims(text: str) -> tuple[int, ...]:
    parts = text.replace(",", "x").split("x")
    try:
        dims = tuple(int(p) for p in parts if p)
    except ValueError:
        raise HierSRError(f"bad dims {text!r}; use e.g. 64x64 or 64x64x64") from None
    return dims

def _make_hierarchy(backend: str) -> tuple[UpscalerHierarchy, list]:
    if backend == "nearest":
        return UpscalerHierarchy.uniform(upscale2x_nearest), []
    if backend == "linear":
        return UpscalerHierarchy.uniform(upscale2x_linear), []
    if backend.startswith("model:"):
        handles = []
        per_level = {}
        try:
            for spec in backend[len("model:"):].split(","):
                handle = model_backend.connect(spec.strip())
                handles.append(handle)
                per_level[handle.level] = handle
        except HierSRError:
            for h in handles:
                h.close()
            raise
        # unmapped levels fall back to linear interpolation
        return UpscalerHierarchy(per_level, fallback=upscale2x_linear), handles
    raise BadSpec(f"unknown backend {backend!r}; use nearest, linear or model:<spec>")


def _cmd_gen(args) -> int:
    v = gen_synthetic(args.kind, _parse_dims(args.dims), args.seed)
    write_volume(v, args.output)
    return 0


def _cmd_build(args) -> int:
    v = read_volume(args.input)
    cfg = BuildConfig(
        epsilon=args.epsilon,
        min_chunk=args.min_chunk,
        min_level=args.min_level,
        max_level=args.max_level,
        downscaler=Downscaler.from_name(args.downscaler),
    )
    try:
        cfg.validate()
    except ValueError as e:
        raise HierSRError(str(e)) from None
    tree = build_sr_octree(v, cfg)
    write_tree(tree, args.output)
    return 0


def _cmd_downscale(args) -> int:
    tree = read_tree(args.tree)
    write_volume(hierarchical_downscale(tree), args.output)
    return 0


def _cmd_upscale(args, blockwise: bool = False) -> int:
    tree = read_tree(args.tree)
    hierarchy, handles = _make_hierarchy(args.backend)
    try:
        if blockwise:
            out = blockwise_upscale(tree, hierarchy)
        else:
            lr = read_volume(args.lr) if args.lr else hierarchical_downscale(tree)
            out = hierarchical_upscale(lr, tree, hierarchy)
    finally:
        for h in handles:
            h.close()
    write_volume(out, args.output)
    return 0


def _cmd_metrics(args) -> int:
    a = read_volume(args.a)
    b = read_volume(args.b)
    tree = read_tree(args.tree) if args.tree else None
    report = evaluate(a, b, tree)
    text = report.to_text()
    with open(args.out, "w") as f:
        f.write(text)
    if args.json:
        with open(args.json, "w") as f:
            f.write(report.to_json())
    sys.stdout.write(text)
    return 0


def _cmd_info(args) -> int:
    tree = read_tree(args.tree)
    leaves = sum(1 for _ in tree.iter_leaves())
    print("full_dims:", " ".join(str(n) for n in tree.full_dims))
    print(f"nodes: {tree.node_count}")
    print(f"leaves: {leaves}")
    print(f"min_level: {tree.min_level}")
    print(f"max_level: {tree.max_level}")
    print(f"reduction_factor: {reduction_factor(tree)!r}")
    for lvl, (count, voxels) in level_histogram(tree).items():
        print(f"level {lvl}: {count} leaves, {voxels} voxels")
    return 0


def _cmd_levelmap(args) -> int:
    tree = read_tree(args.tree)
    write_volume(level_map(tree), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hiersr",
        description="Error-bounded SR-octrees and hierarchical super resolution",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic volume")
    p.add_argument("--kind", required=True, choices=SYNTHETIC_KINDS)
    p.add_argument("--dims", required=True, help="e.g. 64x64 or 64x64x64")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="output .hvol path")
    p.set_defaults(handler=_cmd_gen)

    p = sub.add_parser("build", help="build an SR-octree from a volume")
    p.add_argument("--input", required=True, help="input .hvol path")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--min-chunk", type=int, default=2)
    p.add_argument("--min-level", type=int, default=0)
    p.add_argument("--max-level", type=int, default=3)
    p.add_argument("--downscaler", default="mean", choices=["mean", "subsample"])
    p.add_argument("--output", required=True, help="output .sroc path")
    p.set_defaults(handler=_cmd_build)

    p = sub.add_parser("downscale",
                       help="reduce a tree to its coarsest uniform grid")
    p.add_argument("--tree", required=True)
    p.add_argument("--output", required=True, help="output .hvol path")
    p.set_defaults(handler=_cmd_downscale)

    for name, blockwise in (("upscale", False), ("upscale-blockwise", True)):
        p = sub.add_parser(
            name,
            help="reconstruct at full resolution"
            + (" by upscaling each node independently (baseline)" if blockwise else ""),
        )
        p.add_argument("--tree", required=True)
        p.add_argument("--lr", default=None,
                       help="coarse .hvol input (derived from the tree if omitted)")
        p.add_argument("--backend", required=True,
                       help="nearest | linear | model:<spec>[,<spec>...]")
        p.add_argument("--output", required=True, help="output .hvol path")
        p.set_defaults(handler=lambda args, bw=blockwise: _cmd_upscale(args, bw))

    p = sub.add_parser("metrics", help="score a reconstruction against a reference")
    p.add_argument("--a", required=True, help="ground-truth .hvol")
    p.add_argument("--b", required=True, help="reconstruction .hvol")
    p.add_argument("--tree", default=None, help="tree for the seam score")
    p.add_argument("--out", required=True, help="report path (key=value text)")
    p.add_argument("--json", default=None, help="also write a JSON report here")
    p.set_defaults(handler=_cmd_metrics)

    p = sub.add_parser("info", help="print tree statistics")
    p.add_argument("--tree", required=True)
    p.set_defaults(handler=_cmd_info)

    p = sub.add_parser("levelmap", help="write the per-voxel level volume")
    p.add_argument("--tree", required=True)
    p.add_argument("--output", required=True, help="output .hvol path")
    p.set_defaults(handler=_cmd_levelmap)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        worker_cap()
        return args.handler(args)
    except (HierSRError, OSError) as e:
        print(f"hiersr: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
