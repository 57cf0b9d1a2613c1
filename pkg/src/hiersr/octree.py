"""SR-octree: a spatial partition whose leaves store downscaled data blocks.

Each leaf holds its region's data at some downscaling level L (1/2^L of
full resolution per axis).  Construction greedily downscales: keep halving
a node while the max-norm deviation from its full-resolution data stays
within epsilon, otherwise split into 2^D suboctants and retry, subject to
a minimum suboctant size.  Adjacent same-level leaves are merged afterward
so large uniform regions cost one node.

The same code serves quadtrees (2D) and octrees (3D).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import EmptyVolume, IndivisibleDimension, InvariantViolation
from .resample import Downscaler, _downscale2x_array, _downscale_by_array, _repeat_array
from .volume import Region, Volume


@dataclass
class BuildConfig:
    """Construction parameters for an SR-octree.

    epsilon     max-norm error bound, in normalized data units
    min_chunk   a split only happens if every suboctant axis, at the
                node's current stored resolution, is strictly larger
    min_level   forced initial downscaling applied before the error test
    max_level   cap on downscaling
    """

    epsilon: float
    min_chunk: int = 2
    min_level: int = 0
    max_level: int = 3
    downscaler: Downscaler = Downscaler.MEAN_POOL

    def validate(self) -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.min_chunk < 2:
            raise ValueError(f"min_chunk must be >= 2, got {self.min_chunk}")
        if not 0 <= self.min_level <= self.max_level:
            raise ValueError(
                f"need 0 <= min_level <= max_level, got {self.min_level}..{self.max_level}"
            )


@dataclass
class SRNode:
    """Tree node: a leaf carries data, an internal node carries children.

    ``region`` is in full-resolution voxel coordinates.  A leaf's data has
    dims ``region.extent / 2^level``.  Children split the region into
    equal halves per axis, ordered lexicographically by origin (slowest
    axis outermost); ``level`` on an internal node records the level the
    region had when it was split.
    """

    region: Region
    level: int
    data: Volume | None = None
    children: tuple["SRNode", ...] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.children is None


@dataclass
class SROctree:
    full_dims: tuple[int, ...]
    root: SRNode
    config: BuildConfig

    @property
    def ndim(self) -> int:
        return len(self.full_dims)

    def iter_nodes(self) -> Iterator[SRNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if node.children is not None:
                stack.extend(reversed(node.children))

    def iter_leaves(self) -> Iterator[SRNode]:
        for node in self.iter_nodes():
            if node.is_leaf:
                yield node

    @property
    def node_count(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    @property
    def min_level(self) -> int:
        return min(leaf.level for leaf in self.iter_leaves())

    @property
    def max_level(self) -> int:
        return max(leaf.level for leaf in self.iter_leaves())


def _octant_offsets(ndim: int) -> list[tuple[int, ...]]:
    # lexicographic by origin, slowest axis outermost
    return list(itertools.product((0, 1), repeat=ndim))


def node_error(original: Volume, candidate_level: int,
               d: Downscaler = Downscaler.MEAN_POOL) -> float:
    """Max-norm error of storing ``original`` at ``candidate_level``.

    The candidate is the block downscaled by 2^level, brought back to full
    resolution by nearest replication, and compared voxel-wise against the
    level-0 data, so the result is the cumulative distortion of the stored
    content rather than a one-step increment.
    """
    if candidate_level == 0:
        return 0.0
    factor = 1 << candidate_level
    coarse = _downscale_by_array(original.data, factor, d)
    approx = _repeat_array(coarse, factor)
    return float(np.max(np.abs(original.data - approx)))


def build_sr_octree(v: Volume, cfg: BuildConfig) -> SROctree:
    """Greedy error-bounded reduction of a uniform volume into an SR-octree.

    The root is force-downscaled to ``min_level`` first.  Each node then
    keeps accepting one more 2x downscale while the cumulative max-norm
    error stays within epsilon and the level cap is not hit; on failure it
    splits into suboctants (when min_chunk allows) and recurses.  Finally
    adjacent same-level sibling leaves are joined.
    """
    cfg.validate()
    if v.data.size == 0:
        raise EmptyVolume("cannot build a tree from an empty volume")
    if any(n % (1 << cfg.max_level) for n in v.dims):
        raise IndivisibleDimension(
            f"dims {v.dims} not divisible by 2^max_level = {1 << cfg.max_level}"
        )
    d = cfg.downscaler
    stored0 = _downscale_by_array(v.data, 1 << cfg.min_level, d)

    def grow(origin: tuple[int, ...], full: np.ndarray, stored: np.ndarray,
             level: int) -> SRNode:
        extent = full.shape
        while level < cfg.max_level and all(s >= 2 and s % 2 == 0 for s in stored.shape):
            cand = _downscale2x_array(stored, d)
            approx = _repeat_array(cand, 1 << (level + 1))
            err = float(np.max(np.abs(full - approx)))
            if err <= cfg.epsilon:
                stored = cand
                level += 1
            else:
                break
        region = Region(origin, tuple(extent))
        s = stored.shape
        can_split = (
            level < cfg.max_level
            and all(x % 2 == 0 for x in s)
            and all(x // 2 > cfg.min_chunk for x in s)
        )
        if not can_split:
            return SRNode(region, level, data=Volume(np.ascontiguousarray(stored)))
        children = []
        half_full = tuple(e // 2 for e in extent)
        half_stored = tuple(x // 2 for x in s)
        for bits in _octant_offsets(len(extent)):
            child_origin = tuple(o + b * h for o, b, h in zip(origin, bits, half_full))
            fsl = tuple(slice(b * h, (b + 1) * h) for b, h in zip(bits, half_full))
            ssl = tuple(slice(b * h, (b + 1) * h) for b, h in zip(bits, half_stored))
            children.append(grow(child_origin, full[fsl], stored[ssl], level))
        return SRNode(region, level, children=tuple(children))

    root = grow((0,) * v.ndim, v.data, stored0, cfg.min_level)
    return join_adjacent(SROctree(tuple(v.dims), root, cfg))


def _paste(dst: np.ndarray, region: Region, scale: int, block: np.ndarray) -> None:
    # region coordinates are full-resolution; scale divides them to dst's grid
    sl = tuple(
        slice(o // scale, (o + e) // scale)
        for o, e in zip(region.origin, region.extent)
    )
    dst[sl] = block


def assemble_leaves(t: SROctree, at_level: int) -> Volume:
    """Dense grid at 1/2^at_level resolution from leaves stored at that level."""
    scale = 1 << at_level
    out = np.empty(tuple(n // scale for n in t.full_dims), dtype=np.float32)
    for leaf in t.iter_leaves():
        _paste(out, leaf.region, scale, leaf.data.data)
    return Volume(out)


def join_adjacent(t: SROctree) -> SROctree:
    """Merge every full set of same-level sibling leaves into their parent.

    Applied bottom-up, so cascading merges reach a fixed point in one
    pass.  The represented field is unchanged bit-exactly; the input tree
    is not modified.
    """

    def joined(node: SRNode) -> SRNode:
        if node.is_leaf:
            return node
        kids = tuple(joined(c) for c in node.children)
        lv = kids[0].level
        if all(k.is_leaf and k.level == lv for k in kids):
            scale = 1 << lv
            merged = np.empty(
                tuple(e // scale for e in node.region.extent), dtype=np.float32
            )
            for k in kids:
                sl = tuple(
                    slice((o - po) // scale, (o - po + e) // scale)
                    for o, po, e in zip(k.region.origin, node.region.origin,
                                        k.region.extent)
                )
                merged[sl] = k.data.data
            return SRNode(node.region, lv, data=Volume(merged))
        return SRNode(node.region, node.level, children=kids)

    return SROctree(t.full_dims, joined(t.root), t.config)


def reduction_factor(t: SROctree) -> float:
    """Full-resolution voxel count over stored voxel count."""
    stored = sum(leaf.data.data.size for leaf in t.iter_leaves())
    return float(np.prod(t.full_dims)) / float(stored)


def level_map(t: SROctree) -> Volume:
    """Full-resolution volume holding each voxel's covering-leaf level."""
    out = np.empty(t.full_dims, dtype=np.float32)
    for leaf in t.iter_leaves():
        out[leaf.region.slices()] = float(leaf.level)
    return Volume(out)


def level_histogram(t: SROctree) -> dict[int, tuple[int, int]]:
    """Per level: (leaf count, stored voxel count)."""
    hist: dict[int, tuple[int, int]] = {}
    for leaf in t.iter_leaves():
        c, s = hist.get(leaf.level, (0, 0))
        hist[leaf.level] = (c + 1, s + leaf.data.data.size)
    return dict(sorted(hist.items()))


def validate_tree(t: SROctree) -> None:
    """Check every structural invariant; raise InvariantViolation naming
    the first one broken."""
    ndim = t.ndim
    if t.root.region.origin != (0,) * ndim or t.root.region.extent != t.full_dims:
        raise InvariantViolation("root-covers-domain: root region != full domain")

    def walk(node: SRNode) -> None:
        has_data = node.data is not None
        has_kids = node.children is not None
        if has_data == has_kids:
            raise InvariantViolation(
                "node-structure: exactly one of data/children must be set"
            )
        node.region.check_inside(t.full_dims)
        if node.level < 0:
            raise InvariantViolation("level-nonnegative: negative downscaling level")
        if has_data:
            scale = 1 << node.level
            if any(e % scale for e in node.region.extent):
                raise InvariantViolation(
                    f"level-divisibility: extent {node.region.extent} "
                    f"not divisible by 2^{node.level}"
                )
            want = tuple(e // scale for e in node.region.extent)
            if tuple(node.data.dims) != want:
                raise InvariantViolation(
                    f"data-shape: leaf data dims {node.data.dims} != {want}"
                )
            return
        if len(node.children) != 1 << ndim:
            raise InvariantViolation(
                f"children-count: expected {1 << ndim}, got {len(node.children)}"
            )
        if any(e < 2 or e % 2 for e in node.region.extent):
            raise InvariantViolation(
                f"children-partition: region extent {node.region.extent} cannot halve"
            )
        half = tuple(e // 2 for e in node.region.extent)
        for bits, child in zip(_octant_offsets(ndim), node.children):
            want_origin = tuple(
                o + b * h for o, b, h in zip(node.region.origin, bits, half)
            )
            if child.region.origin != want_origin or child.region.extent != half:
                raise InvariantViolation(
                    f"children-partition: child region {child.region} is not the "
                    f"{bits} half of {node.region}"
                )
            walk(child)

    walk(t.root)

    coverage = np.zeros(t.full_dims, dtype=np.int32)
    for leaf in t.iter_leaves():
        coverage[leaf.region.slices()] += 1
    if not np.all(coverage == 1):
        raise InvariantViolation("leaf-coverage: leaf regions do not tile the domain")

    min_lvl = t.min_level
    singles = [
        leaf for leaf in t.iter_leaves()
        if leaf.level == min_lvl and leaf.data.data.size == 1
    ]
    if singles:
        _check_single_voxel_siblings(t.root, min_lvl)


def _check_single_voxel_siblings(root: SRNode, min_lvl: int) -> None:
    # A single-voxel leaf at MINDSL must be part of a full 2^D sibling set
    # of single-voxel MINDSL leaves (the root, covering the whole domain
    # by itself, is exempt).
    def is_single(n: SRNode) -> bool:
        return n.is_leaf and n.level == min_lvl and n.data.data.size == 1

    stack = [root]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            continue
        if any(is_single(c) for c in node.children):
            if not all(is_single(c) for c in node.children):
                raise InvariantViolation(
                    "single-voxel-siblings: single-voxel leaf at MINDSL lacks "
                    "same-shape siblings"
                )
        stack.extend(node.children)
