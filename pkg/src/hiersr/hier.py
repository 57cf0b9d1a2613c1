"""Hierarchical downscale / upscale over an SR-octree, plus the block-wise
baseline.

The downscale pass reduces a mixed-level tree to one uniform grid at the
coarsest level present, merging single-voxel sibling groups whenever a
block gets too small to halve.  The upscale pass then applies a 2x
upscaler to the whole domain, one level at a time, overwriting every
voxel for which the tree stores data at the current level or finer
("stale voxels") before the next step.  Because each upscale call sees
the entire domain, node boundaries never become seams.

The block-wise baseline instead upscales each leaf independently and
stitches the patches; it exists for comparison.
"""
from __future__ import annotations

import numpy as np

from .errors import OrphanSingleVoxel, ShapeMismatch
from .octree import SRNode, SROctree, _octant_offsets, _paste, assemble_leaves
from .resample import (
    UpscalerHierarchy,
    _checked_upscale,
    _downscale2x_array,
    _downscale_by_array,
    apply_hierarchy,
)
from .volume import Region, Volume


def _copy_structure(node: SRNode) -> SRNode:
    if node.is_leaf:
        return SRNode(node.region, node.level, data=node.data)
    return SRNode(node.region, node.level,
                  children=tuple(_copy_structure(c) for c in node.children))


def _copy_tree(t: SROctree) -> SROctree:
    # fresh node objects; data volumes are shared because the passes below
    # only ever replace them, never mutate in place
    return SROctree(t.full_dims, _copy_structure(t.root), t.config)


def _combine_inplace(node: SRNode, level: int) -> None:
    def is_single(n: SRNode) -> bool:
        return n.is_leaf and n.level == level and n.data.data.size == 1

    if node.is_leaf:
        # only the root can arrive here; it has no siblings to merge with
        if is_single(node):
            raise OrphanSingleVoxel(
                f"root is a lone single-voxel leaf at level {level}"
            )
        return
    for child in node.children:
        if not child.is_leaf:
            _combine_inplace(child, level)
    singles = [c for c in node.children if is_single(c)]
    if not singles:
        return
    if len(singles) != len(node.children):
        raise OrphanSingleVoxel(
            f"single-voxel leaf at level {level} lacks same-shape siblings"
        )
    ndim = node.region.ndim
    merged = np.empty((2,) * ndim, dtype=np.float32)
    for bits, child in zip(_octant_offsets(ndim), node.children):
        merged[bits] = child.data.data.reshape(())
    node.data = Volume(merged)
    node.level = level
    node.children = None


def combine_single_voxel_siblings(t: SROctree, level: int) -> SROctree:
    """Merge every 2^D group of single-voxel sibling leaves at ``level``
    into one 2^D-voxel leaf at the same level.

    The field content is unchanged.  A single-voxel leaf at ``level``
    without a full same-shape sibling set raises OrphanSingleVoxel: trees
    built by :func:`build_sr_octree` never produce one, so hitting it
    means the tree is corrupt.  The input tree is not modified.
    """
    work = _copy_tree(t)
    _combine_inplace(work.root, level)
    return work


def hierarchical_downscale(t: SROctree) -> Volume:
    """Reduce the whole tree to one uniform grid at its coarsest level.

    Starting at the finest level present, single-voxel sibling groups are
    merged and every leaf at that level is halved, until all leaves sit
    at the tree's maximum downscaling level; the blocks then assemble
    into a grid of dims ``full_dims / 2^max_level``.  Operates on a
    working copy; the input tree is untouched.
    """
    work = _copy_tree(t)
    target = work.max_level
    d = work.config.downscaler
    for level in range(work.min_level, target):
        _combine_inplace(work.root, level)
        for leaf in work.iter_leaves():
            if leaf.level == level:
                leaf.data = Volume(_downscale2x_array(leaf.data.data, d))
                leaf.level = level + 1
    return assemble_leaves(work, target)


def stale_overwrites(t: SROctree, level: int) -> list[tuple[Region, SRNode]]:
    """The overwrite plan for one upscale step.

    Returns (region scaled to the level-``level`` grid, source leaf) for
    every leaf whose stored data is at ``level`` or finer.  A finer leaf
    is included only if its block can be re-downscaled to ``level``, i.e.
    its stored dims divide by 2^(level - leaf level); otherwise it waits
    for a finer step (it always qualifies at its own level).
    """
    plan = []
    scale = 1 << level
    for leaf in t.iter_leaves():
        if leaf.level > level:
            continue
        k = level - leaf.level
        if any(s % (1 << k) for s in leaf.data.dims):
            continue
        region = Region(
            tuple(o // scale for o in leaf.region.origin),
            tuple(e // scale for e in leaf.region.extent),
        )
        plan.append((region, leaf))
    return plan


def hierarchical_upscale(lr: Volume, t: SROctree, h: UpscalerHierarchy) -> Volume:
    """Reconstruct the full-resolution grid from the coarse uniform volume.

    Each iteration upscales the entire current volume by 2x (using the
    hierarchy's upscaler for the level being produced) and then overwrites
    stale voxels with stored tree data, re-downscaling finer leaves to the
    current level with the tree's configured downscaler so every step
    works from the best data available.  Leaf regions are disjoint, so
    overwrite order cannot affect the result.
    """
    max_level = t.max_level
    scale = 1 << max_level
    if any(n % scale for n in t.full_dims) or \
            tuple(lr.dims) != tuple(n // scale for n in t.full_dims):
        raise ShapeMismatch(
            f"LR dims {lr.dims} do not match full dims {t.full_dims} at "
            f"level {max_level}"
        )
    d = t.config.downscaler
    cur = lr.data
    for level in range(max_level, 0, -1):
        cur = _checked_upscale(h.for_level(level - 1), Volume(cur)).data
        for region, leaf in stale_overwrites(t, level - 1):
            k = (level - 1) - leaf.level
            block = leaf.data.data if k == 0 else \
                _downscale_by_array(leaf.data.data, 1 << k, d)
            cur[region.slices()] = block
    return Volume(cur, lr.meta)


def blockwise_upscale(t: SROctree, h: UpscalerHierarchy) -> Volume:
    """Baseline: upscale each leaf independently and stitch the patches.

    Every leaf is brought to full resolution with the same hierarchy of
    upscalers, but each call sees only that leaf's block, so patch
    borders get no neighbor information and seams can appear.
    """
    out = np.empty(t.full_dims, dtype=np.float32)
    for leaf in t.iter_leaves():
        if leaf.level == 0:
            block = leaf.data
        else:
            block = apply_hierarchy(h, leaf.data, leaf.level, 0)
        _paste(out, leaf.region, 1, block.data)
    return Volume(out)
