"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line and enforcing its stated tolerance and time budget."""
import math
import shutil
import subprocess
import sys
import time
from contextlib import contextmanager
from itertools import product
from pathlib import Path

import numpy as np
import pytest

from hiersr import (
    BuildConfig,
    Downscaler,
    MetricReport,
    Region,
    SRNode,
    SROctree,
    UpscalerHierarchy,
    Volume,
    apply_hierarchy,
    blockwise_upscale,
    build_sr_octree,
    downscale_by,
    gen_synthetic,
    hierarchical_downscale,
    hierarchical_upscale,
    linf,
    mre,
    node_error,
    psnr,
    read_tree,
    read_volume,
    reduction_factor,
    seam_metric,
    ssim,
    upscale2x_linear,
    upscale2x_nearest,
    validate_tree,
    write_tree,
    write_volume,
)
from hiersr.backend import Frame, KIND_REQUEST, encode_frame
from hiersr.formats import encode_tree

NEAREST = UpscalerHierarchy.uniform(upscale2x_nearest)
LINEAR = UpscalerHierarchy.uniform(upscale2x_linear)


@contextmanager
def criterion(name, budget_seconds):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL "
              f"({time.monotonic() - start:.1f}s)")
        raise
    elapsed = time.monotonic() - start
    print(f"[ACCEPTANCE] {name}: PASS ({elapsed:.1f}s, budget {budget_seconds}s)")
    assert elapsed < budget_seconds, f"{name} exceeded {budget_seconds}s budget"


def single_leaf_tree(v, level):
    data = downscale_by(v, 1 << level, Downscaler.MEAN_POOL)
    root = SRNode(Region((0,) * v.ndim, v.dims), level, data=data)
    cfg = BuildConfig(epsilon=0.0, max_level=level)
    return SROctree(tuple(v.dims), root, cfg)


def test_reduction_arithmetic():
    """A 3D single-leaf tree at level 2 reports exactly 64x."""
    with criterion("reduction-arithmetic", 1):
        v = gen_synthetic("constant", (8, 8, 8), seed=0)
        tree = build_sr_octree(v, BuildConfig(epsilon=0.0, max_level=2))
        assert tree.root.is_leaf and tree.root.level == 2
        assert reduction_factor(tree) == 64.0


def test_oracle_equivalence_single_leaf():
    """Hierarchical upscaling of a single-leaf tree must equal plain
    repeated upscaling: bit-exact for nearest, 1e-6 max-norm for linear."""
    with criterion("oracle-equivalence", 30):
        rng = np.random.default_rng(2024)
        dims_pool = [(8, 8), (16, 16), (32, 32), (8, 16), (16, 32),
                     (4, 4, 4), (8, 8, 8), (16, 16, 16), (32, 32, 32),
                     (8, 16, 16)]
        for case in range(200):
            dims = dims_pool[int(rng.integers(len(dims_pool)))]
            level = int(rng.integers(1, 4))
            if any(n % (1 << level) for n in dims):
                level = 1
            v = Volume(rng.uniform(0, 1, dims).astype(np.float32))
            tree = single_leaf_tree(v, level)
            lr = hierarchical_downscale(tree)
            np.testing.assert_array_equal(lr.data, tree.root.data.data)

            got = hierarchical_upscale(lr, tree, NEAREST)
            want = apply_hierarchy(NEAREST, lr, level, 0)
            np.testing.assert_array_equal(got.data, want.data)

            got = hierarchical_upscale(lr, tree, LINEAR)
            want = apply_hierarchy(LINEAR, lr, level, 0)
            assert float(np.max(np.abs(got.data - want.data))) <= 1e-6


def _check_greedy_and_bound(v, tree):
    cfg = tree.config
    for leaf in tree.iter_leaves():
        region_data = Volume(v.data[leaf.region.slices()].copy())
        if leaf.level > cfg.min_level:
            err = node_error(region_data, leaf.level, cfg.downscaler)
            assert err <= cfg.epsilon, \
                f"leaf at level {leaf.level} breaks the error bound: {err}"
        if leaf.level >= cfg.max_level:
            continue
        if any(s % 2 for s in leaf.data.dims):
            continue  # one more halving is impossible
        err = node_error(region_data, leaf.level + 1, cfg.downscaler)
        assert err > cfg.epsilon, \
            f"leaf at level {leaf.level} could have gone deeper (err {err})"


def test_construction_soundness():
    """100 random builds: partition completeness, error bound, greedy
    maximality and the single-voxel sibling rule all hold."""
    with criterion("construction-soundness", 60):
        rng = np.random.default_rng(7)
        dims_pool = [(16, 16), (32, 32), (64, 64), (32, 64), (16, 32)]
        for case in range(100):
            kind = "gaussian_blobs" if case % 2 else "band_limited_noise"
            dims = dims_pool[int(rng.integers(len(dims_pool)))]
            cfg = BuildConfig(
                epsilon=float(rng.uniform(0.005, 0.1)),
                min_chunk=int(rng.integers(2, 4)),
                min_level=int(rng.integers(0, 2)),
                max_level=int(rng.integers(2, 4)),
                downscaler=Downscaler.MEAN_POOL if case % 3 else
                Downscaler.SUBSAMPLE,
            )
            v = gen_synthetic(kind, dims, seed=case)
            tree = build_sr_octree(v, cfg)
            validate_tree(tree)  # partition + structural + sibling rule
            _check_greedy_and_bound(v, tree)


def test_subsample_commutation():
    """Per-node subsampling then assembly equals one global subsample."""
    with criterion("subsample-commutation", 30):
        rng = np.random.default_rng(99)
        dims_pool = [(16, 16), (32, 32), (64, 64), (16, 16, 16), (8, 16, 16)]
        for case in range(50):
            kind = "gaussian_blobs" if case % 2 else "band_limited_noise"
            dims = dims_pool[int(rng.integers(len(dims_pool)))]
            cfg = BuildConfig(
                epsilon=float(rng.uniform(0.01, 0.2)),
                min_level=int(rng.integers(0, 2)),
                max_level=int(rng.integers(2, 4)),
                downscaler=Downscaler.SUBSAMPLE,
            )
            v = gen_synthetic(kind, dims, seed=1000 + case)
            tree = build_sr_octree(v, cfg)
            lr = hierarchical_downscale(tree)
            direct = downscale_by(v, 1 << tree.max_level, Downscaler.SUBSAMPLE)
            np.testing.assert_array_equal(lr.data, direct.data)


def _field_with_fine_patch(dims, seed):
    rng = np.random.default_rng(seed)
    v = gen_synthetic("gaussian_blobs", dims, seed=seed)
    arr = v.data.copy()
    patch_extent = tuple(max(4, n // 4) for n in dims)
    origin = tuple(
        int(rng.integers(0, (n - e) // 4 + 1)) * 4 if n > e else 0
        for n, e in zip(dims, patch_extent)
    )
    sl = tuple(slice(o, o + e) for o, e in zip(origin, patch_extent))
    arr[sl] = gen_synthetic("checker", patch_extent).data
    return Volume(arr)


def test_level0_exactness():
    """Voxels under level-0 leaves survive the full pipeline bit-exactly."""
    with criterion("level0-exactness", 30):
        for case in range(50):
            dims = (32, 32) if case % 2 else (16, 16, 16)
            v = _field_with_fine_patch(dims, seed=case)
            cfg = BuildConfig(epsilon=0.05, max_level=2)
            tree = build_sr_octree(v, cfg)
            level0 = [leaf for leaf in tree.iter_leaves() if leaf.level == 0]
            assert level0, "test field failed to force level-0 leaves"
            out = hierarchical_upscale(hierarchical_downscale(tree), tree, LINEAR)
            for leaf in level0:
                np.testing.assert_array_equal(
                    out.data[leaf.region.slices()], leaf.data.data
                )


def test_seam_superiority():
    """Hierarchical reconstruction shows no more seams than block-wise in
    at least 18 of 20 seeded runs and wins on mean PSNR."""
    with criterion("seam-superiority", 60):
        seam_wins = 0
        psnr_hier = []
        psnr_block = []
        for seed in range(20):
            v = gen_synthetic("gaussian_blobs", (64, 64), seed=seed)
            tree = build_sr_octree(
                v, BuildConfig(epsilon=0.01, min_level=1, max_level=3)
            )
            assert tree.min_level < tree.max_level, "tree is not mixed-level"
            lr = hierarchical_downscale(tree)
            hier = hierarchical_upscale(lr, tree, LINEAR)
            block = blockwise_upscale(tree, LINEAR)
            if seam_metric(hier, tree) <= seam_metric(block, tree):
                seam_wins += 1
            psnr_hier.append(psnr(v, hier))
            psnr_block.append(psnr(v, block))
        assert seam_wins >= 18, f"only {seam_wins}/20 seam wins"
        assert np.mean(psnr_hier) >= np.mean(psnr_block)


def _brute_ssim(x, y):
    win, rad, sig = 11, 5, 1.5
    g = np.exp(-((np.arange(win) - rad) ** 2) / (2 * sig * sig))
    g /= g.sum()
    kernel = g
    for _ in range(x.ndim - 1):
        kernel = np.multiply.outer(kernel, g)
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    vals = []
    for idx in product(*[range(n - win + 1) for n in x.shape]):
        sl = tuple(slice(i, i + win) for i in idx)
        wx, wy = x[sl], y[sl]
        ux = float((kernel * wx).sum())
        uy = float((kernel * wy).sum())
        vx = float((kernel * wx * wx).sum()) - ux * ux
        vy = float((kernel * wy * wy).sum()) - uy * uy
        vxy = float((kernel * wx * wy).sum()) - ux * uy
        vals.append(((2 * ux * uy + c1) * (2 * vxy + c2))
                    / ((ux * ux + uy * uy + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


def test_metric_oracles():
    """PSNR/SSIM/Linf/MRE agree with direct formula evaluation to 1e-4;
    identical inputs give +inf PSNR and SSIM 1.0."""
    with criterion("metric-oracles", 30):
        rng = np.random.default_rng(5150)
        for case in range(50):
            a = rng.uniform(0, 1, (16, 16, 16)).astype(np.float32)
            b = np.clip(a + rng.uniform(-0.1, 0.1, a.shape), 0, 1).astype(np.float32)
            va, vb = Volume(a), Volume(b)

            mse = float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))
            assert abs(psnr(va, vb) - (-10 * math.log10(mse))) <= 1e-4
            assert abs(linf(va, vb) - float(np.max(np.abs(
                a.astype(np.float64) - b.astype(np.float64))))) <= 1e-4
            rng_a = float(a.max()) - float(a.min())
            assert abs(mre(va, vb) - linf(va, vb) / rng_a) <= 1e-4
            assert abs(ssim(va, vb) - _brute_ssim(a, b)) <= 1e-4

        same = Volume(rng.uniform(0, 1, (16, 16, 16)).astype(np.float32))
        assert psnr(same, same) == math.inf
        assert abs(ssim(same, same) - 1.0) <= 1e-12


GOLDEN_FRAME = (
    b"HSR1\x00\x00\x00\x00\x00\x02"
    b"\x02\x00\x00\x00\x00\x00\x00\x00"
    b"\x02\x00\x00\x00\x00\x00\x00\x00"
    b"\x00\x00\x80?\x00\x00\x00@\x00\x00@@\x00\x00\x80@"
)


def test_format_round_trips(tmp_path):
    """Volume and tree files re-encode byte-identically; the 2x2 request
    frame matches its frozen byte vector."""
    with criterion("format-round-trips", 10):
        payload = np.array([1, 2, 3, 4], dtype="<f4").tobytes()
        assert encode_frame(Frame(KIND_REQUEST, 0, (2, 2), payload)) == GOLDEN_FRAME

        rng = np.random.default_rng(31337)
        for case in range(25):
            dims = (8, 8) if case % 2 else (4, 8, 8)
            v = Volume(rng.uniform(0, 1, dims).astype(np.float32))
            if case % 3 == 0:
                from hiersr import ValueRange

                v.meta = ValueRange(0.5, 2.0, log10=bool(case % 2))
            path = tmp_path / f"v{case}.hvol"
            write_volume(v, path)
            back = read_volume(path)
            np.testing.assert_array_equal(back.data, v.data)
            assert back.meta == v.meta
            second = tmp_path / f"v{case}b.hvol"
            write_volume(back, second)
            assert second.with_suffix(".raw").read_bytes() == \
                path.with_suffix(".raw").read_bytes()

        for case in range(25):
            dims = (32, 32) if case % 2 else (16, 16, 16)
            kind = "gaussian_blobs" if case % 2 else "band_limited_noise"
            cfg = BuildConfig(
                epsilon=float(rng.uniform(0.01, 0.1)),
                max_level=int(rng.integers(2, 4)),
                downscaler=Downscaler.SUBSAMPLE if case % 3 else
                Downscaler.MEAN_POOL,
            )
            tree = build_sr_octree(gen_synthetic(kind, dims, seed=case), cfg)
            path = tmp_path / f"t{case}.sroc"
            write_tree(tree, path)
            back = read_tree(path)
            assert encode_tree(back) == path.read_bytes()


def _cli():
    binary = shutil.which("hiersr")
    if binary:
        return [binary]
    return [sys.executable, "-c",
            "import sys; from hiersr.cli import run; sys.exit(run(sys.argv[1:]))"]


def _run_cli(*args):
    proc = subprocess.run([*_cli(), *map(str, args)], capture_output=True,
                          text=True)
    assert proc.returncode == 0, f"cli failed: {proc.stderr}"
    return proc.stdout


def test_end_to_end_cli(tmp_path):
    """Full CLI pipeline on a 64^3 blob beats the uniform pipeline at a
    matched (no more stored data) reduction factor."""
    with criterion("end-to-end-cli", 60):
        field = tmp_path / "field.hvol"
        _run_cli("gen", "--kind", "gaussian_blobs", "--dims", "64x64x64",
                 "--seed", "1", "--output", field)

        hier_tree = tmp_path / "hier.sroc"
        _run_cli("build", "--input", field, "--epsilon", "0.16",
                 "--min-chunk", "2", "--min-level", "1", "--max-level", "3",
                 "--downscaler", "mean", "--output", hier_tree)
        uni_tree = tmp_path / "uniform.sroc"
        _run_cli("build", "--input", field, "--epsilon", "0.0",
                 "--min-level", "2", "--max-level", "2",
                 "--downscaler", "mean", "--output", uni_tree)

        info = _run_cli("info", "--tree", hier_tree)
        fields = dict(line.split(": ", 1) for line in info.strip().splitlines()
                      if ": " in line)
        hier_reduction = float(fields["reduction_factor"])
        uni_info = _run_cli("info", "--tree", uni_tree)
        uni_fields = dict(line.split(": ", 1)
                          for line in uni_info.strip().splitlines() if ": " in line)
        assert float(uni_fields["reduction_factor"]) == 64.0
        # matched: the adaptive tree stores no more than the uniform one
        assert hier_reduction >= 64.0

        reports = {}
        for name, tree in (("hier", hier_tree), ("uniform", uni_tree)):
            lr = tmp_path / f"{name}_lr.hvol"
            hr = tmp_path / f"{name}_hr.hvol"
            report = tmp_path / f"{name}.txt"
            _run_cli("downscale", "--tree", tree, "--output", lr)
            _run_cli("upscale", "--tree", tree, "--lr", lr,
                     "--backend", "linear", "--output", hr)
            _run_cli("metrics", "--a", field, "--b", hr, "--tree", tree,
                     "--out", report)
            reports[name] = MetricReport.from_text(report.read_text())

        assert reports["hier"].psnr_db >= reports["uniform"].psnr_db
