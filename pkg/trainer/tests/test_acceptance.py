"""Secondary acceptance: the trained backend must beat bilinear
interpolation on held-out data and plug into the pipeline's CLI and wire
client without protocol violations.

The pipeline package is exercised only through its external surfaces:
the ``hiersr`` CLI, the .hvol files, and the frame-protocol client.
"""
import shutil
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

import hiersr
from hiersr import MetricReport, psnr, upscale2x_linear
from hiersr_trainer import load_artifact

TRAIN_SEEDS = list(range(8))
HELD_OUT_SEEDS = [100, 101, 102, 103]
TRAIN_BUDGET_SECONDS = 900  # "under 15 minutes on a laptop"


@contextmanager
def criterion(name, budget_seconds):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL ({time.monotonic() - start:.1f}s)")
        raise
    elapsed = time.monotonic() - start
    print(f"[ACCEPTANCE] {name}: PASS ({elapsed:.1f}s, budget {budget_seconds}s)")
    assert elapsed < budget_seconds


def _pipeline_cli():
    binary = shutil.which("hiersr")
    if binary:
        return [binary]
    return [sys.executable, "-c",
            "import sys; from hiersr.cli import run; sys.exit(run(sys.argv[1:]))"]


def _run(cmd):
    proc = subprocess.run([str(c) for c in cmd], capture_output=True, text=True)
    assert proc.returncode == 0, f"{cmd} failed: {proc.stderr}"
    return proc.stdout


def _gen(path, seed, dims="128x128"):
    _run([*_pipeline_cli(), "gen", "--kind", "band_limited_noise",
          "--dims", dims, "--seed", seed, "--output", path])
    return path


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """Train the level-0 model once over the pipeline-generated corpus."""
    root = tmp_path_factory.mktemp("training")
    train_files = [_gen(root / f"train{s}.hvol", s) for s in TRAIN_SEEDS]
    artifact_path = root / "g0.pt"
    start = time.monotonic()
    _run([sys.executable, "-m", "hiersr_trainer", "train",
          "--data", *train_files, "--level", "0",
          "--iterations", "1500", "--crop", "48", "--seed", "0",
          "--out", artifact_path])
    elapsed = time.monotonic() - start
    assert elapsed < TRAIN_BUDGET_SECONDS, f"training took {elapsed:.0f}s"
    return {"artifact": artifact_path, "root": root,
            "train_seconds": elapsed}


def _endpoint_spec(artifact_path, level=0):
    return (f"exec:{sys.executable} -m hiersr_trainer serve "
            f"--artifact {artifact_path} --stdio@level={level}")


def test_learned_backend_gain(trained, tmp_path):
    """Held-out PSNR beats bilinear by at least 0.5 dB, and the pipeline
    CLI with the model backend matches or beats its linear backend."""
    with criterion("learned-backend-gain", TRAIN_BUDGET_SECONDS):
        held_out = [hiersr.read_volume(_gen(tmp_path / f"held{s}.hvol", s))
                    for s in HELD_OUT_SEEDS]

        model_psnr = []
        bilinear_psnr = []
        with hiersr.connect(_endpoint_spec(trained["artifact"])) as handle:
            for v in held_out:
                lr = hiersr.downscale2x(v)
                model_psnr.append(psnr(v, handle(lr)))
                bilinear_psnr.append(psnr(v, upscale2x_linear(lr)))
        gain = np.mean(model_psnr) - np.mean(bilinear_psnr)
        print(f"  held-out: model {np.mean(model_psnr):.2f} dB, "
              f"bilinear {np.mean(bilinear_psnr):.2f} dB, gain {gain:.2f} dB")
        assert gain >= 0.5

        # end-to-end through the pipeline CLI on one held-out field
        field = tmp_path / "held100.hvol"
        tree = tmp_path / "tree.sroc"
        _run([*_pipeline_cli(), "build", "--input", field,
              "--epsilon", "0.04", "--min-level", "1", "--max-level", "2",
              "--downscaler", "mean", "--output", tree])
        scores = {}
        for name, backend in (
            ("model", f"model:{_endpoint_spec(trained['artifact'])}"),
            ("linear", "linear"),
        ):
            out = tmp_path / f"{name}.hvol"
            report = tmp_path / f"{name}.txt"
            _run([*_pipeline_cli(), "upscale", "--tree", tree,
                  "--backend", backend, "--output", out])
            _run([*_pipeline_cli(), "metrics", "--a", field, "--b", out,
                  "--out", report])
            scores[name] = MetricReport.from_text(report.read_text()).psnr_db
        print(f"  pipeline: model backend {scores['model']:.2f} dB, "
              f"linear backend {scores['linear']:.2f} dB")
        assert scores["model"] >= scores["linear"]


def test_protocol_conformance(trained):
    """100 randomized-shape requests through the pipeline's wire client
    complete with zero protocol violations."""
    with criterion("protocol-conformance", 120):
        rng = np.random.default_rng(424242)
        net, _ = load_artifact(trained["artifact"])
        with hiersr.connect(_endpoint_spec(trained["artifact"])) as handle:
            for _ in range(100):
                dims = tuple(int(rng.integers(2, 25)) for _ in range(2))
                v = hiersr.Volume(rng.uniform(0, 1, dims).astype(np.float32))
                out = handle(v)  # raises ProtocolViolation on any breach
                assert out.dims == tuple(2 * n for n in dims)
                expect = net.upscale_array(v.data).numpy()
                np.testing.assert_allclose(out.data, expect, atol=1e-6)
