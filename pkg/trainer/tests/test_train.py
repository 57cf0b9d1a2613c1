import numpy as np
import pytest
import torch

from hiersr_trainer import (
    EmptySet,
    IndivisibleDimension,
    TrainConfig,
    load_artifact,
    save_artifact,
    train_level,
)
from hiersr_trainer.data import PairSampler, downscale2x, downscale_by


def noise_volume(dims, seed, cutoff=0.12):
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(dims)
    freqs = np.meshgrid(*[np.fft.fftfreq(n) for n in dims], indexing="ij")
    radius = np.sqrt(sum(f ** 2 for f in freqs))
    spec = np.fft.fftn(white) * (radius <= cutoff)
    f = np.real(np.fft.ifftn(spec))
    return ((f - f.min()) / (f.max() - f.min())).astype(np.float32)


class TestData:
    def test_downscale_chain(self):
        v = noise_volume((16, 16), 0)
        np.testing.assert_allclose(downscale_by(v, 4),
                                   downscale2x(downscale2x(v)), rtol=1e-6)

    def test_downscale_rejects_odd(self):
        with pytest.raises(IndivisibleDimension):
            downscale2x(np.zeros((3, 4), np.float32))

    def test_sampler_alignment(self):
        rng = np.random.default_rng(0)
        sampler = PairSampler([noise_volume((32, 32), 1)], level=0, crop=8,
                              method="mean", rng=rng)
        for _ in range(20):
            lr, hr = sampler.sample()
            assert hr.shape == (8, 8) and lr.shape == (4, 4)
            np.testing.assert_allclose(downscale2x(hr), lr, atol=1e-6)

    def test_sampler_rejects_empty(self):
        with pytest.raises(EmptySet):
            PairSampler([], 0, 8, "mean", np.random.default_rng(0))

    def test_sampler_rejects_indivisible(self):
        with pytest.raises(IndivisibleDimension):
            PairSampler([np.zeros((30, 30), np.float32)], 1, 8, "mean",
                        np.random.default_rng(0))

    def test_crop_shrinks_to_fit(self):
        sampler = PairSampler([noise_volume((16, 16), 2)], level=1, crop=96,
                              method="mean", rng=np.random.default_rng(0))
        lr, hr = sampler.sample()
        assert hr.shape == (8, 8)  # level-1 grid of a 16^2 volume


class TestTraining:
    def test_constant_fields_map_to_constants(self):
        volumes = [np.full((32, 32), 0.6, np.float32)]
        cfg = TrainConfig(level=0, iterations=200, crop=16, channels=8,
                          blocks=1, seed=0)
        artifact = train_level(volumes, cfg)
        from hiersr_trainer.model import Upscaler2xNet

        net = Upscaler2xNet(ndim=2, channels=8, blocks=1)
        net.load_state_dict(artifact["state_dict"])
        out = net.upscale_array(np.full((8, 8), 0.6, np.float32)).numpy()
        assert np.max(np.abs(out - 0.6)) <= 1e-3

    def test_reproducible_to_final_loss(self):
        volumes = [noise_volume((32, 32), 3)]
        cfg = TrainConfig(level=0, iterations=40, crop=16, channels=8,
                          blocks=1, seed=7)
        a = train_level(volumes, cfg)
        b = train_level(volumes, cfg)
        assert abs(a["final_loss"] - b["final_loss"]) <= 1e-6

    def test_output_contract_on_fresh_input(self):
        volumes = [noise_volume((32, 32), 4)]
        cfg = TrainConfig(level=0, iterations=20, crop=16, channels=8,
                          blocks=1)
        artifact = train_level(volumes, cfg)
        from hiersr_trainer.model import Upscaler2xNet

        net = Upscaler2xNet(ndim=2, channels=8, blocks=1)
        net.load_state_dict(artifact["state_dict"])
        out = net.upscale_array(np.zeros((6, 10), np.float32))
        assert tuple(out.shape) == (12, 20)

    def test_artifact_round_trip(self, tmp_path):
        volumes = [noise_volume((32, 32), 5)]
        cfg = TrainConfig(level=2, iterations=5, crop=8, channels=4, blocks=1)
        artifact = train_level(volumes, cfg)
        path = tmp_path / "model.pt"
        save_artifact(artifact, path)
        net, meta = load_artifact(path)
        assert meta["level"] == 2
        assert meta["downscaler"] == "mean"
        assert meta["data_hash"] == artifact["data_hash"]
        assert not net.training
        data = np.random.default_rng(0).uniform(0, 1, (8, 8)).astype(np.float32)
        fresh = net.upscale_array(data).numpy()
        from hiersr_trainer.model import Upscaler2xNet

        ref = Upscaler2xNet(ndim=2, channels=4, blocks=1)
        ref.load_state_dict(artifact["state_dict"])
        np.testing.assert_array_equal(fresh, ref.upscale_array(data).numpy())

    def test_empty_set_rejected(self):
        with pytest.raises(EmptySet):
            train_level([], TrainConfig(level=0, iterations=1))

    def test_indivisible_rejected(self):
        with pytest.raises(IndivisibleDimension):
            train_level([np.zeros((30, 30), np.float32)],
                        TrainConfig(level=1, iterations=1))

    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            train_level([np.zeros((8, 8), np.float32)],
                        TrainConfig(level=0, iterations=0))

    def test_hash_tracks_data(self):
        cfg = TrainConfig(level=0, iterations=1, crop=8, channels=4, blocks=1)
        a = train_level([noise_volume((16, 16), 6)], cfg)
        b = train_level([noise_volume((16, 16), 7)], cfg)
        assert a["data_hash"] != b["data_hash"]
