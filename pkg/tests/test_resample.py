import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiersr import (
    Downscaler,
    UpscalerHierarchy,
    apply_hierarchy,
    create_volume,
    downscale2x,
    downscale_by,
    upscale2x_linear,
    upscale2x_nearest,
)
from hiersr.errors import (
    IndivisibleDimension,
    LevelOrder,
    NotPowerOfTwo,
    OddDimension,
    ShapeMismatch,
)


def rand_volume(dims, seed):
    rng = np.random.default_rng(seed)
    return create_volume(dims, rng.uniform(0, 1, int(np.prod(dims))))


even_dims = st.sampled_from([(4, 4), (8, 4), (4, 8), (16, 16), (4, 4, 4), (8, 4, 4)])


class TestDownscale:
    def test_mean_of_four(self):
        v = create_volume([2, 2], [1, 3, 5, 7])
        np.testing.assert_array_equal(downscale2x(v, Downscaler.MEAN_POOL).data, [[4.0]])

    def test_subsample_corner(self):
        v = create_volume([2, 2], [1, 3, 5, 7])
        np.testing.assert_array_equal(downscale2x(v, Downscaler.SUBSAMPLE).data, [[1.0]])

    def test_constant_stays_constant(self):
        v = create_volume([4, 4], np.full(16, 0.7))
        np.testing.assert_array_equal(downscale2x(v, Downscaler.MEAN_POOL).data,
                                      np.full((2, 2), np.float32(0.7)))

    def test_odd_dimension_rejected(self):
        with pytest.raises(OddDimension):
            downscale2x(create_volume([3, 4], np.zeros(12)))
        with pytest.raises(OddDimension):
            downscale2x(create_volume([1, 2], [0, 1]))

    def test_mean_against_block_oracle(self):
        v = rand_volume((8, 8), 0)
        oracle = v.data.reshape(4, 2, 4, 2).mean(axis=(1, 3))
        np.testing.assert_allclose(downscale2x(v).data, oracle, rtol=1e-6)

    def test_mean_preserves_global_mean(self):
        v = rand_volume((16, 16, 16), 1)
        down = downscale2x(v, Downscaler.MEAN_POOL)
        assert abs(float(down.data.mean()) - float(v.data.mean())) <= 1e-6


class TestDownscaleBy:
    def test_factor_one_is_identity(self):
        v = rand_volume((4, 4), 2)
        np.testing.assert_array_equal(downscale_by(v, 1).data, v.data)

    def test_factor_four_equals_two_halvings(self):
        v = rand_volume((8, 8), 3)
        twice = downscale2x(downscale2x(v))
        np.testing.assert_allclose(downscale_by(v, 4).data, twice.data, rtol=1e-6)
        # independent oracle: one straight 4x4 block mean
        oracle = v.data.astype(np.float64).reshape(2, 4, 2, 4).mean(axis=(1, 3))
        np.testing.assert_allclose(downscale_by(v, 4).data, oracle, rtol=1e-6)

    def test_not_power_of_two(self):
        with pytest.raises(NotPowerOfTwo):
            downscale_by(rand_volume((6, 6), 0), 3)

    def test_indivisible(self):
        with pytest.raises(IndivisibleDimension):
            downscale_by(rand_volume((6, 6), 0), 4)

    @given(even_dims, st.integers(0, 99), st.sampled_from(list(Downscaler)))
    @settings(max_examples=60, deadline=None)
    def test_composability(self, dims, seed, d):
        # down(V, 4) must equal down(down(V, 2), 2)
        if any(n % 4 for n in dims):
            return
        v = rand_volume(dims, seed)
        once = downscale_by(v, 4, d).data
        twice = downscale2x(downscale2x(v, d), d).data
        if d is Downscaler.SUBSAMPLE:
            np.testing.assert_array_equal(once, twice)
        else:
            np.testing.assert_allclose(once, twice, rtol=1e-6, atol=1e-7)


class TestUpscale:
    def test_nearest_replicates(self):
        v = create_volume([1, 1], [4])
        np.testing.assert_array_equal(upscale2x_nearest(v).data, [[4, 4], [4, 4]])

    def test_nearest_inverts_subsample_on_coarse_grid(self):
        v = rand_volume((8, 8), 4)
        up = upscale2x_nearest(downscale2x(v, Downscaler.SUBSAMPLE))
        np.testing.assert_array_equal(up.data[::2, ::2], v.data[::2, ::2])

    @pytest.mark.parametrize("up", [upscale2x_nearest, upscale2x_linear])
    def test_constant_exact(self, up):
        v = create_volume([4, 4, 4], np.full(64, np.float32(0.3712)))
        out = up(v)
        assert out.dims == (8, 8, 8)
        np.testing.assert_array_equal(out.data, np.full((8, 8, 8), np.float32(0.3712)))

    def test_linear_row_weights(self):
        # cell-center weights with border clamping: [0,1] -> [0, .25, .75, 1]
        v = create_volume([1, 2], [0, 1])
        out = upscale2x_linear(v)
        np.testing.assert_allclose(out.data, [[0, 0.25, 0.75, 1]] * 2, atol=1e-7)

    def test_linear_exact_on_ramp_interior(self):
        i, j = np.meshgrid(np.arange(6.0), np.arange(8.0), indexing="ij")
        field = (0.02 * i + 0.05 * j + 0.1).astype(np.float32)
        out = upscale2x_linear(create_volume((6, 8), field.ravel())).data
        ii = np.clip((np.arange(12) + 0.5) / 2 - 0.5, 0, 5)
        jj = np.clip((np.arange(16) + 0.5) / 2 - 0.5, 0, 7)
        gi, gj = np.meshgrid(ii, jj, indexing="ij")
        expect = 0.02 * gi + 0.05 * gj + 0.1
        np.testing.assert_allclose(out, expect, atol=1e-6)

    @given(even_dims, st.integers(0, 99))
    @settings(max_examples=40, deadline=None)
    def test_all_upscalers_double_every_axis(self, dims, seed):
        v = rand_volume(dims, seed)
        for up in (upscale2x_nearest, upscale2x_linear):
            assert up(v).dims == tuple(2 * n for n in dims)


class TestHierarchy:
    def test_single_step_equals_nearest(self):
        v = rand_volume((4, 4), 5)
        h = UpscalerHierarchy.uniform(upscale2x_nearest)
        np.testing.assert_array_equal(
            apply_hierarchy(h, v, 1, 0).data, upscale2x_nearest(v).data
        )

    def test_three_steps_scale_dims_by_eight(self):
        v = rand_volume((2, 2, 2), 6)
        h = UpscalerHierarchy.uniform(upscale2x_nearest)
        assert apply_hierarchy(h, v, 3, 0).dims == (16, 16, 16)

    def test_mixed_hierarchy_matches_manual_composition(self):
        v = rand_volume((4, 4), 7)
        h = UpscalerHierarchy({0: upscale2x_linear}, fallback=upscale2x_nearest)
        got = apply_hierarchy(h, v, 2, 0)
        manual = upscale2x_linear(upscale2x_nearest(v))
        np.testing.assert_array_equal(got.data, manual.data)

    def test_level_order_enforced(self):
        v = rand_volume((4, 4), 8)
        h = UpscalerHierarchy.uniform(upscale2x_nearest)
        for frm, to in [(0, 0), (1, 1), (1, 2), (2, -1)]:
            with pytest.raises(LevelOrder):
                apply_hierarchy(h, v, frm, to)

    def test_lookup_is_total(self):
        h = UpscalerHierarchy({3: upscale2x_linear}, fallback=upscale2x_nearest)
        assert h.for_level(3) is upscale2x_linear
        assert h.for_level(0) is upscale2x_nearest
        assert h.for_level(99) is upscale2x_nearest

    def test_nonconforming_upscaler_detected(self):
        h = UpscalerHierarchy.uniform(lambda v: v)
        with pytest.raises(ShapeMismatch):
            apply_hierarchy(h, rand_volume((4, 4), 9), 1, 0)
