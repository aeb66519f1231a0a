"""Tensor-core checks: resampling, shifting, PNG codec, finite differences."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inspire.images import (
    CodecError,
    DimensionError,
    ImageBuffer,
    circular_shift,
    decode_png,
    downscale_average,
    downscale_average_adjoint,
    encode_png,
    finite_difference_gradient,
    gradient_check,
)


def rand_image(rng, side=8, channels=3):
    return ImageBuffer(rng.uniform(-1.0, 1.0, size=(side, side, channels)))


# ---------------------------------------------------------------- ImageBuffer


def test_buffer_shape_accessors():
    img = ImageBuffer(np.zeros((4, 6, 3)))
    assert img.height == 4 and img.width == 6 and img.channels == 3
    assert img.flat.shape == (4 * 6 * 3,)


def test_buffer_rejects_bad_data():
    with pytest.raises(DimensionError):
        ImageBuffer(np.zeros((4, 4)))
    with pytest.raises(DimensionError):
        ImageBuffer(np.zeros((0, 4, 3)))
    with pytest.raises(ValueError):
        ImageBuffer(np.full((2, 2, 3), np.nan))


# ----------------------------------------------------------------- downscale


def test_downscale_constant():
    img = ImageBuffer(np.full((32, 32, 3), 0.5))
    out = downscale_average(img, 16)
    assert out.data.shape == (16, 16, 3)
    assert np.array_equal(out.data, np.full((16, 16, 3), 0.5))


def test_downscale_checkerboard_cancels():
    yy, xx = np.indices((4, 4))
    board = np.where((yy + xx) % 2 == 0, 1.0, -1.0)[:, :, None].repeat(3, axis=2)
    out = downscale_average(ImageBuffer(board), 2)
    assert np.array_equal(out.data, np.zeros((2, 2, 3)))


def test_downscale_matches_double_loop():
    # independent brute-force block averaging
    rng = np.random.default_rng(0)
    img = rand_image(rng, side=8)
    out = downscale_average(img, 4)
    for by in range(4):
        for bx in range(4):
            for c in range(3):
                total = 0.0
                for y in range(2 * by, 2 * by + 2):
                    for x in range(2 * bx, 2 * bx + 2):
                        total += img.data[y, x, c]
                assert out.data[by, bx, c] == pytest.approx(total / 4.0, abs=1e-12)


def test_downscale_preserves_channel_means():
    rng = np.random.default_rng(1)
    img = rand_image(rng, side=16)
    out = downscale_average(img, 4)
    for c in range(3):
        assert out.data[:, :, c].mean() == pytest.approx(img.data[:, :, c].mean(), abs=1e-12)


def test_downscale_rejects_non_divisible():
    img = ImageBuffer(np.zeros((6, 6, 3)))
    with pytest.raises(DimensionError):
        downscale_average(img, 4)


def test_downscale_adjoint_is_transpose():
    # <Ax, y> == <x, A^T y> for random probes
    rng = np.random.default_rng(2)
    x = rng.standard_normal((8, 8, 3))
    y = rng.standard_normal((4, 4, 3))
    ax = downscale_average(ImageBuffer(x), 4).data
    aty = downscale_average_adjoint(y, (8, 8, 3))
    assert np.vdot(ax, y) == pytest.approx(np.vdot(x, aty), rel=1e-12)


# ------------------------------------------------------------- circular shift


def test_shift_identity_and_period():
    rng = np.random.default_rng(3)
    img = rand_image(rng)
    assert np.array_equal(circular_shift(img, 0, 0).data, img.data)
    assert np.array_equal(circular_shift(img, 8, 8).data, img.data)


def test_shift_swaps_rows():
    img = ImageBuffer(np.array([[[1.0], [2.0]], [[3.0], [4.0]]]))
    out = circular_shift(img, 1, 0)
    assert np.array_equal(out.data, np.array([[[3.0], [4.0]], [[1.0], [2.0]]]))


@given(dy=st.integers(-20, 20), dx=st.integers(-20, 20))
@settings(max_examples=30, deadline=None)
def test_shift_inverse_roundtrip(dy, dx):
    rng = np.random.default_rng(4)
    img = rand_image(rng)
    back = circular_shift(circular_shift(img, dy, dx), -dy, -dx)
    assert np.array_equal(back.data, img.data)


# ----------------------------------------------------------------- PNG codec


def test_png_endpoints():
    black = decode_png(encode_png(ImageBuffer(np.full((4, 4, 3), -1.0))))
    white = decode_png(encode_png(ImageBuffer(np.full((4, 4, 3), 1.0))))
    assert np.array_equal(black.data, np.full((4, 4, 3), -1.0))
    assert np.array_equal(white.data, np.full((4, 4, 3), 1.0))


def test_png_midpoint_quantization():
    # 0.0 encodes to byte 128, decodes to 1/255
    out = decode_png(encode_png(ImageBuffer(np.zeros((2, 2, 3)))))
    assert np.allclose(out.data, 1.0 / 255.0, atol=1e-12)


def test_png_roundtrip_error_bound():
    rng = np.random.default_rng(5)
    img = rand_image(rng, side=16)
    out = decode_png(encode_png(img))
    assert out.data.shape == img.data.shape
    assert np.max(np.abs(out.data - img.data)) <= 2.0 / 255.0 + 1e-9


def test_png_double_roundtrip_is_exact():
    # once quantized, a second trip is lossless
    rng = np.random.default_rng(6)
    once = decode_png(encode_png(rand_image(rng)))
    twice = decode_png(encode_png(once))
    assert np.array_equal(once.data, twice.data)


def test_png_rejects_bad_inputs():
    with pytest.raises(CodecError):
        encode_png(ImageBuffer(np.zeros((4, 4, 1))))
    with pytest.raises(CodecError):
        decode_png(b"not a png at all")


# -------------------------------------------------------- finite differences


def test_fd_on_quadratic():
    g = finite_difference_gradient(lambda z: float(np.sum(z**2)), np.array([1.0, 2.0]), h=1e-4)
    assert np.allclose(g, [2.0, 4.0], atol=1e-6)


def test_fd_constant_function():
    g = finite_difference_gradient(lambda z: 3.5, np.arange(5.0), h=1e-4)
    assert np.array_equal(g, np.zeros(5))


def test_fd_rejects_non_finite():
    with pytest.raises(ValueError):
        finite_difference_gradient(lambda z: float("nan"), np.zeros(2), h=1e-4)


def test_gradient_check_report():
    probes = [np.array([0.5, -1.0]), np.array([2.0, 3.0])]
    rep = gradient_check(
        lambda z: float(np.sum(z**2)),
        lambda z: 2.0 * z,
        probes,
        h=1e-5,
    )
    assert rep.probe_count == 2
    assert rep.rel_error_l2 < 1e-8
    assert rep.max_abs_error < 1e-6


def test_gradient_check_flags_wrong_gradient():
    probes = [np.array([1.0, 1.0])]
    rep = gradient_check(
        lambda z: float(np.sum(z**2)),
        lambda z: 3.0 * z,  # deliberately wrong
        probes,
    )
    assert rep.rel_error_l2 > 0.1
