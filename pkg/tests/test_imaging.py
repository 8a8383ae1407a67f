import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blinddeblur import imaging
from blinddeblur.errors import InvalidArgumentError, PyramidTooDeepError
from blinddeblur.osal import project_simplex
from oracles import dense_difference, direct_circular_convolution


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def test_convolution_matches_direct_loop(rng):
    img = rng.random((8, 8))
    ker = rng.random((3, 3))
    assert np.allclose(imaging.convolve_circular(img, ker),
                       direct_circular_convolution(img, ker), atol=1e-10, rtol=0)


def test_convolution_rectangular_and_larger_kernel(rng):
    img = rng.random((9, 12))
    ker = rng.random((5, 5))
    assert np.allclose(imaging.convolve_circular(img, ker),
                       direct_circular_convolution(img, ker), atol=1e-10, rtol=0)


def test_dirac_and_constant_fixed_points(rng):
    img = rng.random((10, 10))
    assert np.allclose(imaging.convolve_circular(img, imaging.dirac(5)), img, atol=1e-12)
    ker = project_simplex(rng.random((5, 5)))
    const = np.full((10, 10), 0.37)
    assert np.allclose(imaging.convolve_circular(const, ker), 0.37, atol=1e-12)


def test_convolution_rejects_oversized_kernel():
    with pytest.raises(InvalidArgumentError):
        imaging.convolve_circular(np.zeros((4, 4)), np.ones((5, 5)) / 25)


def test_gradient_row_example():
    row = np.array([[1.0, 2.0, 4.0, 1.0]])
    assert imaging.gradient(row, "h").tolist() == [[1.0, 2.0, -3.0, 0.0]]
    assert not imaging.gradient(np.full((5, 7), 3.0), "v").any()


def test_gradient_adjoint_matches_dense_matrix(rng):
    shape = (6, 6)
    u = rng.random(shape)
    for d in ("h", "v"):
        G = dense_difference(shape, d)
        assert np.allclose(imaging.gradient(u, d).ravel(), G @ u.ravel(), atol=1e-12)
        assert np.allclose(imaging.gradient_adjoint(u, d).ravel(), G.T @ u.ravel(), atol=1e-12)
        # G^T G through the frequency domain
        D = imaging.transfer_function(d, shape)
        spectral = imaging.apply_spectrum(u, np.abs(D) ** 2)
        assert np.allclose(spectral.ravel(), G.T @ G @ u.ravel(), atol=1e-10)


def test_transfer_function_examples(rng):
    assert np.allclose(imaging.transfer_function(imaging.dirac(3), (8, 8)), 1.0)
    ker = project_simplex(rng.random((5, 5)))
    assert abs(imaging.transfer_function(ker, (16, 16))[0, 0] - 1.0) < 1e-12
    box = np.full((3, 3), 1 / 9)
    img = rng.random((8, 8))
    via_spec = imaging.apply_spectrum(img, imaging.transfer_function(box, img.shape))
    assert np.allclose(via_spec, imaging.convolve_circular(img, box), atol=1e-10)


def test_fft_round_trip(rng):
    a = rng.normal(size=(13, 17))
    assert np.max(np.abs(np.fft.ifft2(np.fft.fft2(a)).real - a)) <= 1e-10 * np.max(np.abs(a))


def test_pad_and_crop_are_inverse(rng):
    ker = rng.random((7, 7))
    full = imaging.pad_kernel(ker, (20, 24))
    assert full[0, 0] == ker[3, 3]
    assert np.array_equal(imaging.crop_kernel(full, 7), ker)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), size=st.sampled_from([1, 3, 5]),
       a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_linearity_and_shift_commutation(seed, size, a, b):
    rng = np.random.default_rng(seed)
    u, v = rng.normal(size=(2, 9, 11))
    ker = rng.random((size, size))
    lhs = imaging.convolve_circular(a * u + b * v, ker)
    rhs = a * imaging.convolve_circular(u, ker) + b * imaging.convolve_circular(v, ker)
    assert np.allclose(lhs, rhs, atol=1e-10, rtol=0)
    s = (int(rng.integers(9)), int(rng.integers(11)))
    shifted = imaging.convolve_circular(np.roll(u, s, axis=(0, 1)), ker)
    assert np.allclose(shifted, np.roll(imaging.convolve_circular(u, ker), s, axis=(0, 1)),
                       atol=1e-10, rtol=0)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), h=st.integers(2, 12), w=st.integers(2, 12))
def test_gradient_adjoint_identity(seed, h, w):
    rng = np.random.default_rng(seed)
    u, v = rng.normal(size=(2, h, w))
    for d in ("h", "v"):
        lhs = np.sum(imaging.gradient(u, d) * v)
        rhs = np.sum(u * imaging.gradient_adjoint(v, d))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_downsample_sizes_and_constants():
    assert imaging.downsample(np.zeros((256, 256))).shape == (128, 128)
    assert imaging.downsample(np.zeros((33, 40))).shape == (16, 20)
    const = imaging.downsample(np.full((64, 48), 0.8))
    assert const.shape == (32, 24) and np.allclose(const, 0.8, atol=1e-14)
    with pytest.raises(PyramidTooDeepError):
        imaging.downsample(np.zeros((30, 64)))
    with pytest.raises(InvalidArgumentError):
        imaging.downsample(np.zeros((64, 64)), factor=1.0)


def test_downsample_undoes_block_upsampling(rng):
    base = rng.random((20, 18))
    up = np.kron(base, np.ones((2, 2)))
    assert np.allclose(imaging.downsample(up, 2.0), base, atol=1e-10, rtol=0)


def test_upsample_kernel_examples():
    up = imaging.upsample_kernel(imaging.dirac(3), 5)
    assert up.shape == (5, 5) and up.min() >= 0 and abs(up.sum() - 1) < 1e-12
    assert np.unravel_index(up.argmax(), up.shape) == (2, 2)
    line = np.zeros((3, 3))
    line[1, :] = 1 / 3
    up = imaging.upsample_kernel(line, 5)
    assert np.argmax(up.sum(axis=1)) == 2
    offs = np.arange(5) - 2
    spread_cols = np.sum(up.sum(axis=0) * offs ** 2)
    spread_rows = np.sum(up.sum(axis=1) * offs ** 2)
    assert spread_cols > 2 * spread_rows
    valid = project_simplex(np.arange(9.0).reshape(3, 3))
    assert np.allclose(imaging.upsample_kernel(valid, 3), valid, atol=1e-15)
    with pytest.raises(InvalidArgumentError):
        imaging.upsample_kernel(valid, 4)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.sampled_from([3, 5, 7]),
       extra=st.sampled_from([0, 2, 4, 6]))
def test_upsampled_kernel_in_simplex(seed, n, extra):
    ker = project_simplex(np.random.default_rng(seed).random((n, n)))
    up = imaging.upsample_kernel(ker, n + extra)
    assert up.min() >= 0 and abs(up.sum() - 1) <= 1e-12


def test_edge_taper_blend_and_interior(rng):
    img = np.zeros((32, 32))
    img[:, 16:] = 1.0  # step edge that runs into the border
    ker = project_simplex(rng.random((7, 7)))
    out = imaging.edge_taper(img, ker)
    band = 3
    wts = imaging.taper_weights(img.shape, band)
    blurred = imaging.convolve_circular(img, ker)
    expected = wts * img + (1 - wts) * blurred
    assert np.allclose(out, expected, atol=1e-12)
    assert np.array_equal(out[band:-band, band:-band], img[band:-band, band:-band])
    lo, hi = np.minimum(img, blurred), np.maximum(img, blurred)
    assert np.all(out >= lo - 1e-12) and np.all(out <= hi + 1e-12)


def test_edge_taper_fixed_points(rng):
    img = rng.random((20, 20))
    assert np.array_equal(imaging.edge_taper(img, imaging.dirac(5))[2:-2, 2:-2], img[2:-2, 2:-2])
    assert np.allclose(imaging.edge_taper(img, imaging.dirac(5)), img, atol=1e-12)
    const = np.full((20, 20), 0.4)
    assert np.allclose(imaging.edge_taper(const, np.full((5, 5), 1 / 25)), 0.4, atol=1e-12)


def test_to_gray():
    rgb = np.zeros((2, 2, 3))
    rgb[..., 1] = 1.0
    assert np.allclose(imaging.to_gray(rgb), 0.587)
    with pytest.raises(InvalidArgumentError):
        imaging.to_gray(np.zeros((2, 2, 2)))


def test_kernel_validation():
    with pytest.raises(InvalidArgumentError):
        imaging.as_kernel(np.ones((4, 4)))
    with pytest.raises(InvalidArgumentError):
        imaging.as_image(np.array([[np.nan]]))
