"""Tensor op semantics, pullback correctness, and gradient checking.

Every differentiable op is held to two contracts: the adjoint identity
<J u, v> = <u, J^T v> (with J u estimated by central differences for the
nonlinear ops) and linearity of the pullback in the cotangent.
"""

import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import waveletsr.tensor as T
from waveletsr.errors import ShapeError
from waveletsr.tensor import Tensor


def _pullback(fn, x: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
    xt = Tensor(x, requires_grad=True)
    out = fn(xt)
    out.backward(np.asarray(cotangent, dtype=np.float64))
    return xt.grad.copy()


def _adjoint_gap(fn, x: np.ndarray, rng, eps: float = 1e-6) -> float:
    """Relative gap between <J u, v> and <u, J^T v> for random u, v."""
    u = rng.standard_normal(x.shape)
    out_shape = fn(Tensor(x)).data.shape
    v = rng.standard_normal(out_shape)
    plus = fn(Tensor(x + eps * u)).data
    minus = fn(Tensor(x - eps * u)).data
    lhs = float(np.sum((plus - minus) / (2.0 * eps) * v))
    rhs = float(np.sum(u * _pullback(fn, x, v)))
    return abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))


def _linearity_gap(fn, x: np.ndarray, rng) -> float:
    out_shape = fn(Tensor(x)).data.shape
    u = rng.standard_normal(out_shape)
    v = rng.standard_normal(out_shape)
    a, b = 1.7, -0.4
    combined = _pullback(fn, x, a * u + b * v)
    split = a * _pullback(fn, x, u) + b * _pullback(fn, x, v)
    denom = max(1.0, float(np.abs(split).max()))
    return float(np.abs(combined - split).max()) / denom


def _conv_oracle(x: np.ndarray, kernel: np.ndarray,
                 boundary: str) -> np.ndarray:
    """Direct cross-correlation with same-size symmetric padding."""
    b, cin, h, w = x.shape
    cout, _, kh, kw = kernel.shape
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    out = np.zeros((b, cout, h, w))
    for bi in range(b):
        for oc in range(cout):
            for i in range(h):
                for j in range(w):
                    acc = 0.0
                    for ic in range(cin):
                        for u in range(kh):
                            for v in range(kw):
                                ii, jj = i + u - ph, j + v - pw
                                if boundary == "periodic":
                                    val = x[bi, ic, ii % h, jj % w]
                                elif 0 <= ii < h and 0 <= jj < w:
                                    val = x[bi, ic, ii, jj]
                                else:
                                    val = 0.0
                                acc += kernel[oc, ic, u, v] * val
                    out[bi, oc, i, j] = acc
    return out


class TestConv2d:
    def test_identity_kernel(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((2, 3, 5, 6))
        kernel = np.zeros((3, 3, 1, 1))
        for c in range(3):
            kernel[c, c, 0, 0] = 1.0
        out = T.conv2d(x, kernel).data
        np.testing.assert_array_equal(out, x)

    def test_zero_kernel(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((1, 2, 4, 4))
        out = T.conv2d(x, np.zeros((5, 2, 3, 3))).data
        assert out.shape == (1, 5, 4, 4)
        np.testing.assert_array_equal(out, 0.0)

    @pytest.mark.parametrize("boundary", ["periodic", "zero"])
    def test_averaging_on_ramp_matches_loop(self, boundary):
        ramp = np.arange(16, dtype=np.float64).reshape(1, 1, 4, 4)
        kernel = np.full((1, 1, 3, 3), 1.0 / 9.0)
        out = T.conv2d(ramp, kernel, boundary=boundary).data
        expected = _conv_oracle(ramp, kernel, boundary)
        np.testing.assert_allclose(out, expected, atol=1e-13)

    def test_random_matches_loop(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((2, 3, 6, 5))
        kernel = rng.standard_normal((4, 3, 3, 3))
        for boundary in ("periodic", "zero"):
            out = T.conv2d(x, kernel, boundary=boundary).data
            np.testing.assert_allclose(out, _conv_oracle(x, kernel, boundary),
                                       atol=1e-12)

    def test_periodic_shift_equivariance(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((1, 2, 8, 8))
        kernel = rng.standard_normal((2, 2, 3, 3))
        shifted_in = np.roll(x, (3, 5), axis=(2, 3))
        a = T.conv2d(shifted_in, kernel, boundary="periodic").data
        b = np.roll(T.conv2d(x, kernel, boundary="periodic").data,
                    (3, 5), axis=(2, 3))
        assert np.abs(a - b).max() <= 1e-12

    def test_channel_mismatch_raises(self):
        x = np.zeros((1, 3, 4, 4))
        with pytest.raises(ShapeError):
            T.conv2d(x, np.zeros((2, 4, 3, 3)))


class TestPixelShuffle:
    def test_r1_identity(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((2, 3, 4, 4))
        np.testing.assert_array_equal(T.pixel_shuffle(x, 1).data, x)

    def test_hand_trace_2x2(self):
        x = np.array([1.0, 2.0, 3.0, 4.0]).reshape(1, 4, 1, 1)
        out = T.pixel_shuffle(x, 2).data
        np.testing.assert_array_equal(out[0, 0], [[1.0, 2.0], [3.0, 4.0]])

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_sum_preserved(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((1, 8, 3, 2))
        assert T.pixel_shuffle(x, 2).data.sum() == pytest.approx(x.sum())

    def test_unshuffle_inverts(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((2, 12, 3, 5))
        round_trip = T.pixel_unshuffle(T.pixel_shuffle(x, 2), 2).data
        np.testing.assert_array_equal(round_trip, x)
        y = rng.standard_normal((1, 3, 6, 4))
        np.testing.assert_array_equal(
            T.pixel_shuffle(T.pixel_unshuffle(y, 2), 2).data, y)

    def test_indivisible_channels_raise(self):
        with pytest.raises(ShapeError):
            T.pixel_shuffle(np.zeros((1, 3, 2, 2)), 2)


def _op_cases():
    """(name, fn, input, eps) per op; linear ops take a large FD step.

    Central differences are exact for linear maps at any step size, and a
    large step avoids the 1/eps amplification of rounding noise.
    """
    rng = np.random.default_rng(6)
    x44 = rng.standard_normal((2, 3, 4, 4))
    pos = rng.random((2, 3, 4, 4)) + 0.5
    mat = rng.standard_normal((2, 4, 5))
    other = rng.standard_normal((2, 3, 4, 4))
    rhs = rng.standard_normal((2, 5, 3))
    kernel = rng.standard_normal((4, 3, 3, 3))
    gamma = rng.standard_normal(3)
    beta = rng.standard_normal(3)
    idx = np.array([3, 0, 2, 2, 1])
    bias = rng.standard_normal((2, 3, 1, 1))
    lin, non = 0.5, 1e-5
    return [
        ("add", lambda t: T.add(t, other), x44, lin),
        ("add_broadcast", lambda t: T.add(t, bias), x44, lin),
        ("mul", lambda t: T.mul(t, other), x44, lin),
        ("mul_scalar", lambda t: T.mul(t, -1.3), x44, lin),
        ("power", lambda t: T.power(t, 1.7), pos, non),
        ("exp", T.exp, x44, non),
        ("tanh", T.tanh, x44, non),
        ("sigmoid", T.sigmoid, x44, non),
        ("gelu", T.gelu, x44, non),
        ("relu", T.relu, pos - 1.0, non),
        ("sqrt", T.sqrt, pos, non),
        ("reshape", lambda t: T.reshape(t, (2, 48)), x44, lin),
        ("transpose", lambda t: T.transpose(t, (0, 2, 3, 1)), x44, lin),
        ("roll", lambda t: T.roll(t, (1, 2), (2, 3)), x44, lin),
        ("take", lambda t: T.take(T.reshape(t, (6, 16)), idx), x44, lin),
        ("concat", lambda t: T.concat([t, Tensor(other)], axis=1), x44, lin),
        ("tsum", lambda t: T.tsum(t, axis=(2, 3)), x44, lin),
        ("tsum_all", T.tsum, x44, lin),
        ("tmean", lambda t: T.tmean(t, axis=1, keepdims=True), x44, lin),
        ("matmul", lambda t: T.matmul(t, Tensor(rhs)), mat, lin),
        ("matmul_rhs", lambda t: T.matmul(Tensor(mat), t), rhs, lin),
        ("softmax", lambda t: T.softmax(t, axis=-1), mat, non),
        ("layer_norm", lambda t: T.layer_norm(t, Tensor(gamma), Tensor(beta)),
         x44, non),
        ("conv2d_zero", lambda t: T.conv2d(t, Tensor(kernel)), x44, lin),
        ("conv2d_periodic",
         lambda t: T.conv2d(t, Tensor(kernel), boundary="periodic"), x44, lin),
        ("pixel_shuffle", lambda t: T.pixel_shuffle(
            T.reshape(t, (2, 12, 2, 2)), 2), x44, lin),
        ("pixel_unshuffle", lambda t: T.pixel_unshuffle(t, 2), x44, lin),
    ]


@pytest.mark.parametrize("name,fn,x,eps", _op_cases(),
                         ids=[c[0] for c in _op_cases()])
def test_adjoint_identity(name, fn, x, eps):
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    # Linear ops (large step) are exact; nonlinear ones carry O(eps^2)
    # central-difference truncation, far above 1e-9 in unlucky directions.
    tol = 1e-9 if eps >= 0.5 else 1e-7
    assert _adjoint_gap(fn, x, rng, eps=eps) < tol


@pytest.mark.parametrize("name,fn,x,eps", _op_cases(),
                         ids=[c[0] for c in _op_cases()])
def test_pullback_linear_in_cotangent(name, fn, x, eps):
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    assert _linearity_gap(fn, x, rng) < 1e-10


def test_conv2d_kernel_gradient():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((1, 2, 4, 4))
    kernel = rng.standard_normal((3, 2, 3, 3))

    def fn(kt):
        return T.conv2d(Tensor(x), kt, boundary="periodic")

    assert _adjoint_gap(fn, kernel, rng) < 1e-9


def test_matmul_batched_broadcast_gradient():
    rng = np.random.default_rng(8)
    lhs = rng.standard_normal((3, 4, 5))
    w = rng.standard_normal((5, 6))

    def fn(wt):
        return T.matmul(Tensor(lhs), wt)

    assert _adjoint_gap(fn, w, rng) < 1e-9


def test_take_scatter_accumulates_duplicates():
    base = np.arange(8, dtype=np.float64).reshape(4, 2)
    idx = np.array([1, 1, 3])
    xt = Tensor(base, requires_grad=True)
    out = T.take(xt, idx)
    out.backward(np.ones((3, 2)))
    expected = np.zeros((4, 2))
    expected[1] = 2.0
    expected[3] = 1.0
    np.testing.assert_array_equal(xt.grad, expected)


def test_softmax_rows_are_distributions():
    rng = np.random.default_rng(9)
    out = T.softmax(rng.standard_normal((3, 4, 6)), axis=-1).data
    assert (out >= 0).all()
    np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-12)


def test_backward_requires_seed_for_nonscalar():
    xt = Tensor(np.ones((2, 2)), requires_grad=True)
    out = T.mul(xt, 2.0)
    with pytest.raises(ValueError):
        out.backward()


class TestGradCheck:
    def test_sum_of_squares(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((3, 4))

        def fn(arr):
            return float((arr ** 2).sum()), 2.0 * arr

        assert T.grad_check(fn, x) < 1e-7

    def test_constant_function(self):
        def fn(arr):
            return 4.2, np.zeros_like(arr)

        assert T.grad_check(fn, np.ones((2, 3))) == 0.0

    def test_flags_wrong_gradient(self):
        def fn(arr):
            return float((arr ** 2).sum()), 3.0 * arr

        assert T.grad_check(fn, np.ones((2, 2))) > 1e-2
