import numpy as np
import pytest

from eogscrub.errors import BadRate, OddDims, SpatialMismatch
from eogscrub.unet import layers as L
from oracles import naive_conv2d


def test_identity_kernel():
    x = np.random.default_rng(0).standard_normal((2, 1, 6, 5))
    y = L.conv2d(x, np.ones((1, 1, 1, 1)), np.zeros(1))
    np.testing.assert_array_equal(y, x)


def test_all_ones_kernel_interior():
    x = np.full((1, 1, 8, 8), 2.5)
    y = L.conv2d(x, np.ones((1, 1, 3, 3)), np.zeros(1))
    np.testing.assert_allclose(y[0, 0, 1:-1, 1:-1], 9 * 2.5)
    assert y[0, 0, 0, 0] == pytest.approx(4 * 2.5)  # corner sees zero padding


@pytest.mark.parametrize("k", [1, 3])
def test_conv_matches_direct_loops(k):
    r = np.random.default_rng(k)
    x = r.standard_normal((2, 3, 7, 6))
    w = r.standard_normal((4, 3, k, k))
    b = r.standard_normal(4)
    np.testing.assert_allclose(L.conv2d(x, w, b), naive_conv2d(x, w, b), atol=1e-5)


def test_conv_backward_matches_finite_differences():
    r = np.random.default_rng(3)
    x = r.standard_normal((1, 2, 5, 5))
    w = r.standard_normal((3, 2, 3, 3))
    b = r.standard_normal(3)
    g = r.standard_normal((1, 3, 5, 5))
    gx, gw, gb = L.conv2d_backward(g, x, w)
    eps = 1e-6

    def num(arr, grad):
        for idx in [(0, 1, 2, 2), (0, 0, 0, 0)] if arr.ndim == 4 else [(1,)]:
            old = arr[idx]
            arr[idx] = old + eps
            up = np.sum(g * L.conv2d(x, w, b))
            arr[idx] = old - eps
            dn = np.sum(g * L.conv2d(x, w, b))
            arr[idx] = old
            assert (up - dn) / (2 * eps) == pytest.approx(grad[idx], rel=1e-6)

    num(x, gx)
    num(w, gw)
    num(b, gb)


def test_elu_values():
    assert L.elu(np.array(0.0)) == 0.0
    assert L.elu(np.array(2.0)) == 2.0
    assert L.elu(np.array(-20.0)) == pytest.approx(-1.0, abs=1e-8)
    assert L.elu(np.array(-20.0), alpha=0.5) == pytest.approx(-0.5, abs=1e-8)


@pytest.mark.parametrize("x0", [-2.0, -0.3, 0.4, 3.0])
def test_elu_derivative(x0):
    h = 1e-6
    num = (L.elu(np.array(x0 + h)) - L.elu(np.array(x0 - h))) / (2 * h)
    y = L.elu(np.array(x0))
    ana = L.elu_backward(np.array(1.0), y)
    expected = np.exp(x0) if x0 < 0 else 1.0
    assert ana == pytest.approx(expected, rel=1e-9)
    assert num == pytest.approx(expected, rel=1e-6)


def test_maxpool_examples():
    out, idx = L.maxpool2(np.array([[[[1.0, 2.0], [3.0, 4.0]]]]))
    assert out.item() == 4.0 and idx.item() == 3  # (1, 1) in row-major order
    out, idx = L.maxpool2(np.full((1, 2, 4, 4), 7.0))
    assert np.all(out == 7.0) and np.all(idx == 0)
    out, _ = L.maxpool2(np.zeros((2, 3, 80, 80)))
    assert out.shape == (2, 3, 40, 40)
    with pytest.raises(OddDims):
        L.maxpool2(np.zeros((1, 1, 5, 4)))


def test_maxpool_backward_routes_to_winner():
    x = np.array([[[[1.0, 5.0], [3.0, 4.0]]]])
    _, idx = L.maxpool2(x)
    g = L.maxpool2_backward(np.array([[[[2.0]]]]), idx)
    np.testing.assert_array_equal(g, [[[[0.0, 2.0], [0.0, 0.0]]]])


def test_transpose_conv_shape_and_bias():
    w = np.random.default_rng(0).standard_normal((4, 3, 2, 2))
    b = np.array([1.0, -2.0, 0.5])
    y = L.conv2d_transpose_stride2(np.zeros((2, 4, 40, 40)), w, b)
    assert y.shape == (2, 3, 80, 80)
    np.testing.assert_array_equal(y[:, 1], -2.0)


@pytest.mark.parametrize("trial", range(20))
def test_stride2_adjoint(trial):
    r = np.random.default_rng(100 + trial)
    cin, cout = r.integers(1, 6, size=2)
    h, w = r.integers(1, 8, size=2)
    x = r.standard_normal((2, cin, h, w))
    y = r.standard_normal((2, cout, 2 * h, 2 * w))
    wt = r.standard_normal((cin, cout, 2, 2))
    lhs = np.sum(L.conv2d_transpose_stride2(x, wt, np.zeros(cout)) * y)
    rhs = np.sum(x * L.conv2d_stride2(y, wt))
    assert lhs == pytest.approx(rhs, rel=1e-4)


def test_transpose_backward_input_is_adjoint():
    r = np.random.default_rng(9)
    x = r.standard_normal((1, 3, 4, 4))
    wt = r.standard_normal((3, 2, 2, 2))
    g = r.standard_normal((1, 2, 8, 8))
    gx, _, _ = L.conv2d_transpose_stride2_backward(g, x, wt)
    np.testing.assert_allclose(gx, L.conv2d_stride2(g, wt), atol=1e-12)


def test_concat_skip():
    r = np.random.default_rng(0)
    up, skip = r.standard_normal((2, 8, 40, 40)), r.standard_normal((2, 8, 40, 40))
    y = L.concat_skip(up, skip)
    assert y.shape == (2, 16, 40, 40)
    np.testing.assert_array_equal(y[:, :8], skip)
    np.testing.assert_array_equal(y[:, 8:], up)
    g_up, g_skip = L.concat_skip_backward(y, 8)
    np.testing.assert_array_equal(g_up, up)
    np.testing.assert_array_equal(g_skip, skip)
    with pytest.raises(SpatialMismatch):
        L.concat_skip(np.zeros((1, 8, 40, 40)), np.zeros((1, 8, 39, 39)))


def test_dropout_identity_cases():
    x = np.random.default_rng(0).standard_normal((3, 4))
    rng = np.random.default_rng(1)
    assert L.dropout(x, 0.0, rng)[0] is x
    assert L.dropout(x, 0.5, rng, training=False)[0] is x
    with pytest.raises(BadRate):
        L.dropout(x, 1.0, rng)


def test_dropout_rate_monte_carlo():
    x = np.ones(1_000_000, dtype=np.float32)
    y, mask = L.dropout(x, 0.5, np.random.default_rng(7))
    assert np.mean(y == 0) == pytest.approx(0.5, abs=0.01)
    assert set(np.unique(y)) == {0.0, 2.0}
    np.testing.assert_array_equal(L.dropout_backward(x, mask), y)
