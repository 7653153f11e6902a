"""Forward/backward kernels for the U-Net, all on (batch, channels, height, width) arrays.

Each ``*_backward`` takes the upstream gradient plus whatever its forward saved
and returns gradients in the same order as the forward arguments.
"""

import numpy as np

from ..errors import BadRate, OddDims, ShapeMismatch, SpatialMismatch


def _im2col(x, k):
    """(B, C, H, W) -> (C*k*k, B*H*W) patches of a zero-padded 'same' convolution."""
    b, c, h, w = x.shape
    xt = x.transpose(1, 0, 2, 3)
    if k == 1:
        return xt.reshape(c, b * h * w)
    p = k // 2
    cols = np.zeros((c, k, k, b, h, w), dtype=x.dtype)
    for i in range(k):
        di = i - p
        r0, r1 = max(0, -di), min(h, h - di)
        for j in range(k):
            dj = j - p
            c0, c1 = max(0, -dj), min(w, w - dj)
            cols[:, i, j, :, r0:r1, c0:c1] = xt[:, :, r0 + di:r1 + di, c0 + dj:c1 + dj]
    return cols.reshape(c * k * k, b * h * w)


def _check_conv(x, weights, bias):
    if x.ndim != 4:
        raise ShapeMismatch(f"expected a 4-D tensor, got shape {x.shape}")
    o, c, kh, kw = weights.shape
    if kh != kw or kh % 2 == 0:
        raise ShapeMismatch(f"kernel must be square and odd, got {kh}x{kw}")
    if x.shape[1] != c:
        raise ShapeMismatch(f"input has {x.shape[1]} channels, kernel expects {c}")
    if bias.shape != (o,):
        raise ShapeMismatch(f"bias shape {bias.shape} != ({o},)")


def conv2d(x, weights, bias):
    """Same-padded stride-1 cross-correlation; ``weights`` is (out, in, k, k)."""
    _check_conv(x, weights, bias)
    b, _, h, w = x.shape
    o, _, k, _ = weights.shape
    y = weights.reshape(o, -1) @ _im2col(x, k)
    y += bias[:, None]
    return y.reshape(o, b, h, w).transpose(1, 0, 2, 3)


def conv2d_backward(grad_y, x, weights):
    b, c, h, w = x.shape
    o, _, k, _ = weights.shape
    gy = grad_y.transpose(1, 0, 2, 3).reshape(o, b * h * w)
    grad_w = (gy @ _im2col(x, k).T).reshape(weights.shape)
    grad_b = gy.sum(axis=1)
    # gradient wrt input = same-padded correlation with the flipped, transposed kernel
    flipped = weights[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    gx = flipped.reshape(c, -1) @ _im2col(grad_y, k)
    grad_x = gx.reshape(c, b, h, w).transpose(1, 0, 2, 3)
    return grad_x, grad_w, grad_b


def elu(x, alpha=1.0):
    return np.where(x > 0, x, alpha * np.expm1(np.minimum(x, 0)))


def elu_backward(grad_y, y, alpha=1.0):
    # for x <= 0, d/dx alpha*(e^x - 1) = alpha*e^x = y + alpha
    return grad_y * np.where(y > 0, 1.0, y + alpha).astype(grad_y.dtype, copy=False)


def maxpool2(x):
    """2x2/2 max pooling. Returns the pooled tensor and the winner index (0..3,
    row-major within the window; ties go to the first)."""
    b, c, h, w = x.shape
    if h % 2 or w % 2:
        raise OddDims(f"max pooling needs even dims, got {h}x{w}")
    win = x.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h // 2, w // 2, 4)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, idx


def maxpool2_backward(grad_y, idx):
    b, c, h2, w2 = grad_y.shape
    g = np.zeros((b, c, h2, w2, 4), dtype=grad_y.dtype)
    np.put_along_axis(g, idx[..., None], grad_y[..., None], axis=-1)
    return g.reshape(b, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, 2 * h2, 2 * w2)


def _check_up(x, weights, bias):
    if x.ndim != 4:
        raise ShapeMismatch(f"expected a 4-D tensor, got shape {x.shape}")
    cin, cout, kh, kw = weights.shape
    if (kh, kw) != (2, 2):
        raise ShapeMismatch("transposed convolution kernel must be 2x2")
    if x.shape[1] != cin:
        raise ShapeMismatch(f"input has {x.shape[1]} channels, kernel expects {cin}")
    if bias.shape != (cout,):
        raise ShapeMismatch(f"bias shape {bias.shape} != ({cout},)")


def conv2d_transpose_stride2(x, weights, bias):
    """2x2 stride-2 transposed convolution; ``weights`` is (in, out, 2, 2).

    Output pixel (2i+p, 2j+q) receives x[:, :, i, j] @ weights[:, :, p, q].
    """
    _check_up(x, weights, bias)
    b, cin, h, w = x.shape
    cout = weights.shape[1]
    xm = x.transpose(0, 2, 3, 1).reshape(b * h * w, cin)
    y = (xm @ weights.reshape(cin, cout * 4)).reshape(b, h, w, cout, 2, 2)
    y = y.transpose(0, 3, 1, 4, 2, 5).reshape(b, cout, 2 * h, 2 * w)
    return y + bias[None, :, None, None]


def conv2d_transpose_stride2_backward(grad_y, x, weights):
    b, cin, h, w = x.shape
    cout = weights.shape[1]
    gy = grad_y.reshape(b, cout, h, 2, w, 2).transpose(0, 2, 4, 1, 3, 5).reshape(b * h * w, cout * 4)
    wm = weights.reshape(cin, cout * 4)
    grad_x = (gy @ wm.T).reshape(b, h, w, cin).transpose(0, 3, 1, 2)
    xm = x.transpose(0, 2, 3, 1).reshape(b * h * w, cin)
    grad_w = (xm.T @ gy).reshape(weights.shape)
    grad_b = grad_y.sum(axis=(0, 2, 3))
    return grad_x, grad_w, grad_b


def conv2d_stride2(y, weights):
    """2x2 stride-2 convolution from ``out`` to ``in`` channels, no bias.

    The linear adjoint of :func:`conv2d_transpose_stride2` for the same weights.
    """
    b, cout, h2, w2 = y.shape
    if h2 % 2 or w2 % 2:
        raise OddDims(f"stride-2 convolution needs even dims, got {h2}x{w2}")
    if weights.shape[1] != cout:
        raise ShapeMismatch("channel mismatch")
    out = np.zeros((b, weights.shape[0], h2 // 2, w2 // 2), dtype=np.result_type(y, weights))
    for p in range(2):
        for q in range(2):
            out += np.einsum("bohw,co->bchw", y[:, :, p::2, q::2], weights[:, :, p, q])
    return out


def concat_skip(up, skip):
    """Channel concatenation, skip channels first."""
    if up.shape[0] != skip.shape[0] or up.shape[2:] != skip.shape[2:]:
        raise SpatialMismatch(f"cannot concatenate {skip.shape} with {up.shape}")
    return np.concatenate([skip, up], axis=1)


def concat_skip_backward(grad_y, n_skip):
    return grad_y[:, n_skip:], grad_y[:, :n_skip]


def dropout(x, rate, rng=None, training=True):
    """Inverted dropout. Returns the output and the scaling mask (None when inactive)."""
    if not 0 <= rate < 1:
        raise BadRate(f"dropout rate {rate} outside [0, 1)")
    if not training or rate == 0:
        return x, None
    keep = rng.random(x.shape) >= rate
    mask = keep.astype(x.dtype) / x.dtype.type(1 - rate)
    return x * mask, mask


def dropout_backward(grad_y, mask):
    return grad_y if mask is None else grad_y * mask
