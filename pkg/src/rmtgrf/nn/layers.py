"""Layer primitives with explicit forward/backward passes on (N, C, H, W) arrays.

Every ``*_forward`` returns ``(out, cache)`` and the matching ``*_backward``
takes ``(dout, cache)``.  Everything runs in float64.
"""
import numpy as np

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def _flat_padded(x, pad):
    N, C, H, W = x.shape
    xp = np.zeros((N, C, H + 2 * pad, W + 2 * pad))
    xp[:, :, pad:pad + H, pad:pad + W] = x
    return xp.reshape(N, C, -1), xp.shape[3]


def conv2d_forward(x, w, b, pad=1):
    """Stride-1 cross-correlation; ``w`` is (C_out, C_in, kh, kw).

    Works on the zero-padded input flattened per sample: kernel tap (a, c)
    is then a constant offset ``a * Wp + c`` into the flat array, and output
    pixel (i, j) sits at flat position ``i * Wp + j``.  Columns j >= W_out
    of that layout are discarded.
    """
    N, C, H, W = x.shape
    Co, _, kh, kw = w.shape
    xf, Wp = _flat_padded(x, pad)
    Ho, Wo = H + 2 * pad - kh + 1, W + 2 * pad - kw + 1
    L = (Ho - 1) * Wp + Wo
    acc = np.zeros((N, Co, Ho * Wp))
    taps = np.ascontiguousarray(w.transpose(2, 3, 0, 1))  # BLAS needs unit stride
    for a in range(kh):
        for c in range(kw):
            off = a * Wp + c
            acc[:, :, :L] += np.matmul(taps[a, c], xf[:, :, off:off + L])
    out = acc.reshape(N, Co, Ho, Wp)[:, :, :, :Wo]
    if b is not None:
        out = out + b[None, :, None, None]
    return np.ascontiguousarray(out), (x, w, pad)


def conv2d_backward(dout, cache):
    x, w, pad = cache
    N, C, H, W = x.shape
    Co, _, kh, kw = w.shape
    xf, Wp = _flat_padded(x, pad)
    Ho, Wo = dout.shape[2:]
    L = (Ho - 1) * Wp + Wo
    dz = np.zeros((N, Co, Ho, Wp))
    dz[:, :, :, :Wo] = dout
    dz = dz.reshape(N, Co, -1)[:, :, :L]
    dw = np.empty_like(w)
    dxf = np.zeros_like(xf)
    wt = np.ascontiguousarray(w.transpose(2, 3, 1, 0))  # kh, kw, C, Co
    for a in range(kh):
        for c in range(kw):
            off = a * Wp + c
            dw[:, :, a, c] = np.matmul(dz, xf[:, :, off:off + L].transpose(0, 2, 1)).sum(axis=0)
            dxf[:, :, off:off + L] += np.matmul(wt[a, c], dz)
    Hp = H + 2 * pad
    dx = dxf.reshape(N, C, Hp, Wp)[:, :, pad:pad + H, pad:pad + W]
    db = dout.sum(axis=(0, 2, 3))
    return np.ascontiguousarray(dx), dw, db


def batchnorm_forward(x, gamma, beta, running_mean, running_var, training):
    """Per-channel batch norm.  Running statistics are updated in place."""
    if training:
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        m = x.size // x.shape[1]
        running_mean *= 1 - BN_MOMENTUM
        running_mean += BN_MOMENTUM * mean
        running_var *= 1 - BN_MOMENTUM
        running_var += BN_MOMENTUM * var * (m / max(m - 1, 1))
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
    out = gamma[None, :, None, None] * xhat + beta[None, :, None, None]
    return out, (xhat, gamma, inv_std, training)


def batchnorm_backward(dout, cache):
    xhat, gamma, inv_std, training = cache
    dbeta = dout.sum(axis=(0, 2, 3))
    dgamma = (dout * xhat).sum(axis=(0, 2, 3))
    dxhat = dout * gamma[None, :, None, None]
    if not training:
        return dxhat * inv_std[None, :, None, None], dgamma, dbeta
    m = dout.size // dout.shape[1]
    dx = (inv_std[None, :, None, None] / m) * (
        m * dxhat
        - dxhat.sum(axis=(0, 2, 3))[None, :, None, None]
        - xhat * (dxhat * xhat).sum(axis=(0, 2, 3))[None, :, None, None]
    )
    return dx, dgamma, dbeta


def relu_forward(x):
    return np.maximum(x, 0.0), x > 0


def relu_backward(dout, cache):
    return dout * cache


def avgpool2_forward(x):
    N, C, H, W = x.shape
    if H % 2 or W % 2:
        raise ValueError(f"avg pooling needs even H, W; got {(H, W)}")
    out = x.reshape(N, C, H // 2, 2, W // 2, 2).mean(axis=(3, 5))
    return out, x.shape


def avgpool2_backward(dout, shape):
    g = 0.25 * dout
    return np.repeat(np.repeat(g, 2, axis=2), 2, axis=3).reshape(shape)


def upconv_forward(x, w, b):
    """Transposed convolution, kernel 3, stride 2, padding 1, output padding 1.

    ``w`` is (C_in, C_out, 3, 3).  Input pixel (i, j) spreads ``w`` onto
    output positions (2i - 1 + a, 2j - 1 + c); the output is (2H, 2W).
    """
    N, C, H, W = x.shape
    Co = w.shape[1]
    contrib = np.tensordot(x, w, axes=([1], [0]))  # N, H, W, Co, 3, 3
    # build on a canvas with a one-pixel border at the top/left
    canvas = np.zeros((N, Co, 2 * H + 1, 2 * W + 1))
    for a in range(3):
        for c in range(3):
            canvas[:, :, a:a + 2 * H:2, c:c + 2 * W:2] += contrib[..., a, c].transpose(0, 3, 1, 2)
    out = canvas[:, :, 1:, 1:]
    if b is not None:
        out = out + b[None, :, None, None]
    return np.ascontiguousarray(out), (x, w)


def upconv_backward(dout, cache):
    x, w = cache
    N, C, H, W = x.shape
    Co = w.shape[1]
    canvas = np.zeros((N, Co, 2 * H + 1, 2 * W + 1))
    canvas[:, :, 1:, 1:] = dout
    g = np.empty((N, H, W, Co, 3, 3))
    for a in range(3):
        for c in range(3):
            g[..., a, c] = canvas[:, :, a:a + 2 * H:2, c:c + 2 * W:2].transpose(0, 2, 3, 1)
    dx = np.tensordot(g, w, axes=([3, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    dw = np.tensordot(x, g, axes=([0, 2, 3], [0, 1, 2]))
    db = dout.sum(axis=(0, 2, 3))
    return np.ascontiguousarray(dx), dw, db


def concat_forward(decoder, encoder):
    if decoder.shape[0] != encoder.shape[0] or decoder.shape[2:] != encoder.shape[2:]:
        raise ValueError(f"cannot concatenate {decoder.shape} and {encoder.shape}")
    return np.concatenate([decoder, encoder], axis=1), decoder.shape[1]


def concat_backward(dout, n_decoder):
    return dout[:, :n_decoder], dout[:, n_decoder:]


def mse_loss(pred, target):
    """Mean squared error over all elements and its gradient w.r.t. ``pred``."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    n = diff.size
    return float(np.sum(diff * diff) / n), 2.0 * diff / n
