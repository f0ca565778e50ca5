"""Primitive network ops, each a (forward, backward) pair.

Forwards return (output, cache); backwards take (grad_output, cache) and
return input/parameter gradients computed analytically. Everything is
plain numpy so double-precision finite differences can certify each
backward. Ties at max/argmax resolve to the first index, always.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


# ---------------------------------------------------------------- conv2d

def conv2d(
    x: np.ndarray,
    kernel: np.ndarray,
    bias: np.ndarray,
    stride: int = 1,
    padding: int = 1,
) -> tuple[np.ndarray, tuple]:
    """Cross-correlation with zero padding: (B,Cin,H,W) -> (B,Cout,H',W')."""
    b, cin, h, w = x.shape
    cout, kin, kh, kw = kernel.shape
    if kin != cin:
        raise ValueError(f"kernel expects {kin} input channels, got {cin}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if (h + 2 * padding - kh) % stride or (w + 2 * padding - kw) % stride:
        raise ValueError("non-integral output size")
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    # win: (B, Cin, H', W', kh, kw)
    out = np.tensordot(win, kernel, axes=([1, 4, 5], [1, 2, 3]))
    out = out.transpose(0, 3, 1, 2) + bias[None, :, None, None]
    cache = (x.shape, win, kernel, stride, padding)
    return np.ascontiguousarray(out), cache


def conv2d_backward(
    grad_out: np.ndarray, cache: tuple, need_input_grad: bool = True
) -> tuple[np.ndarray | None, np.ndarray, np.ndarray]:
    """Gradients for (input, kernel, bias).

    For the first layer of a network the input gradient is dead weight;
    pass need_input_grad=False to skip it (returns None in its place).
    """
    x_shape, win, kernel, stride, padding = cache
    b, cin, h, w = x_shape
    cout, _, kh, kw = kernel.shape
    _, _, ho, wo = grad_out.shape

    grad_bias = grad_out.sum(axis=(0, 2, 3))
    grad_kernel = np.tensordot(grad_out, win, axes=([0, 2, 3], [0, 2, 3]))
    if not need_input_grad:
        return None, grad_kernel, grad_bias

    spread = np.tensordot(grad_out, kernel, axes=([1], [0]))  # (B,H',W',Cin,kh,kw)
    gxp = np.zeros((b, cin, h + 2 * padding, w + 2 * padding), dtype=grad_out.dtype)
    for i in range(kh):
        for j in range(kw):
            gxp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += (
                spread[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            )
    grad_x = gxp[:, :, padding : padding + h, padding : padding + w]
    return np.ascontiguousarray(grad_x), grad_kernel, grad_bias


# ------------------------------------------------------------- batchnorm

def batchnorm(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    momentum: float = 0.1,
    eps: float = 1e-5,
    training: bool = True,
) -> tuple[np.ndarray, tuple, np.ndarray, np.ndarray]:
    """Normalize over every axis except axis 1 (channels/features).

    Works for (B, C, H, W) and (rows, features) inputs alike. Returns
    (out, cache, new_running_mean, new_running_var); running stats update
    as r <- (1 - momentum)*r + momentum*batch_stat in training mode and
    pass through untouched in inference mode.
    """
    axes = (0,) + tuple(range(2, x.ndim))
    count = int(np.prod([x.shape[a] for a in axes]))
    shape = (1, x.shape[1]) + (1,) * (x.ndim - 2)
    if training:
        if count < 2:
            raise ValueError("batchnorm training needs at least 2 values per channel")
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)  # biased
        new_rm = (1.0 - momentum) * running_mean + momentum * mean
        new_rv = (1.0 - momentum) * running_var + momentum * var
    else:
        mean, var = running_mean, running_var
        new_rm, new_rv = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean.reshape(shape)) * inv_std.reshape(shape)
    out = gamma.reshape(shape) * xhat + beta.reshape(shape)
    cache = (xhat, gamma, inv_std, axes, shape, count, training)
    return out, cache, new_rm, new_rv


def batchnorm_backward(
    grad_out: np.ndarray, cache: tuple
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients for (input, gamma, beta)."""
    xhat, gamma, inv_std, axes, shape, count, training = cache
    grad_beta = grad_out.sum(axis=axes)
    grad_gamma = (grad_out * xhat).sum(axis=axes)
    g = grad_out * gamma.reshape(shape)
    if not training:
        return g * inv_std.reshape(shape), grad_gamma, grad_beta
    # batch statistics depend on x, so their gradients flow back too
    mean_g = g.mean(axis=axes).reshape(shape)
    mean_gx = (g * xhat).mean(axis=axes).reshape(shape)
    grad_x = (g - mean_g - xhat * mean_gx) * inv_std.reshape(shape)
    return grad_x, grad_gamma, grad_beta


# ---------------------------------------------------------- relu+maxpool

def relu_maxpool(x: np.ndarray) -> tuple[np.ndarray, tuple]:
    """max(0, x) then 2x2/stride-2 max; odd sizes padded with -inf."""
    b, c, h, w = x.shape
    r = np.maximum(x, 0.0)
    ho, wo = (h + 1) // 2, (w + 1) // 2
    if h % 2 or w % 2:
        r = np.pad(
            r, ((0, 0), (0, 0), (0, h % 2), (0, w % 2)), constant_values=-np.inf
        )
    windows = (
        r.reshape(b, c, ho, 2, wo, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, ho, wo, 4)
    )
    arg = np.argmax(windows, axis=-1)
    out = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]
    cache = (x, arg)
    return out, cache


def relu_maxpool_backward(grad_out: np.ndarray, cache: tuple) -> np.ndarray:
    """Route gradient to each window argmax, gated by positive pre-activation."""
    x, arg = cache
    b, c, h, w = x.shape
    ho, wo = grad_out.shape[2], grad_out.shape[3]
    gwin = np.zeros((b, c, ho, wo, 4), dtype=grad_out.dtype)
    np.put_along_axis(gwin, arg[..., None], grad_out[..., None], axis=-1)
    gpad = (
        gwin.reshape(b, c, ho, wo, 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(b, c, 2 * ho, 2 * wo)
    )
    grad_r = gpad[:, :, :h, :w]
    return np.where(x > 0, grad_r, 0.0)


# ---------------------------------------------------------- dense+dropout

def dense_dropout(
    x: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray,
    keep_p: float = 0.7,
    training: bool = True,
    seed: int | np.random.Generator = 0,
) -> tuple[np.ndarray, tuple]:
    """Affine map then inverted dropout: (rows, feat) @ (feat, units) + bias.

    Training multiplies by a Bernoulli(keep_p)/keep_p mask drawn from the
    seed; inference is the bare affine map."""
    if not 0.0 < keep_p <= 1.0:
        raise ValueError(f"keep_p must be in (0, 1], got {keep_p}")
    a = x @ weights + bias
    if training:
        rng = np.random.default_rng(seed)
        mask = (rng.random(a.shape) < keep_p).astype(a.dtype) / keep_p
        out = a * mask
    else:
        mask = None
        out = a
    return out, (x, weights, mask)


def dense_dropout_backward(
    grad_out: np.ndarray, cache: tuple
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients for (input, weights, bias) with the mask frozen."""
    x, weights, mask = cache
    ga = grad_out * mask if mask is not None else grad_out
    return ga @ weights.T, x.T @ ga, ga.sum(axis=0)


# ------------------------------------------------------- temporal max head

def temporal_subject_head(logits: np.ndarray) -> tuple[np.ndarray, tuple]:
    """Max over the frame axis of (T, subjects, classes); -inf marks absence."""
    if logits.ndim != 3:
        raise ValueError(f"expected (T, subjects, classes), got {logits.shape}")
    arg = np.argmax(logits, axis=0)
    out = np.take_along_axis(logits, arg[None], axis=0)[0]
    if np.isneginf(out).any():
        raise ValueError("subject absent from all frames")
    return out, (logits.shape, arg)


def temporal_subject_head_backward(grad_out: np.ndarray, cache: tuple) -> np.ndarray:
    """Send each (subject, class) gradient to its argmax frame."""
    shape, arg = cache
    grad = np.zeros(shape, dtype=grad_out.dtype)
    np.put_along_axis(grad, arg[None], grad_out[None], axis=0)
    return grad


# ------------------------------------------------------------------ loss

def bce_with_logits(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy over all elements; returns (loss, grad).

    Stable form max(z,0) - z*y + log(1 + exp(-|z|)); the gradient is
    (sigmoid(z) - y) / element count.
    """
    z = np.asarray(logits)
    y = np.asarray(targets)
    if z.shape != y.shape:
        raise ValueError(f"logits {z.shape} vs targets {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("targets must be one-hot 0/1")
    per = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    sig = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.clip(z, 0, None))),
                   np.exp(np.clip(z, None, 0)) / (1.0 + np.exp(np.clip(z, None, 0))))
    grad = (sig - y) / z.size
    return float(per.mean()), grad.astype(z.dtype, copy=False)
