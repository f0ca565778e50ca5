"""Finite-difference certification of every backward implementation.

Each named check builds a fixed-seed double-precision instance, computes the
analytic gradient, and compares against central differences (h = 1e-5).
Error metric per tensor: max absolute deviation over a scale of
max(|analytic|_inf, |numeric|_inf, 1e-6), which stays meaningful for
gradients that are legitimately zero (for example a conv bias feeding a
batchnorm). Per-op threshold 1e-4; end-to-end threshold 1e-3.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..dataio.snippets import BoundingBox
from ..net import ops
from ..net.model import NetConfig, init_model, model_backward, model_forward
from .. import roialign

FD_STEP = 1e-5
OP_THRESHOLD = 1e-4
E2E_THRESHOLD = 1e-3


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_rel_error: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.threshold


def fd_gradient(loss: Callable[[], float], x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar function w.r.t. x, in place."""
    g = np.zeros_like(x, dtype=np.float64)
    flat_x = x.reshape(-1)
    flat_g = g.reshape(-1)
    for i in range(flat_x.size):
        orig = flat_x[i]
        flat_x[i] = orig + h
        up = loss()
        flat_x[i] = orig - h
        down = loss()
        flat_x[i] = orig
        flat_g[i] = (up - down) / (2.0 * h)
    return g


def tensor_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-6)
    return float(np.abs(analytic - numeric).max() / scale)


def _compare(loss: Callable[[], float], pairs) -> float:
    """pairs: iterable of (tensor, analytic gradient); returns worst error."""
    worst = 0.0
    for tensor, analytic in pairs:
        numeric = fd_gradient(loss, tensor)
        worst = max(worst, tensor_rel_error(np.asarray(analytic), numeric))
    return worst


def check_conv2d() -> float:
    rng = np.random.default_rng(11)
    x = rng.normal(size=(2, 3, 8, 8))
    k = rng.normal(size=(4, 3, 3, 3))
    b = rng.normal(size=4)
    gy = rng.normal(size=(2, 4, 8, 8))

    def loss() -> float:
        return float(np.sum(ops.conv2d(x, k, b)[0] * gy))

    _, ctx = ops.conv2d(x, k, b)
    gx, gk, gb = ops.conv2d_backward(gy, ctx)
    return _compare(loss, [(x, gx), (k, gk), (b, gb)])


def check_batchnorm2d() -> float:
    rng = np.random.default_rng(12)
    x = rng.normal(size=(3, 4, 5, 5))
    gamma = 1.0 + 0.2 * rng.normal(size=4)
    beta = rng.normal(size=4)
    rm, rv = np.zeros(4), np.ones(4)
    gy = rng.normal(size=x.shape)

    def loss() -> float:
        out = ops.batchnorm(x, gamma, beta, rm, rv, training=True)[0]
        return float(np.sum(out * gy))

    _, ctx, _, _ = ops.batchnorm(x, gamma, beta, rm, rv, training=True)
    gx, gg, gb = ops.batchnorm_backward(gy, ctx)
    return _compare(loss, [(x, gx), (gamma, gg), (beta, gb)])


def check_relu_maxpool() -> float:
    rng = np.random.default_rng(13)
    x = rng.normal(size=(2, 3, 6, 7))  # odd width exercises the -inf padding
    gy = rng.normal(size=ops.relu_maxpool(x)[0].shape)

    def loss() -> float:
        return float(np.sum(ops.relu_maxpool(x)[0] * gy))

    _, ctx = ops.relu_maxpool(x)
    gx = ops.relu_maxpool_backward(gy, ctx)
    return _compare(loss, [(x, gx)])


def check_dense_dropout() -> float:
    rng = np.random.default_rng(14)
    x = rng.normal(size=(5, 4))
    w = rng.normal(size=(4, 6))
    b = rng.normal(size=6)
    gy = rng.normal(size=(5, 6))

    def loss() -> float:
        out = ops.dense_dropout(x, w, b, keep_p=0.7, training=True, seed=99)[0]
        return float(np.sum(out * gy))

    _, ctx = ops.dense_dropout(x, w, b, keep_p=0.7, training=True, seed=99)
    gx, gw, gb = ops.dense_dropout_backward(gy, ctx)
    return _compare(loss, [(x, gx), (w, gw), (b, gb)])


def check_temporal_head() -> float:
    rng = np.random.default_rng(15)
    x = rng.normal(size=(4, 3, 5))
    gy = rng.normal(size=(3, 5))

    def loss() -> float:
        return float(np.sum(ops.temporal_subject_head(x)[0] * gy))

    _, ctx = ops.temporal_subject_head(x)
    gx = ops.temporal_subject_head_backward(gy, ctx)
    return _compare(loss, [(x, gx)])


def check_bce_with_logits() -> float:
    rng = np.random.default_rng(16)
    z = rng.normal(size=(4, 3))
    y = np.zeros((4, 3))
    y[np.arange(4), rng.integers(0, 3, size=4)] = 1.0

    def loss() -> float:
        return ops.bce_with_logits(z, y)[0]

    _, gz = ops.bce_with_logits(z, y)
    return _compare(loss, [(z, gz)])


def check_roi_align() -> float:
    rng = np.random.default_rng(17)
    fm = rng.normal(size=(1, 6, 6))
    boxes = [(0.12, 0.2, 0.7, 0.85)]
    cfg = roialign.RoiConfig(crop_size=3, samples_per_bin=2)
    gy = rng.normal(size=(1, 1, 3, 3))

    def loss() -> float:
        return float(np.sum(roialign.roi_align_forward(fm, boxes, cfg) * gy))

    grad = roialign.roi_align_backward(gy, boxes, cfg, fm.shape)
    return _compare(loss, [(fm, grad)])


def check_end_to_end() -> float:
    rng = np.random.default_rng(18)
    cfg = NetConfig(conv_channels=(4, 6), fc_units=16, num_classes=3)
    state = init_model(cfg, seed=1)
    frames = rng.normal(size=(2, 3, 3, 16, 16))

    def mkbox(tid: int, label: int) -> BoundingBox:
        x1, y1 = rng.uniform(0.05, 0.45, size=2)
        return BoundingBox(
            x1, y1, x1 + rng.uniform(0.25, 0.5), y1 + rng.uniform(0.25, 0.5), tid, label
        )

    boxes = [
        [[mkbox(0, 1)] for _ in range(3)],
        [[mkbox(0, 2), mkbox(1, 0)] if t != 1 else [mkbox(0, 2)] for t in range(3)],
    ]
    targets = np.zeros((3, 3))
    targets[[0, 1, 2], [1, 2, 0]] = 1.0

    def loss() -> float:
        logits, _, _ = model_forward(state, frames, boxes, training=True, dropout_seed=7)
        return ops.bce_with_logits(logits, targets)[0]

    logits, _, cache = model_forward(state, frames, boxes, training=True, dropout_seed=7)
    _, gz = ops.bce_with_logits(logits, targets)
    grads = model_backward(state, gz, cache)

    pick = np.random.default_rng(0)
    worst = 0.0
    for name in state.trainable_names():
        arr = state.params[name]
        flat = arr.reshape(-1)
        idxs = pick.choice(flat.size, size=min(10, flat.size), replace=False)
        diffs, magnitudes = [], [np.abs(grads[name]).max()]
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + FD_STEP
            up = loss()
            flat[i] = orig - FD_STEP
            down = loss()
            flat[i] = orig
            numeric = (up - down) / (2.0 * FD_STEP)
            diffs.append(abs(grads[name].reshape(-1)[i] - numeric))
            magnitudes.append(abs(numeric))
        worst = max(worst, max(diffs) / max(max(magnitudes), 1e-6))
    return worst


CHECKS: dict[str, tuple[Callable[[], float], float]] = {
    "conv2d": (check_conv2d, OP_THRESHOLD),
    "batchnorm2d": (check_batchnorm2d, OP_THRESHOLD),
    "relu_maxpool": (check_relu_maxpool, OP_THRESHOLD),
    "dense_dropout": (check_dense_dropout, OP_THRESHOLD),
    "temporal_head": (check_temporal_head, OP_THRESHOLD),
    "bce_with_logits": (check_bce_with_logits, OP_THRESHOLD),
    "roi_align": (check_roi_align, OP_THRESHOLD),
    "end_to_end": (check_end_to_end, E2E_THRESHOLD),
}


def run_gradcheck(scope: str = "all") -> list[CheckResult]:
    """Run one named check or all of them; results in registry order."""
    if scope == "all":
        names = list(CHECKS)
    elif scope in CHECKS:
        names = [scope]
    else:
        raise ValueError(f"unknown gradcheck scope {scope!r}; have {', '.join(CHECKS)}")
    results = []
    for name in names:
        fn, threshold = CHECKS[name]
        results.append(CheckResult(name=name, max_rel_error=fn(), threshold=threshold))
    return results


def format_report(results: list[CheckResult]) -> str:
    lines = []
    for r in results:
        status = "pass" if r.passed else "FAIL"
        lines.append(
            f"{status}  {r.name:16s} max_rel_error={r.max_rel_error:.3e} "
            f"(threshold {r.threshold:g})"
        )
    return "\n".join(lines)
