"""Network primitives vs scalar oracles and finite differences."""

import numpy as np
import pytest

from swtf.net.ops import (
    batchnorm,
    batchnorm_backward,
    bce_with_logits,
    conv2d,
    conv2d_backward,
    dense_dropout,
    dense_dropout_backward,
    relu_maxpool,
    relu_maxpool_backward,
    temporal_subject_head,
    temporal_subject_head_backward,
)


def fd_grad(func, x, eps=1e-6):
    """Central-difference gradient of a scalar function of one array."""
    g = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = func()
        flat[i] = orig - eps
        lo = func()
        flat[i] = orig
        gf[i] = (hi - lo) / (2.0 * eps)
    return g


def conv_reference(x, kernel, bias, stride, padding):
    """Five-deep loop re-derivation of the cross-correlation."""
    b, cin, h, w = x.shape
    cout, _, kh, kw = kernel.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((b, cout, ho, wo))
    for n in range(b):
        for co in range(cout):
            for i in range(ho):
                for j in range(wo):
                    patch = xp[n, :, i * stride:i * stride + kh, j * stride:j * stride + kw]
                    out[n, co, i, j] = np.sum(patch * kernel[co]) + bias[co]
    return out


class TestConv2d:
    @pytest.mark.parametrize("stride,padding,hw", [(1, 1, (5, 4)), (2, 1, (7, 7)), (1, 0, (6, 5))])
    def test_matches_loop_reference(self, stride, padding, hw):
        rng = np.random.default_rng(stride * 7 + padding)
        x = rng.standard_normal((2, 2, *hw))
        kernel = rng.standard_normal((3, 2, 3, 3))
        bias = rng.standard_normal(3)
        out, _ = conv2d(x, kernel, bias, stride=stride, padding=padding)
        ref = conv_reference(x, kernel, bias, stride, padding)
        assert out.shape == ref.shape
        assert np.max(np.abs(out - ref)) <= 1e-12

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((2, 2, 5, 5))
        kernel = rng.standard_normal((3, 2, 3, 3))
        bias = rng.standard_normal(3)
        probe = rng.standard_normal((2, 3, 5, 5))

        def loss():
            out, _ = conv2d(x, kernel, bias)
            return float(np.sum(out * probe))

        out, cache = conv2d(x, kernel, bias)
        gx, gk, gb = conv2d_backward(probe, cache)
        assert np.max(np.abs(gx - fd_grad(loss, x))) <= 1e-7
        assert np.max(np.abs(gk - fd_grad(loss, kernel))) <= 1e-7
        assert np.max(np.abs(gb - fd_grad(loss, bias))) <= 1e-7

    def test_input_grad_skip(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((1, 2, 4, 4))
        kernel = rng.standard_normal((2, 2, 3, 3))
        bias = np.zeros(2)
        out, cache = conv2d(x, kernel, bias)
        g = rng.standard_normal(out.shape)
        gx, gk, gb = conv2d_backward(g, cache)
        gx2, gk2, gb2 = conv2d_backward(g, cache, need_input_grad=False)
        assert gx2 is None
        assert np.array_equal(gk, gk2)
        assert np.array_equal(gb, gb2)
        assert gx is not None

    def test_validation(self):
        x = np.zeros((1, 3, 4, 4))
        k = np.zeros((2, 2, 3, 3))
        with pytest.raises(ValueError, match="input channels"):
            conv2d(x, k, np.zeros(2))
        with pytest.raises(ValueError, match="stride"):
            conv2d(np.zeros((1, 2, 4, 4)), k, np.zeros(2), stride=0)
        with pytest.raises(ValueError, match="output size"):
            conv2d(np.zeros((1, 2, 6, 6)), k, np.zeros(2), stride=2)


class TestBatchnorm:
    def test_normalizes_per_channel(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((4, 3, 6, 6)) * 5.0 + 2.0
        out, _, _, _ = batchnorm(x, np.ones(3), np.zeros(3), np.zeros(3), np.ones(3))
        m = out.mean(axis=(0, 2, 3))
        v = out.var(axis=(0, 2, 3))
        assert np.max(np.abs(m)) <= 1e-12
        # biased variance of xhat is var/(var+eps), just under 1
        assert np.allclose(v, x.var(axis=(0, 2, 3)) / (x.var(axis=(0, 2, 3)) + 1e-5))

    def test_affine_parameters_apply(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((8, 2))
        gamma = np.array([2.0, 0.5])
        beta = np.array([-1.0, 3.0])
        out, _, _, _ = batchnorm(x, gamma, beta, np.zeros(2), np.ones(2))
        base, _, _, _ = batchnorm(x, np.ones(2), np.zeros(2), np.zeros(2), np.ones(2))
        assert np.allclose(out, gamma * base + beta)

    def test_running_stats_update(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((10, 3)) + 4.0
        rm = np.array([1.0, 2.0, 3.0])
        rv = np.array([1.0, 1.0, 1.0])
        _, _, new_rm, new_rv = batchnorm(x, np.ones(3), np.zeros(3), rm, rv, momentum=0.1)
        assert np.allclose(new_rm, 0.9 * rm + 0.1 * x.mean(axis=0))
        assert np.allclose(new_rv, 0.9 * rv + 0.1 * x.var(axis=0))

    def test_inference_uses_running_stats(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((4, 2))
        rm = np.array([0.5, -0.5])
        rv = np.array([2.0, 4.0])
        out, _, new_rm, new_rv = batchnorm(
            x, np.ones(2), np.zeros(2), rm, rv, training=False
        )
        assert np.allclose(out, (x - rm) / np.sqrt(rv + 1e-5))
        assert np.array_equal(new_rm, rm)
        assert np.array_equal(new_rv, rv)

    def test_single_row_inference_allowed_training_rejected(self):
        x = np.ones((1, 3))
        with pytest.raises(ValueError, match="at least 2"):
            batchnorm(x, np.ones(3), np.zeros(3), np.zeros(3), np.ones(3))
        out, _, _, _ = batchnorm(
            x, np.ones(3), np.zeros(3), np.zeros(3), np.ones(3), training=False
        )
        assert np.all(np.isfinite(out))

    @pytest.mark.parametrize("training", [True, False])
    def test_backward_matches_finite_differences(self, training):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((5, 3, 2, 2))
        gamma = rng.standard_normal(3) + 1.5
        beta = rng.standard_normal(3)
        rm = rng.standard_normal(3)
        rv = rng.random(3) + 0.5
        probe = rng.standard_normal(x.shape)

        def loss():
            out, _, _, _ = batchnorm(x, gamma, beta, rm, rv, training=training)
            return float(np.sum(out * probe))

        _, cache, _, _ = batchnorm(x, gamma, beta, rm, rv, training=training)
        gx, gg, gb = batchnorm_backward(probe, cache)
        assert np.max(np.abs(gx - fd_grad(loss, x))) <= 1e-6
        assert np.max(np.abs(gg - fd_grad(loss, gamma))) <= 1e-6
        assert np.max(np.abs(gb - fd_grad(loss, beta))) <= 1e-6


class TestReluMaxpool:
    def test_hand_example(self):
        x = np.array([[[[1.0, -2.0, 3.0, 0.5],
                        [-1.0, 4.0, -3.0, 2.0],
                        [0.0, -1.0, -2.0, -4.0],
                        [5.0, 2.0, -1.0, -3.0]]]])
        out, _ = relu_maxpool(x)
        assert np.array_equal(out[0, 0], [[4.0, 3.0], [5.0, 0.0]])

    def test_odd_sizes_pad_without_leaking(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((2, 3, 5, 7))
        out, _ = relu_maxpool(x)
        assert out.shape == (2, 3, 3, 4)
        assert np.all(np.isfinite(out))
        assert np.all(out >= 0.0)

    def test_backward_routes_to_first_argmax(self):
        # all four window entries tie after relu; gradient goes to index 0
        x = np.full((1, 1, 2, 2), 3.0)
        out, cache = relu_maxpool(x)
        g = relu_maxpool_backward(np.ones((1, 1, 1, 1)), cache)
        assert np.array_equal(g[0, 0], [[1.0, 0.0], [0.0, 0.0]])

    def test_backward_gates_on_positive_input(self):
        # all-negative window: output 0 and no gradient anywhere
        x = np.full((1, 1, 2, 2), -2.0)
        out, cache = relu_maxpool(x)
        assert out[0, 0, 0, 0] == 0.0
        g = relu_maxpool_backward(np.ones((1, 1, 1, 1)), cache)
        assert np.array_equal(g, np.zeros_like(x))

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(9)
        # keep values away from 0 and ties so FD is valid
        x = rng.standard_normal((2, 2, 4, 4)) * 3.0
        x[np.abs(x) < 0.1] = 0.5
        probe = rng.standard_normal((2, 2, 2, 2))

        def loss():
            out, _ = relu_maxpool(x)
            return float(np.sum(out * probe))

        _, cache = relu_maxpool(x)
        gx = relu_maxpool_backward(probe, cache)
        assert np.max(np.abs(gx - fd_grad(loss, x))) <= 1e-7


class TestDenseDropout:
    def test_keep_one_is_plain_affine(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((4, 6))
        w = rng.standard_normal((6, 3))
        b = rng.standard_normal(3)
        out, _ = dense_dropout(x, w, b, keep_p=1.0, training=True, seed=0)
        assert np.array_equal(out, x @ w + b)

    def test_inference_ignores_seed(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((3, 5))
        w = rng.standard_normal((5, 2))
        b = rng.standard_normal(2)
        a, _ = dense_dropout(x, w, b, keep_p=0.5, training=False, seed=1)
        b_, _ = dense_dropout(x, w, b, keep_p=0.5, training=False, seed=2)
        assert np.array_equal(a, b_)
        assert np.array_equal(a, x @ w + b)

    def test_mask_statistics(self):
        x = np.ones((200, 1))
        w = np.ones((1, 500))
        b = np.zeros(500)
        out, _ = dense_dropout(x, w, b, keep_p=0.7, training=True, seed=3)
        frac = np.count_nonzero(out) / out.size
        assert abs(frac - 0.7) <= 0.02
        # surviving entries are scaled by exactly 1/keep_p
        kept = out[out != 0.0]
        assert np.allclose(kept, 1.0 / 0.7)

    def test_seed_determinism(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((10, 8))
        w = rng.standard_normal((8, 8))
        b = rng.standard_normal(8)
        a, _ = dense_dropout(x, w, b, keep_p=0.6, seed=7)
        b1, _ = dense_dropout(x, w, b, keep_p=0.6, seed=7)
        c, _ = dense_dropout(x, w, b, keep_p=0.6, seed=8)
        assert np.array_equal(a, b1)
        assert not np.array_equal(a, c)

    def test_generator_seed_accepted(self):
        x = np.ones((4, 4))
        w = np.eye(4)
        b = np.zeros(4)
        a, _ = dense_dropout(x, w, b, keep_p=0.5, seed=np.random.default_rng(9))
        b1, _ = dense_dropout(x, w, b, keep_p=0.5, seed=np.random.default_rng(9))
        assert np.array_equal(a, b1)

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(13)
        x = rng.standard_normal((5, 4))
        w = rng.standard_normal((4, 3))
        b = rng.standard_normal(3)
        probe = rng.standard_normal((5, 3))

        def loss():
            out, _ = dense_dropout(x, w, b, keep_p=0.7, training=True, seed=21)
            return float(np.sum(out * probe))

        _, cache = dense_dropout(x, w, b, keep_p=0.7, training=True, seed=21)
        gx, gw, gb = dense_dropout_backward(probe, cache)
        assert np.max(np.abs(gx - fd_grad(loss, x))) <= 1e-7
        assert np.max(np.abs(gw - fd_grad(loss, w))) <= 1e-7
        assert np.max(np.abs(gb - fd_grad(loss, b))) <= 1e-7

    def test_validation(self):
        x, w, b = np.ones((2, 2)), np.ones((2, 2)), np.ones(2)
        with pytest.raises(ValueError, match="keep_p"):
            dense_dropout(x, w, b, keep_p=0.0)
        with pytest.raises(ValueError, match="keep_p"):
            dense_dropout(x, w, b, keep_p=1.2)


class TestTemporalHead:
    def test_hand_example(self):
        logits = np.array([
            [[1.0, 5.0], [0.0, 0.0]],
            [[2.0, 1.0], [3.0, -1.0]],
            [[0.0, 4.0], [1.0, 2.0]],
        ])
        out, cache = temporal_subject_head(logits)
        assert np.array_equal(out, [[2.0, 5.0], [3.0, 2.0]])
        g = temporal_subject_head_backward(np.ones((2, 2)), cache)
        expected = np.zeros_like(logits)
        expected[1, 0, 0] = expected[0, 0, 1] = 1.0
        expected[1, 1, 0] = expected[2, 1, 1] = 1.0
        assert np.array_equal(g, expected)

    def test_ties_resolve_to_first_frame(self):
        logits = np.zeros((3, 1, 2))
        out, cache = temporal_subject_head(logits)
        g = temporal_subject_head_backward(np.ones((1, 2)), cache)
        assert g[0].sum() == 2.0
        assert g[1:].sum() == 0.0

    def test_partial_absence_ok_total_absence_rejected(self):
        logits = np.full((3, 2, 2), -np.inf)
        logits[1, 0] = [0.5, -0.5]  # subject 0 present in one frame
        logits[:, 1] = 1.0
        logits[1, 1] = [2.0, 2.0]
        out, _ = temporal_subject_head(logits)
        assert np.array_equal(out[0], [0.5, -0.5])

        logits[:, 1] = -np.inf
        with pytest.raises(ValueError, match="absent"):
            temporal_subject_head(logits)

    def test_shape_validation(self):
        with pytest.raises(ValueError, match="subjects"):
            temporal_subject_head(np.zeros((3, 4)))


class TestBceWithLogits:
    def test_frozen_values(self):
        logits = np.array([0.0, 2.0, -3.0])
        targets = np.array([1.0, 1.0, 0.0])
        loss, grad = bce_with_logits(logits, targets)
        expected = (0.6931471805599453 + 0.12692801104297249 + 0.04858735157374196) / 3
        assert abs(loss - expected) <= 1e-12

    def test_gradient_formula(self):
        loss, grad = bce_with_logits(np.array([0.0]), np.array([1.0]))
        assert abs(loss - np.log(2.0)) <= 1e-12
        assert abs(grad[0] - (-0.5)) <= 1e-12

    def test_extreme_logits_stay_finite(self):
        logits = np.array([1000.0, -1000.0, 1000.0, -1000.0])
        targets = np.array([1.0, 0.0, 0.0, 1.0])
        loss, grad = bce_with_logits(logits, targets)
        assert np.isfinite(loss)
        assert np.all(np.isfinite(grad))
        assert abs(loss - (0.0 + 0.0 + 1000.0 + 1000.0) / 4) <= 1e-12

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(14)
        logits = rng.standard_normal((4, 3))
        targets = (rng.random((4, 3)) < 0.5).astype(np.float64)

        def loss():
            return bce_with_logits(logits, targets)[0]

        _, grad = bce_with_logits(logits, targets)
        assert np.max(np.abs(grad - fd_grad(loss, logits))) <= 1e-8

    def test_validation(self):
        with pytest.raises(ValueError, match="logits"):
            bce_with_logits(np.zeros((2, 2)), np.zeros((2, 3)))
        with pytest.raises(ValueError, match="one-hot"):
            bce_with_logits(np.zeros(3), np.array([0.0, 0.5, 1.0]))
