"""The finite-difference certifier itself: passes cleanly, catches corruption."""

import numpy as np
import pytest

from swtf.pipeline.gradcheck import (
    CHECKS,
    E2E_THRESHOLD,
    OP_THRESHOLD,
    CheckResult,
    fd_gradient,
    format_report,
    run_gradcheck,
    tensor_rel_error,
)


class TestHelpers:
    def test_fd_gradient_on_quadratic(self):
        x = np.array([1.0, -2.0, 3.0])
        a = np.array([2.0, 5.0, -1.0])
        g = fd_gradient(lambda: float(np.sum(a * x * x)), x)
        assert np.max(np.abs(g - 2.0 * a * x)) <= 1e-8
        # the probe restores x
        assert np.array_equal(x, [1.0, -2.0, 3.0])

    def test_tensor_rel_error_scales(self):
        assert tensor_rel_error(np.array([1.0]), np.array([1.0])) == 0.0
        assert tensor_rel_error(np.array([2.0]), np.array([1.0])) == pytest.approx(0.5)
        # tiny absolute disagreement on a zero gradient uses the 1e-6 floor
        assert tensor_rel_error(np.array([0.0]), np.array([1e-9])) == pytest.approx(1e-3)


class TestScopes:
    @pytest.mark.parametrize("name", [n for n in CHECKS if n != "end_to_end"])
    def test_each_op_scope_passes(self, name):
        results = run_gradcheck(name)
        assert len(results) == 1
        assert results[0].name == name
        assert results[0].threshold == OP_THRESHOLD
        assert results[0].passed, format_report(results)

    def test_end_to_end_scope_passes(self):
        results = run_gradcheck("end_to_end")
        assert results[0].threshold == E2E_THRESHOLD
        assert results[0].passed, format_report(results)

    def test_all_runs_every_check(self):
        results = run_gradcheck("all")
        assert [r.name for r in results] == list(CHECKS)
        assert all(r.passed for r in results), format_report(results)

    def test_unknown_scope(self):
        with pytest.raises(ValueError, match="unknown gradcheck scope"):
            run_gradcheck("everything")


class TestDetection:
    def test_corrupted_backward_is_caught(self, monkeypatch):
        import importlib

        ops = importlib.import_module("swtf.net.ops")
        real = ops.conv2d_backward

        def corrupted(grad_out, cache, need_input_grad=True):
            gx, gk, gb = real(grad_out, cache, need_input_grad)
            return gx, gk * 1.01, gb  # one percent bias on the kernel grad

        monkeypatch.setattr(ops, "conv2d_backward", corrupted)
        results = run_gradcheck("conv2d")
        assert not results[0].passed
        assert "FAIL" in format_report(results)

    def test_sign_flip_is_caught(self, monkeypatch):
        import importlib

        ops = importlib.import_module("swtf.net.ops")
        real = ops.temporal_subject_head_backward

        monkeypatch.setattr(
            ops,
            "temporal_subject_head_backward",
            lambda grad_out, cache: -real(grad_out, cache),
        )
        results = run_gradcheck("temporal_head")
        assert not results[0].passed


class TestReport:
    def test_format_lines(self):
        results = [
            CheckResult(name="conv2d", max_rel_error=1e-9, threshold=1e-4),
            CheckResult(name="bad_op", max_rel_error=0.5, threshold=1e-4),
        ]
        report = format_report(results)
        lines = report.splitlines()
        assert lines[0].startswith("pass")
        assert "conv2d" in lines[0]
        assert lines[1].startswith("FAIL")
        assert "5.000e-01" in lines[1]
