"""Dense flow solver: translation recovery, null cases, solve accounting."""

import numpy as np
import pytest

from swtf.fusion.flow import (
    estimate_flow,
    flow_solve_count,
    reset_flow_solve_count,
    solve_flow_batch,
    to_gray,
)


def smooth_pattern(size: int, seed: int, shift=(0.0, 0.0)) -> np.ndarray:
    """Band-limited random texture evaluated on an (optionally shifted) grid.

    Shifting the evaluation grid rather than rolling pixels gives an exact
    continuous translation with no wrap seam.
    """
    rng = np.random.default_rng(seed)
    y = np.arange(size, dtype=np.float64)[:, None] - shift[1]
    x = np.arange(size, dtype=np.float64)[None, :] - shift[0]
    img = np.zeros((size, size))
    for _ in range(12):
        wavelength = rng.uniform(20.0, 64.0)
        theta = rng.uniform(0.0, 2.0 * np.pi)
        k = 2.0 * np.pi / wavelength
        phase = rng.uniform(0.0, 2.0 * np.pi)
        img += rng.uniform(0.3, 1.0) * np.cos(
            k * (np.cos(theta) * x + np.sin(theta) * y) + phase
        )
    # fixed affine into [0,1]: both frames of a pair must share it exactly
    return img / 24.0 + 0.5


class TestToGray:
    def test_luma_weights(self):
        px = np.zeros((1, 1, 3), dtype=np.uint8)
        px[0, 0] = (255, 0, 0)
        assert to_gray(px)[0, 0] == pytest.approx(0.299)
        px[0, 0] = (0, 255, 0)
        assert to_gray(px)[0, 0] == pytest.approx(0.587)
        px[0, 0] = (0, 0, 255)
        assert to_gray(px)[0, 0] == pytest.approx(0.114)

    def test_gray_passthrough(self):
        g = np.random.default_rng(0).random((4, 5))
        assert to_gray(g) is not None
        assert np.array_equal(to_gray(g), g)

    def test_rejects_other_shapes(self):
        with pytest.raises(ValueError):
            to_gray(np.zeros((4, 5, 4), dtype=np.uint8))


class TestSolver:
    def test_identical_frames_give_zero_flow(self):
        g = smooth_pattern(48, seed=3)
        f = estimate_flow(g, g, iterations=50)
        assert np.max(np.abs(f.u)) <= 1e-6
        assert np.max(np.abs(f.v)) <= 1e-6

    def test_constant_frames_give_zero_flow(self):
        g = np.full((32, 32), 0.5)
        f = estimate_flow(g, g + 0.0, iterations=30)
        assert np.max(np.abs(f.u)) <= 1e-6
        assert np.max(np.abs(f.v)) <= 1e-6

    @pytest.mark.parametrize("d", [(1.0, 0.0), (0.0, -1.0), (2.0, 1.0), (-1.0, -2.0)])
    def test_recovers_small_translations(self, d):
        a = smooth_pattern(96, seed=8)
        b = smooth_pattern(96, seed=8, shift=d)
        f = estimate_flow(a, b, iterations=200)
        m = 10  # interior only; boundaries lack constraints
        epe = np.hypot(f.u[m:-m, m:-m] - d[0], f.v[m:-m, m:-m] - d[1]).mean()
        assert epe < 0.5, (d, epe)

    def test_batch_matches_single(self):
        a1 = smooth_pattern(32, seed=1)
        b1 = smooth_pattern(32, seed=1, shift=(1.0, 0.0))
        a2 = smooth_pattern(32, seed=2)
        b2 = smooth_pattern(32, seed=2, shift=(0.0, 1.0))
        u, v = solve_flow_batch(np.stack([a1, a2]), np.stack([b1, b2]),
                                alpha=10.0, iterations=40)
        f1 = estimate_flow(a1, b1, iterations=40)
        f2 = estimate_flow(a2, b2, iterations=40)
        assert np.array_equal(u[0], f1.u) and np.array_equal(v[0], f1.v)
        assert np.array_equal(u[1], f2.u) and np.array_equal(v[1], f2.v)

    def test_parameter_validation(self):
        g = np.zeros((1, 8, 8))
        with pytest.raises(ValueError, match="alpha"):
            solve_flow_batch(g, g, alpha=0.0, iterations=10)
        with pytest.raises(ValueError, match="iterations"):
            solve_flow_batch(g, g, alpha=1.0, iterations=0)
        with pytest.raises(ValueError, match="shapes differ"):
            solve_flow_batch(np.zeros((1, 8, 8)), np.zeros((1, 8, 9)),
                             alpha=1.0, iterations=1)


class TestSolveCounter:
    def test_counts_pairs(self):
        reset_flow_solve_count()
        g = np.full((8, 8), 0.5)
        estimate_flow(g, g, iterations=1)
        assert flow_solve_count() == 1
        solve_flow_batch(np.zeros((3, 8, 8)), np.zeros((3, 8, 8)),
                         alpha=1.0, iterations=1)
        assert flow_solve_count() == 4
        reset_flow_solve_count()
        assert flow_solve_count() == 0
