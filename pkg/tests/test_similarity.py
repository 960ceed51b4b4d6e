import math
import random

import numpy as np
import pytest

from evso.errors import (
    BlockOutOfRange,
    DegenerateInput,
    DimsMismatch,
    TooFewFrames,
)
from evso.frame_source import FrameDims, synth_moving_block, synth_noise
from evso.similarity import (
    DiffSeries,
    PairDiff,
    SimilarityConfig,
    d_y,
    diff_series,
    linear_fit,
    m_diff,
    pearson,
    regression_ssim_estimate,
    sad_y_macroblock,
    ssim,
    y_diff,
)


def _planes(h, w, fill_a=0, fill_b=0):
    a = np.full((h, w), fill_a, dtype=np.uint8)
    b = np.full((h, w), fill_b, dtype=np.uint8)
    return a, b


def test_sad_is_summed_absolute_difference():
    a, b = _planes(16, 32)
    b[0, 0] = 10
    b[15, 16] = 200
    assert sad_y_macroblock(a, b, 0, 0) == 10
    assert sad_y_macroblock(a, b, 0, 1) == 200
    with pytest.raises(BlockOutOfRange):
        sad_y_macroblock(a, b, 1, 0)
    with pytest.raises(BlockOutOfRange):
        sad_y_macroblock(a, b, 0, 2)


def test_changed_block_threshold_is_strict():
    a, b = _planes(16, 16)
    # 64 pixels differing by 5 sum to exactly the 320 threshold
    b[:4, :16] = 5
    assert sad_y_macroblock(a, b, 0, 0) == 320
    assert d_y(a, b, 0, 0) == 0
    assert m_diff(a, b) == 0
    b = b.copy()
    b[4, 0] = 1
    assert d_y(a, b, 0, 0) == 1
    assert m_diff(a, b) == 1


def test_m_diff_matches_per_block_loop_on_random_frames():
    rng = np.random.Generator(np.random.PCG64(2024))
    cfg = SimilarityConfig()
    for _ in range(20):
        a = rng.integers(0, 256, size=(48, 48), dtype=np.uint8)
        b = a.copy()
        # perturb a random subset of pixels so counts vary around theta
        mask = rng.random((48, 48)) < 0.02
        b[mask] = rng.integers(0, 256, size=int(mask.sum()), dtype=np.uint8)
        expected = sum(
            d_y(a, b, r, c, cfg) for r in range(3) for c in range(3)
        )
        assert m_diff(a, b, cfg) == expected


def test_m_diff_ignores_partial_edge_blocks():
    a, b = _planes(24, 24)
    b[20:, 20:] = 255  # only in the partial edge region
    assert m_diff(a, b) == 0
    assert y_diff(a, b) == 16 * 255


def test_y_diff_covers_whole_plane():
    a, b = _planes(16, 16, 10, 13)
    assert y_diff(a, b) == 3 * 256


def test_dims_mismatch_rejected():
    a = np.zeros((16, 16), dtype=np.uint8)
    b = np.zeros((16, 32), dtype=np.uint8)
    for fn in (lambda: m_diff(a, b), lambda: y_diff(a, b),
               lambda: ssim(a, b), lambda: sad_y_macroblock(a, b, 0, 0)):
        with pytest.raises(DimsMismatch):
            fn()


def _naive_ssim(a, b):
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    a = a.astype(np.float64)
    b = b.astype(np.float64)
    scores = []
    for r in range(a.shape[0] - 7):
        for c in range(a.shape[1] - 7):
            wa = a[r:r + 8, c:c + 8]
            wb = b[r:r + 8, c:c + 8]
            mu_a, mu_b = wa.mean(), wb.mean()
            var_a = ((wa - mu_a) ** 2).mean()
            var_b = ((wb - mu_b) ** 2).mean()
            cov = ((wa - mu_a) * (wb - mu_b)).mean()
            scores.append(
                ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2))
            )
    return float(np.mean(scores))


def test_ssim_matches_naive_windowed_reference():
    rng = np.random.Generator(np.random.PCG64(5))
    for _ in range(5):
        a = rng.integers(0, 256, size=(16, 24), dtype=np.uint8)
        b = rng.integers(0, 256, size=(16, 24), dtype=np.uint8)
        assert ssim(a, b) == pytest.approx(_naive_ssim(a, b), abs=1e-10)


def test_ssim_identity_extremes_and_symmetry():
    rng = np.random.Generator(np.random.PCG64(6))
    a = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
    assert ssim(a, a) == 1.0
    black = np.zeros((32, 32), dtype=np.uint8)
    white = np.full((32, 32), 255, dtype=np.uint8)
    assert ssim(black, white) < 0.01
    b = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-15)


def test_ssim_decreases_with_heavier_distortion():
    rng = np.random.Generator(np.random.PCG64(7))
    base = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
    light = base.astype(np.int16)
    light[::4, ::4] += 20
    heavy = base.astype(np.int16)
    heavy[::2, ::2] += 90
    light_score = ssim(base, np.clip(light, 0, 255).astype(np.uint8))
    heavy_score = ssim(base, np.clip(heavy, 0, 255).astype(np.uint8))
    assert heavy_score < light_score < 1.0


def test_diff_series_covers_adjacent_pairs():
    seq = synth_moving_block(FrameDims(64, 64), 10, 16, 16, 255, 0)
    series = diff_series(seq, with_ssim=True)
    assert series.frame_count == 10
    assert [p.index for p in series.pairs] == list(range(9))
    assert series.m_diffs == (2,) * 9
    assert all(p.ssim is not None and p.ssim < 1.0 for p in series.pairs)
    lazy = diff_series(seq)
    assert all(p.ssim is None for p in lazy.pairs)


def test_diff_series_needs_two_frames():
    seq = synth_noise(FrameDims(16, 16), 1, seed=0, amplitude=10)
    with pytest.raises(TooFewFrames):
        diff_series(seq)


def test_diff_series_validation_bounds_m_diff():
    dims = FrameDims(64, 64)  # 16-block grid
    DiffSeries.from_m_diffs([0, 16], dims)
    with pytest.raises(ValueError):
        DiffSeries.from_m_diffs([17], dims)
    with pytest.raises(ValueError):
        DiffSeries(dims=dims, fps=30,
                   pairs=(PairDiff(index=1, m_diff=0, y_diff=0),))
    with pytest.raises(ValueError):
        DiffSeries(dims=dims, fps=30, pairs=())


def test_pearson_hand_value_and_bounds():
    assert pearson([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6, abs=1e-12)
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0, abs=1e-12)
    assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0, abs=1e-12)
    rnd = random.Random(11)
    for _ in range(50):
        xs = [rnd.uniform(-5, 5) for _ in range(20)]
        ys = [rnd.uniform(-5, 5) for _ in range(20)]
        assert -1.0 <= pearson(xs, ys) <= 1.0


def test_pearson_degenerate_inputs():
    with pytest.raises(DegenerateInput):
        pearson([1.0], [2.0])
    with pytest.raises(DegenerateInput):
        pearson([1, 2], [3, 4, 5])
    with pytest.raises(DegenerateInput):
        pearson([2, 2, 2], [1, 2, 3])
    with pytest.raises(DegenerateInput):
        pearson([1, 2, 3], [7, 7, 7])


def test_linear_fit_recovers_exact_line():
    xs = [0, 1, 2, 3, 4]
    slope, intercept = linear_fit(xs, [2 * x + 1 for x in xs])
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert intercept == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DegenerateInput):
        linear_fit([3, 3, 3], [1, 2, 3])


def test_regression_estimate_matches_fit_constants():
    assert regression_ssim_estimate(0) == pytest.approx(1.0063, abs=1e-12)
    assert regression_ssim_estimate(500) == pytest.approx(0.9983485, abs=1e-9)
    assert regression_ssim_estimate(1500) == pytest.approx(0.9824455, abs=1e-9)
    assert regression_ssim_estimate(3000) == pytest.approx(0.958591, abs=1e-9)
    assert regression_ssim_estimate(6000) == pytest.approx(0.910882, abs=1e-9)
    # the line slopes down: more changed blocks, less similarity
    assert regression_ssim_estimate(100) > regression_ssim_estimate(200)
