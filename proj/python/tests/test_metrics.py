import numpy as np
import pytest
from scipy import stats

import mospred


def test_against_scipy_including_ties():
    rng = np.random.default_rng(1)
    for trial in range(200):
        n = int(rng.integers(3, 50))
        a = rng.integers(1, 6, n).astype(float) if trial % 2 else rng.uniform(1, 5, n)
        b = rng.uniform(1, 5, n)
        if np.all(a == a[0]):
            continue
        assert mospred.mse(a.tolist(), b.tolist()) == pytest.approx(np.mean((a - b) ** 2), abs=1e-12)
        assert mospred.lcc(a.tolist(), b.tolist()) == pytest.approx(stats.pearsonr(a, b)[0], abs=1e-12)
        assert mospred.srcc(a.tolist(), b.tolist()) == pytest.approx(stats.spearmanr(a, b)[0], abs=1e-12)
        assert mospred.fractional_ranks(a.tolist()) == stats.rankdata(a).tolist()


def test_constant_input_is_undefined():
    with pytest.raises(mospred.UndefinedCorrelation):
        mospred.lcc([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])


def test_evaluate_levels():
    r = mospred.evaluate(["a", "b", "c", "d"], ["s1", "s1", "s2", "s2"], [1.0, 2.0, 3.0, 4.0], [1.5, 2.5, 3.5, 4.5])
    assert r["utterance"]["n"] == 4 and r["system"]["n"] == 2
    assert r["utterance"]["mse"] == pytest.approx(0.25)
    assert r["utterance"]["lcc"] == pytest.approx(1.0)


def test_segments():
    assert mospred.segment_frames(125, 50.0) == [(0, 50), (25, 75), (50, 100), (75, 125)]
    assert mospred.segment_frames(30, 50.0) == [(0, 30)]
    with pytest.raises(mospred.ArgumentError):
        mospred.segment_frames(0, 50.0)


def test_cca_matches_least_squares():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((120, 5))
    y = x @ rng.standard_normal(5) + rng.standard_normal(120)
    m = mospred.cca_fit(x, y, 0.0)
    design = np.column_stack([x, np.ones(len(x))])
    coef = np.linalg.lstsq(design, y, rcond=None)[0]
    np.testing.assert_allclose(m.weights, coef[:5], atol=1e-8)
    assert m.intercept == pytest.approx(coef[5], abs=1e-8)
    assert m.train_correlation == pytest.approx(np.corrcoef(design @ coef, y)[0, 1], abs=1e-10)
    assert m.correlation(x, y) == pytest.approx(m.train_correlation, abs=1e-12)
    np.testing.assert_allclose(m.predict(x), design @ coef, atol=1e-8)
    frames = rng.standard_normal((9, 4)).astype(np.float32)
    np.testing.assert_allclose(mospred.utterance_embed(frames), frames.astype(float).mean(axis=0), atol=1e-6)
