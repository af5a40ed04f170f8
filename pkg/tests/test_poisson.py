import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import poisson

from seumrm.poisson import poisson_weights


@pytest.mark.parametrize("mean", [0.01, 0.5, 3.0, 40.0, 1234.5, 2e5])
def test_matches_scipy(mean):
    left, w = poisson_weights(mean, 1e-10)
    ks = np.arange(left, left + len(w))
    ref = poisson.pmf(ks, mean)
    assert np.max(np.abs(w - ref)) < 1e-9
    # mass left outside the window
    outside = poisson.cdf(left - 1, mean) + poisson.sf(left + len(w) - 1, mean)
    assert outside <= 1e-10 * 1.01


def test_zero_mean():
    assert poisson_weights(0.0)[0] == 0
    assert list(poisson_weights(0.0)[1]) == [1.0]


@pytest.mark.parametrize("bad", [-1.0, float("inf"), float("nan")])
def test_bad_mean(bad):
    with pytest.raises(ValueError):
        poisson_weights(bad)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-6, 1e6), st.sampled_from([1e-6, 1e-10, 1e-12]))
def test_weights_normalized(mean, eps):
    left, w = poisson_weights(mean, eps)
    assert left >= 0
    assert np.all(w >= 0)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    mode = int(np.floor(mean))
    assert left <= mode < left + len(w) or len(w) == 1
