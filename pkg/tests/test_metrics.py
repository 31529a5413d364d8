import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays

from pmadc.frontend import SampleStream, sample
from pmadc.metrics import FLOOR_DB, mean_nmse_db, nmse_db, sinc_reconstruct
from pmadc.signals import SamplingGrid, gen_sinc_series

T = 0.5e-3
vec = arrays(float, 8, elements=st.floats(-100, 100))


def test_nmse_examples():
    assert nmse_db([1.0, 2.0], [1.0, 2.0]).db == FLOOR_DB
    assert nmse_db([1.0, -2.0], [0.0, 0.0]).db == 0.0
    assert nmse_db([3.0, 4.0], [3.0, 0.0]).db == pytest.approx(-1.9382002601611281, abs=1e-12)


def test_nmse_errors():
    with pytest.raises(ValueError, match="length"):
        nmse_db([1.0], [1.0, 2.0])
    with pytest.raises(ValueError, match="zero energy"):
        nmse_db([0.0, 0.0], [1.0, 0.0])


@given(vec, vec, st.floats(0.01, 100).flatmap(lambda a: st.sampled_from([a, -a])))
def test_nmse_scale_invariant(truth, est, alpha):
    assume(np.sum(truth**2) > 1e-6 and np.sum((truth - est) ** 2) > 1e-6)
    assert nmse_db(alpha * truth, alpha * est).db == pytest.approx(nmse_db(truth, est).db, abs=1e-9)


@given(vec, vec)
def test_nmse_monotone_in_error_size(truth, direction):
    assume(np.sum(truth**2) > 1e-6 and np.sum(direction**2) > 1e-6)
    vals = [nmse_db(truth, truth + s * direction).db for s in (0.1, 0.5, 1.0, 2.0)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_mean_is_linear_average():
    assert mean_nmse_db([-10.0, -20.0]) == pytest.approx(10 * math.log10(0.055))
    assert math.isnan(mean_nmse_db([]))


def test_reconstruction_of_single_sample():
    grid = SamplingGrid.uniform(0.0, 1.0, 5)
    s = SampleStream(grid, [0, 0, 1.0, 0, 0])
    np.testing.assert_allclose(sinc_reconstruct(s, grid.times), [0, 0, 1, 0, 0], atol=1e-15)
    assert sinc_reconstruct(s, np.array([2.5]))[0] == pytest.approx(2 / math.pi)


@given(arrays(float, st.integers(1, 30), elements=st.floats(-5, 5)))
def test_reconstruction_interpolates(x):
    grid = SamplingGrid.uniform(0.0, 0.1, len(x))
    np.testing.assert_allclose(sinc_reconstruct(SampleStream(grid, x), grid.times), x, atol=1e-12)


def test_reconstruction_matches_model_inside():
    f = gen_sinc_series(4)
    grid = SamplingGrid.covering(-60 * T, 60 * T, T)
    t = np.linspace(-3 * T, 3 * T, 101)
    np.testing.assert_allclose(sinc_reconstruct(sample(f, grid), t), f(t), atol=1e-6)


def test_reconstruction_needs_uniform_grid():
    g = SamplingGrid.from_times([0.0, 0.3, 1.0])
    with pytest.raises(ValueError):
        sinc_reconstruct(SampleStream(g, [1.0, 2.0, 3.0]), [0.5])
