import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ap3.spectra import (
    BoundViolation,
    check_same_fourier_bound,
    fourier_distance,
    large_spectrum,
)
from ap3.zn_core import DegenerateFunctionError, GridFunction, ResidueSet


def test_constant_has_only_zero_frequency():
    rep = large_spectrum(GridFunction.constant(31, 0.4), 0.1)
    assert rep.large_set.members == (0,)


def test_interval_large_spectrum_is_symmetric():
    h = ResidueSet(101, tuple(range(20))).as_function()
    C = set(large_spectrum(h, 0.3).large_set.members)
    assert C == {(-a) % 101 for a in C}
    assert 0 in C


def test_parseval_bound_is_reported():
    h = GridFunction(101, np.random.default_rng(0).random(101))
    rep = large_spectrum(h, 0.05)
    assert len(rep.large_set) <= rep.bound


def test_zero_function_is_degenerate():
    with pytest.raises(DegenerateFunctionError):
        large_spectrum(GridFunction.constant(7, 0.0), 0.1)


@pytest.mark.parametrize("beta", [0.0, 1.0, -0.2])
def test_beta_range(beta):
    with pytest.raises(ValueError):
        large_spectrum(GridFunction.constant(7, 0.5), beta)


def test_values_outside_unit_interval():
    with pytest.raises(ValueError):
        large_spectrum(GridFunction(3, [-0.5, 1.0, 0.2], (-1, 1)), 0.1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 1), min_size=5, max_size=60),
       st.floats(0.02, 0.5), st.floats(0.02, 0.5))
def test_large_spectrum_monotone_in_beta(vals, b1, b2):
    h = GridFunction(len(vals), vals)
    lo, hi = sorted((b1, b2))
    small = set(large_spectrum(h, hi).large_set.members)
    big = set(large_spectrum(h, lo).large_set.members)
    assert small <= big


def test_fourier_distance_basics():
    f = GridFunction.constant(9, 0.5)
    assert fourier_distance(f, f) == 0.0
    with pytest.raises(ValueError):
        fourier_distance(f, GridFunction.constant(8, 0.5))


def test_same_fourier_identical_pair():
    f = GridFunction(11, np.linspace(0, 1, 11))
    rep = check_same_fourier_bound(f, f)
    assert rep.beta == 0 and rep.lambda_gap == 0 and rep.bound_holds


def test_same_fourier_small_perturbation():
    rng = np.random.default_rng(3)
    f = rng.random(101)
    g = np.clip(f + rng.uniform(-0.01, 0.01, 101), 0, 1)
    rep = check_same_fourier_bound(GridFunction(101, f), GridFunction(101, g))
    assert rep.lambda_gap < 12 * rep.beta


def test_same_fourier_range_precondition():
    f = GridFunction(3, [0, 3, 0], (0, 3))
    with pytest.raises(ValueError):
        check_same_fourier_bound(f, f)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 50).flatmap(lambda n: st.tuples(
    st.lists(st.floats(-2, 2), min_size=n, max_size=n),
    st.lists(st.floats(-2, 2), min_size=n, max_size=n))))
def test_same_fourier_never_violated(pair):
    f, g = (GridFunction(len(v), v, (-2, 2)) for v in pair)
    try:
        rep = check_same_fourier_bound(f, g)
    except BoundViolation:
        pytest.fail("gap bound violated")
    assert rep.bound_holds
