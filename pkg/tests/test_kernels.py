import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ap3.kernels import KernelError, build_weight, fejer_sq_spectrum
from ap3.zn_core import dft, idft, signed_residue


def triangle(p, b, L):
    """Time-domain factor: pairs (j, k) in [-L, L]^2 with j + k = b n, over 2L+1."""
    m = np.abs(signed_residue(b * np.arange(p), p))
    return np.where(m <= 2 * L, 2 * L + 1 - m, 0) / (2 * L + 1)


@pytest.mark.parametrize("p,b,L", [(101, 1, 6), (101, 7, 3), (499, 3, 24), (13, 5, 0)])
def test_factor_is_triangular(p, b, L):
    c = pow(b, -1, p)
    y = idft(fejer_sq_spectrum(p, c, L)).values
    assert np.allclose(y, triangle(p, b, L), atol=1e-9)


def test_spectrum_is_nonnegative_and_peaks_at_zero():
    F = fejer_sq_spectrum(101, 5, 6).coefficients.real
    assert F.min() >= 0
    assert F[0] == pytest.approx(13.0)


def test_window_too_wide():
    with pytest.raises(KernelError):
        fejer_sq_spectrum(11, 1, 6)


def test_reference_weight():
    w = build_weight(101, [1], 0.6)
    assert w.window_halfwidth == 6
    # mu is the normalized triangle of width 13, so sum |mu^| = p / 13
    assert w.checks["l1_normalized"] == pytest.approx(1 / 13, rel=1e-12)
    assert abs(dft(w.weight)[0] - 1) < 1e-12
    assert w.checks["max_target_defect"] < 0.36


@pytest.mark.parametrize("p,targets,eps", [
    (499, [1, 3], 0.5), (997, [5, 123, 800], 0.5), (101, [], 0.3)])
def test_bullets(p, targets, eps):
    w = build_weight(p, targets, eps)
    c = w.checks
    assert c["mu_hat_zero_ok"] and c["targets_ok"] and c["l1_ok"] and c["v_hat_zero_ok"]
    assert c["support_ok"]
    assert np.all(w.weight.values >= 0)
    assert w.weight.values.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("kwargs,msg", [
    (dict(p=100, targets=[1], epsilon=0.5), "prime"),
    (dict(p=101, targets=[1], epsilon=1.5), "epsilon"),
    (dict(p=101, targets=[0], epsilon=0.5), "nonzero"),
    (dict(p=101, targets=[2, 103], epsilon=0.5), "distinct"),
    (dict(p=11, targets=[1], epsilon=0.3), "too small"),
])
def test_errors(kwargs, msg):
    with pytest.raises(KernelError, match=msg):
        build_weight(**kwargs)


def test_degenerate_window_is_point_mass():
    w = build_weight(11, [1, 2], 0.3, allow_degenerate_window=True)
    assert w.window_halfwidth == 0
    assert w.weight.values.tolist() == [1.0] + [0.0] * 10


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([101, 211, 499]), st.integers(0, 3), st.floats(0.3, 0.9),
       st.randoms(use_true_random=False))
def test_bullets_hold_randomly(p, t, eps, rnd):
    targets = rnd.sample(range(1, p), t)
    w = build_weight(p, targets, eps)
    mu_hat = dft(w.weight)
    for b in targets:
        assert abs(mu_hat[b] - 1) < eps ** 2
    assert np.sum(np.abs(mu_hat.coefficients)) <= (6 / eps) ** t * (1 + 1e-9)
