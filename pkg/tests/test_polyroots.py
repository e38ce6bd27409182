import numpy as np
import pytest

from majorana_berry.errors import NumericFailureError
from majorana_berry.polyroots import aberth_roots, backward_errors


def sorted_roots(z):
    return np.array(sorted(z, key=lambda x: (round(x.real, 6), round(x.imag, 6))))


def test_known_roots():
    roots = np.array([1.0, -2.0, 0.5 + 1j, 0.5 - 1j, 3j])
    found = aberth_roots(np.poly(roots))
    assert np.allclose(sorted_roots(found), sorted_roots(roots), atol=1e-12)
    assert backward_errors(np.poly(roots), found).max() < 1e-14


def test_random_polynomials_have_tiny_backward_error():
    rng = np.random.default_rng(0)
    for n in range(1, 13):
        coeffs = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
        z = aberth_roots(coeffs)
        assert len(z) == n
        assert backward_errors(coeffs, z).max() < 1e-13


def test_warm_start_is_accepted():
    rng = np.random.default_rng(1)
    roots = rng.normal(size=6) + 1j * rng.normal(size=6)
    coeffs = np.poly(roots)
    found = aberth_roots(coeffs, initial=roots + 1e-3)
    assert np.allclose(sorted_roots(found), sorted_roots(roots), atol=1e-10)


def test_widely_spread_moduli():
    roots = np.array([1e-4, 1.0, 1e4])
    found = np.sort(aberth_roots(np.poly(roots)).real)
    assert np.allclose(found, roots, rtol=1e-10)


def test_iteration_cap_reports_failure():
    coeffs = np.poly(np.exp(2j * np.pi * np.arange(8) / 8 + 0.1) * np.linspace(1, 9, 8))
    with pytest.raises(NumericFailureError):
        aberth_roots(coeffs, max_iter=1, polish=False)


def test_degenerate_degrees():
    assert aberth_roots([2.0]).size == 0
    assert np.allclose(aberth_roots([2.0, -1.0]), [0.5])
    with pytest.raises(ValueError):
        aberth_roots([0.0, 1.0, 1.0])
