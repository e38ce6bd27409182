"""Simultaneous polynomial root finding (Aberth-Ehrlich iteration)."""

from __future__ import annotations

import numpy as np

from .errors import NumericFailureError

EPS = np.finfo(float).eps


def backward_errors(coeffs, roots) -> np.ndarray:
    """Relative backward error |p(z)| / sum_i |c_i| |z|^(n-i) at each root."""
    coeffs = np.asarray(coeffs, dtype=complex)
    roots = np.asarray(roots, dtype=complex)
    num = np.abs(np.polyval(coeffs, roots))
    den = np.polyval(np.abs(coeffs), np.abs(roots))
    return num / np.where(den > 0, den, 1.0)


def _initial_guesses(coeffs: np.ndarray) -> np.ndarray:
    n = len(coeffs) - 1
    # Radius from the geometric mean of root moduli; the angular offset keeps
    # the guesses off any symmetry axis of the polynomial.
    radius = abs(coeffs[-1] / coeffs[0]) ** (1.0 / n)
    if not np.isfinite(radius) or radius == 0.0:
        radius = 1.0
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    return radius * np.exp(1j * angles)


def _jitter(guess: np.ndarray) -> np.ndarray:
    # Aberth needs pairwise-distinct starting points.
    n = len(guess)
    spread = 1e-4 * (1.0 + np.abs(guess))
    return guess + spread * np.exp(1j * (2 * np.pi * np.arange(n) / max(n, 1) + 0.7))


def aberth_roots(coeffs, initial=None, max_iter=500, polish=True) -> np.ndarray:
    """All roots of the polynomial with coefficients ``coeffs`` (highest degree first).

    The leading coefficient must be non-zero.  ``initial`` optionally seeds
    the iteration (for example with roots of a nearby polynomial).
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    n = len(coeffs) - 1
    if n < 1:
        return np.zeros(0, dtype=complex)
    if coeffs[0] == 0:
        raise ValueError("leading coefficient must be non-zero")
    if n == 1:
        return np.array([-coeffs[1] / coeffs[0]])
    deriv = np.polyder(coeffs)

    if initial is not None and len(initial) == n and np.all(np.isfinite(initial)):
        z = _jitter(np.asarray(initial, dtype=complex))
    else:
        z = _initial_guesses(coeffs)

    converged = False
    for _ in range(max_iter):
        p = np.polyval(coeffs, z)
        dp = np.polyval(deriv, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        repulsion = (1.0 / diff).sum(axis=1) - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            step = ratio / (1.0 - ratio * repulsion)
        step = np.where(np.isfinite(step), step, 0.0)
        z = z - step
        small_step = np.abs(step) <= 4 * EPS * np.maximum(np.abs(z), 1e-300)
        if np.all(small_step | (backward_errors(coeffs, z) <= 4 * EPS)):
            converged = True
            break

    if polish:
        for _ in range(3):
            p = np.polyval(coeffs, z)
            dp = np.polyval(deriv, z)
            with np.errstate(divide="ignore", invalid="ignore"):
                cand = z - p / dp
            ok = np.isfinite(cand)
            better = ok & (backward_errors(coeffs, np.where(ok, cand, z))
                           < backward_errors(coeffs, z))
            z = np.where(better, cand, z)

    worst = float(backward_errors(coeffs, z).max())
    if not converged and worst > 1e-10:
        raise NumericFailureError(
            f"Aberth iteration did not converge (backward error {worst:.3e})",
            residual=worst,
        )
    return z
