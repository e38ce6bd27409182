import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from majorana_berry.errors import InvalidInputError, SamplingTooCoarseError
from majorana_berry.sphere_geom import angle_between, rotation_matrix
from majorana_berry.spin_core import SpinState, coherent_state, rotate_state, state_overlap, symmetrize
from majorana_berry.stellar import (
    StarLoop, extract_stars, majorana_coefficients, orthogonality_residuals, reconstruct,
    track_loop,
)


def unit(rng, *shape):
    v = rng.normal(size=shape + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def same_multiset(a, b, tol):
    """Greedy match of two small star lists."""
    b = list(b)
    for n in a:
        d = [angle_between(n, m) for m in b]
        k = int(np.argmin(d))
        if d[k] > tol:
            return False
        b.pop(k)
    return True


def test_m_zero_spin_one_has_poles():
    stars = extract_stars(SpinState(1, [0, 1, 0]))
    assert np.allclose(stars, [[0, 0, -1], [0, 0, 1]], atol=1e-15)


def test_coherent_state_gives_repeated_star():
    rng = np.random.default_rng(0)
    for two_j in (2, 5, 8, 12):
        n = unit(rng, 1)[0]
        stars = extract_stars(coherent_state(n, two_j / 2))
        assert stars.shape == (two_j, 3)
        assert np.max(angle_between(stars, n)) < 1e-12


def test_random_spin_two_residuals():
    rng = np.random.default_rng(1)
    psi = SpinState.from_amplitudes(rng.normal(size=5) + 1j * rng.normal(size=5))
    stars = extract_stars(psi)
    assert stars.shape == (4, 3)
    assert orthogonality_residuals(psi, stars).max() < 1e-8


def test_stars_annihilate_antipodal_coherent_state():
    rng = np.random.default_rng(2)
    psi = SpinState.from_amplitudes(rng.normal(size=4) + 1j * rng.normal(size=4))
    for n in extract_stars(psi):
        assert abs(state_overlap(coherent_state(-n, 1.5), psi)) < 1e-12


def test_polynomial_degree_drops_for_south_stars():
    psi = symmetrize([[0, 0, -1], [1, 0, 0]])
    coeffs = majorana_coefficients(psi.amps)
    assert abs(coeffs[0]) < 1e-15
    stars = extract_stars(psi)
    assert same_multiset(stars, [[0, 0, -1], [1, 0, 0]], 1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_roundtrip(two_j, seed):
    rng = np.random.default_rng(seed)
    psi = SpinState.from_amplitudes(rng.normal(size=two_j + 1) + 1j * rng.normal(size=two_j + 1))
    stars = extract_stars(psi)
    assert abs(abs(state_overlap(reconstruct(stars), psi)) - 1) < 1e-10
    assert orthogonality_residuals(psi, stars).max() < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_rotation_equivariance(two_j, seed):
    rng = np.random.default_rng(seed)
    psi = SpinState.from_amplitudes(rng.normal(size=two_j + 1) + 1j * rng.normal(size=two_j + 1))
    axis = unit(rng, 1)[0]
    angle = rng.uniform(0, 2 * np.pi)
    rotated = extract_stars(rotate_state(psi, axis, angle))
    expected = extract_stars(psi) @ rotation_matrix(axis, angle).T
    assert same_multiset(rotated, expected, 1e-7)


def test_mixed_multiplicities_are_resolved():
    rng = np.random.default_rng(3)
    a, b = unit(rng, 2)
    c = [a, a, a, b, b]
    stars = extract_stars(symmetrize(c))
    assert same_multiset(stars, c, 1e-10)


def precession_states(two_j, T=200, theta=0.8, k=0):
    j = two_j / 2
    basis = np.zeros(two_j + 1)
    basis[k] = 1
    tilted = rotate_state(SpinState(j, basis), [0, 1, 0], theta)
    return [rotate_state(tilted, [0, 0, 1], t) for t in np.linspace(0, 2 * np.pi, T)]


def test_track_loop_cyclic_precession():
    loop = track_loop(precession_states(3, k=1))
    assert loop.closure == "cyclic"
    assert loop.n_stars == 3
    assert np.allclose(loop.samples[:, :, 2].std(axis=0), 0, atol=1e-9)


def test_track_loop_reversal():
    states = precession_states(4, k=0, theta=1.2)
    states[2] = SpinState(2, states[2].amps * np.exp(0.3j))
    forward = track_loop(states)
    backward = track_loop(states[::-1])
    assert backward.permutation == forward.permutation
    assert same_multiset(backward.samples[0], forward.samples[-1], 1e-9)


def test_half_turn_exchange_is_a_transposition():
    rng = np.random.default_rng(4)
    a, b = unit(rng, 2)
    axis = (a + b) / np.linalg.norm(a + b)
    psi = symmetrize([a, b])
    states = [rotate_state(psi, axis, t) for t in np.linspace(0, np.pi, 200)]
    loop = track_loop(states)
    assert loop.closure == "permuted"
    assert loop.permutation == (1, 0)
    assert loop.cycles() == [(0, 1)]


def test_star_loop_validation():
    X = np.tile([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]], (5, 1, 1))
    assert StarLoop.from_samples(X).closure == "cyclic"
    bad = X.copy()
    bad[-1, 1] = [0.0, 1.0, 0.0]
    with pytest.raises(InvalidInputError):
        StarLoop.from_samples(bad)
    jumpy = X.copy()
    jumpy[2, 1] = [0.0, 1.0, 0.0]
    with pytest.raises(SamplingTooCoarseError):
        StarLoop.from_samples(jumpy)
    with pytest.raises(InvalidInputError):
        StarLoop.from_samples(X * 2)
    nan = X.copy()
    nan[1, 0, 0] = np.nan
    with pytest.raises(InvalidInputError):
        StarLoop.from_samples(nan)


def test_track_loop_rejects_open_or_coarse_sequences():
    states = precession_states(2, T=50)
    with pytest.raises(InvalidInputError):
        track_loop(states[:-10])
    with pytest.raises(SamplingTooCoarseError):
        track_loop(precession_states(2, T=4))
