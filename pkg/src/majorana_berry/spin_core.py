"""Spin-j states as symmetrized products of spin-1/2 states.

Amplitude vectors are indexed by m = j, j-1, ..., -j, i.e. index k counts
the number of spin-down qubits in the Dicke state |j, j-k>.  Stars are unit
3-vectors stored as float arrays; a constellation is an (N, 3) array.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb, factorial

import numpy as np
from scipy.linalg import expm

from .errors import InternalConsistencyError, InvalidInputError, SizeCapError

MAX_STARS = 12
NORM_TOL = 1e-12
UNIT_TOL = 1e-9
# Below this many stars `symmetrize` sums permutations literally.
LITERAL_SYMMETRIZE_MAX = 4


@dataclass(frozen=True, eq=False)
class SpinState:
    """Normalized spin-j state in the |j, m> basis, m descending."""

    j: float
    amps: np.ndarray

    def __post_init__(self):
        two_j = 2 * float(self.j)
        if two_j < 0 or abs(two_j - round(two_j)) > 1e-12:
            raise InvalidInputError(f"2j must be a non-negative integer, got j={self.j}")
        two_j = int(round(two_j))
        amps = np.array(self.amps, dtype=complex).ravel()
        if amps.shape != (two_j + 1,):
            raise InvalidInputError(
                f"spin {two_j}/2 needs {two_j + 1} amplitudes, got {amps.size}"
            )
        if not np.all(np.isfinite(amps)):
            raise InvalidInputError("amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidInputError(f"state is not normalized (norm {norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "j", two_j / 2)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, amps, j=None, normalize=True):
        amps = np.asarray(amps, dtype=complex).ravel()
        if j is None:
            j = (amps.size - 1) / 2
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise InvalidInputError("zero amplitude vector")
            amps = amps / norm
        return cls(j, amps)

    @property
    def two_j(self) -> int:
        return int(round(2 * self.j))

    def __repr__(self):
        return f"SpinState(j={self.j}, amps={np.array2string(self.amps, precision=6)})"


def float_array(x, what: str = "input") -> np.ndarray:
    """np.asarray(x, float), turning ragged or non-numeric input into InvalidInputError."""
    try:
        return np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise InvalidInputError(f"{what} must be a rectangular array of numbers") from None


def as_star(n) -> np.ndarray:
    """Validate a direction and return it as a unit float vector."""
    v = float_array(n, "a star")
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise InvalidInputError(f"a star must be a finite 3-vector, got {n!r}")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > UNIT_TOL:
        raise InvalidInputError(f"star is not a unit vector (norm {norm!r})")
    return v / norm


def as_constellation(stars) -> np.ndarray:
    c = float_array(stars, "a constellation")
    if c.ndim != 2 or c.shape[1] != 3:
        raise InvalidInputError("a constellation must be an (N, 3) array of stars")
    return np.array([as_star(n) for n in c]).reshape(-1, 3)


def qubit_spinor(n) -> np.ndarray:
    """Spin-1/2 amplitudes (up, down) polarized along n, broadcasting over n[..., :].

    Gauge: the up amplitude is real and non-negative; at the south pole the
    state is exactly (0, 1).
    """
    n = np.asarray(n, dtype=float)
    x, y, z = n[..., 0], n[..., 1], n[..., 2]
    rho = np.hypot(x, y)
    # cos(θ/2) and sin(θ/2), each taken from the well-conditioned branch
    half_c = np.sqrt(np.clip((1.0 + z) / 2.0, 0.0, None))
    half_s = np.sqrt(np.clip((1.0 - z) / 2.0, 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(z >= 0, half_c, rho / (2.0 * half_s))
        down_mod = np.where(z >= 0, rho / (2.0 * half_c), half_s)
        # real divisions: complex division overflows for subnormal rho
        safe = np.where(rho > 0, rho, 1.0)
        phase = np.where(rho > 0, x / safe + 1j * (y / safe), 1.0)
    up = np.where(np.isfinite(up), up, 0.0)
    down_mod = np.where(np.isfinite(down_mod), down_mod, 0.0)
    return np.stack([up + 0j, down_mod * phase], axis=-1)


def dicke_amplitudes(spinors) -> np.ndarray:
    """Unnormalized Dicke amplitudes of the symmetrized product of qubits.

    ``spinors`` has shape (..., N, 2).  Entry k of the result is the
    elementary symmetric sum over k down-amplitudes, divided by sqrt(C(N, k)).
    """
    spinors = np.asarray(spinors, dtype=complex)
    N = spinors.shape[-2]
    poly = np.ones(spinors.shape[:-2] + (1,), dtype=complex)
    for k in range(N):
        a = spinors[..., k, 0:1]
        b = spinors[..., k, 1:2]
        nxt = np.zeros(poly.shape[:-1] + (poly.shape[-1] + 1,), dtype=complex)
        nxt[..., :-1] += poly * a
        nxt[..., 1:] += poly * b
        poly = nxt
    binoms = np.array([comb(N, k) for k in range(N + 1)], dtype=float)
    return poly / np.sqrt(binoms)


def fix_global_phase(amps) -> np.ndarray:
    """Rotate the global phase so the first non-negligible amplitude is real positive.

    Works on the last axis, so it also handles a stack of states.
    """
    amps = np.asarray(amps, dtype=complex)
    mags = np.abs(amps)
    first = np.argmax(mags > 1e-14 * mags.max(axis=-1, keepdims=True), axis=-1)
    lead = np.take_along_axis(amps, first[..., None], axis=-1)
    lead_mag = np.abs(lead)
    phase = np.where(lead_mag > 0, lead / np.where(lead_mag > 0, lead_mag, 1.0), 1.0)
    return amps * np.conj(phase)


def _check_two_j(j) -> int:
    two_j = 2 * float(j)
    if two_j < 0 or abs(two_j - round(two_j)) > 1e-12:
        raise InvalidInputError(f"2j must be a non-negative integer, got j={j}")
    return int(round(two_j))


def coherent_state(n, j) -> SpinState:
    """Spin-j coherent state |n>^{⊗2j} polarized along n."""
    n = as_star(n)
    two_j = _check_two_j(j)
    spinor = qubit_spinor(n)
    amps = dicke_amplitudes(np.broadcast_to(spinor, (two_j, 2)))
    # Already normalized: the product state lies entirely in the symmetric subspace.
    return SpinState(two_j / 2, amps / np.linalg.norm(amps))


def qubit_overlap(a, b) -> complex:
    """<a|b> for the spin-1/2 states along a and b."""
    sa = qubit_spinor(as_star(a))
    sb = qubit_spinor(as_star(b))
    return complex(np.vdot(sa, sb))


def gram_matrix(c) -> np.ndarray:
    """Matrix of qubit overlaps <n_k|n_l>."""
    spinors = qubit_spinor(as_constellation(c))
    return spinors.conj() @ spinors.T


def ryser_permanent(m) -> complex:
    """Permanent via Ryser's inclusion-exclusion formula, O(2^N N^2)."""
    m = np.asarray(m, dtype=complex)
    N = m.shape[0]
    if m.shape != (N, N):
        raise InvalidInputError("permanent needs a square matrix")
    if N == 0:
        return 1.0 + 0j
    if N > MAX_STARS:
        raise SizeCapError(f"permanent capped at N={MAX_STARS}, got {N}")
    subsets = (np.arange(1, 2**N)[:, None] >> np.arange(N)) & 1
    row_sums = subsets @ m.T
    signs = (-1.0) ** (N - subsets.sum(axis=1))
    return complex(np.sum(signs * np.prod(row_sums, axis=1)))


def gram_permanent_norm(c) -> float:
    """Normalization factor A_N = sum_σ prod_k <n_k|n_σ(k)>."""
    c = as_constellation(c)
    if len(c) == 0:
        raise InvalidInputError("empty constellation")
    if len(c) > MAX_STARS:
        raise SizeCapError(f"at most {MAX_STARS} stars are supported, got {len(c)}")
    value = ryser_permanent(gram_matrix(c))
    if abs(value.imag) > 1e-8:
        raise InternalConsistencyError(
            f"permanent has imaginary part {value.imag!r}", residual=abs(value.imag)
        )
    return float(value.real)


def _symmetrize_literal(c: np.ndarray) -> np.ndarray:
    N = len(c)
    spinors = qubit_spinor(c)
    total = np.zeros(2**N, dtype=complex)
    for perm in itertools.permutations(range(N)):
        v = spinors[perm[0]]
        for k in perm[1:]:
            v = np.kron(v, spinors[k])
        total += v
    total /= np.sqrt(factorial(N) * gram_permanent_norm(c))
    n_down = np.array([bin(i).count("1") for i in range(2**N)])
    amps = np.array(
        [total[n_down == k].sum() / np.sqrt(comb(N, k)) for k in range(N + 1)]
    )
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > 1e-10:
        raise InternalConsistencyError(
            f"symmetrized state has norm {norm!r}; A_N is inconsistent",
            residual=abs(norm - 1.0),
        )
    return amps / norm


def symmetrize(c) -> SpinState:
    """The normalized symmetrized product state of a constellation."""
    c = as_constellation(c)
    N = len(c)
    if N == 0:
        raise InvalidInputError("empty constellation")
    if N > MAX_STARS:
        raise SizeCapError(f"at most {MAX_STARS} stars are supported, got {N}")
    if N > LITERAL_SYMMETRIZE_MAX:
        from .stellar import reconstruct

        return reconstruct(c)
    return SpinState(N / 2, fix_global_phase(_symmetrize_literal(c)))


def state_overlap(a: SpinState, b: SpinState) -> complex:
    if a.two_j != b.two_j:
        raise InvalidInputError(f"spin mismatch: j={a.j} vs j={b.j}")
    return complex(np.vdot(a.amps, b.amps))


def spin_matrices(j):
    """(Jx, Jy, Jz) in the |j, m> basis with m descending."""
    two_j = _check_two_j(j)
    jj = two_j / 2
    m = jj - np.arange(two_j + 1)
    jp = np.diag(np.sqrt(jj * (jj + 1) - m[1:] * (m[1:] + 1)), 1)
    jx = (jp + jp.T) / 2
    jy = (jp - jp.T) / 2j
    return jx.astype(complex), jy, np.diag(m).astype(complex)


def rotate_state(psi: SpinState, axis, angle) -> SpinState:
    """Apply exp(-i angle axis·J); rotates every star by `angle` about `axis`."""
    axis = as_star(axis)
    jx, jy, jz = spin_matrices(psi.j)
    u = expm(-1j * angle * (axis[0] * jx + axis[1] * jy + axis[2] * jz))
    amps = u @ psi.amps
    return SpinState(psi.j, amps / np.linalg.norm(amps))
