"""Berry phases of spin-j loops and their star decomposition.

The total phase is split into one solid-angle term per star trajectory and
one self-rotation term per star pair,

    γ = Σ_i γ_i + Σ_{i<j} ∮ w_ij dφ_ij,

and checked against the gauge-invariant discrete (Pancharatnam) phase of the
sampled states.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

import numpy as np
from scipy import sparse

from .errors import (
    DegenerateGeometryError,
    InvalidInputError,
    SamplingTooCoarseError,
    SizeCapError,
)
from .sphere_geom import (
    DEGENERATE_TOL,
    angle_between,
    as_axis,
    half_angle_parts,
    rotation_matrix,
    self_rotation_increments,
    solid_angle_phase,
)
from .spin_core import MAX_STARS, SpinState, as_constellation
from .stellar import StarLoop, reconstruct_amplitudes

ORACLE_MIN_FIDELITY = 0.99
DEFAULT_TOLERANCE = 1e-4
# Weight below which a pair term on a degenerate frame counts as exactly zero.
VANISHING_WEIGHT = 1e-9


def fold_phase(x) -> float:
    """Distance of x from the nearest multiple of 2π, in [0, π]."""
    r = np.mod(x, 2 * np.pi)
    return float(min(r, 2 * np.pi - r))


# --------------------------------------------------------------------------
# Discrete-phase oracle


def _as_amplitude_array(states) -> np.ndarray:
    if isinstance(states, np.ndarray):
        return np.asarray(states, dtype=complex)
    rows = [s.amps if isinstance(s, SpinState) else np.asarray(s, dtype=complex) for s in states]
    if len({len(r) for r in rows}) > 1:
        raise InvalidInputError("all states of a loop must have the same spin")
    return np.array(rows)


def berry_oracle(states) -> float:
    """γ = -Σ_k arg<ψ_k|ψ_{k+1}> around a closed list of states.

    The last state must equal the first up to a global phase; the loop is
    closed back onto the first state itself, which makes the result gauge
    invariant mod 2π.  Accumulated on the real line.
    """
    amps = _as_amplitude_array(states)
    if amps.ndim != 2 or len(amps) < 2:
        raise InvalidInputError("oracle needs a closed list of at least two states")
    if abs(abs(np.vdot(amps[0], amps[-1])) - 1.0) > 1e-8:
        raise InvalidInputError("loop is not closed: first and last states differ")
    if len(amps) == 2:
        return 0.0
    cyc = np.concatenate([amps[:-1], amps[:1]])
    overlaps = np.sum(cyc[:-1].conj() * cyc[1:], axis=1)
    fid = np.abs(overlaps) ** 2
    if np.any(fid <= ORACLE_MIN_FIDELITY):
        k = int(np.argmin(fid))
        raise SamplingTooCoarseError(
            f"fidelity {fid[k]:.4f} between consecutive samples at step {k}",
            residual=float(fid[k]),
        )
    return float(-np.sum(np.angle(overlaps)))


# --------------------------------------------------------------------------
# Lee expansion of A_N


def _perfect_matchings(vertices):
    if not vertices:
        yield ()
        return
    first = vertices[0]
    for idx in range(1, len(vertices)):
        rest = vertices[1:idx] + vertices[idx + 1:]
        for tail in _perfect_matchings(rest):
            yield ((first, vertices[idx]),) + tail


def _double_factorial(n: int) -> int:
    return int(np.prod(np.arange(n, 0, -2))) if n > 0 else 1


@dataclass(frozen=True, eq=False)
class LeeExpansion:
    """A_N = [(N+1)!/2^N] Σ_k D_k / (2k+1)!! with D_k the k-matching sums.

    ``pairs`` lists (i, j), i < j, in the order used for the flattened
    dot-product vector; ``matchings[k]`` holds the k-pair partial matchings as
    rows of pair indices.
    """

    N: int
    pairs: tuple[tuple[int, int], ...]
    matchings: tuple[np.ndarray, ...]
    coefficients: tuple[float, ...]
    _incidence: tuple = field(repr=False, default=())

    def pair_index(self, i: int, j: int) -> int:
        if i == j:
            raise InvalidInputError("a pair needs two distinct stars")
        i, j = min(i, j), max(i, j)
        return self.pairs.index((i, j))

    def evaluate(self, t) -> tuple[np.ndarray, np.ndarray]:
        """A_N and ∂A_N/∂t_p for a batch of flattened dot products t (..., P)."""
        t = np.asarray(t, dtype=float)
        batch = t.shape[:-1]
        flat = t.reshape(int(np.prod(batch)), len(self.pairs))
        total = np.full(len(flat), self.coefficients[0])
        grad = np.zeros_like(flat)
        for k in range(1, len(self.matchings)):
            idx = self.matchings[k]
            vals = flat[:, idx]  # (B, m_k, k)
            total += self.coefficients[k] * vals.prod(axis=-1).sum(axis=-1)
            ones = np.ones(vals.shape[:-1] + (1,))
            prefix = np.concatenate([ones, np.cumprod(vals[..., :-1], axis=-1)], axis=-1)
            suffix = np.concatenate(
                [np.cumprod(vals[..., :0:-1], axis=-1)[..., ::-1], ones], axis=-1
            )
            leave_one_out = (prefix * suffix).reshape(len(flat), -1)
            grad += self.coefficients[k] * (self._incidence[k].T @ leave_one_out.T).T
        return total.reshape(batch), grad.reshape(batch + (len(self.pairs),))


@lru_cache(maxsize=None)
def lee_expansion(N: int) -> LeeExpansion:
    if N < 1:
        raise InvalidInputError("need at least one star")
    if N > MAX_STARS:
        raise SizeCapError(f"Lee expansion capped at N={MAX_STARS}, got {N}")
    pairs = tuple(itertools.combinations(range(N), 2))
    lookup = {p: q for q, p in enumerate(pairs)}
    prefactor = factorial(N + 1) / 2**N
    matchings = [np.zeros((1, 0), dtype=int)]
    incidence = [None]
    coefficients = [prefactor]
    for k in range(1, N // 2 + 1):
        rows = []
        for subset in itertools.combinations(range(N), 2 * k):
            for m in _perfect_matchings(subset):
                rows.append([lookup[p] for p in m])
        idx = np.array(rows, dtype=int)
        matchings.append(idx)
        coefficients.append(prefactor / _double_factorial(2 * k + 1))
        flat = idx.ravel()
        incidence.append(
            sparse.csr_matrix(
                (np.ones(flat.size), (np.arange(flat.size), flat)),
                shape=(flat.size, len(pairs)),
            )
        )
    return LeeExpansion(N, pairs, tuple(matchings), tuple(coefficients), tuple(incidence))


def _flatten_dots(dots) -> tuple[np.ndarray, int]:
    dots = np.asarray(dots, dtype=float)
    if dots.ndim < 2 or dots.shape[-1] != dots.shape[-2]:
        raise InvalidInputError("dots must be a square matrix (or a stack of them)")
    N = dots.shape[-1]
    if N > MAX_STARS:
        raise SizeCapError(f"at most {MAX_STARS} stars are supported, got {N}")
    iu = np.triu_indices(N, 1)
    t = dots[..., iu[0], iu[1]]
    if np.any(np.abs(t) > 1 + 1e-12):
        raise InvalidInputError("dot products must lie in [-1, 1]")
    return np.clip(t, -1.0, 1.0), N


def lee_norm(dots):
    """A_N from the matrix of pairwise dot products (diagonal ignored)."""
    t, N = _flatten_dots(dots)
    value, _ = lee_expansion(N).evaluate(t)
    return float(value) if np.ndim(value) == 0 else value


def _weights_from_half_angles(sin_t, cos_t, N: int) -> np.ndarray:
    """w_p = 2 sin²Θ_p cosΘ_p (∂A_N/∂t_p) / A_N for flattened pair half-angles."""
    t = cos_t**2 - sin_t**2
    A, grad = lee_expansion(N).evaluate(t)
    return 2.0 * sin_t**2 * cos_t * grad / np.asarray(A)[..., None]


def weight_matrix(dots) -> np.ndarray:
    """All weighting factors w_ij as a symmetric matrix (zero diagonal)."""
    t, N = _flatten_dots(dots)
    cos_t = np.sqrt((1.0 + t) / 2.0)
    sin_t = np.sqrt((1.0 - t) / 2.0)
    w = _weights_from_half_angles(sin_t, cos_t, N)
    out = np.zeros(w.shape[:-1] + (N, N))
    iu = np.triu_indices(N, 1)
    out[..., iu[0], iu[1]] = w
    out[..., iu[1], iu[0]] = w
    return out


def weight_factor(dots, i: int, j: int):
    """w_ij = -cosΘ_ij ∂ln A_N / ∂ln(2 sin²Θ_ij), from the analytic Lee derivative."""
    dots = np.asarray(dots, dtype=float)
    N = dots.shape[-1]
    if not (0 <= i < N and 0 <= j < N) or i == j:
        raise InvalidInputError(f"invalid pair ({i}, {j}) for {N} stars")
    w = weight_matrix(dots)[..., i, j]
    return float(w) if np.ndim(w) == 0 else w


# --------------------------------------------------------------------------
# Decomposition


@dataclass(frozen=True)
class PairTerm:
    i: int
    j: int
    integral: float
    self_rotation: float
    mean_theta: float
    min_theta: float
    max_theta: float


@dataclass(frozen=True)
class BerryReport:
    j: float
    samples: int
    closure: str
    permutation: tuple[int, ...]
    gamma_oracle: float
    star_cycles: tuple[tuple[int, ...], ...]
    gamma_star_terms: tuple[float, ...]
    pair_terms: tuple[PairTerm, ...]
    gamma_formula: float
    residual: float
    tolerance: float
    verified: bool
    fast_path: float | None = None

    @property
    def pair_total(self) -> float:
        return float(sum(p.integral for p in self.pair_terms))

    def to_dict(self) -> dict:
        return {
            "j": self.j,
            "samples": self.samples,
            "closure": self.closure,
            "permutation": list(self.permutation),
            "gamma_oracle": self.gamma_oracle,
            "star_cycles": [list(c) for c in self.star_cycles],
            "gamma_star_terms": list(self.gamma_star_terms),
            "pair_terms": [vars(p).copy() for p in self.pair_terms],
            "gamma_formula": self.gamma_formula,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "verified": self.verified,
            "fast_path": self.fast_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BerryReport":
        return cls(
            j=float(d["j"]),
            samples=int(d["samples"]),
            closure=str(d["closure"]),
            permutation=tuple(int(x) for x in d["permutation"]),
            gamma_oracle=float(d["gamma_oracle"]),
            star_cycles=tuple(tuple(int(x) for x in c) for c in d["star_cycles"]),
            gamma_star_terms=tuple(float(x) for x in d["gamma_star_terms"]),
            pair_terms=tuple(PairTerm(**p) for p in d["pair_terms"]),
            gamma_formula=float(d["gamma_formula"]),
            residual=float(d["residual"]),
            tolerance=float(d["tolerance"]),
            verified=bool(d["verified"]),
            fast_path=None if d.get("fast_path") is None else float(d["fast_path"]),
        )


def pair_half_angles(samples) -> tuple[np.ndarray, np.ndarray, list[tuple[int, int]]]:
    """sin Θ and cos Θ for every pair at every sample: arrays (T, P)."""
    samples = np.asarray(samples, dtype=float)
    N = samples.shape[-2]
    pairs = list(itertools.combinations(range(N), 2))
    if not pairs:
        empty = np.zeros(samples.shape[:-2] + (0,))
        return empty, empty, pairs
    ii = [p[0] for p in pairs]
    jj = [p[1] for p in pairs]
    s, c = half_angle_parts(samples[..., ii, :], samples[..., jj, :])
    return s, c, pairs


def _pair_integrals(loop: StarLoop):
    X = loop.samples
    N = loop.n_stars
    sin_t, cos_t, pairs = pair_half_angles(X)
    if not pairs:
        return []
    theta = np.arctan2(sin_t, cos_t)
    mid = 0.5 * (theta[:-1] + theta[1:])
    w_mid = _weights_from_half_angles(np.sin(mid), np.cos(mid), N)
    w_ends = _weights_from_half_angles(sin_t, cos_t, N)
    terms = []
    for p, (i, j) in enumerate(pairs):
        dphi, degenerate = self_rotation_increments(X[:, i], X[:, j])
        frame_bad = (cos_t[:, p] < DEGENERATE_TOL) | (2 * sin_t[:, p] < DEGENERATE_TOL)
        offending = frame_bad & (np.abs(w_ends[:, p]) > VANISHING_WEIGHT)
        if np.any(offending):
            k = int(np.argmax(offending))
            raise DegenerateGeometryError(
                f"degenerate frame for pair ({i}, {j}) at sample {k} "
                f"with non-vanishing weight {w_ends[k, p]:.3e}"
            )
        integral = float(np.sum(np.where(degenerate, 0.0, w_mid[:, p] * dphi)))
        terms.append(
            PairTerm(
                i=i,
                j=j,
                integral=integral,
                self_rotation=float(dphi.sum()),
                mean_theta=float(theta[:, p].mean()),
                min_theta=float(theta[:, p].min()),
                max_theta=float(theta[:, p].max()),
            )
        )
    return terms


def decompose(loop: StarLoop, tolerance: float = DEFAULT_TOLERANCE) -> BerryReport:
    """Decompose the Berry phase of a labeled star loop and check it against the oracle."""
    cycles = loop.cycles()
    star_terms = tuple(solid_angle_phase(loop.cycle_path(c)) for c in cycles)
    pair_terms = tuple(_pair_integrals(loop))
    gamma_formula = float(sum(star_terms) + sum(p.integral for p in pair_terms))
    gamma_oracle = berry_oracle(reconstruct_amplitudes(loop.samples))
    residual = fold_phase(gamma_formula - gamma_oracle)
    return BerryReport(
        j=loop.j,
        samples=int(loop.samples.shape[0]),
        closure=loop.closure,
        permutation=loop.permutation,
        gamma_oracle=gamma_oracle,
        star_cycles=tuple(cycles),
        gamma_star_terms=star_terms,
        pair_terms=pair_terms,
        gamma_formula=gamma_formula,
        residual=residual,
        tolerance=float(tolerance),
        verified=bool(residual < tolerance),
    )


def rigid_rotation_loop(c, axis, angle, samples: int) -> StarLoop:
    """Loop generated by rotating a constellation about ``axis`` by ``angle``."""
    c = as_constellation(c)
    axis = as_axis(axis)
    if samples < 2:
        raise InvalidInputError("need at least two samples")
    alphas = np.linspace(0.0, angle, samples)
    X = np.einsum("tab,nb->tna", np.array([rotation_matrix(axis, a) for a in alphas]), c)
    moved = angle_between(X[-1][:, None, :], c[None, :, :])
    if np.any(moved.min(axis=1) > 1e-9):
        raise InvalidInputError("rotation does not return the constellation to itself")
    step = np.max(angle_between(X[:-1], X[1:]))
    return StarLoop.from_samples(X, continuity_bound=max(0.1, 1.0001 * step))


def rigid_rotation_phase(c, axis, angle, samples: int = 2000,
                         tolerance: float = DEFAULT_TOLERANCE) -> BerryReport:
    """Decompose a rigid rotation and attach the constant-weight fast path.

    For a rigid rotation the pair half-angles are constant and each pair's
    self-rotation angle is φ_ij = angle · (R̂_ij · axis), so the extra phase is
    Σ w_ij φ_ij in closed form.
    """
    c = as_constellation(c)
    axis = as_axis(axis)
    loop = rigid_rotation_loop(c, axis, angle, samples)
    report = decompose(loop, tolerance)
    fast = float(sum(report.gamma_star_terms))
    sin_t, cos_t, pairs = pair_half_angles(c)
    if pairs:
        w = _weights_from_half_angles(sin_t, cos_t, len(c))
        for p, (i, j) in enumerate(pairs):
            R = c[i] + c[j]
            if w[p] == 0.0 or np.linalg.norm(R) < DEGENERATE_TOL:
                continue
            fast += w[p] * angle * float(R @ axis) / np.linalg.norm(R)
    return BerryReport(**{**vars(report), "fast_path": fast})
