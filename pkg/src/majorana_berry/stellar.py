"""Majorana constellations: star extraction, reconstruction and loop tracking.

A star n of ψ is a direction with <coherent(-n, j)|ψ> = 0.  With z the
stereographic coordinate tan(θ/2) e^{iφ} (projection from the south pole)
the stars are the roots of

    p(z) = Σ_k (-1)^k sqrt(C(2j, k)) a_k z^(2j-k),

a_k being the amplitude of m = j - k.  Every missing degree (vanishing
leading coefficient) is a star at the south pole.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInputError, NumericFailureError, SamplingTooCoarseError
from .polyroots import aberth_roots
from .sphere_geom import angle_between
from .spin_core import (
    MAX_STARS,
    SpinState,
    as_constellation,
    dicke_amplitudes,
    fix_global_phase,
    float_array,
    qubit_spinor,
)

ZERO_COEFF_TOL = 1e-13
ORTHOGONALITY_TOL = 1e-8
# Roots closer than this (chordal distance) are candidates for a multiple root;
# an N-fold root splits by roughly eps^(1/N), hence the N-dependent floor.
CLUSTER_RADIUS = 1e-2
CLOSURE_TOL = 1e-6
DEFAULT_CONTINUITY_BOUND = 0.1


def majorana_coefficients(amps) -> np.ndarray:
    amps = np.asarray(amps, dtype=complex)
    N = len(amps) - 1
    k = np.arange(N + 1)
    return (-1.0) ** k * np.sqrt([comb(N, i) for i in k]) * amps


def _roots_to_stars(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape + (3,))
    mod2 = np.abs(z) ** 2
    inner = mod2 <= 1.0
    zi = z[inner]
    out[inner] = np.stack(
        [2 * zi.real, 2 * zi.imag, 1 - mod2[inner]], axis=-1
    ) / (1 + mod2[inner])[:, None]
    w = 1.0 / z[~inner]
    wm2 = np.abs(w) ** 2
    out[~inner] = np.stack([2 * w.real, -2 * w.imag, wm2 - 1], axis=-1) / (1 + wm2)[:, None]
    return out


def _stars_to_chart(stars: np.ndarray, southern: bool) -> np.ndarray:
    x, y, zc = stars[:, 0], stars[:, 1], stars[:, 2]
    if southern:
        return (x - 1j * y) / (1 - zc)
    return (x + 1j * y) / (1 + zc)


def _chart_to_stars(values, southern: bool) -> np.ndarray:
    values = np.atleast_1d(values)
    if southern:
        w = values
        wm2 = np.abs(w) ** 2
        return np.stack([2 * w.real, -2 * w.imag, wm2 - 1], axis=-1) / (1 + wm2)[:, None]
    return _roots_to_stars(values)


def _stars_from_z_guess(stars: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return (stars[:, 0] + 1j * stars[:, 1]) / (1 + stars[:, 2])


def reconstruct_amplitudes(samples) -> np.ndarray:
    """Normalized, gauge-fixed amplitudes for constellations of shape (..., N, 3)."""
    amps = dicke_amplitudes(qubit_spinor(samples))
    amps = amps / np.linalg.norm(amps, axis=-1, keepdims=True)
    return fix_global_phase(amps)


def reconstruct(c) -> SpinState:
    """The spin state whose constellation is ``c`` (elementary symmetric polynomials)."""
    c = as_constellation(c)
    N = len(c)
    if N == 0:
        raise InvalidInputError("empty constellation")
    if N > MAX_STARS:
        raise InvalidInputError(f"at most {MAX_STARS} stars are supported, got {N}")
    return SpinState(N / 2, reconstruct_amplitudes(c))


def orthogonality_residuals(psi: SpinState, stars) -> np.ndarray:
    """|<coherent(-n, j)|ψ>| for each star n."""
    stars = np.asarray(stars, dtype=float).reshape(-1, 3)
    N = psi.two_j
    anti = qubit_spinor(-stars)
    coh = dicke_amplitudes(np.repeat(anti[:, None, :], N, axis=1))
    return np.abs(coh.conj() @ psi.amps)


def _phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    ov = np.vdot(a, b)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(a * phase - b))


def _clusters(stars: np.ndarray) -> list[list[int]]:
    n = len(stars)
    radius = max(CLUSTER_RADIUS, 3 * np.finfo(float).eps ** (1.0 / max(n, 1)))
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    dist = np.linalg.norm(stars[:, None, :] - stars[None, :, :], axis=-1)
    for i in range(n):
        for k in range(i + 1, n):
            if dist[i, k] < radius:
                parent[find(i)] = find(k)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [g for g in groups.values() if len(g) > 1]


def _refine_multiple_root(coeffs: np.ndarray, x0: complex, k: int) -> complex:
    """Newton on the (k-1)-th derivative, where a k-fold root is simple."""
    d = np.polyder(coeffs, k - 1) if k > 1 else coeffs
    dd = np.polyder(d)
    x = x0
    for _ in range(20):
        slope = np.polyval(dd, x)
        if slope == 0:
            break
        step = np.polyval(d, x) / slope
        x = x - step
        if abs(step) <= 4 * np.finfo(float).eps * max(abs(x), 1.0):
            break
    return x


def _merge_multiple_roots(stars: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """Collapse split copies of a multiple root onto one refined star.

    A k-fold root comes back from the iteration spread by ~eps^(1/k).  The
    cluster centroid (in a holomorphic chart) seeds Newton on the (k-1)-th
    derivative of the Majorana polynomial.  A merge is kept only if it does
    not degrade the reconstructed state, so genuinely distinct nearby stars
    are left alone.
    """
    coeffs = majorana_coefficients(amps)
    for group in _clusters(stars):
        southern = bool(stars[group, 2].mean() < 0)
        chart_coeffs = coeffs[::-1] if southern else coeffs
        centroid = _stars_to_chart(stars[group], southern).mean()
        root = _refine_multiple_root(chart_coeffs, centroid, len(group))
        if not np.isfinite(root):
            continue
        candidate = stars.copy()
        candidate[group] = _chart_to_stars(root, southern)[0]
        d_raw = _phase_aligned_distance(reconstruct_amplitudes(stars), amps)
        d_new = _phase_aligned_distance(reconstruct_amplitudes(candidate), amps)
        if d_new <= d_raw + 1e-12:
            stars = candidate
    return stars


def _sort_stars(stars: np.ndarray) -> np.ndarray:
    order = np.lexsort((stars[:, 2], stars[:, 1], stars[:, 0]))
    return stars[order]


def extract_stars(psi: SpinState, guess=None) -> np.ndarray:
    """The 2j Majorana stars of ψ as an (N, 3) array, with multiplicity.

    ``guess`` (a constellation) may seed the root iteration, e.g. with the
    stars of a neighbouring sample along a loop.
    """
    N = psi.two_j
    if N == 0:
        return np.zeros((0, 3))
    coeffs = majorana_coefficients(psi.amps)
    scale = np.linalg.norm(coeffs)
    mags = np.abs(coeffs)
    lead = 0
    while lead <= N and mags[lead] < ZERO_COEFF_TOL * scale:
        lead += 1
    trail = 0
    while trail < N - lead and mags[N - trail] < ZERO_COEFF_TOL * scale:
        trail += 1
    core = coeffs[lead:N + 1 - trail]

    initial = None
    if guess is not None and lead == 0 and trail == 0:
        initial = _stars_from_z_guess(np.asarray(guess, dtype=float))
        if not np.all(np.isfinite(initial)):
            initial = None
    roots = aberth_roots(core, initial=initial)

    stars = np.concatenate([
        np.tile([0.0, 0.0, -1.0], (lead, 1)),
        np.tile([0.0, 0.0, 1.0], (trail, 1)),
        _roots_to_stars(roots).reshape(-1, 3),
    ])
    stars = _merge_multiple_roots(stars, psi.amps)
    residuals = orthogonality_residuals(psi, stars)
    worst = float(residuals.max())
    if worst > ORTHOGONALITY_TOL:
        raise NumericFailureError(
            f"star orthogonality residual {worst:.3e} exceeds {ORTHOGONALITY_TOL}",
            residual=worst,
        )
    return _sort_stars(stars)


def _match(prev: np.ndarray, cur: np.ndarray, prefer_identity: bool = False):
    """Assignment of current stars to previous labels minimizing total angle."""
    cost = angle_between(prev[:, None, :], cur[None, :, :])
    if prefer_identity:
        cost = cost + 1e-12 * (1 - np.eye(len(prev)))
    rows, cols = linear_sum_assignment(cost)
    return cols[np.argsort(rows)], cost[rows, cols]


def _permutation_cycles(perm) -> list[tuple[int, ...]]:
    seen = set()
    cycles = []
    for start in range(len(perm)):
        if start in seen:
            continue
        cycle = [start]
        seen.add(start)
        nxt = perm[start]
        while nxt != start:
            cycle.append(nxt)
            seen.add(nxt)
            nxt = perm[nxt]
        cycles.append(tuple(cycle))
    return cycles


@dataclass(frozen=True, eq=False)
class StarLoop:
    """Labeled star trajectories of shape (T, N, 3), endpoint included.

    ``permutation`` σ satisfies samples[-1][i] == samples[0][σ(i)]: star i
    ends where star σ(i) started.  The identity means a cyclic loop.
    """

    samples: np.ndarray
    permutation: tuple[int, ...]
    continuity_bound: float = DEFAULT_CONTINUITY_BOUND
    closure: str = field(init=False)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 3 or samples.shape[2] != 3 or samples.shape[0] < 2:
            raise InvalidInputError("StarLoop samples must have shape (T >= 2, N, 3)")
        T, N, _ = samples.shape
        if N == 0 or N > MAX_STARS:
            raise InvalidInputError(f"StarLoop needs 1..{MAX_STARS} stars, got {N}")
        if not np.all(np.isfinite(samples)) or np.any(
                np.abs(np.linalg.norm(samples, axis=-1) - 1.0) > 1e-9):
            raise InvalidInputError("StarLoop samples must be unit vectors")
        perm = tuple(int(p) for p in self.permutation)
        if sorted(perm) != list(range(N)):
            raise InvalidInputError(f"{perm} is not a permutation of {N} labels")
        steps = angle_between(samples[:-1], samples[1:])
        if np.any(steps > self.continuity_bound):
            raise SamplingTooCoarseError(
                f"star step {steps.max():.4f} rad exceeds continuity bound "
                f"{self.continuity_bound}",
                residual=float(steps.max()),
            )
        gap = np.linalg.norm(samples[-1] - samples[0][list(perm)], axis=-1).max()
        if gap > CLOSURE_TOL:
            raise InvalidInputError(f"loop does not close under {perm} (gap {gap:.2e})")
        # Snap the endpoint so every closed star cycle is exactly closed.
        samples[-1] = samples[0][list(perm)]
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "permutation", perm)
        object.__setattr__(
            self, "closure", "cyclic" if perm == tuple(range(N)) else "permuted"
        )

    @classmethod
    def from_samples(cls, samples, continuity_bound=DEFAULT_CONTINUITY_BOUND):
        """Build a loop from labeled samples, detecting the closing permutation."""
        samples = float_array(samples, "samples")
        if samples.ndim != 3 or samples.shape[0] < 2:
            raise InvalidInputError("samples must have shape (T >= 2, N, 3)")
        if not np.all(np.isfinite(samples)):
            raise InvalidInputError("samples must be finite")
        perm, cost = _match(samples[0], samples[-1], prefer_identity=True)
        # _match gives, for each first-sample label, its partner in the last sample.
        sigma = np.empty_like(perm)
        sigma[perm] = np.arange(len(perm))
        if cost.max() > CLOSURE_TOL:
            raise InvalidInputError("last constellation is not a relabeling of the first")
        return cls(samples, tuple(int(s) for s in sigma), continuity_bound)

    @property
    def n_stars(self) -> int:
        return self.samples.shape[1]

    @property
    def j(self) -> float:
        return self.n_stars / 2

    def cycles(self) -> list[tuple[int, ...]]:
        return _permutation_cycles(self.permutation)

    def cycle_path(self, cycle) -> np.ndarray:
        """Closed curve traced by the stars of one permutation cycle, in order."""
        parts = [self.samples[:, cycle[0]]]
        parts += [self.samples[1:, label] for label in cycle[1:]]
        return np.concatenate(parts)

    def total_displacement(self) -> float:
        return float(angle_between(self.samples[:-1], self.samples[1:]).sum())


def track_loop(states, continuity_bound=DEFAULT_CONTINUITY_BOUND) -> StarLoop:
    """Extract and label the stars of a closed sequence of states."""
    states = list(states)
    if len(states) < 2:
        raise InvalidInputError("a loop needs at least two states")
    for k in range(len(states) - 1):
        fid = abs(np.vdot(states[k].amps, states[k + 1].amps)) ** 2
        if fid <= 0.5:
            raise SamplingTooCoarseError(
                f"fidelity {fid:.3f} between samples {k} and {k + 1}", residual=fid
            )
    if abs(abs(np.vdot(states[0].amps, states[-1].amps)) - 1.0) > 1e-8:
        raise InvalidInputError("first and last states differ beyond a global phase")

    labeled = [extract_stars(states[0])]
    for k, psi in enumerate(states[1:], start=1):
        prev = labeled[-1]
        try:
            cur = extract_stars(psi, guess=prev)
        except NumericFailureError:
            cur = extract_stars(psi)
        order, cost = _match(prev, cur, prefer_identity=True)
        if cost.max() > continuity_bound:
            raise SamplingTooCoarseError(
                f"star moved {cost.max():.4f} rad at sample {k}; refine the sampling",
                residual=float(cost.max()),
            )
        labeled.append(cur[order])
    return StarLoop.from_samples(np.array(labeled), continuity_bound)
