"""Acceptance checks: each criterion as a function returning a CheckResult.

Tolerances live in TOLERANCES; ``run_checks(overrides=...)`` swaps any of them
so that a deliberately impossible tolerance can be injected to prove a check
is able to fail.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .berry_engine import (
    _weights_from_half_angles, berry_oracle, decompose, fold_phase, lee_norm,
    pair_half_angles, rigid_rotation_phase, weight_factor,
)
from .entanglement import (
    barycentric3, concurrence2, entangled_phase_terms, equilateral_constellation,
    equilateral_weight, equilateral_weight_literal, three_tangle,
)
from .paths import (
    FOURIER_MAX_STEP, corotation_closed_form, corotation_samples, random_fourier_loop,
    sliding_samples,
)
from .sphere_geom import c_function, solid_angle_phase
from .spin_core import SpinState, gram_permanent_norm, spin_matrices, state_overlap
from .stellar import StarLoop, extract_stars, orthogonality_residuals, reconstruct, track_loop

TOLERANCES = {
    "corotation": 1e-6,
    "corotation_runtime": 1.0,
    "oracle": 1e-4,
    "oracle_ratio_low": 3.0,
    "oracle_ratio_high": 5.0,
    "weights": 1e-12,
    "norm": 1e-10,
    "roundtrip_infidelity": 1e-10,
    "roundtrip_orthogonality": 1e-8,
    "vanishing": 1e-6,
    "vanishing_antipodal": 1e-10,
    "entanglement_identity": 1e-12,
    "bound": 1e-10,
    "equilateral": 1e-10,
    "spin_jm": 1e-4,
}

SEED = 20240611


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number}. {self.name}: {self.detail} ({self.seconds:.2f} s)"


def _rng(tag: int) -> np.random.Generator:
    return np.random.default_rng([SEED, tag])


def _random_stars(rng, shape) -> np.ndarray:
    v = rng.normal(size=tuple(shape) + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _random_state(rng, j: float) -> SpinState:
    n = int(round(2 * j)) + 1
    return SpinState.from_amplitudes(rng.normal(size=n) + 1j * rng.normal(size=n), j=j)


# --------------------------------------------------------------------------


def check_corotation(tol):
    """Two co-rotating stars against the closed form, plus 20 random triples."""
    start = time.perf_counter()
    params = (0.3, 1.1, 0.0, 0.8)
    report = decompose(StarLoop.from_samples(corotation_samples(*params, 10_000)))
    runtime = time.perf_counter() - start
    exact = corotation_closed_form(*params)["gamma"]
    errors = [fold_phase(report.gamma_formula - exact), fold_phase(report.gamma_oracle - exact)]

    rng = _rng(1)
    for _ in range(20):
        t1, t2 = rng.uniform(0.1, np.pi - 0.1, size=2)
        dphi = rng.uniform(-np.pi, np.pi)
        rep = decompose(StarLoop.from_samples(corotation_samples(t1, t2, 0.0, dphi, 10_000)))
        errors.append(fold_phase(rep.gamma_formula - corotation_closed_form(t1, t2, 0.0, dphi)["gamma"]))
    worst = max(errors)
    passed = worst < tol["corotation"] and runtime < tol["corotation_runtime"]
    return passed, f"max |γ - closed form| = {worst:.2e} (tol {tol['corotation']:g}), runtime {runtime:.3f} s"


def check_oracle(tol):
    """50 random smooth loops per j at step <= 0.01; second-order step halving."""
    worst = 0.0
    ratios = []
    for two_j in (2, 3, 4):
        coarse, fine = [], []
        for seed in range(50):
            loop = random_fourier_loop(two_j, np.random.default_rng([SEED, two_j, seed]))
            intervals = loop.intervals_for_step(FOURIER_MAX_STEP)
            coarse.append(decompose(StarLoop.from_samples(loop.sample(intervals))).residual)
            fine.append(decompose(StarLoop.from_samples(loop.sample(2 * intervals))).residual)
        worst = max(worst, max(coarse))
        ratios.append(float(np.median(coarse) / np.median(fine)))
    passed = worst < tol["oracle"] and all(
        tol["oracle_ratio_low"] <= r <= tol["oracle_ratio_high"] for r in ratios)
    return passed, (f"max residual {worst:.2e} (tol {tol['oracle']:g}), median halving ratios "
                    + ", ".join(f"{r:.2f}" for r in ratios))


def check_weights(tol):
    rng = _rng(3)
    two = _random_stars(rng, (10_000, 2))
    dots2 = np.einsum("tia,tja->tij", two, two)
    w2 = weight_factor(dots2, 0, 1)
    s, c, _ = pair_half_angles(two)
    theta = np.arctan2(s[:, 0], c[:, 0])
    err2 = np.max(np.abs(w2 - c_function(theta) * np.cos(theta)))

    three = _random_stars(rng, (10_000, 3))
    dots3 = np.einsum("tia,tja->tij", three, three)
    s, c, pairs = pair_half_angles(three)
    expected = s**2 * c / np.sum(c**2, axis=-1, keepdims=True)
    err3 = max(np.max(np.abs(weight_factor(dots3, i, j) - expected[:, p]))
               for p, (i, j) in enumerate(pairs))
    worst = float(max(err2, err3))
    return worst < tol["weights"], f"N=2 error {err2:.2e}, N=3 error {err3:.2e} (tol {tol['weights']:g})"


def check_norm(tol):
    rng = _rng(4)
    worst = 0.0
    for N in range(2, 7):
        c = _random_stars(rng, (1000, N))
        lee = lee_norm(np.einsum("tia,tja->tij", c, c))
        perm = np.array([gram_permanent_norm(x) for x in c])
        worst = max(worst, float(np.max(np.abs(lee - perm) / perm)))
    return worst < tol["norm"], f"max relative error {worst:.2e} over N = 2..6 (tol {tol['norm']:g})"


def check_roundtrip(tol):
    rng = _rng(5)
    infid = resid = 0.0
    for two_j in range(1, 7):
        for _ in range(1000):
            psi = _random_state(rng, two_j / 2)
            stars = extract_stars(psi)
            infid = max(infid, 1.0 - abs(state_overlap(reconstruct(stars), psi)))
            resid = max(resid, float(orthogonality_residuals(psi, stars).max()))
    passed = infid < tol["roundtrip_infidelity"] and resid < tol["roundtrip_orthogonality"]
    return passed, (f"max infidelity {infid:.2e} (tol {tol['roundtrip_infidelity']:g}), "
                    f"max orthogonality residual {resid:.2e} (tol {tol['roundtrip_orthogonality']:g})")


def check_vanishing(tol):
    rng = _rng(6)
    smooth = 0.0
    # rigid rotation of a pair about its own relative axis
    for _ in range(10):
        c = _random_stars(rng, (2,))
        axis = c[0] - c[1]
        rep = rigid_rotation_phase(c, axis, 2 * np.pi, samples=2000)
        smooth = max(smooth, abs(rep.pair_total))
    # two stars sliding along one great circle
    for _ in range(10):
        normal = _random_stars(rng, ())
        schedules = [
            {"offset": rng.uniform(0, 2 * np.pi), "amplitude": rng.uniform(0, 0.5),
             "winding": int(rng.integers(-1, 2))},
            {"offset": rng.uniform(0, 2 * np.pi), "amplitude": rng.uniform(0, 0.5),
             "harmonic": 2, "winding": int(rng.integers(-1, 2))},
        ]
        rep = decompose(StarLoop.from_samples(sliding_samples(normal, schedules, 4000)))
        smooth = max(smooth, abs(rep.pair_total))
    # coincident groups at antipodal points, rigidly rotated
    antipodal = 0.0
    for two_j in range(2, 7):
        for up in range(1, two_j):
            a = _random_stars(rng, ())
            c = np.array([a] * up + [-a] * (two_j - up))
            for axis in (_random_stars(rng, ()), a):
                rep = rigid_rotation_phase(c, axis, 2 * np.pi, samples=1000)
                antipodal = max(antipodal, max(abs(p.integral) for p in rep.pair_terms))
        if two_j % 2 == 0:
            a = _random_stars(rng, ())
            perp = np.cross(a, _random_stars(rng, ()))
            c = np.array([a] * (two_j // 2) + [-a] * (two_j // 2))
            rep = rigid_rotation_phase(c, perp, np.pi, samples=1000)
            antipodal = max(antipodal, max(abs(p.integral) for p in rep.pair_terms))
    passed = smooth < tol["vanishing"] and antipodal < tol["vanishing_antipodal"]
    return passed, (f"rigid/sliding max |pair term| {smooth:.2e} (tol {tol['vanishing']:g}), "
                    f"antipodal groups {antipodal:.2e} (tol {tol['vanishing_antipodal']:g})")


def check_entanglement(tol):
    rng = _rng(7)
    endpoints_exact = True
    for _ in range(100):
        a = _random_stars(rng, ())
        endpoints_exact &= concurrence2([a, a]) == 0.0 and concurrence2([a, -a]) == 1.0
    worst = 0.0
    # pointwise identity on random pairs
    pairs = _random_stars(rng, (10_000, 2))
    s, c, _ = pair_half_angles(pairs)
    w = _weights_from_half_angles(s, c, 2)[:, 0]
    conc = s[:, 0] ** 2 / (1.0 + c[:, 0] ** 2)
    worst = float(np.max(np.abs(conc * np.sqrt(1.0 - s[:, 0] ** 2) - w)))
    # integrated along random loops
    for seed in range(10):
        loop = random_fourier_loop(2, np.random.default_rng([SEED, 7, seed]))
        star_loop = StarLoop.from_samples(loop.sample(loop.intervals_for_step(FOURIER_MAX_STEP)))
        diff = abs(entangled_phase_terms(star_loop) - decompose(star_loop).pair_total)
        worst = max(worst, diff)
    passed = endpoints_exact and worst < tol["entanglement_identity"]
    return passed, (f"endpoints exact: {endpoints_exact}, max |C√(1-E_B) - w| {worst:.2e} "
                    f"(tol {tol['entanglement_identity']:g})")


def check_three_star(tol):
    rng = _rng(8)
    c = _random_stars(rng, (100_000, 3))
    s, co, _ = pair_half_angles(c)
    w = _weights_from_half_angles(s, co, 3)
    e_b = 4.0 / 9.0 * np.sum(s**2, axis=-1)
    tau = 4.0 / 3.0 * (np.prod(s, axis=-1) / np.sum(co**2, axis=-1)) ** 2
    margin = 0.25 * tau * np.sqrt(np.clip(1.0 - 0.75 * e_b, 0.0, None)) - np.prod(w, axis=-1)
    violations = int(np.sum(margin < -tol["bound"]))

    general = literal = 0.0
    for theta in np.linspace(0.05, np.pi / 3 - 0.05, 12):
        stars = equilateral_constellation(theta)
        prefactor = 0.5 * (three_tangle(stars) * barycentric3(stars)) ** 0.25
        axis = _random_stars(rng, ())
        rep = rigid_rotation_phase(stars, axis, 2 * np.pi, samples=400)
        phis = sum(p.self_rotation for p in rep.pair_terms)
        general = max(general, abs(rep.pair_total - prefactor * phis),
                      abs(equilateral_weight(theta) - prefactor))
        literal = max(literal, abs(equilateral_weight_literal(theta) - prefactor))
    passed = violations == 0 and general < tol["equilateral"]
    return passed, (f"{violations} bound violations in 10^5 samples (min margin {margin.min():.2e}); "
                    f"equilateral identity error {general:.2e} under the general weight "
                    f"(tol {tol['equilateral']:g}); the alternative sin²(Θ/2)/cos(Θ/2) "
                    f"form deviates by up to {literal:.2e}")


def check_spin_jm(tol):
    """|j,m> precessing about z at colatitude θ: oracle vs half the signed solid angles."""
    worst = 0.0
    theta = 1.0
    for two_j in range(1, 7):
        j = two_j / 2
        _, jy, jz = spin_matrices(j)
        tilt = expm(-1j * theta * jy)
        ts = np.linspace(0.0, 2 * np.pi, 300)
        spins = [expm(-1j * t * jz) @ tilt for t in ts]
        for k in range(two_j + 1):
            basis = np.zeros(two_j + 1, dtype=complex)
            basis[k] = 1.0
            states = [SpinState(j, U @ basis) for U in spins]
            loop = track_loop(states)
            half_solid = sum(solid_angle_phase(loop.cycle_path(cyc)) for cyc in loop.cycles())
            worst = max(worst, fold_phase(half_solid - berry_oracle(states)))
    return worst < tol["spin_jm"], f"max |oracle - star phase sum| {worst:.2e} (tol {tol['spin_jm']:g})"


CHECKS = [
    (1, "corotation closed form", check_corotation),
    (2, "oracle equivalence", check_oracle),
    (3, "weight-factor closed forms", check_weights),
    (4, "norm oracle", check_norm),
    (5, "stellar roundtrip", check_roundtrip),
    (6, "vanishing extra term", check_vanishing),
    (7, "entanglement endpoints and identity", check_entanglement),
    (8, "three-qubit bound and equilateral identity", check_three_star),
    (9, "|j,m> precession", check_spin_jm),
]


def run_check(number: int, overrides: dict | None = None) -> CheckResult:
    tol = {**TOLERANCES, **(overrides or {})}
    for num, name, func in CHECKS:
        if num == number:
            start = time.perf_counter()
            passed, detail = func(tol)
            return CheckResult(num, name, bool(passed), detail, time.perf_counter() - start)
    raise KeyError(f"no acceptance check numbered {number}")


def run_checks(overrides: dict | None = None, only=None) -> list[CheckResult]:
    unknown = set(overrides or {}) - set(TOLERANCES)
    if unknown:
        raise KeyError(f"unknown tolerance keys: {sorted(unknown)}")
    numbers = [num for num, _, _ in CHECKS if only is None or num in only]
    return [run_check(num, overrides) for num in numbers]
