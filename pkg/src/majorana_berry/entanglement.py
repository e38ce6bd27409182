"""Entanglement of symmetric two- and three-qubit states from star geometry.

All measures are functions of the pair half-angles Θ_ij (2Θ_ij is the angle
between stars i and j); amplitudes are never used here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .berry_engine import _weights_from_half_angles, pair_half_angles
from .errors import DegenerateGeometryError, InvalidInputError
from .sphere_geom import self_rotation_increments
from .spin_core import as_constellation
from .stellar import StarLoop

BOUND_SLACK = 1e-10


def _stars(c, count: int) -> np.ndarray:
    c = as_constellation(c)
    if len(c) != count:
        raise InvalidInputError(f"expected {count} stars, got {len(c)}")
    return c


def concurrence2(c) -> float:
    """Concurrence (1 - n1·n2)/(3 + n1·n2) = sin²Θ/(1 + cos²Θ)."""
    s, co, _ = pair_half_angles(_stars(c, 2))
    return float(s[0] ** 2 / (1.0 + co[0] ** 2))


def barycentric2(c) -> float:
    """E_B = sin²Θ = 1 - |R|²."""
    s, _, _ = pair_half_angles(_stars(c, 2))
    return float(s[0] ** 2)


def barycentric3(c) -> float:
    """E_B = (4/9) Σ_{i<j} sin²Θ_ij."""
    s, _, _ = pair_half_angles(_stars(c, 3))
    return float(4.0 / 9.0 * np.sum(s**2))


def three_tangle(c) -> float:
    """τ3 = (4/3) (Π sinΘ_ij / Σ cos²Θ_ij)²."""
    s, co, _ = pair_half_angles(_stars(c, 3))
    denom = np.sum(co**2)
    if denom <= 1e-15:
        raise DegenerateGeometryError("Σ cos²Θ_ij vanishes")
    return float(4.0 / 3.0 * (np.prod(s) / denom) ** 2)


@dataclass(frozen=True)
class EntanglementReport:
    stars: int
    barycentric: float
    concurrence: float | None = None
    three_tangle: float | None = None
    weights: tuple[float, ...] = ()
    bound_lhs: float | None = None
    bound_rhs: float | None = None

    @property
    def bound_violated(self) -> bool:
        if self.bound_lhs is None:
            return False
        return self.bound_lhs > self.bound_rhs + BOUND_SLACK


def weight_bound_check(c) -> EntanglementReport:
    """Both sides of Π_{i<j} w_ij <= ¼ τ3 (1 - ¾ E_B)^(1/2) for three stars."""
    c = _stars(c, 3)
    s, co, _ = pair_half_angles(c)
    w = _weights_from_half_angles(s, co, 3)
    eb = barycentric3(c)
    tau = three_tangle(c)
    return EntanglementReport(
        stars=3,
        barycentric=eb,
        three_tangle=tau,
        weights=tuple(float(x) for x in w),
        bound_lhs=float(np.prod(w)),
        bound_rhs=float(0.25 * tau * np.sqrt(max(1.0 - 0.75 * eb, 0.0))),
    )


def entanglement_report(c) -> EntanglementReport:
    c = as_constellation(c)
    if len(c) == 2:
        s, co, _ = pair_half_angles(c)
        w = _weights_from_half_angles(s, co, 2)
        return EntanglementReport(
            stars=2,
            barycentric=barycentric2(c),
            concurrence=concurrence2(c),
            weights=(float(w[0]),),
        )
    if len(c) == 3:
        return weight_bound_check(c)
    raise InvalidInputError("entanglement measures are defined for two or three stars")


def entangled_phase_terms(loop: StarLoop) -> float:
    """∮ C √(1 - E_B) dφ along a two-star loop (midpoint rule in Θ)."""
    if loop.n_stars != 2:
        raise InvalidInputError("entangled_phase_terms needs a two-star loop")
    X = loop.samples
    s, co, _ = pair_half_angles(X)
    theta = np.arctan2(s[:, 0], co[:, 0])
    mid = 0.5 * (theta[:-1] + theta[1:])
    t_mid = np.cos(2 * mid)
    concurrence = (1.0 - t_mid) / (3.0 + t_mid)
    e_b = np.sin(mid) ** 2
    dphi, degenerate = self_rotation_increments(X[:, 0], X[:, 1])
    return float(np.sum(np.where(degenerate, 0.0, concurrence * np.sqrt(1.0 - e_b) * dphi)))


def equilateral_constellation(theta: float) -> np.ndarray:
    """Three stars on a common latitude, 120° apart, each pair at half-angle Θ.

    Such a configuration exists for 0 <= Θ <= π/3 (π/3 is the great circle).
    """
    if not 0.0 <= theta <= np.pi / 3 + 1e-15:
        raise InvalidInputError("equilateral half-angle must lie in [0, π/3]")
    sin_beta = min(2.0 * np.sin(theta) / np.sqrt(3.0), 1.0)
    beta = np.arcsin(sin_beta)
    phis = 2 * np.pi * np.arange(3) / 3
    return np.stack([sin_beta * np.cos(phis), sin_beta * np.sin(phis),
                     np.full(3, np.cos(beta))], axis=1)


def equilateral_weight(theta):
    """General three-star weight specialized to the equilateral case: sin²Θ/(3 cosΘ)."""
    theta = np.asarray(theta, dtype=float)
    return np.sin(theta) ** 2 / (3.0 * np.cos(theta))


def equilateral_weight_literal(theta):
    """The alternative equilateral form (1/3) sin²(Θ/2)/cos(Θ/2)."""
    theta = np.asarray(theta, dtype=float)
    return np.sin(theta / 2) ** 2 / (3.0 * np.cos(theta / 2))
