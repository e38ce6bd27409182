"""Spherical geometry of star pairs and star trajectories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import (
    DegenerateGeometryError,
    InvalidInputError,
    SamplingTooCoarseError,
)

DEGENERATE_TOL = 1e-10
CLOSURE_TOL = 1e-9
# Paths that come closer than this to the antipode of the reference apex are
# re-referenced to keep the triangle fan well conditioned.
APEX_CLEARANCE = 0.1

_APEX_CANDIDATES = np.array(
    [[0, 0, 1], [0, 0, -1], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]]
    + [[sx, sy, sz] for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)],
    dtype=float,
)
_APEX_CANDIDATES /= np.linalg.norm(_APEX_CANDIDATES, axis=1)[:, None]


def angle_between(a, b):
    """Angle between directions, accurate near 0 and π.  Broadcasts."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.arctan2(np.linalg.norm(np.cross(a, b), axis=-1), np.sum(a * b, axis=-1))


def as_axis(axis) -> np.ndarray:
    """Unit rotation axis from any finite nonzero 3-vector."""
    try:
        axis = np.asarray(axis, dtype=float)
    except (TypeError, ValueError):
        raise InvalidInputError("rotation axis must be a numeric 3-vector") from None
    if axis.shape != (3,) or not np.all(np.isfinite(axis)):
        raise InvalidInputError("rotation axis must be a finite 3-vector")
    norm = np.linalg.norm(axis)
    if norm < 1e-12:
        raise InvalidInputError("rotation axis must be nonzero")
    return axis / norm


def rotation_matrix(axis, angle) -> np.ndarray:
    return Rotation.from_rotvec(angle * as_axis(axis)).as_matrix()


def half_angle_parts(a, b):
    """(sin Θ, cos Θ) of the pair half-angle, with 2Θ the angle between a and b.

    Taken from the lengths of the relative and barycenter vectors, so exactly
    coincident stars give sin Θ = 0 and exactly antipodal ones cos Θ = 0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = np.linalg.norm(a - b, axis=-1) / 2
    c = np.linalg.norm(a + b, axis=-1) / 2
    h = np.hypot(s, c)
    return s / h, c / h


@dataclass(frozen=True, eq=False)
class PairFrame:
    """Barycenter R = (a+b)/2 and relative vector r = a-b of a star pair."""

    R: np.ndarray
    r: np.ndarray
    theta: float
    R_degenerate: bool
    r_degenerate: bool

    @property
    def degenerate(self) -> bool:
        return self.R_degenerate or self.r_degenerate

    @property
    def R_hat(self) -> np.ndarray:
        if self.R_degenerate:
            raise DegenerateGeometryError("barycenter direction undefined for antipodal stars")
        return self.R / np.linalg.norm(self.R)

    @property
    def r_hat(self) -> np.ndarray:
        if self.r_degenerate:
            raise DegenerateGeometryError("relative direction undefined for coincident stars")
        return self.r / np.linalg.norm(self.r)


def pair_frame(a, b) -> PairFrame:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    R = (a + b) / 2
    r = a - b
    s, c = half_angle_parts(a, b)
    return PairFrame(
        R=R,
        r=r,
        theta=float(np.arctan2(s, c)),
        R_degenerate=bool(np.linalg.norm(R) < DEGENERATE_TOL),
        r_degenerate=bool(np.linalg.norm(r) < DEGENERATE_TOL),
    )


def c_function(theta):
    """sin²Θ / (1 + cos²Θ) on [0, π/2]."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < -1e-12) or np.any(theta > np.pi / 2 + 1e-12):
        raise InvalidInputError("Θ must lie in [0, π/2]")
    s2 = np.sin(theta) ** 2
    out = s2 / (2.0 - s2)
    return float(out) if out.ndim == 0 else out


def _choose_apex(path: np.ndarray) -> np.ndarray:
    north = _APEX_CANDIDATES[0]
    if np.min(angle_between(path, -north)) >= APEX_CLEARANCE:
        return north
    clearance = [np.min(angle_between(path, -p)) for p in _APEX_CANDIDATES]
    return _APEX_CANDIDATES[int(np.argmax(clearance))]


def solid_angle_phase(path) -> float:
    """Phase ∮ -½(1 - cos θ) dφ of a closed star trajectory.

    Equal to minus half the signed solid angle of the geodesic polygon through
    the samples (counterclockwise seen from outside is positive), accumulated
    as a fan of spherical triangles from a reference apex.  The value is not
    reduced mod 2π; with the default north-pole apex it is exactly the line
    integral of the connection in the gauge singular at the south pole.
    """
    path = np.asarray(path, dtype=float)
    if path.ndim != 2 or path.shape[1] != 3 or len(path) < 2:
        raise InvalidInputError("path must be a (T, 3) array with T >= 2")
    if np.linalg.norm(path[0] - path[-1]) > CLOSURE_TOL:
        raise InvalidInputError("path is not closed (first sample != last sample)")
    a, b = path[:-1], path[1:]
    steps = angle_between(a, b)
    if np.any(steps >= np.pi / 2):
        raise SamplingTooCoarseError(
            f"step of {steps.max():.3f} rad between path samples", residual=float(steps.max())
        )
    apex = _choose_apex(path)
    num = np.cross(a, b) @ apex
    den = 1.0 + a @ apex + b @ apex + np.sum(a * b, axis=1)
    return float(-np.sum(np.arctan2(num, den)))


def _transport_increments(R0, r0, R1, r1) -> np.ndarray:
    c = np.sum(R0 * R1, axis=-1)
    if np.any(c <= 0):
        raise SamplingTooCoarseError("barycenter direction turns by π/2 or more in one step")
    s = np.cross(R0, R1)
    sv = np.sum(s * r0, axis=-1)
    # Rodrigues rotation about R0 x R1 taking R0 to R1 (minimal geodesic transport).
    transported = c[..., None] * r0 + np.cross(s, r0) + s * (sv / (1.0 + c))[..., None]
    sin_part = np.sum(R1 * np.cross(transported, r1), axis=-1)
    cos_part = np.sum(transported * r1, axis=-1)
    return np.arctan2(sin_part, cos_part)


def _differential_increments(R0, r0, R1, r1) -> np.ndarray:
    return np.sum(R0 * np.cross(r0, r1), axis=-1)


def self_rotation_step(f: PairFrame, f_next: PairFrame, method: str = "transport") -> float:
    """Self-rotation increment between two pair frames.

    ``transport`` parallel-transports r̂ along the geodesic from R̂ to R̂' and
    returns the signed angle (about R̂') from the transported vector to r̂'.
    ``differential`` is the first-order form R̂·(r̂ ∧ dr̂).
    """
    args = (f.R_hat, f.r_hat, f_next.R_hat, f_next.r_hat)
    if method == "transport":
        return float(_transport_increments(*args))
    if method == "differential":
        return float(_differential_increments(*args))
    raise InvalidInputError(f"unknown method {method!r}")


def self_rotation_increments(a, b, method: str = "transport"):
    """Step-wise self-rotation of the pair trajectories a, b of shape (T, 3).

    Returns ``(dphi, degenerate)``: T-1 increments and a mask of steps where
    either end frame is degenerate (those increments are set to zero).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    R = (a + b) / 2
    r = a - b
    Rn = np.linalg.norm(R, axis=-1)
    rn = np.linalg.norm(r, axis=-1)
    bad = (Rn < DEGENERATE_TOL) | (rn < DEGENERATE_TOL)
    R_hat = R / np.where(bad, 1.0, Rn)[:, None]
    r_hat = r / np.where(bad, 1.0, rn)[:, None]
    step_bad = bad[:-1] | bad[1:]
    dphi = np.zeros(len(a) - 1)
    good = ~step_bad
    if method not in ("transport", "differential"):
        raise InvalidInputError(f"unknown method {method!r}")
    # R̂ (or r̂) can only reverse within one step if |R| and |R'| (or |r| and
    # |r'|) are both below the step length: the pair passes through
    # antipodality (or coincidence).  The weighted integrand is smooth in R
    # and r there, so use the first-order form about the midpoint barycenter.
    flip = good & (
        (np.sum(R_hat[:-1] * R_hat[1:], axis=-1) <= 0)
        | (np.sum(r_hat[:-1] * r_hat[1:], axis=-1) <= 0)
    )
    smooth = good & ~flip
    if np.any(smooth):
        args = (R_hat[:-1][smooth], r_hat[:-1][smooth], R_hat[1:][smooth], r_hat[1:][smooth])
        if method == "transport":
            dphi[smooth] = _transport_increments(*args)
        else:
            dphi[smooth] = _differential_increments(*args)
    if np.any(flip):
        mid = (R[:-1] + R[1:])[flip]
        mid_norm = np.linalg.norm(mid, axis=-1)
        mid_hat = mid / np.where(mid_norm < DEGENERATE_TOL, 1.0, mid_norm)[:, None]
        inc = _differential_increments(mid_hat, r_hat[:-1][flip], None, r_hat[1:][flip])
        dphi[flip] = np.where(mid_norm < DEGENERATE_TOL, 0.0, inc)
    return dphi, step_bad
