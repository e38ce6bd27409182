"""Loop generators for the path kinds accepted by the CLI.

A path document is a JSON object with a ``kind`` discriminator:

    corotation      two stars rotating rigidly about z: theta1, theta2, phi1, phi2
    rigid_rotation  stars (list of 3-vectors), axis, angle (default 2π)
    sliding         two stars moving along one great circle: normal, schedules
    fourier_random  j, seed, modes, amplitude (random smooth star motions)
    sampled         explicit "stars" (T x N x 3) or "amplitudes" (T x (2j+1) x 2)

plus an optional ``samples`` count.  Angles are in radians.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .berry_engine import rigid_rotation_loop
from .errors import InvalidInputError
from .sphere_geom import angle_between, as_axis, c_function
from .spin_core import SpinState, as_constellation, float_array
from .stellar import StarLoop, track_loop

KINDS = ("corotation", "rigid_rotation", "sliding", "fourier_random", "sampled")
DEFAULT_SAMPLES = 2000
FOURIER_MAX_STEP = 0.01


@dataclass
class PathSpec:
    kind: str
    params: dict = field(default_factory=dict)
    samples: int | None = None

    @classmethod
    def from_dict(cls, doc) -> "PathSpec":
        if not isinstance(doc, dict):
            raise InvalidInputError("path document must be a JSON object")
        doc = dict(doc)
        kind = doc.pop("kind", None)
        if kind not in KINDS:
            raise InvalidInputError(f"unknown or missing path kind {kind!r}; expected one of {KINDS}")
        samples = doc.pop("samples", None)
        if samples is not None:
            if not isinstance(samples, int) or isinstance(samples, bool) or samples < 2:
                raise InvalidInputError("samples must be an integer >= 2")
        return cls(kind, doc, samples)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, **self.params}
        if self.samples is not None:
            out["samples"] = self.samples
        return out


def _number(params: dict, key: str, default=None) -> float:
    value = params.get(key, default)
    if value is None:
        raise InvalidInputError(f"missing parameter {key!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise InvalidInputError(f"parameter {key!r} must be a number") from None


def _integer(params: dict, key: str, default=None, low=0) -> int:
    value = _number(params, key, default)
    if value != int(value) or value < low:
        raise InvalidInputError(f"parameter {key!r} must be an integer >= {low}")
    return int(value)


def polar_star(theta: float, phi: float) -> np.ndarray:
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


# --------------------------------------------------------------------------
# Co-rotation about z


def corotation_samples(theta1, theta2, phi1, phi2, samples) -> np.ndarray:
    t = np.linspace(0.0, 2 * np.pi, samples)
    stars = []
    for theta, phi in ((theta1, phi1), (theta2, phi2)):
        stars.append(np.stack([
            np.sin(theta) * np.cos(t + phi),
            np.sin(theta) * np.sin(t + phi),
            np.full_like(t, np.cos(theta)),
        ], axis=-1))
    return np.stack(stars, axis=1)


def corotation_closed_form(theta1, theta2, phi1, phi2) -> dict:
    """γ = π cosθ1 + π cosθ2 + 2π cosϑ C(Θ) cosΘ for two co-rotating stars."""
    n1 = polar_star(theta1, phi1)
    n2 = polar_star(theta2, phi2)
    R = (n1 + n2) / 2
    half = float(angle_between(n1, n2)) / 2
    vartheta = float(np.arccos(np.clip(R[2] / np.linalg.norm(R), -1, 1)))
    extra = 2 * np.pi * np.cos(vartheta) * c_function(half) * np.cos(half)
    return {
        "gamma": float(np.pi * np.cos(theta1) + np.pi * np.cos(theta2) + extra),
        "extra": float(extra),
        "vartheta": vartheta,
        "Theta": half,
    }


# --------------------------------------------------------------------------
# Sliding along a fixed great circle


def _circle_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    normal = as_axis(normal)
    trial = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = trial - normal * (trial @ normal)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(normal, e1)


def _schedule(spec: dict, t: np.ndarray) -> np.ndarray:
    if not isinstance(spec, dict):
        raise InvalidInputError("each schedule must be a JSON object")
    winding = _number(spec, "winding", 0)
    if int(winding) != winding:
        raise InvalidInputError("schedule winding must be an integer for the loop to close")
    harmonic = _number(spec, "harmonic", 1)
    if int(harmonic) != harmonic:
        raise InvalidInputError("schedule harmonic must be an integer")
    return _number(spec, "offset", 0.0) + winding * t + _number(spec, "amplitude", 0.0) * np.sin(harmonic * t)


def sliding_samples(normal, schedules, samples) -> np.ndarray:
    if not isinstance(schedules, (list, tuple)) or len(schedules) != 2:
        raise InvalidInputError("sliding needs exactly two schedules")
    e1, e2 = _circle_basis(normal)
    t = np.linspace(0.0, 2 * np.pi, samples)
    stars = []
    for sched in schedules:
        s = _schedule(sched, t)
        stars.append(np.cos(s)[:, None] * e1 + np.sin(s)[:, None] * e2)
    X = np.stack(stars, axis=1)
    X[-1] = X[0]
    return X


# --------------------------------------------------------------------------
# Random smooth Fourier loops


@dataclass(frozen=True, eq=False)
class FourierLoop:
    """Star paths n_i(t) ∝ b_i + Σ_m (c_mi cos mt + s_mi sin mt), t in [0, 2π]."""

    base: np.ndarray
    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    def positions(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        m = np.arange(1, len(self.cos_coeffs) + 1)
        cos_mt = np.cos(np.outer(t, m))
        sin_mt = np.sin(np.outer(t, m))
        raw = (
            self.base[None]
            + np.einsum("tm,mna->tna", cos_mt, self.cos_coeffs)
            + np.einsum("tm,mna->tna", sin_mt, self.sin_coeffs)
        )
        return raw / np.linalg.norm(raw, axis=-1, keepdims=True)

    def sample(self, intervals: int) -> np.ndarray:
        X = self.positions(np.linspace(0.0, 2 * np.pi, intervals + 1))
        X[-1] = X[0]
        return X

    def max_step(self, intervals: int) -> float:
        X = self.sample(intervals)
        return float(angle_between(X[:-1], X[1:]).max())

    def intervals_for_step(self, max_step: float) -> int:
        probe = 4096
        intervals = int(np.ceil(probe * self.max_step(probe) / max_step))
        while self.max_step(intervals) > max_step:
            intervals = int(np.ceil(intervals * 1.05)) + 1
        return intervals


def random_fourier_loop(n_stars, rng, modes=3, amplitude=0.3, min_separation=0.3,
                        max_tries=1000) -> FourierLoop:
    """Random smooth closed star motion with all pair angles kept in
    [min_separation, π - min_separation] (no coincident or antipodal pairs)."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    probe_t = np.linspace(0.0, 2 * np.pi, 1025)
    for _ in range(max_tries):
        base = rng.normal(size=(n_stars, 3))
        base /= np.linalg.norm(base, axis=1)[:, None]
        scale = amplitude / np.arange(1, modes + 1)[:, None, None]
        loop = FourierLoop(
            base,
            rng.normal(size=(modes, n_stars, 3)) * scale,
            rng.normal(size=(modes, n_stars, 3)) * scale,
        )
        X = loop.positions(probe_t)
        ok = True
        for i in range(n_stars):
            for j in range(i + 1, n_stars):
                ang = angle_between(X[:, i], X[:, j])
                if ang.min() < min_separation or ang.max() > np.pi - min_separation:
                    ok = False
        if ok:
            return loop
    raise InvalidInputError("could not draw a well-separated random loop; lower the amplitude")


# --------------------------------------------------------------------------


def build_loop(spec: PathSpec, samples: int | None = None) -> StarLoop:
    """Generate the labeled star loop described by ``spec``."""
    p = spec.params
    n = samples or spec.samples
    if spec.kind == "corotation":
        X = corotation_samples(
            _number(p, "theta1"), _number(p, "theta2"),
            _number(p, "phi1", 0.0), _number(p, "phi2", 0.0),
            n or DEFAULT_SAMPLES,
        )
        return StarLoop.from_samples(X)
    if spec.kind == "rigid_rotation":
        if "stars" not in p or "axis" not in p:
            raise InvalidInputError("rigid_rotation needs 'stars' and 'axis'")
        return rigid_rotation_loop(
            as_constellation(p["stars"]), p["axis"],
            _number(p, "angle", 2 * np.pi), n or DEFAULT_SAMPLES,
        )
    if spec.kind == "sliding":
        X = sliding_samples(
            p.get("normal", [0.0, 0.0, 1.0]),
            p.get("schedules", [{"offset": 0.0, "amplitude": 0.4},
                                {"offset": 1.2, "amplitude": 0.3, "harmonic": 2}]),
            n or DEFAULT_SAMPLES,
        )
        return StarLoop.from_samples(X)
    if spec.kind == "fourier_random":
        two_j = 2 * _number(p, "j")
        if two_j < 1 or two_j != int(two_j):
            raise InvalidInputError("fourier_random needs j = 1/2, 1, 3/2, ...")
        loop = random_fourier_loop(
            int(two_j), _integer(p, "seed", 0),
            modes=_integer(p, "modes", 3, low=1), amplitude=_number(p, "amplitude", 0.3),
        )
        intervals = (n - 1) if n else loop.intervals_for_step(FOURIER_MAX_STEP)
        return StarLoop.from_samples(loop.sample(intervals))
    if spec.kind == "sampled":
        if "stars" in p:
            return StarLoop.from_samples(float_array(p["stars"], "stars"))
        if "amplitudes" in p:
            raw = float_array(p["amplitudes"], "amplitudes")
            if raw.ndim != 3 or raw.shape[2] != 2:
                raise InvalidInputError("amplitudes must be T x (2j+1) x (re, im)")
            states = [SpinState.from_amplitudes(a[:, 0] + 1j * a[:, 1]) for a in raw]
            return track_loop(states)
        raise InvalidInputError("sampled path needs 'stars' or 'amplitudes'")
    raise InvalidInputError(f"unknown path kind {spec.kind!r}")
