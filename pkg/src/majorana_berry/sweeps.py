"""Parameter sweeps emitted as tables (one row per parameter value).

A sweep document is a JSON object with a ``kind``:

    theta_pair           two stars at half-angle Θ: concurrence, E_B, w_12
    corotation_latitude  a corotating pair on one meridian at barycenter colatitude ϑ
    three_star_random    Monte-Carlo rows of the three-star weight bound
    equilateral          equilateral three-star weights under both readings

Ranges are given as ``start``, ``stop`` and ``steps`` (number of rows, endpoints
included).
"""

from __future__ import annotations

import numpy as np

from .berry_engine import _weights_from_half_angles, decompose, pair_half_angles
from .entanglement import (
    barycentric2, barycentric3, concurrence2, equilateral_constellation, equilateral_weight,
    equilateral_weight_literal, three_tangle,
)
from .errors import InvalidInputError
from .paths import _integer, _number, corotation_closed_form, corotation_samples
from .sphere_geom import c_function
from .stellar import StarLoop

SWEEP_KINDS = ("theta_pair", "corotation_latitude", "three_star_random", "equilateral")
MAX_ROWS = 1_000_000


def _grid(doc, default_start, default_stop, lo, hi) -> np.ndarray:
    start = _number(doc, "start", default_start)
    stop = _number(doc, "stop", default_stop)
    steps = doc.get("steps", 11)
    if not isinstance(steps, int) or isinstance(steps, bool) or not 1 <= steps <= MAX_ROWS:
        raise InvalidInputError(f"steps must be an integer in [1, {MAX_ROWS}]")
    if not (lo <= start <= hi and lo <= stop <= hi):
        raise InvalidInputError(f"sweep range must lie in [{lo!r}, {hi!r}]")
    return np.linspace(start, stop, steps)


def theta_pair(doc):
    columns = ["Theta", "concurrence", "barycentric", "w12"]
    rows = []
    for theta in _grid(doc, 0.0, np.pi / 2, 0.0, np.pi / 2):
        stars = np.array([[0.0, 0.0, 1.0], [np.sin(2 * theta), 0.0, np.cos(2 * theta)]])
        s, c, _ = pair_half_angles(stars)
        w = _weights_from_half_angles(s, c, 2)[0]
        rows.append([theta, concurrence2(stars), barycentric2(stars), float(w)])
    return columns, rows


def corotation_latitude(doc, samples=None):
    """Extra (pair) phase of two stars at colatitudes ϑ ∓ Θ corotating about z.

    The ratio column divides by 2π C(Θ) cosΘ and should track cosϑ.
    """
    half = _number(doc, "Theta", 0.4)
    if not 0.0 < half < np.pi / 2:
        raise InvalidInputError("Theta must lie in (0, π/2)")
    n = samples or _integer(doc, "samples", 2000, low=2)
    columns = ["vartheta", "cos_vartheta", "extra_term", "closed_form", "ratio", "residual"]
    rows = []
    scale = 2 * np.pi * c_function(half) * np.cos(half)
    for vartheta in _grid(doc, 0.0, np.pi, 0.0, np.pi):
        # negative colatitudes are the same meridian on the far side (sinθ < 0)
        params = (vartheta - half, vartheta + half, 0.0, 0.0)
        report = decompose(StarLoop.from_samples(corotation_samples(*params, n)))
        exact = corotation_closed_form(*params)
        rows.append([vartheta, float(np.cos(vartheta)), report.pair_total, exact["extra"],
                     report.pair_total / scale, report.residual])
    return columns, rows


def three_star_random(doc, seed=None):
    count = doc.get("count", 1000)
    if not isinstance(count, int) or isinstance(count, bool) or not 1 <= count <= MAX_ROWS:
        raise InvalidInputError(f"count must be an integer in [1, {MAX_ROWS}]")
    if seed is None:
        seed = _integer(doc, "seed", 0)
    rng = np.random.default_rng(seed)
    columns = ["index", "w12", "w13", "w23", "three_tangle", "barycentric",
               "bound_lhs", "bound_rhs", "margin"]
    stars = rng.normal(size=(count, 3, 3))
    stars /= np.linalg.norm(stars, axis=-1, keepdims=True)
    rows = []
    for k, c in enumerate(stars):
        s, co, _ = pair_half_angles(c)
        w = _weights_from_half_angles(s, co, 3)
        tau = three_tangle(c)
        e_b = barycentric3(c)
        lhs = float(np.prod(w))
        rhs = float(0.25 * tau * np.sqrt(max(1.0 - 0.75 * e_b, 0.0)))
        rows.append([k, *map(float, w), tau, e_b, lhs, rhs, rhs - lhs])
    return columns, rows


def equilateral(doc):
    columns = ["Theta", "w_general", "w_literal", "half_root_tau_eb", "three_tangle", "barycentric"]
    rows = []
    for theta in _grid(doc, 0.0, np.pi / 3, 0.0, np.pi / 3):
        stars = equilateral_constellation(theta)
        if theta == 0.0:
            tau = 0.0
        else:
            tau = three_tangle(stars)
        e_b = barycentric3(stars)
        rows.append([theta, float(equilateral_weight(theta)), float(equilateral_weight_literal(theta)),
                     0.5 * (tau * e_b) ** 0.25, tau, e_b])
    return columns, rows


def run_sweep(doc, samples=None, seed=None):
    """Return (kind, columns, rows) for a sweep document."""
    if not isinstance(doc, dict):
        raise InvalidInputError("sweep document must be a JSON object")
    kind = doc.get("kind")
    if kind == "theta_pair":
        return kind, *theta_pair(doc)
    if kind == "corotation_latitude":
        return kind, *corotation_latitude(doc, samples)
    if kind == "three_star_random":
        return kind, *three_star_random(doc, seed)
    if kind == "equilateral":
        return kind, *equilateral(doc)
    raise InvalidInputError(f"unknown or missing sweep kind {kind!r}; expected one of {SWEEP_KINDS}")
