import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from majorana_berry.berry_engine import fold_phase
from majorana_berry.errors import DegenerateGeometryError, InvalidInputError, SamplingTooCoarseError
from majorana_berry.sphere_geom import (
    angle_between, c_function, half_angle_parts, pair_frame, rotation_matrix,
    self_rotation_increments, self_rotation_step, solid_angle_phase,
)


def circle(theta, T=2001, axis=None):
    t = np.linspace(0, 2 * np.pi, T)
    path = np.stack([np.sin(theta) * np.cos(t), np.sin(theta) * np.sin(t),
                     np.full_like(t, np.cos(theta))], axis=1)
    path[-1] = path[0]
    return path


def test_angle_between_is_accurate_near_zero_and_pi():
    a = np.array([0.0, 0.0, 1.0])
    b = np.array([1e-9, 0.0, 1.0])
    b /= np.linalg.norm(b)
    assert abs(angle_between(a, b) - 1e-9) < 1e-20
    assert abs(angle_between(a, -b) - (np.pi - 1e-9)) < 1e-15


def geodesic_polygon(vertices, per_edge=50):
    pts = []
    for a, b in zip(vertices, vertices[1:] + vertices[:1]):
        omega = angle_between(a, b)
        for t in np.linspace(0, 1, per_edge, endpoint=False):
            pts.append((np.sin((1 - t) * omega) * a + np.sin(t * omega) * b) / np.sin(omega))
    pts.append(pts[0])
    return np.array(pts)


def test_octant_triangle_is_exact():
    # geodesic edges make the fan formula exact: solid angle π/2
    tri = geodesic_polygon([np.eye(3)[0], np.eye(3)[1], np.eye(3)[2]])
    assert abs(solid_angle_phase(tri) + np.pi / 4) < 1e-13
    assert abs(solid_angle_phase(tri[::-1]) - np.pi / 4) < 1e-13


def test_latitude_circle_phase_converges():
    # minus half the enclosed solid angle 2π(1 - cosθ), with an O(h²) chord error
    for theta in (0.3, 1.0, np.pi / 2, 2.5):
        exact = -np.pi * (1 - np.cos(theta))
        coarse = fold_phase(solid_angle_phase(circle(theta, 1001)) - exact)
        fine = fold_phase(solid_angle_phase(circle(theta, 2001)) - exact)
        assert fine < 1e-5
        if theta != np.pi / 2:
            assert 3.5 < coarse / fine < 4.5


def test_loop_through_south_pole():
    # S -> x -> y is clockwise seen from outside: solid angle -π/2
    tri = geodesic_polygon([np.array([0.0, 0.0, -1.0]), np.eye(3)[0], np.eye(3)[1]])
    assert abs(solid_angle_phase(tri) - np.pi / 4) < 1e-13
    tilted = circle(1.0) @ rotation_matrix([0, 1, 0], np.pi - 1.0).T
    assert np.min(angle_between(tilted, [0, 0, -1])) < 1e-3
    assert fold_phase(solid_angle_phase(tilted) - solid_angle_phase(circle(1.0))) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0, 2 * np.pi), st.integers(0, 2**32 - 1))
def test_rotation_invariance_and_reversal(theta, angle, seed):
    rng = np.random.default_rng(seed)
    axis = rng.normal(size=3)
    path = circle(theta, T=400) @ rotation_matrix(axis, angle).T
    base = solid_angle_phase(circle(theta, T=400))
    assert fold_phase(solid_angle_phase(path) - base) < 1e-10
    assert fold_phase(solid_angle_phase(path[::-1]) + base) < 1e-10


def test_solid_angle_rejects_open_or_coarse_paths():
    path = circle(1.0)
    with pytest.raises(InvalidInputError):
        solid_angle_phase(path[:-5])
    with pytest.raises(SamplingTooCoarseError):
        solid_angle_phase(circle(np.pi / 2, T=4))


def test_c_function_values_and_monotonicity():
    assert c_function(0.0) == 0.0
    assert abs(c_function(np.pi / 2) - 1) < 1e-15
    theta = np.linspace(0, np.pi / 2, 200)
    assert np.all(np.diff(c_function(theta)) > 0)
    assert abs(c_function(np.pi / 4) - 1 / 3) < 1e-15
    with pytest.raises(InvalidInputError):
        c_function(2.0)


def test_half_angle_parts_exact_at_extremes():
    n = np.array([0.6, 0.0, 0.8])
    assert half_angle_parts(n, n) == (0.0, 1.0)
    assert half_angle_parts(n, -n) == (1.0, 0.0)
    s, c = half_angle_parts([0, 0, 1], [1, 0, 0])
    assert abs(s - np.sin(np.pi / 4)) < 1e-15 and abs(c - np.cos(np.pi / 4)) < 1e-15


def test_pair_frame_degenerate_directions():
    n = np.array([0.0, 0.0, 1.0])
    f = pair_frame(n, n)
    assert f.r_degenerate and not f.R_degenerate
    with pytest.raises(DegenerateGeometryError):
        f.r_hat
    with pytest.raises(DegenerateGeometryError):
        pair_frame(n, -n).R_hat


def rotated_pair(axis, total, T, tilt=0.7):
    a = np.array([np.sin(tilt), 0.0, np.cos(tilt)])
    b = np.array([-np.sin(tilt), 0.0, np.cos(tilt)])
    Rs = [rotation_matrix(axis, x) for x in np.linspace(0, total, T)]
    return np.array([R @ a for R in Rs]), np.array([R @ b for R in Rs])


def test_spin_about_barycenter_equals_rotation_angle():
    a, b = rotated_pair([0, 0, 1], 2.0, 300)
    for method in ("transport", "differential"):
        dphi, bad = self_rotation_increments(a, b, method)
        assert not bad.any()
    dphi, _ = self_rotation_increments(a, b)
    assert abs(dphi.sum() - 2.0) < 1e-12


def test_rotation_about_relative_axis_has_no_self_rotation():
    a, b = rotated_pair([1, 0, 0], 2 * np.pi, 500)
    dphi, _ = self_rotation_increments(a, b)
    assert abs(dphi.sum()) < 1e-12


def test_differential_form_is_second_order():
    # per-step difference of the two methods shrinks as h²
    def pair_path(T):
        t = np.linspace(0, 2 * np.pi, T)
        a = np.stack([np.cos(t) * 0.6, np.sin(t) * 0.6, np.full_like(t, 0.8)], 1)
        b = np.stack([np.cos(2 * t) * 0.8, 0.6 * np.ones_like(t), np.sin(2 * t) * 0.8], 1)
        return a, b / np.linalg.norm(b, axis=1, keepdims=True)

    diffs = []
    for T in (401, 801):
        a, b = pair_path(T)
        d_t, _ = self_rotation_increments(a, b, "transport")
        d_d, _ = self_rotation_increments(a, b, "differential")
        diffs.append(np.abs(d_t - d_d).max())
    ratio = diffs[0] / diffs[1]
    assert 4 * 0.8 < ratio < 4 * 1.2


def test_single_step_api_matches_vectorized():
    a, b = rotated_pair([0.2, 0.3, 1.0], 1.0, 20)
    dphi, _ = self_rotation_increments(a, b)
    step = self_rotation_step(pair_frame(a[3], b[3]), pair_frame(a[4], b[4]))
    assert abs(step - dphi[3]) < 1e-15
    with pytest.raises(InvalidInputError):
        self_rotation_step(pair_frame(a[3], b[3]), pair_frame(a[4], b[4]), "bogus")


def test_sliding_through_coincidence_and_antipodality():
    t = np.linspace(0, 2 * np.pi, 1001)
    a = np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], 1)
    b = np.stack([np.cos(-t), np.sin(-t), np.zeros_like(t)], 1)
    dphi, bad = self_rotation_increments(a, b)
    assert np.all(np.abs(dphi[~bad]) < 1e-12)
