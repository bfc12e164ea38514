import math

import numpy as np
import pytest

from trajsc.errors import DegenerateTrajectory
from trajsc.groups import WarpGroup as G
from trajsc.trajectory import (
    Trajectory,
    Transform,
    apply_transform,
    is_closed,
    normalize,
    resample_by_arc_length,
    satisfies_group,
)


def T(pts, id="t"):
    return Trajectory(id, pts)


class TestTrajectory:
    def test_needs_two_points(self):
        with pytest.raises(DegenerateTrajectory):
            T([[1, 2]])

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            T([[0, 0], [math.nan, 1]])

    def test_points_are_read_only(self):
        t = T([[0, 0], [1, 1]])
        with pytest.raises(ValueError):
            t.points[0, 0] = 5

    def test_equality_and_hash(self):
        a, b = T([[0, 0], [1, 1]]), T([[0, 0], [1, 1]])
        assert a == b and hash(a) == hash(b)
        assert a != T([[0, 0], [1, 2]])


class TestNormalize:
    def test_drops_consecutive_duplicates(self):
        out = normalize(T([[0, 0], [0, 0], [1, 0]]))
        np.testing.assert_array_equal(out.points, [[0, 0], [1, 0]])

    def test_clean_input_unchanged(self):
        t = T([[0, 0], [1, 0]])
        assert normalize(t) is t

    def test_zero_length(self):
        with pytest.raises(DegenerateTrajectory):
            normalize(T([[5, 5], [5, 5]]))


class TestResample:
    def test_segment(self):
        out = resample_by_arc_length(T([[0, 0], [10, 0]]), 3)
        np.testing.assert_allclose(out.points, [[0, 0], [5, 0], [10, 0]])

    def test_unit_square_hits_corners(self):
        sq = T([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]])
        out = resample_by_arc_length(sq, 5)
        np.testing.assert_allclose(out.points, sq.points, atol=1e-12)

    def test_equispaced_fixed_point(self):
        x = np.linspace(0, 7, 20)
        t = T(np.c_[x, 2 * x])
        np.testing.assert_allclose(resample_by_arc_length(t, 20).points, t.points, atol=1e-9)

    def test_keeps_endpoints(self):
        t = T([[3, 4], [10, 1], [2, 8], [-1, -1]])
        out = resample_by_arc_length(t, 37)
        assert len(out) == 37
        np.testing.assert_array_equal(out.points[[0, -1]], t.points[[0, -1]])

    def test_n_too_small(self):
        with pytest.raises(ValueError):
            resample_by_arc_length(T([[0, 0], [1, 0]]), 1)


class TestTransform:
    def test_translation(self):
        w = Transform([[1, 0, 3], [0, 1, 4]], G.RIGID)
        np.testing.assert_allclose(w.apply([[0, 0]]), [[3, 4]])

    def test_rotation_90(self):
        w = Transform([[0, -1, 0], [1, 0, 0]], G.RIGID)
        np.testing.assert_allclose(w.apply([[1, 0]]), [[0, 1]], atol=1e-15)

    def test_identity_apply(self):
        t = T([[1, 2], [3, 5]])
        assert apply_transform(Transform.identity(), t) == t

    def test_singular_rejected(self):
        with pytest.raises(ValueError):
            Transform([[1, 2, 0], [2, 4, 0]])

    def test_group_constraints(self):
        with pytest.raises(ValueError):
            Transform([[2, 0, 0], [0, 2, 0]], G.RIGID)
        with pytest.raises(ValueError):
            Transform([[1, 0, 0], [0, -1, 0]], G.SIM)
        Transform([[1, 0, 0], [0, -1, 0]], G.RIGID_REF)
        Transform([[2, 0, 0], [0, 3, 0]], G.SIM_ANI)
        with pytest.raises(ValueError):
            Transform([[1, 0.5, 0], [0, 1, 0]], G.SIM_ANI)

    @pytest.mark.parametrize("g", list(G))
    def test_identity_in_every_group(self, g):
        assert satisfies_group(np.eye(2, 3), g)

    def test_inverse(self):
        w = Transform([[0, -2, 1], [2, 0, 5]], G.SIM)
        np.testing.assert_allclose((w @ w.inverse()).matrix, np.eye(2, 3), atol=1e-12)

    def test_compose_group(self):
        a = Transform([[1, 0, 0], [0, -1, 0]], G.RIGID_REF)
        b = Transform([[2, 0, 0], [0, 2, 0]], G.SIM)
        assert (a @ b).group == G.SIM_REF
        assert (Transform.identity(G.SIM_ANI) @ Transform.identity(G.SIM_ANI)).group == G.AFFINE


class TestIsClosed:
    def test_circle(self):
        a = np.linspace(0, 2 * np.pi, 201)
        pts = np.c_[np.cos(a), np.sin(a)] * 50
        pts[-1] = pts[0]
        assert is_closed(T(pts))

    def test_segment(self):
        assert not is_closed(T([[0, 0], [100, 0]]))

    def test_one_percent_gap(self):
        # endpoint gap of 1% of the circumference: below the 2% threshold
        r = 50.0
        a = np.linspace(0, 2 * np.pi * 0.99, 400)
        t = T(np.c_[np.cos(a), np.sin(a)] * r)
        gap = np.hypot(*(t.points[-1] - t.points[0]))
        assert gap < 0.02 * t.arc_length
        assert is_closed(t)
        assert not is_closed(t, close_frac=0.005)
