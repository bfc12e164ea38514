"""Trajectory and Transform value types plus the geometric primitives.

Coordinates are screen-space pixels on a 400x400 canvas with the y axis
pointing down.  The canvas is a rendering convention only; nothing here
clamps points to it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateTrajectory
from .groups import WarpGroup

CANVAS_SIZE = 400.0
CANVAS_CENTER = (200.0, 200.0)
CLOSE_FRAC = 0.02

_DET_MIN = 1e-9
_GROUP_TOL = 1e-6


def _frozen_points(points) -> np.ndarray:
    arr = np.array(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"points must have shape (n, 2), got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Trajectory:
    """An ordered sequence of 2D positions; index order is time order."""

    id: str
    points: np.ndarray

    def __post_init__(self):
        pts = _frozen_points(self.points)
        if len(pts) < 2:
            raise DegenerateTrajectory(f"trajectory {self.id!r} needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ValueError(f"trajectory {self.id!r} has non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.id == other.id and np.array_equal(self.points, other.points)

    def __hash__(self) -> int:
        return hash((self.id, self.points.tobytes()))

    def __repr__(self) -> str:
        return f"Trajectory(id={self.id!r}, n={len(self.points)})"

    @property
    def arc_length(self) -> float:
        return float(_kernels.arc_length(self.points))

    def with_points(self, points, id: str | None = None) -> Trajectory:
        return Trajectory(self.id if id is None else id, points)


@dataclass(frozen=True, eq=False)
class Transform:
    """A 2x3 augmented matrix ``[a b tx; c d ty]`` and the group it lives in."""

    matrix: np.ndarray
    group: WarpGroup = WarpGroup.AFFINE

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (2, 3):
            raise ValueError(f"transform matrix must be 2x3, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "group", WarpGroup.parse(self.group))
        if abs(np.linalg.det(m[:, :2])) <= _DET_MIN:
            raise ValueError("transform linear part is singular")
        if not satisfies_group(m, self.group):
            raise ValueError(f"matrix violates {self.group.tag} constraints:\n{m}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Transform):
            return NotImplemented
        return self.group == other.group and np.array_equal(self.matrix, other.matrix)

    def __hash__(self) -> int:
        return hash((self.group, self.matrix.tobytes()))

    @property
    def linear(self) -> np.ndarray:
        return self.matrix[:, :2]

    @property
    def translation(self) -> np.ndarray:
        return self.matrix[:, 2]

    @classmethod
    def identity(cls, group: WarpGroup = WarpGroup.RIGID) -> Transform:
        return cls(np.eye(2, 3), group)

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.linear.T + self.translation

    def inverse(self) -> Transform:
        inv = np.linalg.inv(self.linear)
        return Transform(np.hstack([inv, -inv @ self.translation[:, None]]), self.group)

    def __matmul__(self, other: Transform) -> Transform:
        """``self @ other`` applies ``other`` first."""
        lin = self.linear @ other.linear
        t = self.linear @ other.translation + self.translation
        return Transform(np.hstack([lin, t[:, None]]), _compose_group(self.group, other.group))


def _compose_group(a: WarpGroup, b: WarpGroup) -> WarpGroup:
    from .groups import is_subgroup

    # SimAni is not closed under composition (R S R' S' may shear)
    if WarpGroup.SIM_ANI in (a, b) or WarpGroup.AFFINE in (a, b):
        return WarpGroup.AFFINE
    if is_subgroup(a, b):
        return b
    if is_subgroup(b, a):
        return a
    return WarpGroup.SIM_REF


def satisfies_group(matrix, group: WarpGroup, tol: float = _GROUP_TOL) -> bool:
    """Check the linear part of ``matrix`` against the constraints of ``group``."""
    lin = np.asarray(matrix, dtype=float)[:, :2]
    det = np.linalg.det(lin)
    if abs(det) <= _DET_MIN:
        return False
    group = WarpGroup.parse(group)
    if group == WarpGroup.AFFINE:
        return True
    if group == WarpGroup.SIM_ANI:
        # no shear: orthogonal columns (R @ S) or orthogonal rows (S @ R)
        gram_c = lin.T @ lin
        gram_r = lin @ lin.T
        scale = max(np.abs(gram_c).max(), 1.0)
        return abs(gram_c[0, 1]) <= tol * scale or abs(gram_r[0, 1]) <= tol * scale
    gram = lin.T @ lin
    s2 = 0.5 * np.trace(gram)
    tol_s = tol * max(s2, 1.0)
    if abs(gram[0, 1]) > tol_s or abs(gram[0, 0] - gram[1, 1]) > tol_s:
        return False
    if group in (WarpGroup.RIGID, WarpGroup.RIGID_REF) and abs(s2 - 1.0) > tol:
        return False
    if group in (WarpGroup.RIGID, WarpGroup.SIM) and det < 0:
        return False
    return True


def normalize(t: Trajectory) -> Trajectory:
    """Drop consecutive duplicate points; reject zero-length paths."""
    pts = t.points
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    out = pts[keep]
    if len(out) < 2:
        raise DegenerateTrajectory(f"trajectory {t.id!r} has zero arc length")
    if len(out) == len(pts):
        return t
    return t.with_points(out)


def resample_by_arc_length(t: Trajectory, n: int = 100) -> Trajectory:
    """Return ``n`` points equally spaced along the polyline of ``t``.

    Positions are linearly interpolated; the first and last input points
    are kept exactly.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    t = normalize(t)
    return t.with_points(_kernels.resample(np.ascontiguousarray(t.points), int(n)))


def apply_transform(w: Transform, t: Trajectory) -> Trajectory:
    return t.with_points(w.apply(t.points))


def is_closed(t: Trajectory, close_frac: float = CLOSE_FRAC) -> bool:
    """Whether the endpoints meet to within ``close_frac`` of the arc length."""
    pts = t.points
    gap = float(np.hypot(*(pts[-1] - pts[0])))
    return gap <= close_frac * t.arc_length


def cyclic_vertices(t: Trajectory) -> np.ndarray:
    """Vertices of a closed trajectory without the duplicated closing point."""
    pts = normalize(t).points
    if np.array_equal(pts[0], pts[-1]):
        pts = pts[:-1]
    return np.ascontiguousarray(pts)
