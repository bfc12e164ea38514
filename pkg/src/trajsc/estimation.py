"""Least-squares transform estimation between point correspondences."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateCorrespondences
from .groups import WarpGroup
from .trajectory import Transform


@dataclass(frozen=True, eq=False)
class CorrespondenceSet:
    source: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        src = np.ascontiguousarray(self.source, dtype=float)
        dst = np.ascontiguousarray(self.target, dtype=float)
        if src.ndim != 2 or src.shape[1] != 2 or src.shape != dst.shape:
            raise ValueError(f"source and target must both be (k, 2), got {src.shape} and {dst.shape}")
        if len(src) < 3:
            raise ValueError("need at least 3 correspondences")
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "target", dst)

    def __len__(self) -> int:
        return len(self.source)

    def is_collinear(self) -> bool:
        """Source spread below the area of a 1e-6 px^2 triangle."""
        c = self.source - self.source.mean(axis=0)
        det = np.linalg.det(c.T @ c)
        return det <= (4.0 / 3.0) * _kernels.MIN_AREA**2


def _run(fit, c: CorrespondenceSet, *args) -> np.ndarray:
    out = np.zeros((2, 3))
    if fit(c.source, c.target, *args, out) < 0.0:
        raise DegenerateCorrespondences("correspondences do not determine the transform")
    return out


def estimate_rigid(c: CorrespondenceSet, allow_reflection: bool = False) -> Transform:
    """Kabsch rotation (optionally with reflection) plus translation."""
    m = _run(_kernels.fit_similarity, c, False, bool(allow_reflection))
    return Transform(m, WarpGroup.RIGID_REF if allow_reflection else WarpGroup.RIGID)


def estimate_similarity(c: CorrespondenceSet, allow_reflection: bool = False) -> Transform:
    """Umeyama similarity with a positive uniform scale."""
    m = _run(_kernels.fit_similarity, c, True, bool(allow_reflection))
    return Transform(m, WarpGroup.SIM_REF if allow_reflection else WarpGroup.SIM)


def estimate_affine(c: CorrespondenceSet) -> Transform:
    if c.is_collinear():
        raise DegenerateCorrespondences("source points are collinear")
    return Transform(_run(_kernels.fit_affine, c), WarpGroup.AFFINE)


def estimate_anisotropic(c: CorrespondenceSet) -> Transform:
    """Rotation with per-axis scale, best of the R*S and S*R orders.

    The angle is found on a 360-step grid and polished by golden-section
    search; axis scales and translation are the linear least-squares
    solution at that angle.  Negative axis scales are allowed.
    """
    if c.is_collinear():
        raise DegenerateCorrespondences("source points are collinear")
    return Transform(_run(_kernels.fit_anisotropic, c), WarpGroup.SIM_ANI)


def estimate(c: CorrespondenceSet, group: WarpGroup) -> Transform:
    group = WarpGroup.parse(group)
    if group == WarpGroup.RIGID:
        return estimate_rigid(c, False)
    if group == WarpGroup.RIGID_REF:
        return estimate_rigid(c, True)
    if group == WarpGroup.SIM:
        return estimate_similarity(c, False)
    if group == WarpGroup.SIM_REF:
        return estimate_similarity(c, True)
    if group == WarpGroup.SIM_ANI:
        return estimate_anisotropic(c)
    return estimate_affine(c)


def residual(w: Transform, c: CorrespondenceSet) -> float:
    """Root-mean-square distance between mapped source and target (px)."""
    diff = w.apply(c.source) - c.target
    return float(np.sqrt(np.mean(np.sum(diff * diff, axis=1))))
