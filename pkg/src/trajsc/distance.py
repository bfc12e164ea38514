"""Warp-invariant trajectory distance via iterative closest point.

The distance between a source and a target under a group is the mean
Euclidean point-to-point distance, after arc-length resampling, at the
best transform in the group found by a randomized 3-point ICP.
"""
from __future__ import annotations

import csv
import hashlib
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import DegenerateTrajectory
from .groups import HIERARCHY, WarpGroup, is_subgroup
from .trajectory import Trajectory, Transform, cyclic_vertices, is_closed, normalize

DRAW_ATTEMPTS = 100


@dataclass(frozen=True)
class IcpConfig:
    n_resample: int = 100
    outer_iters: int = 50
    inner_iters: int = 20
    inner_eps: float = 1e-3
    early_stop_tau: float = 0.5
    rng_seed: int = 0
    start_coarse_step: int = 10
    start_refine_radius: int = 5
    start_refine_centers: int = 3

    def __post_init__(self):
        for name in ("n_resample", "outer_iters", "inner_iters", "start_coarse_step", "start_refine_centers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_resample < 3:
            raise ValueError("n_resample must be >= 3")
        if self.start_refine_radius < 0:
            raise ValueError("start_refine_radius must be >= 0")
        if not self.inner_eps > 0:
            raise ValueError("inner_eps must be > 0")


@dataclass(frozen=True)
class DistanceResult:
    """Best alignment found between two trajectories.

    ``transform`` maps the first argument onto the second.  ``start_offset``
    is the start vertex chosen on the winning source when it is closed
    (0 for open sources); ``reverse`` tells whether the winning direction
    aligned the second argument onto the first.
    """

    distance: float
    transform: Transform
    start_offset: int = 0
    reverse: bool = False

    def to_dict(self) -> dict:
        return {
            "distance": self.distance,
            "group": self.transform.group.value,
            "transform": self.transform.matrix.tolist(),
            "start_offset": self.start_offset,
            "reverse": self.reverse,
        }

    @classmethod
    def from_dict(cls, d: dict) -> DistanceResult:
        return cls(
            float(d["distance"]),
            Transform(np.array(d["transform"]), WarpGroup.parse(d["group"])),
            int(d.get("start_offset", 0)),
            bool(d.get("reverse", False)),
        )


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] != len(self.labels):
            raise ValueError("values must be square and match the labels")
        v.setflags(write=False)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.values, other.values)

    def subset(self, indices) -> DistanceMatrix:
        idx = list(indices)
        return DistanceMatrix([self.labels[i] for i in idx], self.values[np.ix_(idx, idx)])

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> DistanceMatrix:
        return cls(d["labels"], np.array(d["values"], dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", *self.labels])
        for label, row in zip(self.labels, self.values):
            w.writerow([label, *(repr(float(x)) for x in row)])
        return buf.getvalue()


def derive_seed(seed: int, *parts: str) -> int:
    """Stable 63-bit seed from a base seed and string parts."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for p in parts:
        h.update(b"\x1f")
        h.update(str(p).encode())
    return int.from_bytes(h.digest(), "little") >> 1


def _draws(cfg: IcpConfig) -> np.ndarray:
    rng = np.random.default_rng(cfg.rng_seed)
    return rng.integers(0, cfg.n_resample, size=(cfg.outer_iters, DRAW_ATTEMPTS, 3))


def _target(target: Trajectory, cfg: IcpConfig) -> np.ndarray:
    pts = np.ascontiguousarray(normalize(target).points)
    return _kernels.resample(pts, cfg.n_resample)


def _finish(d: float, A: np.ndarray, group: WarpGroup, source: Trajectory, target: Trajectory, offset: int):
    if not np.isfinite(d):
        raise DegenerateTrajectory(
            f"no non-collinear index triple aligns {source.id!r} with {target.id!r}"
        )
    return DistanceResult(float(d), Transform(A.copy(), group), int(offset))


def icp_distance(source: Trajectory, target: Trajectory, group: WarpGroup, cfg: IcpConfig = IcpConfig()) -> DistanceResult:
    """One-directional ICP distance with the source start point held fixed."""
    group = WarpGroup.parse(group)
    R = np.ascontiguousarray(normalize(source).points)
    T = _target(target, cfg)
    A = np.zeros((2, 3))
    d = _kernels.icp(R, T, group.code, _draws(cfg), cfg.inner_iters, cfg.inner_eps, cfg.early_stop_tau, A)
    return _finish(d, A, group, source, target, 0)


def icp_distance_closed(source: Trajectory, target: Trajectory, group: WarpGroup, cfg: IcpConfig = IcpConfig()) -> DistanceResult:
    """ICP distance minimized over the start vertex of a closed source.

    Start vertices are searched coarse-to-fine: every ``start_coarse_step``-th
    vertex, then all vertices within ``start_refine_radius`` of each of the
    ``start_refine_centers`` best ones.
    Sources denser than ``n_resample`` vertices scale both by the density
    ratio so the number of ICP runs stays bounded.
    """
    group = WarpGroup.parse(group)
    Q = cyclic_vertices(source)
    T = _target(target, cfg)
    factor = max(1, -(-len(Q) // cfg.n_resample))
    A = np.zeros((2, 3))
    d, k = _kernels.icp_closed(
        Q,
        T,
        group.code,
        _draws(cfg),
        cfg.inner_iters,
        cfg.inner_eps,
        cfg.early_stop_tau,
        cfg.start_coarse_step * factor,
        cfg.start_refine_radius * factor,
        cfg.start_refine_centers,
        A,
    )
    return _finish(d, A, group, source, target, k)


def _directional(source: Trajectory, target: Trajectory, group: WarpGroup, cfg: IcpConfig) -> DistanceResult:
    cfg = replace(cfg, rng_seed=derive_seed(cfg.rng_seed, source.id, target.id))
    if is_closed(normalize(source)):
        return icp_distance_closed(source, target, group, cfg)
    return icp_distance(source, target, group, cfg)


def icp_symmetric(t1: Trajectory, t2: Trajectory, group: WarpGroup, cfg: IcpConfig = IcpConfig()) -> DistanceResult:
    """ICP distance under ``group`` alone: the smaller of both directions.

    Each direction runs with its own seed derived from ``cfg.rng_seed`` and
    the two ids, so swapping the arguments gives the same distance.
    """
    group = WarpGroup.parse(group)
    fwd = _directional(t1, t2, group, cfg)
    if fwd.distance == 0.0:
        return fwd
    bwd = _directional(t2, t1, group, cfg)
    if bwd.distance < fwd.distance:
        return DistanceResult(bwd.distance, bwd.transform.inverse(), bwd.start_offset, True)
    return fwd


def distance(
    t1: Trajectory,
    t2: Trajectory,
    group: WarpGroup,
    cfg: IcpConfig = IcpConfig(),
    cache: DistanceCache | None = None,
) -> DistanceResult:
    """Warp-invariant distance from ``t1`` to ``t2`` under ``group``.

    Every warp of a subgroup is also a warp of ``group``, so the result is
    the best ICP alignment found under ``group`` or any of its subgroups.
    This keeps the randomized search monotone along the hierarchy.  Once a
    subgroup already aligns the pair below ``cfg.early_stop_tau`` the
    larger groups are not searched.
    """
    group = WarpGroup.parse(group)
    best = None
    for g in HIERARCHY:
        if not is_subgroup(g, group):
            continue
        if best is not None and best.distance < cfg.early_stop_tau:
            break
        if cache is not None:
            r = cache.raw(t1, t2, g, cfg)
        else:
            r = icp_symmetric(t1, t2, g, cfg)
        if best is None or r.distance < best.distance:
            best = r
    if best.transform.group != group:
        best = replace(best, transform=Transform(best.transform.matrix, group))
    return best


def _fingerprint(t: Trajectory) -> tuple[str, bytes]:
    return t.id, hashlib.blake2b(t.points.tobytes(), digest_size=16).digest()


class DistanceCache:
    """Memo of per-group symmetric ICP results keyed on trajectory content and config.

    Reusing one cache across the groups of the hierarchy means each raw
    ICP search runs once per pair and group.
    """

    def __init__(self):
        self._store: dict = {}
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._store)

    def raw(self, t1: Trajectory, t2: Trajectory, group: WarpGroup, cfg: IcpConfig) -> DistanceResult:
        a, b = _fingerprint(t1), _fingerprint(t2)
        key = (a, b, group, cfg) if a <= b else (b, a, group, cfg)
        hit = self._store.get(key)
        if hit is None:
            self.misses += 1
            first, second = (t1, t2) if a <= b else (t2, t1)
            hit = icp_symmetric(first, second, group, cfg)
            self._store[key] = hit
        else:
            self.hits += 1
        if a <= b:
            return hit
        return DistanceResult(hit.distance, hit.transform.inverse(), hit.start_offset, not hit.reverse)

    def get(self, t1: Trajectory, t2: Trajectory, group: WarpGroup, cfg: IcpConfig) -> DistanceResult:
        return distance(t1, t2, group, cfg, self)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("TRAJSC_THREADS", "1")))
    except ValueError:
        return 1


def pairwise_matrix(
    ts: list[Trajectory],
    group: WarpGroup,
    cfg: IcpConfig = IcpConfig(),
    cache: DistanceCache | None = None,
) -> DistanceMatrix:
    """Symmetric matrix of ``distance`` over all unordered pairs."""
    if len(ts) < 2:
        raise ValueError("pairwise_matrix needs at least 2 trajectories")
    group = WarpGroup.parse(group)
    n = len(ts)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def one(pair):
        i, j = pair
        try:
            return distance(ts[i], ts[j], group, cfg, cache).distance
        except DegenerateTrajectory as e:
            raise DegenerateTrajectory(f"pair ({ts[i].id}, {ts[j].id}): {e}") from e

    workers = thread_count()
    if workers > 1 and cache is None:
        with ThreadPoolExecutor(workers) as pool:
            dists = list(pool.map(one, pairs))
    else:
        dists = [one(p) for p in pairs]
    values = np.zeros((n, n))
    for (i, j), d in zip(pairs, dists):
        values[i, j] = values[j, i] = d
    return DistanceMatrix([t.id for t in ts], values)
