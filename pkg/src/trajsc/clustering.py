"""Threshold clustering of trajectories over a precomputed distance matrix."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from sklearn.cluster import DBSCAN

from .distance import DistanceMatrix
from .errors import InvalidMatrix

SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class ClusterLabeling:
    """Cluster id per trajectory.

    Ids are renumbered in order of first appearance, so cluster 0 always
    holds the first trajectory.  With ``min_samples=1`` there are no noise
    points and the id -1 never occurs.
    """

    ids: tuple[str, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))
        if len(self.ids) != len(self.labels):
            raise ValueError("ids and labels differ in length")
        if not self.labels:
            raise ValueError("empty labeling")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def cluster_sizes(self) -> dict[int, int]:
        return dict(sorted(Counter(self.labels).items()))

    @property
    def largest_id(self) -> int:
        sizes = self.cluster_sizes
        best = max(sizes.values())
        return min(c for c, s in sizes.items() if s == best)

    def members(self, cluster: int) -> frozenset[int]:
        return frozenset(i for i, c in enumerate(self.labels) if c == cluster)

    def clusters(self) -> list[frozenset[int]]:
        return [self.members(c) for c in self.cluster_sizes]

    def to_dict(self) -> dict:
        return {"labels": dict(zip(self.ids, self.labels)), "largest": self.largest_id}

    @classmethod
    def from_dict(cls, d: dict) -> ClusterLabeling:
        items = list(d["labels"].items())
        return cls([k for k, _ in items], [v for _, v in items])


def canonical_labels(raw) -> list[int]:
    """Renumber cluster ids by order of first appearance."""
    remap: dict[int, int] = {}
    return [remap.setdefault(int(x), len(remap)) for x in raw]


def check_matrix(values: np.ndarray) -> None:
    v = np.asarray(values, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise InvalidMatrix(f"distance matrix must be square, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidMatrix("distance matrix has non-finite entries")
    if np.any(v < 0):
        raise InvalidMatrix("distance matrix has negative entries")
    if np.max(np.abs(v - v.T), initial=0.0) > SYMMETRY_TOL:
        raise InvalidMatrix("distance matrix is not symmetric")


def dbscan(D: DistanceMatrix, tau: float) -> ClusterLabeling:
    """DBSCAN with ``eps=tau`` and ``min_samples=1``.

    With a single required sample every point is a core point, so the
    clusters are the connected components of the graph joining pairs at
    distance ``<= tau``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    check_matrix(D.values)
    model = DBSCAN(eps=float(tau), min_samples=1, metric="precomputed")
    raw = model.fit_predict(np.array(D.values))
    return ClusterLabeling(D.labels, canonical_labels(raw))


def largest_cluster(labeling: ClusterLabeling) -> frozenset[int]:
    return labeling.members(labeling.largest_id)


def centroid_prototype(members, D: DistanceMatrix) -> int:
    """Member with the smallest mean distance to the other members.

    Ties go to the lowest index.
    """
    idx = sorted(members)
    if not idx:
        raise ValueError("empty member set")
    if len(idx) == 1:
        return idx[0]
    sub = D.values[np.ix_(idx, idx)]
    means = sub.sum(axis=1) / (len(idx) - 1)
    return idx[int(np.argmin(means))]
