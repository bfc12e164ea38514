"""Decision criteria that pick a transformation group from per-group clusterings."""
from __future__ import annotations

from dataclasses import dataclass, field

from .clustering import ClusterLabeling, dbscan, largest_cluster
from .distance import DistanceCache, DistanceMatrix, IcpConfig, pairwise_matrix
from .errors import TooFewSamples
from .groups import HIERARCHY, WarpGroup
from .trajectory import Trajectory

DEFAULT_SIZE_TOLERANCE = 0.20


@dataclass(frozen=True)
class HierarchyClusterings:
    """Distance matrix and clustering for each group over one trajectory list."""

    tau: float
    matrices: dict[WarpGroup, DistanceMatrix]
    labelings: dict[WarpGroup, ClusterLabeling] = field(default_factory=dict)

    def __post_init__(self):
        if not self.matrices:
            raise ValueError("no groups clustered")
        ids = {m.labels for m in self.matrices.values()}
        if len(ids) != 1:
            raise ValueError("matrices are over different trajectory lists")
        if not self.labelings:
            object.__setattr__(
                self, "labelings", {g: dbscan(m, self.tau) for g, m in self.matrices.items()}
            )

    @property
    def ids(self) -> tuple[str, ...]:
        return next(iter(self.matrices.values())).labels

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def complete(self) -> bool:
        return all(g in self.matrices for g in HIERARCHY)

    def __getitem__(self, group: WarpGroup) -> tuple[DistanceMatrix, ClusterLabeling]:
        group = WarpGroup.parse(group)
        return self.matrices[group], self.labelings[group]

    def with_tau(self, tau: float) -> HierarchyClusterings:
        """Recluster the same matrices at another threshold."""
        return HierarchyClusterings(tau, self.matrices)


def compute_hierarchy_clusterings(
    ts: list[Trajectory],
    tau: float,
    cfg: IcpConfig = IcpConfig(),
    cache: DistanceCache | None = None,
    groups=HIERARCHY,
) -> HierarchyClusterings:
    if len(ts) < 2:
        raise TooFewSamples(f"need at least 2 trajectories, got {len(ts)}")
    if cache is None:
        cache = DistanceCache()
    matrices = {WarpGroup.parse(g): pairwise_matrix(ts, g, cfg, cache) for g in groups}
    return HierarchyClusterings(tau, matrices)


@dataclass(frozen=True)
class TraceEntry:
    group: WarpGroup
    largest_size: int
    decision: str

    def to_dict(self) -> dict:
        return {"group": self.group.value, "largest_size": self.largest_size, "decision": self.decision}

    @classmethod
    def from_dict(cls, d: dict) -> TraceEntry:
        return cls(WarpGroup.parse(d["group"]), int(d["largest_size"]), d["decision"])


@dataclass(frozen=True)
class CriterionOutcome:
    criterion: str
    chosen_group: WarpGroup
    chosen_clusters: tuple[frozenset[int], ...]
    per_group_trace: tuple[TraceEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "chosen_clusters", tuple(frozenset(c) for c in self.chosen_clusters))
        object.__setattr__(self, "per_group_trace", tuple(self.per_group_trace))
        if not self.chosen_clusters or not all(self.chosen_clusters):
            raise ValueError("an outcome needs at least one non-empty cluster")

    @property
    def members(self) -> frozenset[int]:
        return frozenset().union(*self.chosen_clusters)

    def to_dict(self, ids=None) -> dict:
        def name(i):
            return ids[i] if ids is not None else i

        return {
            "criterion": self.criterion,
            "chosen_group": self.chosen_group.value,
            "chosen_clusters": [[name(i) for i in sorted(c)] for c in self.chosen_clusters],
            "per_group_trace": [t.to_dict() for t in self.per_group_trace],
        }

    @classmethod
    def from_dict(cls, d: dict, ids=None) -> CriterionOutcome:
        index = {k: i for i, k in enumerate(ids)} if ids is not None else None

        def idx(x):
            return index[x] if index is not None else int(x)

        return cls(
            d["criterion"],
            WarpGroup.parse(d["chosen_group"]),
            tuple(frozenset(idx(x) for x in c) for c in d["chosen_clusters"]),
            tuple(TraceEntry.from_dict(t) for t in d["per_group_trace"]),
        )


def _largest_size(labeling: ClusterLabeling) -> int:
    return labeling.cluster_sizes[labeling.largest_id]


def _containing(labeling: ClusterLabeling, ref: frozenset[int]) -> frozenset[int] | None:
    """The cluster holding all of ``ref``, or None when ``ref`` is split."""
    found = {labeling.labels[i] for i in ref}
    if len(found) != 1:
        return None
    return labeling.members(found.pop())


def majority_consensus(hc: HierarchyClusterings) -> CriterionOutcome:
    """First group, most restrictive first, whose largest cluster is a strict majority."""
    trace = []
    for g in HIERARCHY:
        lab = hc.labelings[g]
        size = _largest_size(lab)
        if 2 * size > hc.n:
            trace.append(TraceEntry(g, size, "majority"))
            return CriterionOutcome("majority", g, (largest_cluster(lab),), trace)
        trace.append(TraceEntry(g, size, "no-majority"))
    g = WarpGroup.AFFINE
    lab = hc.labelings[g]
    trace.append(TraceEntry(g, _largest_size(lab), "fallback"))
    return CriterionOutcome("majority", g, (largest_cluster(lab),), trace)


def hierarchical_consistency(hc: HierarchyClusterings) -> CriterionOutcome:
    """Descend from Affine while the tracked largest cluster stays in one piece."""
    chain = HIERARCHY[::-1]
    current = chain[0]
    lab = hc.labelings[current]
    ref = largest_cluster(lab)
    trace = [TraceEntry(current, _largest_size(lab), "start")]
    for g in chain[1:]:
        lab = hc.labelings[g]
        holder = _containing(lab, ref)
        if holder is None:
            trace.append(TraceEntry(g, _largest_size(lab), "split"))
            break
        ref, current = holder, g
        trace.append(TraceEntry(g, _largest_size(lab), "intact"))
    return CriterionOutcome("hierarchical", current, (ref,), trace)


def hierarchical_consistency_multi(
    hc: HierarchyClusterings, size_tolerance: float = DEFAULT_SIZE_TOLERANCE
) -> CriterionOutcome:
    """Hierarchical descent tracking every cluster within ``size_tolerance`` of the largest."""
    if not 0 <= size_tolerance < 1:
        raise ValueError("size_tolerance must be in [0, 1)")
    chain = HIERARCHY[::-1]
    current = chain[0]
    lab = hc.labelings[current]
    top = _largest_size(lab)
    refs = [
        lab.members(c)
        for c, s in lab.cluster_sizes.items()
        if s >= (1.0 - size_tolerance) * top
    ]
    trace = [TraceEntry(current, top, f"start:{len(refs)}")]
    for g in chain[1:]:
        lab = hc.labelings[g]
        holders = [_containing(lab, r) for r in refs]
        if any(h is None for h in holders):
            trace.append(TraceEntry(g, _largest_size(lab), "split"))
            break
        refs, current = holders, g
        trace.append(TraceEntry(g, _largest_size(lab), "intact"))
    # containing clusters may coincide only if distances are not monotone
    unique = list(dict.fromkeys(refs))
    return CriterionOutcome("hierarchical_multi", current, tuple(unique), trace)


def _fixed(hc: HierarchyClusterings, group: WarpGroup, name: str) -> CriterionOutcome:
    lab = hc.labelings[group]
    return CriterionOutcome(
        name, group, (largest_cluster(lab),), (TraceEntry(group, _largest_size(lab), "fixed"),)
    )


def most_restrictive(hc: HierarchyClusterings) -> CriterionOutcome:
    return _fixed(hc, WarpGroup.RIGID, "most")


def least_restrictive(hc: HierarchyClusterings) -> CriterionOutcome:
    return _fixed(hc, WarpGroup.AFFINE, "least")


def oracle(hc: HierarchyClusterings, group: WarpGroup) -> CriterionOutcome:
    group = WarpGroup.parse(group)
    return _fixed(hc, group, f"oracle:{group.tag}")


CRITERIA = {
    "majority": majority_consensus,
    "hierarchical": hierarchical_consistency,
    "most": most_restrictive,
    "least": least_restrictive,
    "hierarchical_multi": hierarchical_consistency_multi,
}


def parse_criterion(name: str) -> tuple[str, WarpGroup | None]:
    """Split ``oracle:<group>`` and validate plain criterion names."""
    name = name.strip()
    if name.lower().startswith("oracle:"):
        return "oracle", WarpGroup.parse(name.split(":", 1)[1])
    if name not in CRITERIA:
        choices = ", ".join([*CRITERIA, "oracle:<group>"])
        raise ValueError(f"unknown criterion {name!r} (choose from {choices})")
    return name, None


def required_groups(criterion: str) -> tuple[WarpGroup, ...]:
    kind, group = parse_criterion(criterion)
    if kind == "oracle":
        return (group,)
    if kind == "most":
        return (WarpGroup.RIGID,)
    if kind == "least":
        return (WarpGroup.AFFINE,)
    return HIERARCHY


def apply_criterion(criterion: str, hc: HierarchyClusterings) -> CriterionOutcome:
    kind, group = parse_criterion(criterion)
    if kind == "oracle":
        return oracle(hc, group)
    return CRITERIA[kind](hc)
