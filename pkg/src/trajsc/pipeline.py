"""Family recovery, membership verification and their evaluation metrics."""
from __future__ import annotations

from dataclasses import dataclass, field

from .clustering import centroid_prototype
from .criteria import (
    CriterionOutcome,
    HierarchyClusterings,
    apply_criterion,
    compute_hierarchy_clusterings,
    parse_criterion,
    required_groups,
)
from .distance import DistanceCache, IcpConfig, distance
from .errors import TooFewSamples
from .groups import WarpGroup
from .trajectory import Trajectory

DEFAULT_TAU = 0.5


@dataclass(frozen=True)
class ShapeFamily:
    """A prototype trajectory together with the group that warps it."""

    prototype: Trajectory
    group: WarpGroup
    support: tuple[str, ...] = ()
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        object.__setattr__(self, "group", WarpGroup.parse(self.group))
        support = tuple(self.support) or (self.prototype.id,)
        if self.prototype.id not in support:
            raise ValueError(f"prototype {self.prototype.id!r} is not in the support")
        object.__setattr__(self, "support", support)
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    def to_dict(self) -> dict:
        return {
            "prototype": {"id": self.prototype.id, "points": self.prototype.points.tolist()},
            "group": self.group.value,
            "support": list(self.support),
            "tau": self.tau,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ShapeFamily:
        p = d["prototype"]
        return cls(Trajectory(p["id"], p["points"]), d["group"], tuple(d.get("support", ())), float(d.get("tau", DEFAULT_TAU)))


@dataclass(frozen=True)
class VerificationVerdict:
    matched: bool
    distance: float
    family: ShapeFamily

    def to_dict(self) -> dict:
        return {
            "matched": self.matched,
            "distance": self.distance,
            "group": self.family.group.value,
            "prototype": self.family.prototype.id,
            "tau": self.family.tau,
        }


@dataclass(frozen=True)
class Recovery:
    """Everything produced while recovering families from one sample set."""

    outcome: CriterionOutcome
    families: tuple[ShapeFamily, ...]
    clusterings: HierarchyClusterings


def recover(
    samples: list[Trajectory],
    criterion: str,
    tau: float = DEFAULT_TAU,
    cfg: IcpConfig = IcpConfig(),
    cache: DistanceCache | None = None,
    clusterings: HierarchyClusterings | None = None,
) -> Recovery:
    """Cluster, apply ``criterion`` and take the centroid of each chosen cluster."""
    if len(samples) < 2:
        raise TooFewSamples(f"need at least 2 samples, got {len(samples)}")
    parse_criterion(criterion)
    if clusterings is None:
        clusterings = compute_hierarchy_clusterings(samples, tau, cfg, cache, required_groups(criterion))
    elif clusterings.tau != tau:
        clusterings = clusterings.with_tau(tau)
    outcome = apply_criterion(criterion, clusterings)
    D = clusterings.matrices[outcome.chosen_group]
    families = []
    for members in outcome.chosen_clusters:
        proto = samples[centroid_prototype(members, D)]
        support = tuple(samples[i].id for i in sorted(members))
        families.append(ShapeFamily(proto, outcome.chosen_group, support, tau))
    return Recovery(outcome, tuple(families), clusterings)


def recover_family(
    samples: list[Trajectory],
    criterion: str = "hierarchical",
    tau: float = DEFAULT_TAU,
    cfg: IcpConfig = IcpConfig(),
    cache: DistanceCache | None = None,
) -> ShapeFamily | list[ShapeFamily]:
    """Recover the shape family; the multi-prototype criterion yields a list."""
    rec = recover(samples, criterion, tau, cfg, cache)
    if parse_criterion(criterion)[0] == "hierarchical_multi":
        return list(rec.families)
    return rec.families[0]


def select_generation(family: ShapeFamily) -> Trajectory:
    return family.prototype


def verify(
    family: ShapeFamily,
    query: Trajectory,
    cfg: IcpConfig = IcpConfig(),
    cache: DistanceCache | None = None,
) -> VerificationVerdict:
    d = distance(family.prototype, query, family.group, cfg, cache).distance
    return VerificationVerdict(d <= family.tau, d, family)


def verify_any(families, query: Trajectory, cfg: IcpConfig = IcpConfig(), cache: DistanceCache | None = None) -> VerificationVerdict:
    """Match against several families; the closest verdict wins."""
    verdicts = [verify(f, query, cfg, cache) for f in families]
    hit = [v for v in verdicts if v.matched]
    return min(hit or verdicts, key=lambda v: v.distance)


@dataclass(frozen=True)
class TaskResult:
    task_id: str
    chosen_group: WarpGroup | None
    purity: float | None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "task": self.task_id,
            "chosen_group": self.chosen_group.value if self.chosen_group else None,
            "purity": self.purity,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> TaskResult:
        g = d.get("chosen_group")
        return cls(d["task"], WarpGroup.parse(g) if g else None, d.get("purity"), d.get("error"))


@dataclass(frozen=True)
class EvalReport:
    """Generation accuracy and verification precision/recall/F1 for one criterion.

    Generation runs fill ``accuracy`` and ``direct_accuracy``; verification
    runs fill ``precision``, ``recall`` and ``f1``.
    """

    criterion: str
    tau: float
    accuracy: float | None = None
    direct_accuracy: float | None = None
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    per_task: tuple[TaskResult, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "tau": self.tau,
            "accuracy": self.accuracy,
            "direct_accuracy": self.direct_accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "per_task": [t.to_dict() for t in self.per_task],
        }

    @classmethod
    def from_dict(cls, d: dict) -> EvalReport:
        return cls(
            d["criterion"],
            float(d["tau"]),
            d.get("accuracy"),
            d.get("direct_accuracy"),
            d.get("precision"),
            d.get("recall"),
            d.get("f1"),
            tuple(TaskResult.from_dict(t) for t in d.get("per_task", ())),
        )

    @property
    def failures(self) -> list[TaskResult]:
        return [t for t in self.per_task if t.error]


def _unpack(task, n: int):
    """Accept ``(a, b, ...)`` or ``(task_id, a, b, ...)`` tuples."""
    if len(task) == n + 1:
        return task[0], task[1:]
    if len(task) == n:
        return None, tuple(task)
    raise ValueError(f"task tuple must have {n} or {n + 1} items")


def is_member(family: ShapeFamily, t: Trajectory, tau: float, cfg: IcpConfig, cache: DistanceCache | None) -> bool:
    return distance(family.prototype, t, family.group, cfg, cache).distance <= tau


def evaluate_generation(
    tasks,
    criterion: str,
    tau: float = DEFAULT_TAU,
    cfg: IcpConfig = IcpConfig(),
    cache: DistanceCache | None = None,
    clusterings: dict | None = None,
) -> EvalReport:
    """Mean fraction of ground-truth members inside the chosen cluster(s).

    ``tasks`` holds ``(samples, truth_family)`` or ``(task_id, samples,
    truth_family)`` tuples.  ``clusterings`` optionally maps task ids to
    precomputed :class:`HierarchyClusterings`.  ``criterion="oracle"``
    uses each task's ground-truth group.
    """
    if not tasks:
        raise ValueError("no tasks to evaluate")
    if cache is None:
        cache = DistanceCache()
    results, acc, direct = [], [], []
    for k, task in enumerate(tasks):
        task_id, (samples, truth) = _unpack(task, 2)
        task_id = task_id if task_id is not None else str(k)
        try:
            hc = clusterings.get(task_id) if clusterings else None
            crit = _oracle_name(truth.group) if criterion == "oracle" else criterion
            rec = recover(samples, crit, tau, cfg, cache, hc)
            labels = [is_member(truth, s, tau, cfg, cache) for s in samples]
        except Exception as e:  # recorded per task, the run continues
            results.append(TaskResult(task_id, None, None, f"{type(e).__name__}: {e}"))
            continue
        members = sorted(rec.outcome.members)
        purity = sum(labels[i] for i in members) / len(members)
        acc.append(purity)
        direct.append(sum(labels) / len(labels))
        results.append(TaskResult(task_id, rec.outcome.chosen_group, purity))
    return EvalReport(
        criterion,
        tau,
        accuracy=sum(acc) / len(acc) if acc else 0.0,
        direct_accuracy=sum(direct) / len(direct) if direct else 0.0,
        per_task=tuple(results),
    )


def _oracle_name(group) -> str:
    return f"oracle:{WarpGroup.parse(group).tag}"


def prf(predicted, truth) -> tuple[float, float, float]:
    """Precision, recall and F1 with 0 for undefined ratios."""
    tp = sum(1 for p, t in zip(predicted, truth) if p and t)
    fp = sum(1 for p, t in zip(predicted, truth) if p and not t)
    fn = sum(1 for p, t in zip(predicted, truth) if not p and t)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evaluate_verification(
    pairs,
    criterion: str,
    tau: float = DEFAULT_TAU,
    cfg: IcpConfig = IcpConfig(),
    cache: DistanceCache | None = None,
    clusterings: dict | None = None,
    oracle_groups: dict | None = None,
) -> EvalReport:
    """Precision, recall and F1 of membership predictions.

    ``pairs`` holds ``(samples, query, label)`` or ``(task_id, samples,
    query, label)`` tuples.  Pairs sharing a sample list recover their
    families once.  A multi-prototype recovery matches a query when any
    of its families does.  ``criterion="oracle"`` reads each task's
    ground-truth group from ``oracle_groups``.
    """
    if not pairs:
        raise ValueError("no labeled queries to evaluate")
    if cache is None:
        cache = DistanceCache()
    recovered: dict = {}
    names: dict = {}
    predicted, truth = [], []
    per_task: dict[str, list] = {}
    errors: dict[str, str] = {}
    for k, pair in enumerate(pairs):
        task_id, (samples, query, label) = _unpack(pair, 3)
        key = task_id if task_id is not None else tuple(samples)
        name = names.setdefault(key, task_id if task_id is not None else str(len(names)))
        try:
            if key not in recovered:
                hc = clusterings.get(task_id) if clusterings and task_id is not None else None
                crit = criterion
                if criterion == "oracle":
                    if not oracle_groups or task_id not in oracle_groups:
                        raise KeyError(f"no ground-truth group for task {task_id!r}")
                    crit = _oracle_name(oracle_groups[task_id])
                recovered[key] = recover(samples, crit, tau, cfg, cache, hc)
            rec = recovered[key]
            verdict = verify_any(rec.families, query, cfg, cache)
        except Exception as e:
            errors[name] = f"{type(e).__name__}: {e}"
            continue
        predicted.append(verdict.matched)
        truth.append(bool(label))
        per_task.setdefault(name, [rec.outcome.chosen_group, 0, 0])
        per_task[name][1] += int(verdict.matched == bool(label))
        per_task[name][2] += 1
    precision, recall, f1 = prf(predicted, truth)
    results = [TaskResult(n, g, ok / total) for n, (g, ok, total) in per_task.items()]
    results += [TaskResult(n, None, None, e) for n, e in errors.items()]
    return EvalReport(criterion, tau, precision=precision, recall=recall, f1=f1, per_task=tuple(results))
