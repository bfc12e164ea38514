"""Benchmark directories and the evaluation run behind ``trajsc bench``.

A benchmark directory holds

* ``tasks.json``: sampler settings and, per task, its prompt, ground-truth
  group, modifiers and prototype points;
* ``<task>.traj.json``: the samples used for family recovery;
* ``<task>.queries.traj.json``: the labeled verification queries;
* ``labels.json``: ``{task: {"samples": {id: bool}, "queries": {id: bool}}}``.

Sample labels are construction labels (true for in-group warps).  Query
labels come from the distance to the ground-truth family.
"""
from __future__ import annotations

import csv
import io as _io
import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .benchmark import SamplerConfig, build_tasks, build_verification_set, sample_task
from .criteria import compute_hierarchy_clusterings
from .distance import DistanceCache, IcpConfig
from .errors import SamplerExhausted, TrajscError
from .groups import WarpGroup
from .io import ParseError, dump_json, load_json, read_collection, trajectory_to_dict, write_collection
from .pipeline import ShapeFamily, evaluate_generation, evaluate_verification
from .trajectory import Trajectory

log = logging.getLogger(__name__)

DEFAULT_CRITERIA = ("majority", "hierarchical", "hierarchical_multi", "most", "least")
TAU_SWEEP = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
METRICS = ("accuracy", "precision", "recall", "f1")


class ConfigError(ParseError):
    """Unknown key or bad value in a benchmark config."""


@dataclass(frozen=True)
class BenchConfig:
    """Flat settings for ``bench generate`` and ``bench eval``.

    ``tasks`` restricts the run to the named task ids (all when empty).
    ``tau_sweep`` replaces the single ``tau`` when set.
    """

    seed: int = 0
    n_samples: int = 19
    correct_rate: float = 0.65
    tau: float = 0.5
    criteria: tuple[str, ...] = DEFAULT_CRITERIA
    distractor_mode: str = "mixed"
    noise_px: float = 0.0
    vary_prob: float = 0.3
    query_vary_prob: float = 1.0
    per_class: int = 5
    n_resample: int = 100
    tau_sweep: tuple[float, ...] = ()
    tasks: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "criteria", tuple(self.criteria))
        object.__setattr__(self, "tau_sweep", tuple(float(t) for t in self.tau_sweep))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        if not self.tau > 0 or not all(t > 0 for t in self.tau_sweep):
            raise ConfigError("tau values must be positive")
        if self.per_class < 1:
            raise ConfigError("per_class must be >= 1")
        from .criteria import parse_criterion

        for c in self.criteria:
            if c != "oracle":
                try:
                    parse_criterion(c)
                except ValueError as e:
                    raise ConfigError(str(e)) from None
        try:
            self.sampler()
            self.icp()
        except ValueError as e:
            raise ConfigError(str(e)) from None

    @property
    def taus(self) -> tuple[float, ...]:
        return self.tau_sweep or (self.tau,)

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(
            n_samples=self.n_samples,
            correct_rate=self.correct_rate,
            distractor_mode=self.distractor_mode,
            noise_px=self.noise_px,
            rng_seed=self.seed,
            vary_prob=self.vary_prob,
            query_vary_prob=self.query_vary_prob,
        )

    def icp(self) -> IcpConfig:
        # one early-exit threshold below every tau lets all taus share matrices
        return IcpConfig(n_resample=self.n_resample, rng_seed=self.seed, early_stop_tau=min(self.taus))

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> BenchConfig:
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def load(cls, path) -> BenchConfig:
        return cls.from_dict(load_json(path))


@dataclass
class BenchTask:
    id: str
    prompt: str
    group: WarpGroup
    prototype: Trajectory
    samples: list[Trajectory]
    sample_labels: list[bool]
    queries: list[Trajectory] = field(default_factory=list)
    query_labels: list[bool] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def family(self, tau: float) -> ShapeFamily:
        return ShapeFamily(self.prototype, self.group, tau=tau)


def generate(cfg: BenchConfig) -> list[BenchTask]:
    """Sample every task and rejection-sample its verification queries."""
    sampler, icp = cfg.sampler(), cfg.icp()
    tasks = build_tasks()
    if cfg.tasks:
        wanted = set(cfg.tasks)
        missing = wanted - {t.id for t in tasks}
        if missing:
            raise ConfigError(f"unknown task ids: {', '.join(sorted(missing))}")
        tasks = [t for t in tasks if t.id in wanted]
    out = []
    for task in tasks:
        cache = DistanceCache()
        samples = sample_task(task, sampler)
        try:
            queries = build_verification_set(task, sampler, icp, cfg.tau, cfg.per_class, cache=cache)
        except SamplerExhausted as e:
            log.warning("%s", e)
            queries = []
        out.append(
            BenchTask(
                task.id,
                task.prompt,
                task.group,
                task.family.prototype,
                [s for s, _ in samples],
                [b for _, b in samples],
                [q for q, _ in queries],
                [b for _, b in queries],
                meta={"shape": task.shape, "modifiers": dict(task.modifiers)},
            )
        )
    return out


def write_benchmark(tasks: list[BenchTask], cfg: BenchConfig, directory) -> Path:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    entries, labels = [], {}
    for t in tasks:
        entries.append({
            "id": t.id,
            "prompt": t.prompt,
            "group": t.group.value,
            **t.meta,
            "prototype": trajectory_to_dict(t.prototype),
            "samples": f"{t.id}.traj.json",
            "queries": f"{t.id}.queries.traj.json",
        })
        write_collection(t.samples, root / f"{t.id}.traj.json")
        write_collection(t.queries, root / f"{t.id}.queries.traj.json")
        labels[t.id] = {
            "samples": {s.id: b for s, b in zip(t.samples, t.sample_labels)},
            "queries": {q.id: b for q, b in zip(t.queries, t.query_labels)},
        }
    dump_json({"config": cfg.to_dict(), "tasks": entries}, root / "tasks.json")
    dump_json(labels, root / "labels.json")
    return root


def read_benchmark(directory) -> list[BenchTask]:
    root = Path(directory)
    spec = load_json(root / "tasks.json")
    labels = load_json(root / "labels.json")
    try:
        out = []
        for e in spec["tasks"]:
            lab = labels[e["id"]]
            samples = read_collection(root / e["samples"])
            queries = read_collection(root / e["queries"])
            p = e["prototype"]
            out.append(
                BenchTask(
                    e["id"],
                    e["prompt"],
                    WarpGroup.parse(e["group"]),
                    Trajectory(p["id"], p["points"]),
                    samples,
                    [bool(lab["samples"][s.id]) for s in samples],
                    queries,
                    [bool(lab["queries"][q.id]) for q in queries],
                    meta={k: e[k] for k in ("shape", "modifiers") if k in e},
                )
            )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"{root}: malformed benchmark ({type(e).__name__}: {e})") from None
    return out


def _row(criterion: str, tau: float, gen=None, ver=None) -> dict:
    return {
        "criterion": criterion,
        "tau": tau,
        "accuracy": gen.accuracy if gen else None,
        "precision": ver.precision if ver else None,
        "recall": ver.recall if ver else None,
        "f1": ver.f1 if ver else None,
    }


def evaluate(tasks: list[BenchTask], cfg: BenchConfig, cache: DistanceCache | None = None) -> dict:
    """Run every criterion (plus the oracle and the direct baseline) at every tau.

    Clusterings are computed once per task and reclustered per tau.
    Tasks that fail are listed under ``failures`` and left out.
    """
    icp = cfg.icp()
    cache = cache if cache is not None else DistanceCache()
    taus = cfg.taus
    clusterings, failures = {}, []
    for t in tasks:
        try:
            clusterings[t.id] = compute_hierarchy_clusterings(t.samples, taus[0], icp, cache)
        except TrajscError as e:
            failures.append({"task": t.id, "error": f"{type(e).__name__}: {e}"})
        log.info("clustered %s", t.id)
    ok = [t for t in tasks if t.id in clusterings]
    groups = {t.id: t.group for t in ok}
    criteria = list(dict.fromkeys([*cfg.criteria, "oracle"]))
    rows, per_task = [], {}
    for tau in taus:
        gen_tasks = [(t.id, t.samples, t.family(tau)) for t in ok]
        pairs = [(t.id, t.samples, q, b) for t in ok for q, b in zip(t.queries, t.query_labels)]
        direct = None
        for crit in criteria:
            gen = evaluate_generation(gen_tasks, crit, tau, icp, cache, clusterings) if gen_tasks else None
            ver = evaluate_verification(pairs, crit, tau, icp, cache, clusterings, groups) if pairs else None
            rows.append(_row(crit, tau, gen, ver))
            direct = gen.direct_accuracy if gen else direct
            if tau == cfg.tau or len(taus) == 1:
                per_task[crit] = {r.task_id: r.to_dict() for r in (gen.per_task if gen else ())}
            for rep in (gen, ver):
                for f in rep.failures if rep else ():
                    failures.append({"task": f.task_id, "criterion": crit, "tau": tau, "error": f.error})
        rows.append({"criterion": "direct", "tau": tau, "accuracy": direct,
                     "precision": None, "recall": None, "f1": None})
    return {
        "config": cfg.to_dict(),
        "n_tasks": len(tasks),
        "n_queries": sum(len(t.queries) for t in tasks),
        "rows": rows,
        "per_task": per_task,
        "failures": failures,
    }


def format_table(rows: list[dict], sep: str = "\t") -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, delimiter=sep, lineterminator="\n")
    w.writerow(["criterion", "tau", *METRICS])
    for r in rows:
        w.writerow([r["criterion"], f"{r['tau']:g}", *("" if r[m] is None else f"{100 * r[m]:.1f}" for m in METRICS)])
    return buf.getvalue()


def write_report(report: dict, directory, figures: bool = True) -> list[Path]:
    """Write report.json, table.tsv and PNG figures; return the paths."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    paths = [root / "report.json", root / "table.tsv"]
    paths[0].write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    paths[1].write_text(format_table(report["rows"]))
    if figures:
        from .render import plot_metric_bars, plot_tau_sweep

        tau = report["config"]["tau"]
        rows = [r for r in report["rows"] if r["tau"] == tau] or report["rows"]
        paths.append(root / "metrics.png")
        plot_metric_bars(rows, paths[-1], title=f"tau = {rows[0]['tau']:g} px")
        if len({r["tau"] for r in report["rows"]}) > 1:
            paths.append(root / "tau_sweep.png")
            plot_tau_sweep([r for r in report["rows"] if r["criterion"] != "direct"], paths[-1])
    return paths


def with_tau_sweep(cfg: BenchConfig, taus=TAU_SWEEP) -> BenchConfig:
    return replace(cfg, tau_sweep=tuple(taus))
