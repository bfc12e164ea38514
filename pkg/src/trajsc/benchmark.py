"""Parametric shape catalog, templated tasks and a synthetic trajectory sampler.

The sampler stands in for a language model asked to animate a shape: a
sample is either the task prototype under a random warp from the task's
group (a correct answer) or a distractor.  Distractors are other shapes or
the prototype under a warp just outside the group, such as a reflection
when the prompt fixes the traversal direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .distance import DistanceCache, IcpConfig, derive_seed, distance
from .errors import InapplicableModifier, SamplerExhausted
from .groups import WarpGroup
from .pipeline import ShapeFamily
from .trajectory import CANVAS_CENTER, Trajectory

G = WarpGroup
N_POINTS = 100
SVG_ELEMENT = "blue circle"


def _polygon(vertices: np.ndarray, n: int = N_POINTS) -> np.ndarray:
    """Closed polyline with ``n`` points spread evenly over the perimeter.

    Every corner is a vertex so start offsets can land on corners.
    """
    closed = np.vstack([vertices, vertices[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    counts = np.maximum(1, np.round(n * seg / seg.sum()).astype(int))
    counts[np.argmax(counts)] += n - counts.sum()
    pts = [a + (b - a) * u for a, b, k in zip(closed[:-1], closed[1:], counts) for u in np.arange(k) / k]
    pts.append(closed[0])
    return np.array(pts)


def _curve(fx, fy, t0: float, t1: float, n: int = N_POINTS, closed: bool = False) -> np.ndarray:
    t = np.linspace(t0, t1, n + 1 if closed else n)
    pts = np.c_[fx(t), fy(t)]
    if closed:
        pts[-1] = pts[0]
    return pts


def circle(radius=80.0):
    return _curve(lambda t: radius * np.cos(t), lambda t: radius * np.sin(t), 0, 2 * np.pi, closed=True)


def ellipse(rx=110.0, ry=66.0):
    return _curve(lambda t: rx * np.cos(t), lambda t: ry * np.sin(t), 0, 2 * np.pi, closed=True)


def square(side=150.0):
    h = side / 2
    return _polygon(np.array([[-h, -h], [h, -h], [h, h], [-h, h]]))


def rectangle(width=160.0, height=120.0):
    w, h = width / 2, height / 2
    return _polygon(np.array([[-w, -h], [w, -h], [w, h], [-w, h]]))


def equilateral_triangle(side=170.0):
    r = side / math.sqrt(3)
    ang = -np.pi / 2 + np.arange(3) * 2 * np.pi / 3
    return _polygon(np.c_[r * np.cos(ang), r * np.sin(ang)])


def right_triangle(width=160.0, height=120.0):
    # right angle at the lower left, legs along the canvas axes
    v = np.array([[0, 0], [width, 0], [0, -height]]) - [width / 3, -height / 3]
    return _polygon(v)


def pentagon(side=110.0):
    r = side / (2 * math.sin(math.pi / 5))
    ang = -np.pi / 2 + np.arange(5) * 2 * np.pi / 5
    return _polygon(np.c_[r * np.cos(ang), r * np.sin(ang)])


def parallelogram(base=160.0, height=100.0, offset=50.0):
    b, h, o = base / 2, height / 2, offset / 2
    return _polygon(np.array([[-b + o, -h], [b + o, -h], [b - o, h], [-b - o, h]]))


def figure_eight(width=260.0):
    a = width / 2
    return _curve(lambda t: a * np.cos(t), lambda t: a * np.sin(t) * np.cos(t), 0, 2 * np.pi, closed=True)


def rose(petal=110.0):
    return _curve(
        lambda t: petal * np.cos(2 * t) * np.cos(t),
        lambda t: petal * np.cos(2 * t) * np.sin(t),
        0,
        2 * np.pi,
        n=2 * N_POINTS,
        closed=True,
    )


def parabola(width=200.0, height=120.0):
    x = np.linspace(-1, 1, N_POINTS)
    return np.c_[x * width / 2, height * (x**2 - 0.5)]


def sine(extent=300.0, amplitude=60.0, periods=2):
    x = np.linspace(0, 1, 2 * N_POINTS)
    return np.c_[(x - 0.5) * extent, -amplitude * np.sin(2 * np.pi * periods * x)]


def spiral(radius=120.0, turns=3):
    t = np.linspace(0, 1, 2 * N_POINTS) ** 0.5
    ang = 2 * np.pi * turns * t
    return np.c_[radius * t * np.cos(ang), radius * t * np.sin(ang)]


def deltoid(radius=120.0):
    a = radius / 3
    return _curve(
        lambda t: 2 * a * np.cos(t) + a * np.cos(2 * t),
        lambda t: 2 * a * np.sin(t) - a * np.sin(2 * t),
        0,
        2 * np.pi,
        closed=True,
    )


@dataclass(frozen=True)
class BaseShape:
    """A catalog entry.

    ``absolute`` and ``ratio`` hold the prompt phrases that pin the size or
    the proportions; ``None`` means the modifier does not apply.
    ``orientable`` is false for shapes whose mirror image is a rotated,
    restarted copy of themselves, where a traversal direction means nothing.
    """

    name: str
    generator: Callable[..., np.ndarray]
    natural_group: WarpGroup
    closed: bool
    default_size: dict = field(default_factory=dict)
    absolute: str | None = None
    ratio: str | None = None
    orientable: bool = True
    repeat: str | None = None
    affine_class: str = ""

    def points(self, **overrides) -> np.ndarray:
        params = {**self.default_size, **overrides}
        return self.generator(**params) + np.asarray(CANVAS_CENTER)


def shape_catalog() -> list[BaseShape]:
    return [
        BaseShape("circle", circle, G.SIM_REF, True, {"radius": 80.0},
                  absolute="a radius of 80 px", affine_class="ellipse"),
        BaseShape("ellipse", ellipse, G.SIM_ANI, True, {"rx": 110.0, "ry": 66.0},
                  absolute="a horizontal radius of 110 px and a vertical radius of 66 px",
                  ratio="an axis ratio of 5:3", affine_class="ellipse"),
        BaseShape("square", square, G.SIM_REF, True, {"side": 150.0},
                  absolute="a side length of 150 px", affine_class="quad"),
        BaseShape("rectangle", rectangle, G.SIM_ANI, True, {"width": 160.0, "height": 120.0},
                  absolute="a width of 160 px and a height of 120 px",
                  ratio="a 4:3 aspect ratio", affine_class="quad"),
        BaseShape("equilateral triangle", equilateral_triangle, G.SIM_REF, True, {"side": 170.0},
                  absolute="a side length of 170 px", affine_class="triangle"),
        BaseShape("right triangle", right_triangle, G.SIM_ANI, True, {"width": 160.0, "height": 120.0},
                  absolute="a width of 160 px and a height of 120 px",
                  ratio="legs in a 4:3 ratio", affine_class="triangle"),
        BaseShape("pentagon", pentagon, G.SIM_REF, True, {"side": 110.0},
                  absolute="a side length of 110 px", affine_class="pentagon"),
        BaseShape("parallelogram", parallelogram, G.AFFINE, True,
                  {"base": 160.0, "height": 100.0, "offset": 50.0}, affine_class="quad"),
        BaseShape("figure-8", figure_eight, G.SIM_REF, True, {"width": 260.0},
                  absolute="a width of 260 px", orientable=False, affine_class="figure-8"),
        BaseShape("four-petal rose", rose, G.SIM_REF, True, {"petal": 110.0},
                  absolute="a petal length of 110 px", affine_class="rose"),
        BaseShape("parabola", parabola, G.SIM_ANI, False, {"width": 200.0, "height": 120.0},
                  absolute="a width of 200 px and a height of 120 px",
                  ratio="a width-to-height ratio of 5:3", affine_class="parabola"),
        BaseShape("sine wave", sine, G.SIM_ANI, False, {"extent": 300.0, "amplitude": 60.0, "periods": 2},
                  absolute="a horizontal extent of 300 px and an amplitude of 60 px",
                  ratio="an extent-to-amplitude ratio of 5:1", repeat="2 periods", affine_class="sine"),
        BaseShape("Archimedean spiral", spiral, G.SIM_REF, False, {"radius": 120.0, "turns": 3},
                  absolute="an outer radius of 120 px", repeat="3 turns", affine_class="spiral"),
        BaseShape("deltoid", deltoid, G.SIM_REF, True, {"radius": 120.0},
                  absolute="a circumradius of 120 px", affine_class="deltoid"),
    ]


def shape_by_name(name: str) -> BaseShape:
    for s in shape_catalog():
        if s.name == name:
            return s
    raise KeyError(name)


ORIENTATIONS = ("clockwise", "counterclockwise")

DEFAULT_MODIFIER_GRID: tuple[dict, ...] = (
    {},
    {"orientation": "counterclockwise"},
    {"size": "absolute"},
    {"size": "ratio"},
    {"size": "absolute", "orientation": "clockwise"},
)


@dataclass(frozen=True)
class BenchmarkTask:
    id: str
    prompt: str
    shape: str
    family: ShapeFamily
    modifiers: dict = field(default_factory=dict)

    @property
    def group(self) -> WarpGroup:
        return self.family.group

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "prompt": self.prompt,
            "shape": self.shape,
            "group": self.group.value,
            "modifiers": dict(self.modifiers),
            "prototype": self.family.prototype.id,
        }


def modified_group(shape: BaseShape, modifiers: dict) -> WarpGroup:
    """Ground-truth group of ``shape`` after size and orientation modifiers."""
    g = shape.natural_group
    size = modifiers.get("size")
    if size == "absolute":
        if shape.absolute is None or g == G.AFFINE:
            raise InapplicableModifier(f"{shape.name} has no absolute size parameters")
        g = G.RIGID if g == G.SIM else G.RIGID_REF
    elif size == "ratio":
        if shape.ratio is None or g != G.SIM_ANI:
            raise InapplicableModifier(f"{shape.name} has no size ratio to fix")
        g = G.SIM_REF
    elif size is not None:
        raise InapplicableModifier(f"unknown size modifier {size!r}")
    orientation = modifiers.get("orientation")
    if orientation is not None:
        if orientation not in ORIENTATIONS:
            raise InapplicableModifier(f"unknown orientation {orientation!r}")
        if not shape.orientable or g not in (G.SIM_REF, G.RIGID_REF):
            raise InapplicableModifier(f"orientation does not constrain {shape.name} under {g.tag}")
        g = G.SIM if g == G.SIM_REF else G.RIGID
    return g


def _signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _orient(pts: np.ndarray, orientation: str) -> np.ndarray:
    """Mirror the prototype top-to-bottom if it runs the wrong way on screen.

    With the y axis pointing down a positive shoelace area is clockwise.
    Open spirals use the same test on their winding.
    """
    clockwise = _signed_area(pts - pts.mean(axis=0)) > 0
    if clockwise == (orientation == "clockwise"):
        return pts
    cy = CANVAS_CENTER[1]
    return np.c_[pts[:, 0], 2 * cy - pts[:, 1]]


def render_prompt(shape: BaseShape, modifiers: dict) -> str:
    name = shape.name
    article = "an" if name[0].lower() in "aeiou" else "a"
    target = f"{article} {name}"
    size = modifiers.get("size")
    if size == "absolute":
        target += f" with {shape.absolute}"
    elif size == "ratio":
        target += f" with {shape.ratio}"
    text = f"Animate the {SVG_ELEMENT} to move along a path shaped like {target}."
    if shape.repeat:
        text += f" Complete {shape.repeat} of {article} {name}."
    if "orientation" in modifiers:
        text += f" Traverse the path in a {modifiers['orientation']} manner."
    return text


def _task_id(shape: BaseShape, modifiers: dict) -> str:
    parts = [shape.name.lower().replace(" ", "-")]
    if "size" in modifiers:
        parts.append(modifiers["size"])
    if "orientation" in modifiers:
        parts.append("cw" if modifiers["orientation"] == "clockwise" else "ccw")
    return "_".join(parts)


def build_task(shape: BaseShape, modifiers: dict) -> BenchmarkTask:
    group = modified_group(shape, modifiers)
    pts = shape.points()
    if "orientation" in modifiers:
        pts = _orient(pts, modifiers["orientation"])
    task_id = _task_id(shape, modifiers)
    proto = Trajectory(f"{task_id}/prototype", pts)
    return BenchmarkTask(task_id, render_prompt(shape, modifiers), shape.name, ShapeFamily(proto, group), dict(modifiers))


def build_tasks(catalog=None, modifier_grid=DEFAULT_MODIFIER_GRID) -> list[BenchmarkTask]:
    """Every shape crossed with every applicable modifier set."""
    catalog = shape_catalog() if catalog is None else catalog
    tasks = []
    for mods in modifier_grid:
        for shape in catalog:
            try:
                tasks.append(build_task(shape, mods))
            except InapplicableModifier:
                continue
    return tasks


@dataclass(frozen=True)
class WarpRanges:
    rotation: tuple[float, float] = (0.0, 2 * math.pi)
    scale: tuple[float, float] = (0.5, 2.0)
    anisotropic: tuple[float, float] = (0.5, 2.0)
    translation: tuple[float, float] = (-80.0, 80.0)
    shear: tuple[float, float] = (-0.5, 0.5)
    # smallest violation used for out-of-group distractors
    min_scale_change: float = 1.25
    min_shear: float = 0.15
    # sheared polygons can come close to a stretch of a relabelled copy, so
    # shear distractors for SimAni tasks must sit this far from the family
    min_violation_px: float = 1.0


DISTRACTOR_MODES = ("other-shape", "out-of-group-warp", "mixed")


@dataclass(frozen=True)
class SamplerConfig:
    """Synthetic sampler settings.

    ``vary_prob`` is the chance that each warp parameter departs from the
    prototype's value (rotation, scale, axis scales, shear, mirroring).
    Values below 1 imitate the limited diversity of model samples, which
    tend to repeat the canonical pose and size.  Verification queries are
    drawn with ``query_vary_prob`` instead: they stand for trajectories
    pooled from other generators and should cover the whole family.
    """

    n_samples: int = 19
    correct_rate: float = 0.7
    warp_ranges: WarpRanges = WarpRanges()
    distractor_mode: str = "mixed"
    noise_px: float = 0.0
    rng_seed: int = 0
    vary_prob: float = 0.3
    query_vary_prob: float = 1.0
    aligned_every: int = 3

    def __post_init__(self):
        if not 0.0 <= self.correct_rate <= 1.0:
            raise ValueError("correct_rate must be in [0, 1]")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.distractor_mode not in DISTRACTOR_MODES:
            raise ValueError(f"distractor_mode must be one of {DISTRACTOR_MODES}")
        if self.noise_px < 0:
            raise ValueError("noise_px must be >= 0")
        if not (0.0 <= self.vary_prob <= 1.0 and 0.0 <= self.query_vary_prob <= 1.0):
            raise ValueError("vary_prob and query_vary_prob must be in [0, 1]")
        if self.aligned_every < 1:
            raise ValueError("aligned_every must be >= 1")


def _rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _log_uniform(rng, lo_hi) -> float:
    lo, hi = lo_hi
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def _away_from_one(rng, lo_hi, min_change: float) -> float:
    """A scale factor in the range but at least ``min_change`` away from 1."""
    lo, hi = lo_hi
    if rng.random() < 0.5:
        return float(math.exp(rng.uniform(math.log(lo), -math.log(min_change))))
    return float(math.exp(rng.uniform(math.log(min_change), math.log(hi))))


def in_group_linear(group: WarpGroup, rng, ranges: WarpRanges, vary: float, aligned: bool = False) -> np.ndarray:
    """Random linear part of a warp in ``group``.

    Each parameter departs from the identity with probability ``vary``.
    ``aligned`` restricts the rotation to multiples of 90 degrees.
    """

    def varies() -> bool:
        return rng.random() < vary

    theta = 0.0
    if varies():
        theta = float(rng.integers(4)) * math.pi / 2 if aligned else float(rng.uniform(*ranges.rotation))
    R = _rot(theta)
    M = np.eye(2)
    if group.has_reflections and varies() and rng.random() < 0.5:
        M = np.diag([1.0, -1.0])
    if group in (G.SIM, G.SIM_REF) and varies():
        M = _log_uniform(rng, ranges.scale) * M
    if group in (G.SIM_ANI, G.AFFINE):
        if varies():
            M = np.diag([_log_uniform(rng, ranges.anisotropic), _log_uniform(rng, ranges.anisotropic)]) @ M
        if group == G.AFFINE and varies():
            M = np.array([[1.0, rng.uniform(*ranges.shear)], [0.0, 1.0]]) @ M
    return R @ M


def violation_kinds(task: BenchmarkTask) -> tuple[str, ...]:
    """Warps just outside the task group that still change the prototype."""
    g = task.group
    if g == G.RIGID:
        return ("scale", "reflect")
    if g == G.RIGID_REF:
        return ("scale",)
    if g == G.SIM:
        return ("reflect",)
    if g == G.SIM_REF:
        return ("stretch", "shear")
    if g == G.SIM_ANI and shape_by_name(task.shape).affine_class != "ellipse":
        return ("shear",)
    # every affine image of an ellipse is a rotated, stretched ellipse
    return ()


def violation_linear(kind: str, rng, ranges: WarpRanges) -> np.ndarray:
    if kind == "scale":
        return _away_from_one(rng, ranges.scale, ranges.min_scale_change) * np.eye(2)
    if kind == "reflect":
        return np.diag([1.0, -1.0])
    if kind == "stretch":
        return np.diag([_away_from_one(rng, ranges.anisotropic, ranges.min_scale_change), 1.0])
    if kind == "shear":
        k = rng.uniform(ranges.min_shear, ranges.shear[1]) * rng.choice([-1.0, 1.0])
        return np.array([[1.0, k], [0.0, 1.0]])
    raise ValueError(kind)


MAX_REDRAWS = 100


def _place(pts: np.ndarray, L: np.ndarray, rng, ranges: WarpRanges, closed: bool, noise: float) -> np.ndarray:
    """Warp about the canvas centre, translate, restart closed paths, add jitter."""
    c = np.asarray(CANVAS_CENTER)
    out = (pts - c) @ L.T + c + rng.uniform(*ranges.translation, size=2)
    if closed:
        ring = out[:-1]
        out = np.roll(ring, -int(rng.integers(len(ring))), axis=0)
        out = np.vstack([out, out[:1]])
    if noise > 0:
        out = out + rng.normal(0.0, noise, size=out.shape)
    return out


def _violating(task: BenchmarkTask, kind: str, base_L: np.ndarray, rng, cfg: SamplerConfig):
    """Prototype under ``base_L`` composed with a violation of ``kind``.

    Scale, reflection and stretch violations provably leave the group.  A
    shear can still land near a SimAni image of the prototype with its
    vertices relabelled, so for SimAni tasks the draw is checked against the
    family and redrawn; None when no draw clears the margin.
    """
    ranges = cfg.warp_ranges
    closed = shape_by_name(task.shape).closed
    proto = task.family.prototype
    for _ in range(MAX_REDRAWS):
        V = violation_linear(kind, rng, ranges)
        pts = _place(proto.points, base_L @ V, rng, ranges, closed, cfg.noise_px)
        if task.group != G.SIM_ANI or kind != "shear":
            return pts
        probe = Trajectory("probe", pts)
        icp = IcpConfig(rng_seed=cfg.rng_seed, early_stop_tau=ranges.min_violation_px)
        if distance(proto, probe, task.group, icp).distance > ranges.min_violation_px:
            return pts
    return None


def _distractor_shape(task: BenchmarkTask, rng) -> BaseShape:
    own = shape_by_name(task.shape)
    pool = [s for s in shape_catalog() if s.affine_class != own.affine_class]
    return pool[int(rng.integers(len(pool)))]


def sample_task(task: BenchmarkTask, cfg: SamplerConfig, stream: str = "samples") -> list[tuple[Trajectory, bool]]:
    """Draw ``cfg.n_samples`` labeled trajectories for ``task``.

    The label is the construction label: true for in-group warps of the
    prototype.  SimAni tasks make every ``aligned_every``-th true sample
    axis-aligned so the family can be chained through canonical poses.
    """
    rng = np.random.default_rng(derive_seed(cfg.rng_seed, task.id, stream))
    ranges = cfg.warp_ranges
    proto = task.family.prototype.points
    closed = shape_by_name(task.shape).closed
    kinds = violation_kinds(task)
    out = []
    n_true = 0
    for k in range(cfg.n_samples):
        sid = f"{task.id}/{stream[0]}{k:02d}"
        base_L = in_group_linear(
            task.group,
            rng,
            ranges,
            cfg.vary_prob,
            aligned=task.group == G.SIM_ANI and n_true % cfg.aligned_every == 0,
        )
        if rng.random() < cfg.correct_rate:
            n_true += 1
            pts = _place(proto, base_L, rng, ranges, closed, cfg.noise_px)
            out.append((Trajectory(sid, pts), True))
            continue
        mode = cfg.distractor_mode
        if mode == "mixed":
            mode = DISTRACTOR_MODES[int(rng.integers(2))]
        pts = None
        if mode == "out-of-group-warp" and kinds:
            kind = kinds[int(rng.integers(len(kinds)))]
            pts = _violating(task, kind, base_L, rng, cfg)
        if pts is None:
            other = _distractor_shape(task, rng)
            pts = _place(other.points(), base_L, rng, ranges, other.closed, cfg.noise_px)
        out.append((Trajectory(sid, pts), False))
    return out


def build_verification_set(
    task: BenchmarkTask,
    cfg: SamplerConfig,
    icp: IcpConfig = IcpConfig(),
    tau: float = 0.5,
    per_class: int = 5,
    max_attempts: int = 1000,
    cache: DistanceCache | None = None,
) -> list[tuple[Trajectory, bool]]:
    """Rejection-sample ``per_class`` member and non-member queries.

    Candidates come from fresh sampler batches drawn with
    ``cfg.query_vary_prob``.  A candidate whose
    construction label names a class that is already full is skipped
    unchecked; the rest are labeled by distance to the ground-truth
    prototype under the ground-truth group.
    """
    need = {True: per_class, False: per_class}
    found = {True: [], False: []}
    attempts = 0
    batch = 0
    family = task.family
    cfg = replace(cfg, vary_prob=cfg.query_vary_prob)
    while True:
        for traj, built in sample_task(task, cfg, stream=f"verify{batch}"):
            if attempts >= max_attempts:
                raise SamplerExhausted(
                    f"{task.id}: {len(found[True])} true and {len(found[False])} false queries "
                    f"after {max_attempts} attempts"
                )
            attempts += 1
            if len(found[built]) >= need[built]:
                continue
            label = distance(family.prototype, traj, family.group, icp, cache).distance <= tau
            if len(found[label]) < need[label]:
                k = len(found[True]) + len(found[False])
                found[label].append((traj.with_points(traj.points, id=f"{task.id}/q{k:02d}"), label))
            if all(len(found[c]) >= need[c] for c in need):
                return found[True] + found[False]
        batch += 1


def with_seed(cfg: SamplerConfig, seed: int) -> SamplerConfig:
    return replace(cfg, rng_seed=seed)
