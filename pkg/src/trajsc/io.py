"""JSON reading and writing for trajectories, benchmarks and ingested samples.

A trajectory is ``{"id": "...", "points": [[x, y], ...]}``; a collection
is a JSON array of those.  The canonical extension is ``.traj.json``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DegenerateTrajectory, TrajscError
from .trajectory import Trajectory, normalize

TRAJ_SUFFIX = ".traj.json"


class ParseError(TrajscError, ValueError):
    """A file is missing, is not JSON, or does not match the expected layout."""


def trajectory_from_dict(d) -> Trajectory:
    if not isinstance(d, dict) or "points" not in d:
        raise ParseError("trajectory must be an object with 'id' and 'points'")
    tid = d.get("id")
    if not isinstance(tid, str) or not tid:
        raise ParseError("trajectory id must be a non-empty string")
    pts = d["points"]
    if not isinstance(pts, list) or not all(
        isinstance(p, (list, tuple))
        and len(p) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in p)
        for p in pts
    ):
        raise ParseError(f"trajectory {tid!r}: points must be a list of [x, y] numbers")
    if not all(math.isfinite(v) for p in pts for v in p):
        raise ParseError(f"trajectory {tid!r}: non-finite coordinate")
    return Trajectory(tid, pts)


def trajectory_to_dict(t: Trajectory) -> dict:
    return {"id": t.id, "points": t.points.tolist()}


def load_json(path) -> object:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ParseError(f"{p}: {e.strerror or e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{p}: invalid JSON ({e})") from e


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def read_trajectory(path) -> Trajectory:
    data = load_json(path)
    if isinstance(data, list):
        if len(data) != 1:
            raise ParseError(f"{path}: expected one trajectory, found {len(data)}")
        data = data[0]
    try:
        return trajectory_from_dict(data)
    except ParseError as e:
        raise ParseError(f"{path}: {e}") from e


def read_collection(path) -> list[Trajectory]:
    """Read a JSON array of trajectories (a single object is accepted too)."""
    data = load_json(path)
    items = data if isinstance(data, list) else [data]
    try:
        ts = [trajectory_from_dict(d) for d in items]
    except ParseError as e:
        raise ParseError(f"{path}: {e}") from e
    check_unique([t.id for t in ts], str(path))
    return ts


def write_trajectory(t: Trajectory, path) -> None:
    dump_json(trajectory_to_dict(t), path)


def write_collection(ts, path) -> None:
    dump_json([trajectory_to_dict(t) for t in ts], path)


def check_unique(ids, where: str = "collection") -> None:
    seen, dup = set(), []
    for i in ids:
        if i in seen and i not in dup:
            dup.append(i)
        seen.add(i)
    if dup:
        raise ParseError(f"{where}: duplicate trajectory ids: {', '.join(dup)}")


@dataclass
class IngestResult:
    """Validated trajectories grouped by prompt id, plus per-file problems."""

    collections: dict[str, list[Trajectory]] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)
    files_ok: int = 0

    def to_dict(self) -> dict:
        return {
            "collections": {k: [trajectory_to_dict(t) for t in v] for k, v in self.collections.items()},
            "diagnostics": list(self.diagnostics),
            "files_ok": self.files_ok,
        }


def ingest_external(directory, manifest: str | Path | None = None) -> IngestResult:
    """Load trajectories written by an external sampler.

    The manifest (default ``manifest.json`` inside ``directory``) maps each
    prompt id to a list of ``.traj.json`` files relative to the directory.
    Each file holds one trajectory or a collection.  Files that fail to
    parse or normalize are skipped with a diagnostic.  Duplicate ids within
    a prompt raise :class:`ParseError` naming them.
    """
    root = Path(directory)
    mpath = Path(manifest) if manifest is not None else root / "manifest.json"
    spec = load_json(mpath)
    if isinstance(spec, dict) and "prompts" in spec:
        spec = spec["prompts"]
    if not isinstance(spec, dict) or not all(
        isinstance(v, list) and all(isinstance(f, str) for f in v) for v in spec.values()
    ):
        raise ParseError(f"{mpath}: manifest must map prompt ids to lists of file names")
    result = IngestResult()
    for prompt, files in spec.items():
        ts: list[Trajectory] = []
        for name in files:
            path = root / name
            try:
                data = load_json(path)
                items = data if isinstance(data, list) else [data]
                loaded = [normalize(trajectory_from_dict(d)) for d in items]
            except (ParseError, DegenerateTrajectory, ValueError) as e:
                msg = str(e)
                result.diagnostics.append(msg if msg.startswith(str(path)) else f"{path}: {msg}")
                continue
            ts.extend(loaded)
            result.files_ok += 1
        check_unique([t.id for t in ts], f"prompt {prompt!r}")
        result.collections[prompt] = ts
    return result
