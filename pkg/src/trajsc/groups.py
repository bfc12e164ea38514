"""The six transformation groups and their subgroup hierarchy."""
from __future__ import annotations

import enum


class WarpGroup(enum.Enum):
    RIGID = "rigid"
    RIGID_REF = "rigid_ref"
    SIM = "sim"
    SIM_REF = "sim_ref"
    SIM_ANI = "sim_ani"
    AFFINE = "affine"

    @property
    def code(self) -> int:
        """Position in the linearized hierarchy (also the kernel group code)."""
        return _ORDER.index(self)

    @property
    def dof(self) -> int:
        return _DOF[self]

    @property
    def tag(self) -> str:
        return _TAGS[self]

    @property
    def has_reflections(self) -> bool:
        return self in (WarpGroup.RIGID_REF, WarpGroup.SIM_REF, WarpGroup.SIM_ANI, WarpGroup.AFFINE)

    @classmethod
    def parse(cls, name: str | WarpGroup) -> WarpGroup:
        """Accept 'SimRef', 'sim_ref', 'sim-ref' or 'simref'."""
        if isinstance(name, WarpGroup):
            return name
        key = name.strip().lower().replace("-", "").replace("_", "")
        try:
            return _BY_KEY[key]
        except KeyError:
            raise ValueError(f"unknown transformation group {name!r}") from None

    def __lt__(self, other: WarpGroup) -> bool:
        return self.code < other.code

    def __str__(self) -> str:
        return self.tag


_ORDER = [
    WarpGroup.RIGID,
    WarpGroup.RIGID_REF,
    WarpGroup.SIM,
    WarpGroup.SIM_REF,
    WarpGroup.SIM_ANI,
    WarpGroup.AFFINE,
]
_DOF = {
    WarpGroup.RIGID: 3,
    WarpGroup.RIGID_REF: 3,
    WarpGroup.SIM: 4,
    WarpGroup.SIM_REF: 4,
    WarpGroup.SIM_ANI: 5,
    WarpGroup.AFFINE: 6,
}
_TAGS = {
    WarpGroup.RIGID: "Rigid",
    WarpGroup.RIGID_REF: "RigidRef",
    WarpGroup.SIM: "Sim",
    WarpGroup.SIM_REF: "SimRef",
    WarpGroup.SIM_ANI: "SimAni",
    WarpGroup.AFFINE: "Affine",
}
_BY_KEY = {g.value.replace("_", ""): g for g in WarpGroup}

# Direct subgroup edges of the hierarchy DAG (child, parent).
_EDGES = [
    (WarpGroup.RIGID, WarpGroup.RIGID_REF),
    (WarpGroup.RIGID_REF, WarpGroup.SIM_REF),
    (WarpGroup.RIGID, WarpGroup.SIM),
    (WarpGroup.SIM, WarpGroup.SIM_REF),
    (WarpGroup.SIM, WarpGroup.SIM_ANI),
    (WarpGroup.SIM_ANI, WarpGroup.AFFINE),
    (WarpGroup.SIM_REF, WarpGroup.AFFINE),
]


def _closure() -> set[tuple[WarpGroup, WarpGroup]]:
    rel = {(g, g) for g in WarpGroup} | set(_EDGES)
    changed = True
    while changed:
        changed = False
        for a, b in list(rel):
            for c, d in list(rel):
                if b == c and (a, d) not in rel:
                    rel.add((a, d))
                    changed = True
    return rel


_SUBGROUP = _closure()

#: Ascending traversal order, most restrictive first.
HIERARCHY: tuple[WarpGroup, ...] = tuple(_ORDER)


def is_subgroup(child: WarpGroup, parent: WarpGroup) -> bool:
    """True when ``child`` is contained in ``parent`` (reflexive)."""
    return (child, parent) in _SUBGROUP


def comparable_pairs() -> list[tuple[WarpGroup, WarpGroup]]:
    """All (G, H) with G a proper subgroup of H."""
    return [(g, h) for g in HIERARCHY for h in HIERARCHY if g != h and is_subgroup(g, h)]


def compare(chosen: WarpGroup, truth: WarpGroup) -> str:
    """Classify a chosen group against the true one.

    Returns ``"match"``, ``"more_restrictive"``, ``"less_restrictive"`` or
    ``"incomparable"``.
    """
    if chosen == truth:
        return "match"
    if is_subgroup(chosen, truth):
        return "more_restrictive"
    if is_subgroup(truth, chosen):
        return "less_restrictive"
    return "incomparable"
