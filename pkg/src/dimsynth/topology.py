"""Kinematic graph of a manipulator: links, typed joints, connecting paths.

A topology is an undirected multigraph. Links are nodes, joints are edges
carrying a kind and an id. Joint ``(i, j)`` measures the motion of link
``j`` relative to link ``i``; a path that crosses it from ``j`` to ``i``
sees the negated contribution.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping


class TopologyError(ValueError):
    """Base class for invalid topology descriptions.

    ``where`` locates the offending entry in the raw description, e.g.
    ``("joints", 2, "between")``, so file parsers can point at a line.
    """

    def __init__(self, message: str, where: tuple = ()):
        super().__init__(message)
        self.where = where


class DisconnectedGraph(TopologyError):
    pass


class UnknownLink(TopologyError):
    pass


class InvalidActuationSelector(TopologyError):
    pass


class DuplicateJointId(TopologyError):
    pass


class JointKind(enum.Enum):
    REVOLUTE = "R"
    PRISMATIC = "P"
    CYLINDRICAL = "C"
    SPHERICAL = "S"

    @property
    def components(self) -> tuple[str, ...]:
        """Scalar velocity components in canonical order."""
        return _COMPONENTS[self]

    @property
    def arity(self) -> int:
        return len(_COMPONENTS[self])

    @property
    def has_axis(self) -> bool:
        return self is not JointKind.SPHERICAL

    @classmethod
    def parse(cls, text: str) -> "JointKind":
        key = str(text).strip().upper()
        for kind in cls:
            if key in (kind.value, kind.name):
                return kind
        raise ValueError(f"unknown joint kind {text!r}")


_COMPONENTS = {
    JointKind.REVOLUTE: ("theta",),
    JointKind.PRISMATIC: ("d",),
    JointKind.CYLINDRICAL: ("theta", "d"),
    JointKind.SPHERICAL: ("wx", "wy", "wz"),
}

# only revolute/prismatic rates may be driven
_ACTUATABLE = {"theta", "d"}


def natural_key(text: str) -> tuple:
    """Sort key that orders ``j2`` before ``j10``."""
    return tuple(int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", str(text)) if tok)


@dataclass(frozen=True)
class Joint:
    id: str
    kind: JointKind
    links: tuple[str, str]

    def other(self, link: str) -> str:
        a, b = self.links
        return b if link == a else a

    def direction_from(self, link: str) -> int:
        """+1 when crossing from ``links[0]`` to ``links[1]``, else -1."""
        return 1 if link == self.links[0] else -1


@dataclass(frozen=True)
class Velocity:
    """One scalar joint-rate variable, e.g. ``theta`` of joint ``13``."""
    joint: str
    component: str

    def __str__(self) -> str:
        return f"{self.component}_{self.joint}"


@dataclass(frozen=True)
class Path:
    links: tuple[str, ...]
    joints: tuple[str, ...]
    directions: tuple[int, ...]

    def __str__(self) -> str:
        parts = [self.links[0]]
        for jid, link in zip(self.joints, self.links[1:]):
            parts += [jid, link]
        return "-".join(parts)


@dataclass(frozen=True)
class SuperfluousAssembly:
    links: frozenset[str]
    spherical_joints: tuple[str, str]
    representative: str


@dataclass(frozen=True)
class Topology:
    name: str
    links: tuple[str, ...]
    joints: tuple[Joint, ...]
    base: str
    end_effector: str
    actuated: tuple[Velocity, ...]
    dof: int | None = None
    planar: bool = False
    _by_id: Mapping[str, Joint] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {j.id: j for j in self.joints})

    def joint(self, joint_id: str) -> Joint:
        return self._by_id[joint_id]

    @property
    def joint_ids(self) -> tuple[str, ...]:
        return tuple(j.id for j in self.joints)

    @property
    def sorted_joints(self) -> tuple[Joint, ...]:
        return tuple(sorted(self.joints, key=lambda j: natural_key(j.id)))

    def incident(self, link: str) -> list[Joint]:
        return [j for j in self.joints if link in j.links]

    @property
    def is_serial(self) -> bool:
        return len(enumerate_paths(self)) == 1 and not passive_velocity_inventory(self)[1]

    @property
    def all_prismatic(self) -> bool:
        return all(j.kind is JointKind.PRISMATIC for j in self.joints)


def _connected(links: Iterable[str], joints: Iterable[Joint]) -> bool:
    links = list(links)
    if not links:
        return False
    adj: dict[str, set[str]] = {l: set() for l in links}
    for j in joints:
        a, b = j.links
        adj[a].add(b)
        adj[b].add(a)
    seen = {links[0]}
    stack = [links[0]]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(links)


def build_topology(raw: Mapping) -> Topology:
    """Validate a plain mapping (as parsed from a topology file) into a Topology.

    Expected keys: ``name``, ``links``, ``joints`` (each with ``id``, ``kind``
    and ``between``), ``base``, ``end_effector`` and ``actuated`` (each with
    ``joint`` and ``component``). ``dof`` and ``planar`` are optional.
    """
    links = tuple(str(l) for l in raw.get("links", ()))
    if len(set(links)) != len(links):
        raise TopologyError("duplicate link ids", ("links",))
    known = set(links)

    joints: list[Joint] = []
    seen_ids: set[str] = set()
    for k, entry in enumerate(raw.get("joints", ())):
        for key in ("id", "kind", "between"):
            if key not in entry:
                raise TopologyError(f"joint entry is missing {key!r}", ("joints", k))
        jid = str(entry["id"])
        if jid in seen_ids:
            raise DuplicateJointId(f"joint id {jid!r} used twice", ("joints", k, "id"))
        seen_ids.add(jid)
        between = tuple(str(l) for l in entry["between"])
        if len(between) != 2:
            raise TopologyError(f"joint {jid!r} must connect exactly two links",
                                ("joints", k, "between"))
        for l in between:
            if l not in known:
                raise UnknownLink(f"joint {jid!r} refers to unknown link {l!r}",
                                  ("joints", k, "between"))
        if between[0] == between[1]:
            raise TopologyError(f"joint {jid!r} connects link {between[0]!r} to itself",
                                ("joints", k, "between"))
        try:
            kind = JointKind.parse(entry["kind"])
        except ValueError as exc:
            raise TopologyError(str(exc), ("joints", k, "kind")) from None
        joints.append(Joint(jid, kind, between))

    base = str(raw.get("base"))
    ee = str(raw.get("end_effector"))
    for role, l in (("base", base), ("end_effector", ee)):
        if l not in known:
            raise UnknownLink(f"{role} {l!r} is not a declared link", (role,))
    if base == ee:
        raise DisconnectedGraph("base and end_effector must be different links", ("end_effector",))
    if not joints or not _connected(links, joints):
        raise DisconnectedGraph("link graph is not connected", ("joints",))

    by_id = {j.id: j for j in joints}
    actuated: list[Velocity] = []
    for k, sel in enumerate(raw.get("actuated", ())):
        for key in ("joint", "component"):
            if key not in sel:
                raise TopologyError(f"actuated entry is missing {key!r}", ("actuated", k))
        jid = str(sel["joint"])
        comp = str(sel["component"])
        if jid not in by_id:
            raise InvalidActuationSelector(f"actuated joint {jid!r} does not exist",
                                           ("actuated", k, "joint"))
        kind = by_id[jid].kind
        if comp not in kind.components or comp not in _ACTUATABLE:
            raise InvalidActuationSelector(
                f"component {comp!r} cannot be actuated on {kind.name.lower()} joint {jid!r}",
                ("actuated", k, "component"))
        vel = Velocity(jid, comp)
        if vel in actuated:
            raise InvalidActuationSelector(f"{vel} actuated twice", ("actuated", k))
        actuated.append(vel)
    if not actuated:
        raise InvalidActuationSelector("at least one joint velocity must be actuated", ("actuated",))

    dof = raw.get("dof")
    return Topology(
        name=str(raw.get("name", "unnamed")),
        links=links,
        joints=tuple(joints),
        base=base,
        end_effector=ee,
        actuated=tuple(actuated),
        dof=None if dof is None else int(dof),
        planar=bool(raw.get("planar", False)),
    )


def simple_paths(t: Topology, source: str, target: str) -> list[Path]:
    """All simple paths between two links, ordered by their joint-id sequence."""
    found: list[Path] = []

    def walk(link, links, joints, dirs):
        if link == target:
            found.append(Path(tuple(links), tuple(joints), tuple(dirs)))
            return
        for j in t.incident(link):
            nxt = j.other(link)
            if nxt in links:
                continue
            links.append(nxt)
            joints.append(j.id)
            dirs.append(j.direction_from(link))
            walk(nxt, links, joints, dirs)
            links.pop()
            joints.pop()
            dirs.pop()

    walk(source, [source], [], [])
    found.sort(key=lambda p: tuple(natural_key(j) for j in p.joints))
    return found


def enumerate_paths(t: Topology) -> list[Path]:
    return simple_paths(t, t.base, t.end_effector)


def passive_velocity_inventory(t: Topology) -> tuple[list[Velocity], list[Velocity]]:
    """Split every scalar joint rate into (active, passive).

    Both lists follow joint-id order, then the kind's component order; the
    active list is therefore not necessarily in the order the file lists it.
    """
    active_set = set(t.actuated)
    active: list[Velocity] = []
    passive: list[Velocity] = []
    for j in t.sorted_joints:
        for comp in j.kind.components:
            v = Velocity(j.id, comp)
            (active if v in active_set else passive).append(v)
    return active, passive


def detect_superfluous(t: Topology) -> list[SuperfluousAssembly]:
    """Find link groups that can spin freely about the line through two spherical joints.

    A group qualifies when it is connected, holds neither the base nor the
    end-effector, and its only joints to the rest of the graph are one pair
    of spherical joints. Groups that strictly contain another qualifying group
    are dropped: each nested spin is its own superfluous freedom.
    """
    spherical = [j for j in t.sorted_joints if j.kind is JointKind.SPHERICAL]
    candidates: list[SuperfluousAssembly] = []
    for a in range(len(spherical)):
        for b in range(a + 1, len(spherical)):
            s1, s2 = spherical[a], spherical[b]
            rest = [j for j in t.joints if j.id not in (s1.id, s2.id)]
            for group in _components(t.links, rest):
                if t.base in group or t.end_effector in group:
                    continue
                # the group must hang on exactly these two joints
                boundary = {j.id for j in t.joints if len(group.intersection(j.links)) == 1}
                if boundary != {s1.id, s2.id}:
                    continue
                rep = next(l for l in s1.links if l in group)
                candidates.append(SuperfluousAssembly(group, (s1.id, s2.id), rep))
    return [c for c in candidates
            if not any(o.links < c.links for o in candidates)]


def _components(links: Iterable[str], joints: Iterable[Joint]) -> list[frozenset[str]]:
    parent = {l: l for l in links}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for j in joints:
        ra, rb = find(j.links[0]), find(j.links[1])
        if ra != rb:
            parent[ra] = rb
    groups: dict[str, set[str]] = {}
    for l in parent:
        groups.setdefault(find(l), set()).add(l)
    return [frozenset(g) for g in groups.values()]


def to_raw(t: Topology) -> dict:
    """Inverse of :func:`build_topology`."""
    raw = {
        "name": t.name,
        "links": list(t.links),
        "joints": [{"id": j.id, "kind": j.kind.value, "between": list(j.links)} for j in t.joints],
        "base": t.base,
        "end_effector": t.end_effector,
        "actuated": [{"joint": v.joint, "component": v.component} for v in t.actuated],
    }
    if t.dof is not None:
        raw["dof"] = t.dof
    if t.planar:
        raw["planar"] = True
    return raw
