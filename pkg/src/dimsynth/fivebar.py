"""Closed-form Jacobian of the planar five-link revolute parallel manipulator.

Link 1 is ground, links 2 and 5 are the driven cranks and link 4 carries
the end-effector at its midpoint. Angles are absolute. The chain is laid
out as

    P23 = O2 + l2 e(t2),  P34 = P23 + l3 e(t3),  P45 = P34 + l4 e(t4),
    O5  = P45 + l5 e(t5)

with ``e(t) = (cos t, sin t)``. The closed form was obtained by statics
(``tau = J^T F``), so it doubles as an oracle for the generic engine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .jacobian import Configuration, JointPlacement
from .topology import Topology, build_topology


class SingularConfiguration(ArithmeticError):
    pass


@dataclass(frozen=True)
class FiveLinkConfig:
    l2: float
    l3: float
    l4: float
    l5: float
    t2: float
    t3: float
    t4: float
    t5: float


def five_link_closed_form_jacobian(c: FiveLinkConfig, tol: float = 1e-12) -> np.ndarray:
    """3 x 2 map from (crank-2 rate, crank-5 rate) to (vx, vy, wz) of link 4's midpoint."""
    l2, l4, l5 = c.l2, c.l4, c.l5
    t2, t3, t4, t5 = c.t2, c.t3, c.t4, c.t5
    s34 = math.sin(t3 - t4)
    if abs(s34) < tol:
        raise SingularConfiguration(f"sin(t3 - t4) = {s34:.3e}")
    s23 = math.sin(t2 - t3)
    return np.array([
        [l2 * math.sin(t4) * s23 / (2 * s34),
         l5 * (math.cos(-t3 + t4 + t5) / 2 - math.cos(t3 - t4 + t5)
               + math.cos(t3 + t4 - t5) / 2) / (2 * s34)],
        [-l2 * s23 * math.cos(t4) / (2 * s34),
         l5 * (math.sin(-t3 + t4 + t5) / 2 - math.sin(t3 - t4 + t5)
               + math.sin(t3 + t4 - t5) / 2) / (2 * s34)],
        [l2 * s23 / (l4 * s34),
         -l5 * math.sin(t3 - t5) / (l4 * s34)],
    ])


def five_link_topology() -> Topology:
    return build_topology({
        "name": "planar-5R",
        "dof": 2,
        "planar": True,
        "links": ["1", "2", "3", "4", "5"],
        "joints": [
            {"id": "12", "kind": "R", "between": ["1", "2"]},
            {"id": "15", "kind": "R", "between": ["1", "5"]},
            {"id": "23", "kind": "R", "between": ["2", "3"]},
            {"id": "34", "kind": "R", "between": ["3", "4"]},
            {"id": "45", "kind": "R", "between": ["4", "5"]},
        ],
        "base": "1",
        "end_effector": "4",
        "actuated": [{"joint": "12", "component": "theta"},
                     {"joint": "15", "component": "theta"}],
    })


def five_link_configuration(c: FiveLinkConfig, origin=(0.0, 0.0)) -> Configuration:
    """Planar embedding of ``c``: every axis along +z, every joint at z = 0."""
    e = lambda t: np.array([math.cos(t), math.sin(t)])
    o2 = np.asarray(origin, dtype=float)
    p23 = o2 + c.l2 * e(c.t2)
    p34 = p23 + c.l3 * e(c.t3)
    p45 = p34 + c.l4 * e(c.t4)
    o5 = p45 + c.l5 * e(c.t5)
    z = np.array([0.0, 0.0, 1.0])
    lift = lambda p: np.r_[p, 0.0]
    placements = {jid: JointPlacement.from_axis(lift(p), z)
                  for jid, p in (("12", o2), ("15", o5), ("23", p23), ("34", p34), ("45", p45))}
    return Configuration(placements, lift((p34 + p45) / 2))
