"""Synthesis objectives, negated for minimization.

``f1`` is the manipulability of the active-joint Jacobian. ``f2`` multiplies
the determinants of the two type-2 singularity matrices so that it stays
finite (and vanishes) where ``A2`` is singular.
"""
from __future__ import annotations

import math

import numpy as np

from .design import DesignLayout
from .jacobian import (
    SingularA2,
    adjugate,
    compile_system,
    is_singular,
)
from .metrics import manipulability
from .topology import Topology


class SerialTopology(ValueError):
    """f2 is undefined without a passive block."""


class Evaluator:
    """Objective evaluation for one topology and task point on raw design vectors."""

    def __init__(self, t: Topology, task_point, layout: DesignLayout | None = None):
        self.topology = t
        self.task_point = np.asarray(task_point, dtype=float)
        self.layout = layout or DesignLayout.for_topology(t)
        self.system = compile_system(t)
        if not self.system.square:
            # surface the mismatch once, not on every evaluation
            positions, axes = self.layout.arrays((self.layout.lower + self.layout.upper) / 2)
            self.system.assemble(positions, axes, self.task_point)

    @property
    def serial(self) -> bool:
        return not self.system.passive and len(self.system.paths) == 1

    def parts(self, x):
        positions, axes = self.layout.arrays(x)
        return self.system.assemble(positions, axes, self.task_point)

    def jacobian(self, x):
        """(J~, det A2); raises SingularA2."""
        p = self.parts(x)
        if p.A2.size == 0:
            return p.J1, 1.0
        det = float(np.linalg.det(p.A2))
        if is_singular(p.A2, det):
            raise SingularA2(f"det(A2) = {det:.3e}")
        return p.J1 - p.J2 @ np.linalg.solve(p.A2, p.A1), det

    def f1(self, x) -> float:
        try:
            jac, _ = self.jacobian(x)
        except SingularA2:
            return math.inf
        return -manipulability(jac)

    def type2(self, x):
        p = self.parts(x)
        det = float(np.linalg.det(p.A2))
        B = p.J2 @ adjugate(p.A2) @ p.A1 - det * p.J1
        return det, B

    def f2(self, x) -> float:
        v = self.log_f2_neg(x)
        if math.isinf(v):
            return 0.0
        return -math.exp(min(-v, 709.0))

    def log_f2_neg(self, x) -> float:
        """``-log f2``; +inf where f2 vanishes."""
        if self.serial:
            raise SerialTopology(f"{self.topology.name} has no passive joints")
        det, B = self.type2(x)
        if det == 0.0:
            return math.inf
        sign, logdet = np.linalg.slogdet(B.T @ B)
        if sign <= 0:
            return math.inf
        m = B.shape[0]
        return -(m * math.log(abs(det)) + 0.5 * logdet)


def objective_f1(t: Topology, x, task_point) -> float:
    return Evaluator(t, task_point).f1(x)


def objective_f2(t: Topology, x, task_point) -> float:
    ev = Evaluator(t, task_point)
    if ev.serial:
        raise SerialTopology(f"{t.name} has no passive joints")
    det, B = ev.type2(x)
    m = B.shape[0]
    A_gram = det ** (2 * m)
    return -math.sqrt(A_gram * max(float(np.linalg.det(B.T @ B)), 0.0))
