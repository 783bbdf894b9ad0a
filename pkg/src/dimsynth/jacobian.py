"""Velocity-transmission system of a manipulator at a numeric configuration.

Every connecting path from the base to the end-effector gives one
description of the end-effector twist as a linear combination of joint
rates. The first path is taken as the twist; the differences between the
other paths and the first (plus one row per superfluous spin) form the
loop-closure system ``A1 qa + A2 qp = 0`` used to eliminate the passive
rates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from .topology import (
    JointKind,
    Topology,
    Velocity,
    detect_superfluous,
    enumerate_paths,
    passive_velocity_inventory,
    simple_paths,
)


class JacobianError(ArithmeticError):
    pass


class NonSquareA2(JacobianError):
    """Loop-closure rows do not match the number of passive rates."""


class SingularA2(JacobianError):
    """The passive block is singular: a type-2 (parallel) singularity."""


SINGULAR_RTOL = 1e-12
SPATIAL_ROWS = (0, 1, 2, 3, 4, 5)
PLANAR_ROWS = (0, 1, 5)


def axis_from_angles(beta: float, phi: float) -> np.ndarray:
    sb = math.sin(beta)
    return np.array([sb * math.cos(phi), sb * math.sin(phi), math.cos(beta)])


def angles_from_axis(n) -> tuple[float, float]:
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    beta = math.acos(max(-1.0, min(1.0, n[2])))
    phi = math.atan2(n[1], n[0]) % (2 * math.pi)
    return beta, phi


@dataclass(frozen=True)
class JointPlacement:
    position: np.ndarray
    beta: float | None = None
    phi: float | None = None

    @classmethod
    def from_axis(cls, position, axis) -> "JointPlacement":
        beta, phi = angles_from_axis(axis)
        return cls(np.asarray(position, dtype=float), beta, phi)

    @property
    def axis(self) -> np.ndarray | None:
        if self.beta is None:
            return None
        return axis_from_angles(self.beta, self.phi)


@dataclass(frozen=True)
class Configuration:
    placements: Mapping[str, JointPlacement]
    task_point: np.ndarray

    def translated(self, offset) -> "Configuration":
        offset = np.asarray(offset, dtype=float)
        moved = {k: JointPlacement(p.position + offset, p.beta, p.phi)
                 for k, p in self.placements.items()}
        return Configuration(moved, self.task_point + offset)


@dataclass(frozen=True)
class JacobianParts:
    J1: np.ndarray
    J2: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    active: tuple[Velocity, ...]
    passive: tuple[Velocity, ...]

    @property
    def serial(self) -> bool:
        return self.A2.shape[0] == 0 and not self.passive


def joint_contribution(kind: JointKind, direction: int, position, axis, task_point):
    """Twist columns (linear over angular, 6 x arity) of one joint's rates.

    ``axis`` is ignored for spherical joints, whose three rates are the
    world-frame components of the relative angular velocity.
    """
    r = np.asarray(position, dtype=float)
    a = np.asarray(task_point, dtype=float)
    lever = a - r
    cols = []
    for comp in kind.components:
        if comp == "d":
            u = np.asarray(axis, dtype=float)
            cols.append(np.r_[u, 0.0, 0.0, 0.0])
        else:
            u = np.asarray(axis, dtype=float) if comp == "theta" else np.eye(3)["xyz".index(comp[1])]
            cols.append(np.r_[np.cross(u, lever), u])
    return direction * np.column_stack(cols)


class VelocitySystem:
    """Topology compiled into index tables so assembly is a few array ops.

    ``assemble`` takes joint positions and axes as ``(n_joints, 3)`` arrays
    ordered like ``joint_ids``; rows of the axis array for spherical joints
    are ignored.
    """

    def __init__(self, topology: Topology):
        self.topology = topology
        t = topology
        self.joint_ids = tuple(j.id for j in t.sorted_joints)
        jindex = {jid: k for k, jid in enumerate(self.joint_ids)}
        active, passive = passive_velocity_inventory(t)
        self.active = tuple(active)
        self.passive = tuple(passive)
        variables = self.active + self.passive
        self.n_active = len(active)
        nv = len(variables)

        self.var_joint = np.array([jindex[v.joint] for v in variables], dtype=int)
        self.var_rot = np.array([v.component != "d" for v in variables], dtype=float)
        self.var_trans = np.array([v.component == "d" for v in variables], dtype=float)
        # spherical components carry a fixed world axis
        self.var_fixed_axis = np.zeros((nv, 3))
        self.var_uses_axis = np.ones(nv, dtype=bool)
        for k, v in enumerate(variables):
            if v.component in ("wx", "wy", "wz"):
                self.var_fixed_axis[k, "xyz".index(v.component[1])] = 1.0
                self.var_uses_axis[k] = False

        self.paths = enumerate_paths(t)
        self.path_masks = np.array([self._mask(p, variables) for p in self.paths])

        self.superfluous = detect_superfluous(t)
        self.sup_masks = []
        self.sup_pairs = []
        for sa in self.superfluous:
            route = simple_paths(t, t.base, sa.representative)[0]
            self.sup_masks.append(self._mask(route, variables))
            self.sup_pairs.append((jindex[sa.spherical_joints[0]], jindex[sa.spherical_joints[1]]))
        self.sup_masks = np.array(self.sup_masks).reshape(len(self.superfluous), nv)

        self.rows = np.array(PLANAR_ROWS if t.planar else SPATIAL_ROWS)
        n_lin = 2 if t.planar else 3
        self.lin_rows = np.arange(n_lin)
        self.ang_rows = np.arange(n_lin, len(self.rows))
        self.n_loop_rows = len(self.rows) * (len(self.paths) - 1) + len(self.superfluous)

    @staticmethod
    def _mask(path, variables):
        sign = dict(zip(path.joints, path.directions))
        return np.array([sign.get(v.joint, 0) for v in variables], dtype=float)

    @property
    def square(self) -> bool:
        return self.n_loop_rows == len(self.passive)

    def columns(self, positions, axes, task_point) -> np.ndarray:
        """6 x n_vars twist columns of every rate, before path signs."""
        u = np.where(self.var_uses_axis[:, None], axes[self.var_joint], self.var_fixed_axis)
        lever = np.asarray(task_point, dtype=float) - positions[self.var_joint]
        lin = self.var_rot[:, None] * np.cross(u, lever) + self.var_trans[:, None] * u
        ang = self.var_rot[:, None] * u
        return np.vstack([lin.T, ang.T])

    def assemble(self, positions, axes, task_point, *, superfluous_fix: bool = True) -> JacobianParts:
        positions = np.asarray(positions, dtype=float)
        axes = np.asarray(axes, dtype=float)
        cols = self.columns(positions, axes, task_point)[self.rows]
        per_path = cols[None, :, :] * self.path_masks[:, None, :]
        first = per_path[0]
        diffs = per_path[1:] - first[None]
        lin = diffs[:, self.lin_rows, :].reshape(-1, cols.shape[1])
        ang = diffs[:, self.ang_rows, :].reshape(-1, cols.shape[1])
        blocks = [lin, ang]
        if superfluous_fix and len(self.superfluous):
            full = self.columns(positions, axes, task_point)
            omega = full[3:6][None, :, :] * self.sup_masks[:, None, :]
            for k, (i, j) in enumerate(self.sup_pairs):
                blocks.append((positions[i] - positions[j]) @ omega[k][None, :])
        A = np.vstack(blocks)
        na = self.n_active
        if A.shape[0] != len(self.passive):
            raise NonSquareA2(
                f"{self.topology.name}: {A.shape[0]} loop-closure rows for "
                f"{len(self.passive)} passive rates")
        return JacobianParts(first[:, :na], first[:, na:], A[:, :na], A[:, na:],
                             self.active, self.passive)

    def arrays(self, cfg: Configuration) -> tuple[np.ndarray, np.ndarray]:
        positions = np.array([cfg.placements[j].position for j in self.joint_ids], dtype=float)
        axes = np.array([cfg.placements[j].axis if cfg.placements[j].beta is not None
                         else np.zeros(3) for j in self.joint_ids])
        return positions, axes


@lru_cache(maxsize=128)
def compile_system(t: Topology) -> VelocitySystem:
    return VelocitySystem(t)


def assemble_system(t: Topology, cfg: Configuration, *, superfluous_fix: bool = True) -> JacobianParts:
    vs = compile_system(t)
    positions, axes = vs.arrays(cfg)
    return vs.assemble(positions, axes, cfg.task_point, superfluous_fix=superfluous_fix)


def is_singular(A2: np.ndarray, det: float) -> bool:
    n = A2.shape[0]
    if n == 0:
        return False
    if not np.isfinite(det) or not np.all(np.isfinite(A2)):
        return True
    return abs(det) <= SINGULAR_RTOL * np.linalg.norm(A2, 2) ** n


def reduced_jacobian(parts: JacobianParts) -> tuple[np.ndarray, float]:
    """``J1 - J2 A2^-1 A1`` and ``det(A2)`` (1.0 for serial chains)."""
    if parts.A2.shape[0] != parts.A2.shape[1]:
        raise NonSquareA2(f"A2 is {parts.A2.shape}")
    if parts.A2.size == 0:
        return parts.J1.copy(), 1.0
    det = float(np.linalg.det(parts.A2))
    if is_singular(parts.A2, det):
        raise SingularA2(f"det(A2) = {det:.3e}: type-2 singularity")
    return parts.J1 - parts.J2 @ np.linalg.solve(parts.A2, parts.A1), det


def adjugate(M: np.ndarray) -> np.ndarray:
    """Classical adjoint via cofactors; well defined when M is singular."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    if n == 1:
        return np.ones((1, 1))
    idx = np.arange(n)
    keep = np.array([idx[idx != k] for k in range(n)])  # (n, n-1)
    minors = M[keep[:, None, :, None], keep[None, :, None, :]]  # (i, j, n-1, n-1)
    dets = np.linalg.det(minors)
    sign = (-1.0) ** (idx[:, None] + idx[None, :])
    return (sign * dets).T


def type2_matrices(parts: JacobianParts):
    """``(A~, B~)`` with ``A~ Xdot + B~ qa = 0``; None for serial chains."""
    if parts.serial:
        return None
    det = float(np.linalg.det(parts.A2))
    m = parts.J1.shape[0]
    A_t = det * np.eye(m)
    B_t = parts.J2 @ adjugate(parts.A2) @ parts.A1 - det * parts.J1
    return A_t, B_t
