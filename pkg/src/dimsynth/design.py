"""Packing of joint placements into the flat vector the optimizer works on.

Per joint (in joint-id order): position x, y, z, then ``beta`` and ``phi``
for joints that carry an axis. Spherical joints contribute a position only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .jacobian import Configuration, JointPlacement
from .topology import Topology

CUBE = (0.0, 10.0)


@dataclass(frozen=True)
class DesignLayout:
    topology: Topology
    joint_ids: tuple[str, ...]
    names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray
    pos_index: np.ndarray     # (n_joints, 3) indices into x
    beta_index: np.ndarray    # (n_joints,) index or -1
    phi_index: np.ndarray

    @classmethod
    def for_topology(cls, t: Topology, cube: tuple[float, float] = CUBE) -> "DesignLayout":
        names, lower, upper = [], [], []
        joint_ids = tuple(j.id for j in t.sorted_joints)
        pos_index = np.zeros((len(joint_ids), 3), dtype=int)
        beta_index = -np.ones(len(joint_ids), dtype=int)
        phi_index = -np.ones(len(joint_ids), dtype=int)
        for k, j in enumerate(t.sorted_joints):
            for c, axis in enumerate("xyz"):
                pos_index[k, c] = len(names)
                names.append(f"r{j.id}{axis}")
                lower.append(cube[0])
                upper.append(cube[1])
            if j.kind.has_axis:
                beta_index[k] = len(names)
                names.append(f"beta{j.id}")
                lower.append(0.0)
                upper.append(math.pi)
                phi_index[k] = len(names)
                names.append(f"phi{j.id}")
                lower.append(0.0)
                upper.append(2 * math.pi)
        return cls(t, joint_ids, tuple(names), np.array(lower), np.array(upper),
                   pos_index, beta_index, phi_index)

    @property
    def size(self) -> int:
        return len(self.names)

    def arrays(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Joint positions and unit axes (zeros for spherical joints)."""
        x = np.asarray(x, dtype=float)
        positions = x[self.pos_index]
        has = self.beta_index >= 0
        beta = np.where(has, x[self.beta_index], 0.0)
        phi = np.where(has, x[self.phi_index], 0.0)
        sb = np.sin(beta)
        axes = np.column_stack([sb * np.cos(phi), sb * np.sin(phi), np.cos(beta)])
        axes[~has] = 0.0
        return positions, axes

    def unpack(self, x, task_point) -> Configuration:
        x = np.asarray(x, dtype=float)
        placements = {}
        for k, jid in enumerate(self.joint_ids):
            b, p = self.beta_index[k], self.phi_index[k]
            placements[jid] = JointPlacement(
                x[self.pos_index[k]].copy(),
                None if b < 0 else float(x[b]),
                None if p < 0 else float(x[p]))
        return Configuration(placements, np.asarray(task_point, dtype=float))

    def pack(self, cfg: Configuration) -> np.ndarray:
        x = np.empty(self.size)
        for k, jid in enumerate(self.joint_ids):
            pl = cfg.placements[jid]
            x[self.pos_index[k]] = pl.position
            if self.beta_index[k] >= 0:
                x[self.beta_index[k]] = pl.beta
                x[self.phi_index[k]] = pl.phi
        return x

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform draw strictly inside the bounds."""
        width = self.upper - self.lower
        x = self.lower + rng.random(self.size) * width
        margin = 1e-9 * width
        return np.clip(x, self.lower + margin, self.upper - margin)
