"""Manipulability, characteristic length and the scaled-Jacobian indices."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .jacobian import Configuration, assemble_system, compile_system, reduced_jacobian
from .topology import JointKind, Topology


class AllPrismatic(ValueError):
    """No joint contributes an effective distance; scaling is not needed."""


def manipulability(J, n_j: int | None = None, n_t: int | None = None) -> float:
    J = np.atleast_2d(np.asarray(J, dtype=float))
    n_t = J.shape[0] if n_t is None else n_t
    n_j = J.shape[1] if n_j is None else n_j
    gram = J @ J.T if n_j > n_t else J.T @ J
    if gram.size == 0:
        return 0.0
    return math.sqrt(max(float(np.linalg.det(gram)), 0.0))


def effective_distances(t: Topology, cfg: Configuration) -> list[float]:
    a = np.asarray(cfg.task_point, dtype=float)
    out = []
    for j in t.sorted_joints:
        p = cfg.placements[j.id]
        if j.kind is JointKind.PRISMATIC:
            continue
        if j.kind is JointKind.SPHERICAL:
            out.append(float(np.linalg.norm(p.position - a)))
        else:
            out.append(float(np.linalg.norm(np.cross(p.position - a, p.axis))))
    return out


def characteristic_length(t: Topology, cfg: Configuration) -> float:
    d = effective_distances(t, cfg)
    if not d:
        raise AllPrismatic(f"{t.name}: every joint is prismatic")
    return float(np.mean(d))


def scaling_diagonal(length: float | None, n_linear: int = 3, n_rows: int = 6) -> np.ndarray:
    diag = np.ones(n_rows)
    if length is not None:
        diag[:n_linear] = 1.0 / length
    return diag


@dataclass(frozen=True)
class MetricReport:
    mu: float
    mu_bar: float
    kappa: float
    length: float | None
    sigma: np.ndarray
    warnings: tuple[str, ...] = field(default=())

    @property
    def sigma_product(self) -> float:
        """Product of the scaled Jacobian's singular values."""
        return float(np.prod(self.sigma))


def condition_number(sigma) -> float:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.size == 0 or sigma[-1] <= np.finfo(float).eps * sigma[0] * max(sigma.size, 1):
        return math.inf
    return float(sigma[0] / sigma[-1])


def scaled_metrics(J, length: float | None, *, n_linear: int = 3) -> MetricReport:
    """Indices of ``J`` after scaling its first ``n_linear`` rows by ``1/length``.

    ``length=None`` means no scaling (all-prismatic manipulators). The
    scaled manipulability is ``mu * det(S)``, the manipulability weighted
    by the volume change of the unit conversion.
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    mu = manipulability(J)
    warnings: list[str] = []
    if length is not None and not length > 0:
        warnings.append("degenerate characteristic length; kappa is unscaled")
        sigma = np.linalg.svd(J, compute_uv=False)
        return MetricReport(mu, math.nan, condition_number(sigma), length, sigma, tuple(warnings))
    diag = scaling_diagonal(length, n_linear, J.shape[0])
    sigma = np.linalg.svd(diag[:, None] * J, compute_uv=False)
    kappa = condition_number(sigma)
    if math.isinf(kappa):
        warnings.append("rank deficient")
    return MetricReport(mu, mu * float(np.prod(diag)), kappa, length, sigma, tuple(warnings))


def evaluate(t: Topology, cfg: Configuration) -> MetricReport:
    """Metrics of the active-joint Jacobian of ``t`` at ``cfg``."""
    jac, _ = reduced_jacobian(assemble_system(t, cfg))
    try:
        length = characteristic_length(t, cfg)
    except AllPrismatic:
        length = None
    vs = compile_system(t)
    return scaled_metrics(jac, length, n_linear=len(vs.lin_rows))
