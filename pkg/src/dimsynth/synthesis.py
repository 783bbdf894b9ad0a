"""Catalog runs, prescription ranking and link dimensions."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .design import DesignLayout
from .interior_point import SynthesisOptions
from .jacobian import Configuration, JacobianError
from .multistart import TASK_POINT, ExhaustedRestarts, SynthesisResult, multi_start_synthesize
from .topology import Topology, natural_key

log = logging.getLogger(__name__)


class EmptyCatalog(ValueError):
    pass


@dataclass(frozen=True)
class SynthesisFailure:
    name: str
    reason: str


@dataclass(frozen=True)
class PrescriptionRow:
    s_no: int
    result: SynthesisResult
    i_kappa: int


@dataclass(frozen=True)
class Prescription:
    rows: tuple[PrescriptionRow, ...]
    failures: tuple[SynthesisFailure, ...] = ()

    def __len__(self):
        return len(self.rows)

    @property
    def names(self) -> list[str]:
        return [r.result.name for r in self.rows]


def run_catalog(catalog: Sequence[Topology], task_point=TASK_POINT,
                opts: SynthesisOptions = SynthesisOptions()) -> list[SynthesisResult | SynthesisFailure]:
    """Synthesize every topology; failures are recorded instead of raised."""
    if not catalog:
        raise EmptyCatalog("catalog has no topologies")
    out: list[SynthesisResult | SynthesisFailure] = []
    for t in catalog:
        try:
            out.append(multi_start_synthesize(t, task_point, opts))
        except (ExhaustedRestarts, JacobianError) as exc:
            log.warning("%s: %s", t.name, exc)
            out.append(SynthesisFailure(t.name, str(exc)))
    return out


def _name_key(r) -> tuple:
    return natural_key(r.name)


def rank_prescription(results: Sequence[SynthesisResult | SynthesisFailure]) -> Prescription:
    """Order by scaled manipulability (descending); i_kappa ranks by ascending kappa.

    Ties in either ordering fall back to the topology name so the output
    does not depend on input order.
    """
    ok = [r for r in results if isinstance(r, SynthesisResult)]
    failed = tuple(sorted((r for r in results if isinstance(r, SynthesisFailure)), key=_name_key))
    if not ok and not failed:
        raise EmptyCatalog("nothing to rank")
    mu_bar = lambda r: -np.inf if np.isnan(r.mu_bar) else r.mu_bar
    by_mu = sorted(ok, key=lambda r: (-mu_bar(r), _name_key(r)))
    by_kappa = sorted(ok, key=lambda r: (r.kappa, _name_key(r)))
    i_kappa = {r.name: k + 1 for k, r in enumerate(by_kappa)}
    rows = tuple(PrescriptionRow(k + 1, r, i_kappa[r.name]) for k, r in enumerate(by_mu))
    return Prescription(rows, failed)


def derive_link_lengths(t: Topology, x, task_point=TASK_POINT) -> list[tuple[str, str, float]]:
    """Distances between the joints on each link, plus joint-to-task-point
    distances on the end-effector link.

    ``x`` is a design vector or a :class:`Configuration`. Segments are
    labelled by joint ids, e.g. ``"13-14"`` or ``"24-a"``.
    """
    if isinstance(x, Configuration):
        cfg = x
    else:
        cfg = DesignLayout.for_topology(t).unpack(x, task_point)
    a = np.asarray(cfg.task_point, dtype=float)
    out = []
    for link in sorted(t.links, key=natural_key):
        ids = sorted((j.id for j in t.incident(link)), key=natural_key)
        for i, j in itertools.combinations(ids, 2):
            d = np.linalg.norm(cfg.placements[i].position - cfg.placements[j].position)
            out.append((link, f"{i}-{j}", float(d)))
        if link == t.end_effector:
            for i in ids:
                out.append((link, f"{i}-a", float(np.linalg.norm(cfg.placements[i].position - a))))
    return out
