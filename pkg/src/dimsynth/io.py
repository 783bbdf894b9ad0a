"""Topology, catalog and configuration files; result serialization.

Input files are YAML. Parse problems are reported as :class:`ParseError`
with ``file:line`` prefixes, taken from the YAML node marks.
"""
from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

from .design import DesignLayout
from .jacobian import Configuration, JointPlacement
from .multistart import TASK_POINT, SynthesisResult
from .synthesis import Prescription, SynthesisFailure
from .topology import Topology, TopologyError, build_topology, to_raw

CSV_HEADER = ("S.No.", "Name", "mu_bar", "kappa", "i_kappa", "mu", "f")


class ParseError(ValueError):
    def __init__(self, source: str, line: int | None, message: str):
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")
        self.source = source
        self.line = line


class DimensionMismatch(ValueError):
    pass


class _Node(dict):
    """dict that remembers the 1-based line of itself and of each key."""
    line: int | None = None
    key_lines: dict


class _List(list):
    line: int | None = None


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _Node()
    out.line = node.start_mark.line + 1
    out.key_lines = {}
    for k_node, v_node in node.value:
        key = loader.construct_object(k_node, deep=True)
        out[key] = loader.construct_object(v_node, deep=True)
        out.key_lines[key] = k_node.start_mark.line + 1
    return out


def _construct_sequence(loader, node):
    out = _List(loader.construct_object(n, deep=True) for n in node.value)
    out.line = node.start_mark.line + 1
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_sequence)


def _line_of(doc, where: Iterable) -> int | None:
    """Deepest known line along a key/index path into a parsed document."""
    node, line = doc, getattr(doc, "line", None)
    for step in where:
        if isinstance(node, _Node) and step in node:
            line = node.key_lines.get(step, line)
            node = node[step]
        elif isinstance(node, list) and isinstance(step, int) and step < len(node):
            node = node[step]
        else:
            break
        line = getattr(node, "line", line)
    return line


def data_path(*parts: str) -> Path:
    """Location of a file shipped in the package data directory."""
    return Path(str(resources.files("dimsynth").joinpath("data", *parts)))


def _resolve(spec: str | Path, folder: str) -> Path:
    p = Path(spec)
    if p.exists():
        return p
    bundled = data_path(folder, f"{spec}.yaml")
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"{spec}: no such file or bundled {folder[:-1]}")


def load_yaml(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(str(path), None, exc.strerror or str(exc)) from None
    return parse_yaml(text, str(path))


def parse_yaml(text: str, source: str = "<string>") -> Any:
    try:
        return yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ParseError(source, line, exc.problem or str(exc)) from None


def topology_from_document(doc, source: str = "<string>") -> Topology:
    if not isinstance(doc, dict):
        raise ParseError(source, getattr(doc, "line", 1), "a topology must be a mapping")
    for key in ("name", "links", "joints", "base", "end_effector", "actuated"):
        if key not in doc:
            raise ParseError(source, getattr(doc, "line", 1), f"missing field {key!r}")
    for key in ("links", "joints", "actuated"):
        if not isinstance(doc[key], list):
            raise ParseError(source, _line_of(doc, [key]), f"{key!r} must be a list")
    for key in ("joints", "actuated"):
        for k, entry in enumerate(doc[key]):
            if not isinstance(entry, dict):
                raise ParseError(source, _line_of(doc, [key, k]), f"{key}[{k}] must be a mapping")
    try:
        return build_topology(doc)
    except TopologyError as exc:
        raise ParseError(source, _line_of(doc, exc.where), str(exc)) from None


def load_topology(spec: str | Path) -> Topology:
    """Topology from a file path or the name of a bundled topology."""
    path = _resolve(spec, "topologies")
    return topology_from_document(load_yaml(path), str(path))


def dump_topology(t: Topology) -> str:
    return yaml.safe_dump(to_raw(t), sort_keys=False, default_flow_style=None)


def _vector(doc, key, source, n=3) -> np.ndarray:
    value = doc[key]
    line = _line_of(doc, [key])
    if not isinstance(value, list) or len(value) != n:
        raise ParseError(source, line, f"{key!r} must be a list of {n} numbers")
    try:
        out = np.array([float(v) for v in value])
    except (TypeError, ValueError):
        raise ParseError(source, line, f"{key!r} must contain numbers") from None
    if not np.all(np.isfinite(out)):
        raise ParseError(source, line, f"{key!r} must be finite")
    return out


def load_catalog(spec: str | Path) -> tuple[str, np.ndarray, list[Topology]]:
    """(name, task point, topologies). Entries are file paths relative to
    the catalog, bundled topology names, or inline topology mappings."""
    path = _resolve(spec, "catalogs")
    doc = load_yaml(path)
    source = str(path)
    if not isinstance(doc, dict) or "topologies" not in doc:
        raise ParseError(source, getattr(doc, "line", 1), "a catalog needs a 'topologies' list")
    entries = doc["topologies"]
    if not isinstance(entries, list):
        raise ParseError(source, _line_of(doc, ["topologies"]), "'topologies' must be a list")
    task_point = _vector(doc, "task_point", source) if "task_point" in doc else np.array(TASK_POINT)
    out = []
    for k, entry in enumerate(entries):
        if isinstance(entry, dict):
            out.append(topology_from_document(entry, source))
            continue
        rel = path.parent / str(entry)
        try:
            out.append(load_topology(rel if rel.exists() else str(entry)))
        except FileNotFoundError as exc:
            raise ParseError(source, _line_of(doc, ["topologies", k]), str(exc)) from None
    return str(doc.get("name", path.stem)), task_point, out


def configuration_from_document(doc, t: Topology, source: str = "<string>",
                                task_point=None) -> Configuration:
    """Joint placements keyed by joint id, with ``position`` and either
    ``axis`` or ``beta``/``phi`` (``angles: degrees`` switches units)."""
    if not isinstance(doc, dict) or "joints" not in doc:
        raise ParseError(source, getattr(doc, "line", 1), "a configuration needs a 'joints' mapping")
    degrees = str(doc.get("angles", "radians")).lower().startswith("deg")
    scale = math.pi / 180 if degrees else 1.0
    joints = doc["joints"]
    if not isinstance(joints, dict):
        raise ParseError(source, _line_of(doc, ["joints"]), "'joints' must be a mapping")
    joints = {str(k): v for k, v in joints.items()}
    key_lines = {str(k): v for k, v in getattr(doc["joints"], "key_lines", {}).items()}
    placements = {}
    for j in t.sorted_joints:
        if j.id not in joints:
            raise ParseError(source, _line_of(doc, ["joints"]), f"no placement for joint {j.id!r}")
        entry = joints[j.id]
        line = key_lines.get(j.id)
        if not isinstance(entry, dict) or "position" not in entry:
            raise ParseError(source, line, f"joint {j.id!r} needs a position")
        pos = _vector(entry, "position", source)
        if not j.kind.has_axis:
            placements[j.id] = JointPlacement(pos)
        elif "axis" in entry:
            axis = _vector(entry, "axis", source)
            if np.linalg.norm(axis) == 0:
                raise ParseError(source, _line_of(entry, ["axis"]), "axis must be nonzero")
            placements[j.id] = JointPlacement.from_axis(pos, axis)
        elif "beta" in entry and "phi" in entry:
            placements[j.id] = JointPlacement(pos, float(entry["beta"]) * scale,
                                              float(entry["phi"]) * scale)
        else:
            raise ParseError(source, line, f"joint {j.id!r} needs an axis or beta/phi angles")
    extra = sorted(set(joints) - set(t.joint_ids))
    if extra:
        raise ParseError(source, key_lines.get(extra[0]), f"unknown joint {extra[0]!r}")
    if task_point is None:
        task_point = _vector(doc, "task_point", source) if "task_point" in doc else np.array(TASK_POINT)
    return Configuration(placements, np.asarray(task_point, dtype=float))


def load_configuration(spec: str | Path, t: Topology, task_point=None) -> Configuration:
    path = _resolve(spec, "configurations")
    return configuration_from_document(load_yaml(path), t, str(path), task_point)


# results

def result_to_dict(r: SynthesisResult) -> dict:
    return {
        "name": r.name,
        "objective": r.objective,
        "mu": r.mu,
        "mu_bar": None if math.isnan(r.mu_bar) else r.mu_bar,
        "kappa": None if math.isinf(r.kappa) else r.kappa,
        "length": r.length,
        "task_point": list(r.task_point),
        "active": list(r.active),
        "design": {k: float(v) for k, v in zip(r.names, r.x)},
        "diagnostics": dict(r.diagnostics),
    }


def result_from_dict(d: dict) -> SynthesisResult:
    try:
        design = d["design"]
        return SynthesisResult(
            name=str(d["name"]),
            x=np.array([float(v) for v in design.values()]),
            names=tuple(design.keys()),
            task_point=tuple(float(v) for v in d["task_point"]),
            mu=float(d["mu"]),
            mu_bar=math.nan if d["mu_bar"] is None else float(d["mu_bar"]),
            kappa=math.inf if d["kappa"] is None else float(d["kappa"]),
            length=None if d.get("length") is None else float(d["length"]),
            objective=str(d["objective"]),
            active=tuple(d["active"]),
            diagnostics=dict(d.get("diagnostics", {})),
        )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ParseError("<result>", None, f"malformed result record: {exc}") from None


def design_vector(t: Topology, r: SynthesisResult) -> np.ndarray:
    """``r.x`` reordered to ``t``'s layout; raises DimensionMismatch."""
    layout = DesignLayout.for_topology(t)
    if set(r.names) != set(layout.names) or len(r.names) != layout.size:
        raise DimensionMismatch(
            f"{r.name}: design has {len(r.names)} entries, topology {t.name} needs {layout.size}")
    pos = {n: k for k, n in enumerate(r.names)}
    return np.array([r.x[pos[n]] for n in layout.names])


def prescription_to_json(p: Prescription) -> str:
    rows = []
    for row in p.rows:
        d = result_to_dict(row.result)
        d["s_no"] = row.s_no
        d["i_kappa"] = row.i_kappa
        rows.append(d)
    rows += [{"name": f.name, "failed": f.reason} for f in p.failures]
    return json.dumps(rows, indent=2) + "\n"


def results_from_json(text: str, source: str = "<json>") -> list[SynthesisResult]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(source, exc.lineno, exc.msg) from None
    if isinstance(data, dict):
        data = [data]
    return [result_from_dict(d) for d in data if "failed" not in d]


def _fmt(v: float, digits: int) -> str:
    if v is None or math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf"
    return f"{v:.{digits}f}"


def prescription_to_csv(p: Prescription, ajv: bool = False) -> str:
    """Table-style CSV, rounded for presentation (mu_bar 4 decimals, kappa
    and mu 1 decimal). Failed topologies get a row with ``f = failed``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER + (("AJV",) if ajv else ()))
    for row in p.rows:
        r = row.result
        cells = [row.s_no, r.name, _fmt(r.mu_bar, 4), _fmt(r.kappa, 1), row.i_kappa,
                 _fmt(r.mu, 1), r.objective]
        if ajv:
            cells.append(" ".join(r.active))
        w.writerow(cells)
    for f in p.failures:
        w.writerow(["", f.name, "", "", "", "", "failed"] + ([""] if ajv else []))
    return buf.getvalue()


def format_design(names: Sequence[str], x) -> list[str]:
    """Human-readable design lines with angles in degrees."""
    out = []
    for n, v in zip(names, x):
        if n.startswith(("beta", "phi")):
            out.append(f"{n} = {math.degrees(v):.2f} deg")
        else:
            out.append(f"{n} = {v:.4f}")
    return out

