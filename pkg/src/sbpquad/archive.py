"""Canonical on-disk archive of rules and operators.

Orbit data is the source of truth: a symmetric rule is stored as its
orbit list (kind, parameters, weight) plus degree/facet metadata, and
nodes are re-expanded on load.  Serialization is canonical JSON
(sorted keys, fixed indent, shortest round-trip float repr), so
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .operators import SBPOperator, build_operator
from .search import QuadratureRule, _interval_nodeset, validate_rule
from .simplex import GroupSignature, SymmetryOrbit, assemble_nodes

__all__ = [
    "ArchiveError",
    "canonical_json",
    "rule_to_dict",
    "rule_from_dict",
    "save_rule",
    "load_rule",
    "operator_to_dict",
    "operator_from_dict",
    "save_operator",
    "load_operator",
]

SCHEMA_VERSION = 1
_RULE_FORMAT = "quadrature-rule"
_OP_FORMAT = "sbp-operator"

_DIM = {"interval": 1, "tri": 2, "tet": 3}


class ArchiveError(ValueError):
    pass


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _jsonable(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def rule_to_dict(rule: QuadratureRule) -> dict:
    data = {
        "format": _RULE_FORMAT,
        "schema": SCHEMA_VERSION,
        "domain": rule.domain,
        "qv": int(rule.qv),
        "sbp_p": None if rule.sbp_p is None else int(rule.sbp_p),
        "facet_kind": rule.facet_kind,
        "provenance": _jsonable(rule.provenance),
    }
    if rule.signature is not None:
        data["orbits"] = [
            {"kind": o.kind, "params": [float(p) for p in o.params],
             "weight": float(o.weight)}
            for o in rule.signature.orbits]
    else:
        data["nodes"] = rule.nodes.coords[:, 0].tolist()
        data["weights"] = rule.nodes.weights.tolist()
    if rule.facet_rule is not None:
        data["facet_rule"] = rule_to_dict(rule.facet_rule)
    return data


def rule_from_dict(data: dict, validate: bool = True) -> QuadratureRule:
    if data.get("format") != _RULE_FORMAT:
        raise ArchiveError(f"not a rule archive: {data.get('format')!r}")
    if data.get("schema") != SCHEMA_VERSION:
        raise ArchiveError(f"unsupported schema {data.get('schema')!r}")
    domain = data["domain"]
    if domain not in _DIM:
        raise ArchiveError(f"unknown domain {domain!r}")
    dim = _DIM[domain]
    qv = int(data["qv"])
    facet_rule = None
    if data.get("facet_rule") is not None:
        facet_rule = rule_from_dict(data["facet_rule"], validate=validate)
    if "orbits" in data:
        orbits = tuple(
            SymmetryOrbit(o["kind"], tuple(float(p) for p in o["params"]),
                          float(o["weight"]))
            for o in data["orbits"])
        sig = GroupSignature(dim, orbits, qv)
        nodes = assemble_nodes(sig)
    else:
        x = np.asarray(data["nodes"], dtype=float)
        w = np.asarray(data["weights"], dtype=float)
        if dim != 1:
            raise ArchiveError("explicit node lists are interval-only")
        sig = None
        nodes = _interval_nodeset(x, w)
    rule = QuadratureRule(
        domain=domain, qv=qv, nodes=nodes, signature=sig,
        facet_rule=facet_rule, facet_kind=data.get("facet_kind"),
        sbp_p=data.get("sbp_p"),
        provenance=dict(data.get("provenance") or {}))
    if validate:
        validate_rule(rule)
    return rule


def save_rule(rule: QuadratureRule, path) -> None:
    Path(path).write_text(canonical_json(rule_to_dict(rule)))


def load_rule(path, validate: bool = True) -> QuadratureRule:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"malformed archive {path}: {exc}") from exc
    return rule_from_dict(data, validate=validate)


def operator_to_dict(op: SBPOperator) -> dict:
    return {
        "format": _OP_FORMAT,
        "schema": SCHEMA_VERSION,
        "p": int(op.p),
        "rule": rule_to_dict(op.rule),
        "H": op.H.tolist(),
        "E": [e.tolist() for e in op.E],
        "Q": [q.tolist() for q in op.Q],
        "D": [d.tolist() for d in op.D],
    }


def operator_from_dict(data: dict, check: bool = True) -> SBPOperator:
    if data.get("format") != _OP_FORMAT:
        raise ArchiveError(
            f"not an operator archive: {data.get('format')!r}")
    rule = rule_from_dict(data["rule"])
    op = build_operator(rule, p=int(data["p"]))
    if check:
        stored = np.asarray(data["H"])
        if stored.shape != op.H.shape or \
                not np.allclose(stored, op.H, rtol=0, atol=1e-13):
            raise ArchiveError("stored norm disagrees with rebuild")
    return op


def save_operator(op: SBPOperator, path) -> None:
    Path(path).write_text(canonical_json(operator_to_dict(op)))


def load_operator(path, check: bool = True) -> SBPOperator:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"malformed archive {path}: {exc}") from exc
    return operator_from_dict(data, check=check)
