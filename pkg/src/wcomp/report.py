"""JSON and text rendering of classification and oracle reports.

Exact numbers are written as strings (``"1/2"``, ``"3*sqrt(2)"``, ``"inf"``)
so that reports survive a JSON round trip without loss.
"""

from __future__ import annotations

import json
from fractions import Fraction

from . import __version__, arith
from .arith import Polar, Surd
from .classify import ClassificationReport, Verdict
from .quantities import LimitEstimate

SCHEMA = 1


def jsonable(x):
    """Plain JSON data for reports: numbers become canonical strings."""
    if x is None or isinstance(x, (bool, str)):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, (Fraction, Surd, float, complex, Polar)):
        return arith.fmt(x)
    if isinstance(x, Verdict):
        out = {
            "property": x.prop,
            "status": x.status,
            "mode": x.mode,
            "criterion": x.criterion,
            "explanation": x.explanation,
            "witnesses": jsonable(x.witnesses),
        }
        if x.subverdicts:
            out["subverdicts"] = {k: jsonable(v) for k, v in x.subverdicts.items()}
        return out
    if isinstance(x, LimitEstimate):
        return {
            "kind": x.kind,
            "value": jsonable(x.value),
            "converged": x.converged,
            "note": x.note,
            "evidence": jsonable(x.evidence[-12:]),
        }
    if isinstance(x, ClassificationReport):
        return classification_dict(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if hasattr(x, "text"):
        return str(x.text)
    return str(x)


def classification_dict(rep: ClassificationReport) -> dict:
    quantities = {k: v for k, v in rep.quantities.items() if k != "inverse_operator"}
    out = {
        "instance": rep.instance,
        "quantities": jsonable(quantities),
        "verdicts": [jsonable(v) for v in rep.verdicts.values()],
        "notes": list(rep.notes),
    }
    if rep.specialization:
        out["specialization"] = jsonable(rep.specialization)
    if rep.components:
        out["components"] = {k: classification_dict(v) for k, v in rep.components.items()}
    return out


def build_report(command: str, config_echo: dict, body: dict, wall_time: float) -> dict:
    report = {
        "schema": SCHEMA,
        "tool": {"name": "wcomp", "version": __version__},
        "command": command,
        "config": config_echo,
    }
    report.update(body)
    report["wall_time"] = round(wall_time, 3)
    return report


def emit_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False, ensure_ascii=False) + "\n"


def parse_json(text: str) -> dict:
    data = json.loads(text)
    if data.get("schema") != SCHEMA:
        raise ValueError(f"unsupported report schema {data.get('schema')!r}")
    return data


def emit_text(report: dict) -> str:
    """Aligned human-readable summary."""
    lines = []
    cfg = report.get("config", {})
    lines.append(f"instance  {cfg.get('name') or '(unnamed)'}")
    for key in ("space", "weight", "psi", "phi", "eta"):
        if key in cfg:
            lines.append(f"  {key:<7} {cfg[key]}")
    _text_body(report, lines, "")
    lines.append(f"wall time {report.get('wall_time')} s")
    return "\n".join(lines) + "\n"


def _text_body(body: dict, lines: list, indent: str) -> None:
    q = body.get("quantities", {})
    sigma = q.get("sigma") or {}
    ess = q.get("essential_norm") or {}
    xi = q.get("xi") or {}
    if sigma:
        lines.append(f"{indent}norm (sigma)      {sigma.get('value')}  [{sigma.get('kind')}]")
    if xi:
        lines.append(f"{indent}ratio limit (xi)  {xi.get('value')}  [{xi.get('kind')}]")
    if ess:
        lines.append(f"{indent}essential norm    {ess.get('value')}  [{ess.get('kind')}]")
    if q.get("inverse_norm") is not None:
        lines.append(f"{indent}inverse norm      {q['inverse_norm']}")
    verdicts = body.get("verdicts", [])
    if verdicts:
        width = max(len(v["property"]) for v in verdicts)
        for v in verdicts:
            lines.append(
                f"{indent}{v['property']:<{width}}  {v['status']:<12} {v['mode']:<7}  {v['explanation']}"
            )
            for key, sub in v.get("subverdicts", {}).items():
                lines.append(f"{indent}  ({key}) {sub['status']:<12} {sub['explanation']}")
    for kind, rows in body.get("specialization", {}).items():
        lines.append(f"{indent}{kind} corollaries:")
        for prop, row in rows.items():
            lines.append(f"{indent}  {prop:<20} corollary {row['corollary']:<12} general {row['general']}")
    for label, sub in body.get("components", {}).items():
        lines.append(f"{indent}component {label}: {sub['instance']['psi']} / {sub['instance']['phi']}")
        _text_body(sub, lines, indent + "  ")
    oracle = body.get("oracle")
    if oracle:
        lines.append(f"{indent}oracle checks:")
        for check in oracle.get("checks", []):
            lines.append(f"{indent}  {check['name']:<24} {check['outcome']:<10} {check['detail']}")
    for note in body.get("notes", []):
        lines.append(f"{indent}note: {note}")
