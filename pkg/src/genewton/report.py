"""Deterministic JSON and CSV reports for solve, certify and oracle runs.

Floats are always written with 17 significant digits, so identical runs give
byte-identical files.  Non-finite values become the strings ``"+inf"``,
``"-inf"`` and ``"nan"``.
"""

import csv
import io
import json
import math

import numpy as np

from .majorant import Certificate

SCHEMA = 1
ITERATION_COLUMNS = ("k", "t_k", "step_norm", "gap", "residual", "apriori_bound", "in_Kt")


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"+inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    return obj


def _dump(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
        elif all(not isinstance(v, (list, dict)) for v in obj):
            parts = []
            for v in obj:
                sub = []
                _dump(v, indent, level + 1, sub)
                parts.append("".join(sub))
            out.append("[" + ", ".join(parts) + "]")
        else:
            out.append("[\n")
            for i, v in enumerate(obj):
                out.append(pad)
                _dump(v, indent, level + 1, out)
                out.append(",\n" if i < len(obj) - 1 else "\n")
            out.append(end + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(pad + json.dumps(k) + ": ")
            _dump(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    out = []
    _dump(_plain(obj), indent, 0, out)
    return "".join(out) + "\n"


def certificate_block(cert: Certificate) -> dict:
    spec = cert.spec
    block = {"mode": spec.kind, "beta": cert.beta, "b": cert.b}
    if spec.kind == "lipschitz":
        block["K"] = spec.K
    elif spec.kind == "smale":
        block["gamma"] = spec.gamma
        block["alpha"] = cert.alpha
    block.update({
        "t_star": cert.t_star, "t_bar": cert.t_bar,
        "h1": cert.h1, "h2": cert.h2, "h3": cert.h3, "h4": cert.h4,
        "rate_Q": cert.rate_Q,
    })
    return block


def iteration_rows(trace) -> list:
    return [{"k": r.k, "t_k": r.t_k, "step_norm": r.step_norm, "gap": r.gap,
             "residual": r.residual, "apriori_bound": r.apriori_bound, "in_Kt": r.in_Kt}
            for r in trace.records]


def solve_report(problem_name: str, trace, method: str, seed: int) -> dict:
    return {
        "schema": SCHEMA,
        "command": "solve",
        "problem": problem_name,
        "status": trace.status,
        "solution": trace.x_star,
        "tol_outer": trace.tol_outer,
        "method": method,
        "seed": seed,
        "iterations": iteration_rows(trace),
        "certificate": None if trace.certificate is None else certificate_block(trace.certificate),
        "margins": trace.margins,
        "warnings": trace.warnings,
        "error": trace.error,
    }


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v).strip('"')
    return str(v)


def to_csv(report: dict) -> str:
    """Iteration table as CSV, preceded by ``# key: value`` metadata lines.

    Columns are :data:`ITERATION_COLUMNS` in that order; cells of
    uncertified runs are left empty.
    """
    buf = io.StringIO()
    meta = {k: v for k, v in report.items() if k not in ("iterations", "t_values")}
    for key, value in meta.items():
        if isinstance(value, dict):
            for k2, v2 in value.items():
                buf.write(f"# {key}.{k2}: {_cell(_plain(v2))}\n")
        elif isinstance(value, (list, np.ndarray)):
            buf.write(f"# {key}: {' '.join(_cell(v) for v in _plain(value))}\n")
        else:
            buf.write(f"# {key}: {_cell(value)}\n")
    rows = report.get("iterations")
    if rows is None:
        rows = [{"k": k, "t_k": t} for k, t in enumerate(report.get("t_values", []))]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ITERATION_COLUMNS)
    for row in rows:
        writer.writerow([_cell(_plain(row.get(c))) for c in ITERATION_COLUMNS])
    return buf.getvalue()
