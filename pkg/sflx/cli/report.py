"""Rendering of reports as text and JSON, and the exit-code contract."""
import json
import math
from typing import Any, Dict, List, Optional

from sflx.dataclasses import BifurcationVerdict, Outcome, Report, ReportWarning, Witness

EXIT_COMPUTED = 0
EXIT_ERROR = 1
EXIT_INDETERMINATE = 2
# Aggregation order for batches: an error beats an indeterminate verdict beats a computed result.
SEVERITY = {EXIT_COMPUTED: 0, EXIT_INDETERMINATE: 1, EXIT_ERROR: 2}


def exit_code(report: Report) -> int:
    if report.verdict is not None and report.verdict.outcome == Outcome.INDETERMINATE:
        return EXIT_INDETERMINATE
    return EXIT_COMPUTED


def worst_exit_code(codes) -> int:
    return max(codes, key=SEVERITY.__getitem__, default=EXIT_COMPUTED)


def _finite(x: float) -> Optional[float]:
    # JSON has no inf/nan
    return float(x) if x is not None and math.isfinite(x) else None


def witness_to_dict(w: Witness) -> Dict[str, Any]:
    return {
        "j": w.j,
        "k": w.k,
        "alpha_k": w.alpha_k,
        "interval": [_finite(w.interval[0]), _finite(w.interval[1])],
        "block": w.block,
        "margin": _finite(w.margin),
    }


def warning_to_dict(w: ReportWarning) -> Dict[str, Any]:
    return {"kind": w.kind, "k": w.k, "margin": _finite(w.margin), "message": w.message}


def verdict_to_dict(v: BifurcationVerdict) -> Dict[str, Any]:
    return {
        "outcome": Outcome(v.outcome).value,
        "clause": v.clause,
        "witness": witness_to_dict(v.witness) if v.witness is not None else None,
        "provisos": list(v.provisos),
    }


def report_to_dict(report: Report) -> Dict[str, Any]:
    return {
        "mode": report.mode,
        "provenance": report.provenance,
        "result": report.result,
        "verdict": verdict_to_dict(report.verdict) if report.verdict is not None else None,
        "warnings": [warning_to_dict(w) for w in report.warnings],
        "details": report.details or {},
        "exit_code": exit_code(report),
        "echo": report.echo,
    }


def error_to_dict(source: str, error: Exception) -> Dict[str, Any]:
    return {
        "source": source,
        "error": {"type": type(error).__name__, "message": str(error)},
        "exit_code": EXIT_ERROR,
    }


def render_json(report: Report) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def _format_witness(w: Witness) -> str:
    sign = "+" if w.block == 1 else "-"
    lo, hi = w.interval
    return (
        f"j={w.j} k={w.k} alpha_k={w.alpha_k:.12g}: {sign}alpha_k in ({lo:.12g}, {hi:.12g}), "
        f"margin {w.margin:.3e}"
    )


def render_text(report: Report) -> str:
    """Human-readable report naming the operation and criterion behind every number."""
    lines: List[str] = [f"mode:       {report.mode}", f"provenance: {report.provenance}"]
    if report.result is not None:
        lines.append(f"result:     {report.result}")
    if report.verdict is not None:
        v = report.verdict
        lines.append(f"verdict:    {Outcome(v.outcome).value}" + (f" [{v.clause}]" if v.clause else ""))
        if v.witness is not None:
            lines.append(f"witness:    {_format_witness(v.witness)}")
        for proviso in v.provisos:
            lines.append(f"proviso:    {proviso}")
    for w in report.warnings:
        at = f" k={w.k}" if w.k is not None else ""
        lines.append(f"warning:    {w.kind}{at} margin={w.margin:.3e}: {w.message}")
    for key, value in (report.details or {}).items():
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"
