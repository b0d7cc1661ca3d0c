"""Structured results for the verification harness.

A ``CheckReport`` captures one identity checked at sampled points: the
residual statistics, the tolerance it was held to, and a verdict.  Ordinary
checks pass when the worst residual stays below tolerance.  Negative
controls invert the reading: they are reported ``xfail`` when the residual
is loud (the detector works) and ``xpass`` when it stays quiet (the
detector lost sensitivity), and only ``xpass`` counts against the run.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

VERDICTS = ("pass", "fail", "xfail", "xpass")

FIELD_ORDER = ("id", "anchor", "max_residual", "mean_residual", "tolerance",
               "verdict", "model", "points", "seed", "millis")


@dataclass(frozen=True)
class CheckReport:
    """One checked identity with its residual statistics and verdict."""

    id: str
    anchor: str
    max_residual: float
    mean_residual: float
    tolerance: float
    verdict: str
    model: str
    points: int
    seed: int
    millis: int

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ArgumentError(f"unknown verdict {self.verdict!r}")
        if not self.tolerance > 0.0:
            raise ArgumentError("tolerance must be positive")
        if self.max_residual < 0.0 or self.mean_residual > self.max_residual:
            raise ArgumentError("residual statistics out of order")
        expected = _verdict(self.max_residual, self.tolerance,
                            self.verdict in ("xfail", "xpass"))
        if self.verdict != expected:
            raise ArgumentError(
                f"verdict {self.verdict!r} contradicts residual "
                f"{self.max_residual:.3e} at tolerance {self.tolerance:.3e}")

    @property
    def ok(self) -> bool:
        return self.verdict in ("pass", "xfail")


def _verdict(max_residual: float, tolerance: float, expect_fail: bool) -> str:
    below = max_residual <= tolerance
    if expect_fail:
        return "xpass" if below else "xfail"
    return "pass" if below else "fail"


def make_report(check_id: str, anchor: str, residuals, tolerance: float,
                model: str, seed: int, expect_fail: bool = False,
                millis: int = 0) -> CheckReport:
    """Assemble a report from per-point residuals."""
    arr = np.asarray(residuals, dtype=np.float64)
    if arr.size == 0:
        raise ArgumentError(f"check {check_id} produced no residuals")
    worst = float(np.max(arr))
    return CheckReport(check_id, anchor, worst, float(np.mean(arr)),
                       float(tolerance),
                       _verdict(worst, tolerance, expect_fail), model,
                       int(arr.size), int(seed), int(millis))


def as_dict(report: CheckReport) -> dict:
    return {name: getattr(report, name) for name in FIELD_ORDER}


def render_json(reports) -> str:
    return json.dumps([as_dict(r) for r in reports], indent=2) + "\n"


def render_text(reports) -> str:
    rows = [("id", "verdict", "max", "mean", "tol", "pts", "model", "anchor")]
    for r in reports:
        rows.append((r.id, r.verdict, f"{r.max_residual:.3e}",
                     f"{r.mean_residual:.3e}", f"{r.tolerance:.1e}",
                     str(r.points), r.model, r.anchor))
    widths = [max(len(row[k]) for row in rows) for k in range(7)]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[k])
                               for k, cell in enumerate(row[:7]))
                     + "  " + row[7])
        if i == 0:
            lines.append("-" * len(lines[0]))
    bad = [r for r in reports if not r.ok]
    passed = sum(r.verdict == "pass" for r in reports)
    xfailed = sum(r.verdict == "xfail" for r in reports)
    lines.append("")
    lines.append(f"{len(reports)} checks: {passed} pass, "
                 f"{xfailed} expected-fail, {len(bad)} bad")
    return "\n".join(lines) + "\n"


def emit(reports, fmt: str = "text", stream=None) -> None:
    """Write reports to a stream (default standard output)."""
    if not reports:
        raise ArgumentError("nothing to report")
    if fmt not in ("text", "json"):
        raise ArgumentError(f"unknown report format {fmt!r}")
    if stream is None:
        stream = sys.stdout
    text = render_json(reports) if fmt == "json" else render_text(reports)
    stream.write(text)
