"""Report assembly and CSV/JSON serialization.

The CSV report is a single file of four tables separated by blank lines, each
with its own header row::

    key,value                                       # metadata and verdict
    n,pinv_norm,running_sup                         # stability trace
    n,cauchy_gap,oracle_err                         # iterates
    suite,n,probe_id,lambda_re,lambda_im,residual   # diagnostics

Floats are written as ``%.16e`` (17 significant digits, exact round trip).
Reports carry no timestamps, so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from . import __version__
from .diagnostics import ResidualTable
from .engine import BestApproxRun

STABILITY_HEADER = ("n", "pinv_norm", "running_sup")
ITERATE_HEADER = ("n", "cauchy_gap", "oracle_err")
DIAGNOSTIC_HEADER = ("suite", "n", "probe_id", "lambda_re", "lambda_im", "residual")


@dataclass
class Report:
    metadata: dict[str, str]
    run: BestApproxRun | None = None
    tables: list[ResidualTable] = field(default_factory=list)
    summaries: dict[str, dict] = field(default_factory=dict)
    verdict: str = ""
    verdict_reason: str = ""

    def stability_rows(self) -> list[tuple]:
        if self.run is None:
            return []
        return [(r.n, r.pinv_norm, r.running_sup) for r in self.run.trace.records]

    def iterate_rows(self) -> list[tuple]:
        if self.run is None:
            return []
        return [(it.n, it.cauchy_gap, it.oracle_err) for it in self.run.iterates]

    def diagnostic_rows(self) -> list[tuple]:
        rows = []
        for t in self.tables:
            for r in t.rows:
                re_, im_ = (None, None) if r.lam is None else (r.lam.real, r.lam.imag)
                rows.append((t.suite, r.n, r.probe_id, re_, im_, r.residual))
        # by n, then probe id, then lambda; suite breaks remaining ties
        rows.sort(key=lambda r: (r[1], r[2], r[3] or 0.0, r[4] or 0.0, r[0]))
        return rows

    def meta_rows(self) -> list[tuple[str, str]]:
        rows = [("tool.version", __version__)]
        rows += sorted(self.metadata.items())
        for suite in sorted(self.summaries):
            for k, v in sorted(self.summaries[suite].items()):
                rows.append((f"summary.{suite}.{k}", _cell(v)))
        if self.run is not None:
            for n, msg in self.run.errors:
                rows.append((f"error.n{n}", msg))
        rows += [("verdict", self.verdict), ("verdict_reason", self.verdict_reason)]
        return rows


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.16e" % v
    return str(v)


def to_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("key", "value"))
    w.writerows(report.meta_rows())
    for header, rows in ((STABILITY_HEADER, report.stability_rows()),
                         (ITERATE_HEADER, report.iterate_rows()),
                         (DIAGNOSTIC_HEADER, report.diagnostic_rows())):
        buf.write("\n")
        w.writerow(header)
        w.writerows([_cell(v) for v in row] for row in rows)
    return buf.getvalue()


def to_json(report: Report) -> str:
    doc = {
        "metadata": {"tool.version": __version__, **dict(sorted(report.metadata.items()))},
        "errors": [{"n": n, "message": msg} for n, msg in (report.run.errors if report.run else ())],
        "stability": [dict(zip(STABILITY_HEADER, r)) for r in report.stability_rows()],
        "iterates": [dict(zip(ITERATE_HEADER, r)) for r in report.iterate_rows()],
        "diagnostics": [dict(zip(DIAGNOSTIC_HEADER, r)) for r in report.diagnostic_rows()],
        "summaries": report.summaries,
        "verdict": report.verdict,
        "verdict_reason": report.verdict_reason,
    }
    # repr-based float output is the shortest exact round trip
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def render(report: Report, fmt: str) -> str:
    return to_json(report) if fmt == "json" else to_csv(report)
