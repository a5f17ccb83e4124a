"""Deterministic output files: curve CSV, summaries, histograms, SVG charts.

Every data file begins with a metadata block naming the tool version, the
effective configuration, and content digests of the inputs. Nothing
time-dependent is written, so a rerun on identical inputs is byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping

from . import __version__
from .cutoff import CutoffEstimate, PerplexitySeries, RelativeCurve, trimmed_mean
from .errors import DataError
from .months import MonthStamp


@dataclass(frozen=True)
class RunMeta:
    command: str
    config: Mapping[str, object]
    inputs: Mapping[str, str]

    def comment_lines(self) -> list[str]:
        lines = [
            f"# cutoffprobe {__version__}",
            f"# command: {self.command}",
            f"# config: {json.dumps(dict(self.config), sort_keys=True)}",
        ]
        for name in sorted(self.inputs):
            lines.append(f"# input: {name} sha256:{self.inputs[name]}")
        return lines

    def as_dict(self) -> dict:
        return {
            "tool": f"cutoffprobe {__version__}",
            "command": self.command,
            "config": dict(self.config),
            "inputs": {name: f"sha256:{digest}" for name, digest in sorted(self.inputs.items())},
        }


def file_digest(path: str | Path) -> str:
    hasher = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            hasher.update(chunk)
    return hasher.hexdigest()


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def write_curve_csv(
    path: str | Path,
    series: PerplexitySeries,
    curve: RelativeCurve,
    trim_frac: float,
    meta: RunMeta,
) -> None:
    buf = io.StringIO()
    for line in meta.comment_lines():
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["month", "mean_ppl", "trimmed_mean_ppl", "relative_ppl", "n_docs"])
    for month, rel in zip(curve.months, curve.values):
        values = series.values_for(month)
        writer.writerow(
            [
                str(month),
                _fmt(sum(values) / len(values)),
                _fmt(trimmed_mean(values, trim_frac)),
                _fmt(rel),
                len(values),
            ]
        )
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_curve_csv(path: str | Path) -> RelativeCurve:
    """Relative curve back out of a curve CSV; metadata comments are skipped."""
    path = Path(path)
    try:
        lines = [
            line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()
        ]
    except OSError as exc:
        raise DataError(f"cannot read curve CSV {path}: {exc}") from exc
    rows = [line for line in lines if not line.startswith("#")]
    reader = csv.DictReader(rows)
    months: list[MonthStamp] = []
    values: list[float] = []
    try:
        for rec in reader:
            months.append(MonthStamp.parse(rec["month"]))
            values.append(float(rec["relative_ppl"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed curve CSV: {exc}") from exc
    if not months:
        raise DataError(f"{path}: no curve rows")
    return RelativeCurve(months=tuple(months), values=tuple(values))


def write_estimate_json(path: str | Path, estimate: CutoffEstimate, meta: RunMeta) -> None:
    payload = {
        "metadata": meta.as_dict(),
        "argmin_month": str(estimate.argmin_month),
        "band": [str(m) for m in estimate.band],
        "epsilon": estimate.epsilon,
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_histogram_csv(
    path: str | Path, credit: Mapping[MonthStamp, float | int | Fraction], meta: RunMeta
) -> None:
    buf = io.StringIO()
    for line in meta.comment_lines():
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["month", "credit"])
    for month in sorted(credit):
        writer.writerow([str(month), _fmt(float(credit[month]))])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_records_jsonl(path: str | Path, records, meta: RunMeta) -> None:
    """Match records, one JSON object per line after a metadata line."""
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"metadata": meta.as_dict()}, sort_keys=True) + "\n")
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "topic_id": rec.topic_id,
                        "doc_id": rec.doc_id,
                        "bm25_score": rec.bm25_score,
                        "dists": {str(m): d for m, d in sorted(rec.dists.items())},
                        "min_dist": rec.min_dist,
                        "min_months": [str(m) for m in rec.min_months],
                        "accepted": rec.accepted,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_records_jsonl(path: str | Path):
    from .mining import MatchRecord

    path = Path(path)
    records = []
    try:
        lines = path.read_text(encoding="utf-8").split("\n")
    except OSError as exc:
        raise DataError(f"cannot read records {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: malformed record: {exc}") from exc
        if "metadata" in rec:
            continue
        try:
            records.append(
                MatchRecord(
                    topic_id=rec["topic_id"],
                    doc_id=rec["doc_id"],
                    bm25_score=rec["bm25_score"],
                    dists={MonthStamp.parse(m): d for m, d in rec["dists"].items()},
                    min_dist=rec["min_dist"],
                    min_months=tuple(MonthStamp.parse(m) for m in rec["min_months"]),
                    accepted=rec["accepted"],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: malformed record: {exc}") from exc
    return records


def write_report_text(path: str | Path, body: str, meta: RunMeta) -> None:
    header = "\n".join(meta.comment_lines())
    Path(path).write_text(header + "\n\n" + body, encoding="utf-8")


SVG_WIDTH = 720
SVG_HEIGHT = 320
SVG_MARGIN = 40


def curve_svg(curve: RelativeCurve, estimate: CutoffEstimate | None, meta: RunMeta) -> str:
    """Minimal polyline chart of a relative curve; argmin marked when known."""
    n = len(curve.months)
    inner_w = SVG_WIDTH - 2 * SVG_MARGIN
    inner_h = SVG_HEIGHT - 2 * SVG_MARGIN

    def x_at(i: int) -> float:
        return SVG_MARGIN + (inner_w * i / (n - 1) if n > 1 else inner_w / 2)

    def y_at(v: float) -> float:
        return SVG_MARGIN + inner_h * (1.0 - v)

    points = " ".join(f"{x_at(i):.2f},{y_at(v):.2f}" for i, v in enumerate(curve.values))
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        "<!--",
        *[line[2:] for line in meta.comment_lines()],
        "-->",
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">',
        f'<rect width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<line x1="{SVG_MARGIN}" y1="{SVG_MARGIN + inner_h}" x2="{SVG_MARGIN + inner_w}" '
        f'y2="{SVG_MARGIN + inner_h}" stroke="black"/>',
        f'<line x1="{SVG_MARGIN}" y1="{SVG_MARGIN}" x2="{SVG_MARGIN}" '
        f'y2="{SVG_MARGIN + inner_h}" stroke="black"/>',
        f'<text x="{SVG_MARGIN}" y="{SVG_HEIGHT - 8}" font-size="11">{curve.months[0]}</text>',
        f'<text x="{SVG_MARGIN + inner_w - 48}" y="{SVG_HEIGHT - 8}" font-size="11">'
        f"{curve.months[-1]}</text>",
        f'<text x="6" y="{SVG_MARGIN + 4}" font-size="11">1.0</text>',
        f'<text x="6" y="{SVG_MARGIN + inner_h + 4}" font-size="11">0.0</text>',
        f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{points}"/>',
    ]
    if estimate is not None:
        i = curve.months.index(estimate.argmin_month)
        cx, cy = x_at(i), y_at(curve.values[i])
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="4" fill="crimson"/>')
        parts.append(
            f'<text x="{cx:.2f}" y="{cy - 8:.2f}" font-size="11" fill="crimson">'
            f"{estimate.argmin_month}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_curve_svg(
    path: str | Path, curve: RelativeCurve, estimate: CutoffEstimate | None, meta: RunMeta
) -> None:
    Path(path).write_text(curve_svg(curve, estimate, meta), encoding="utf-8")
