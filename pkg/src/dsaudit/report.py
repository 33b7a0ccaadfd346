"""Per-model audit statistics and their serializations.

Column meanings:

========  ==============================================================
NR        number of rules
NP        number of distinct rule outcomes
NO        negatively overlapping rule pairs
Total     rule pairs with different outcomes (decided ones)
PO        100 * NO / Total
TO        seconds spent on overlap (and default reachability)
TB        seconds spent building the background theory
TC        seconds spent on rule redundancy
TR        seconds spent on literal redundancy
BS        background clause count
RS        sum of rule sizes
RM        largest rule size
IR        1 if some rule is redundant; NRR counts them
IL        1 if some literal is locally redundant; NLL counts them
PL        100 * NLL / RS
IG        1 if some literal is globally redundant; NGL counts them
PG        100 * NGL / RS
EX        1 if the budget ran out
DR        default rule reachable (1/0, empty when undecided)
UO/UR/UL  undecided overlap pairs / rules / literals
========  ==============================================================

Percentages are exact rationals, written as integers, finite decimals or
``p/q``. Timings are written with millisecond resolution.
"""
from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from dsaudit.analysis import AuditResult, FindingKind, OverlapPair, RedundancyFinding, Simplified
from dsaudit.background import BackgroundKnowledge
from dsaudit.model import DecisionSet, distinct_outcomes, format_number

CSV_COLUMNS = (
    "model", "NR", "NP", "NO", "Total", "PO", "TO", "TB", "TC", "TR", "BS", "RS", "RM",
    "IR", "NRR", "IL", "NLL", "PL", "IG", "NGL", "PG", "EX", "DR", "UO", "UR", "UL", "flags",
)
TIMING_FIELDS = ("TO", "TB", "TC", "TR")
FORMATS = ("json-lines", "csv", "human-table")


def _pct(num: int, den: int) -> Fraction:
    return Fraction(100 * num, den) if den else Fraction(0)


@dataclass
class AuditReport:
    model: str
    NR: int
    NP: int
    NO: int
    Total: int
    PO: Fraction
    TO: float
    TB: float
    TC: float
    TR: float
    BS: int
    RS: int
    RM: int
    IR: int
    NRR: int
    IL: int
    NLL: int
    PL: Fraction
    IG: int
    NGL: int
    PG: Fraction
    EX: int
    DR: int | None
    UO: int
    UR: int
    UL: int
    flags: list[str] = field(default_factory=list)
    overlaps: list[dict] = field(default_factory=list)
    findings: list[dict] = field(default_factory=list)

    # -- json -----------------------------------------------------------------
    def to_json(self) -> dict:
        d = asdict(self)
        for k in ("PO", "PL", "PG"):
            d[k] = format_number(d[k])
        for k in TIMING_FIELDS:
            d[k] = _ms(d[k])
        return d

    @classmethod
    def from_json(cls, d: dict) -> "AuditReport":
        d = dict(d)
        for k in ("PO", "PL", "PG"):
            d[k] = Fraction(d[k])
        for k in TIMING_FIELDS:
            d[k] = float(d[k])
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def _ms(seconds: float) -> str:
    return f"{max(0.0, seconds):.3f}"


def _overlap_json(p: OverlapPair) -> dict:
    witness = sorted(str(a) if v else f"not ({a})" for a, v in p.witness.items()) if p.witness else []
    return {"pair": [p.i, p.j], "witness": witness}


def build_report(
    ds: DecisionSet,
    bk: BackgroundKnowledge,
    *,
    model: str = "",
    overlaps: Sequence[OverlapPair] = (),
    total: int = 0,
    undecided_pairs: int = 0,
    default_reachable: bool | None = None,
    findings: Iterable[RedundancyFinding] = (),
    undecided_rules: int = 0,
    undecided_literals: int = 0,
    timings: dict[str, float] | None = None,
    timed_out: bool = False,
    extra_flags: Iterable[str] = (),
) -> AuditReport:
    """Statistics of ``ds`` (the model as given) from analysis findings."""
    timings = timings or {}
    sizes = [len(r) for r in ds.rules]
    rs = sum(sizes)
    flags = list(extra_flags)
    if not ds.rules:
        flags.append("degenerate")
    decided = total - undecided_pairs
    if decided == 0:
        flags.append("no_cross_outcome_pairs")
    if timed_out:
        flags.append("timed_out")
    rep = AuditReport(
        model=model,
        NR=len(ds.rules),
        NP=len(distinct_outcomes(ds)),
        NO=len(overlaps),
        Total=total,
        PO=Fraction(0),
        TO=timings.get("TO", 0.0),
        TB=timings.get("TB", 0.0),
        TC=timings.get("TC", 0.0),
        TR=timings.get("TR", 0.0),
        BS=bk.size,
        RS=rs,
        RM=max(sizes, default=0),
        IR=0, NRR=0, IL=0, NLL=0, PL=Fraction(0), IG=0, NGL=0, PG=Fraction(0),
        EX=int(timed_out),
        DR=None if default_reachable is None else int(default_reachable),
        UO=undecided_pairs,
        UR=undecided_rules,
        UL=undecided_literals,
        flags=flags,
        overlaps=[_overlap_json(p) for p in overlaps],
        findings=[f.to_json() for f in findings],
    )
    return recompute(rep)


def recompute(rep: AuditReport) -> AuditReport:
    """Derived statistics recomputed from the stored pairs and findings."""
    kinds = [f["kind"] for f in rep.findings]
    nrr = kinds.count(FindingKind.RULE.value)
    nll = kinds.count(FindingKind.LOCAL.value)
    ngl = kinds.count(FindingKind.GLOBAL.value)
    no = len(rep.overlaps)
    return replace(
        rep,
        NO=no,
        PO=_pct(no, rep.Total - rep.UO),
        IR=int(nrr > 0), NRR=nrr,
        IL=int(nll > 0), NLL=nll, PL=_pct(nll, rep.RS),
        IG=int(ngl > 0), NGL=ngl, PG=_pct(ngl, rep.RS),
    )


def report_from_audit(result: AuditResult, model: str = "") -> AuditReport:
    findings: list[RedundancyFinding] = []
    undecided_rules = undecided_literals = 0
    if result.rules is not None:
        findings += result.rules.findings
        undecided_rules = len(result.rules.undecided)
    if result.literals is not None:
        findings += result.literals.findings
        undecided_literals = sum(1 for v in result.literals.verdicts if v.kind.value == "undecided")
    ov = result.overlap
    flags = []
    if result.pre.removed:
        flags.append("preprocessed:" + ",".join(map(str, result.pre.removed)))
    return build_report(
        result.source,
        result.bk,
        model=model,
        overlaps=ov.pairs if ov else (),
        total=ov.total if ov else 0,
        undecided_pairs=len(ov.undecided) if ov else 0,
        default_reachable=result.default.reachable if result.default else None,
        findings=findings,
        undecided_rules=undecided_rules,
        undecided_literals=undecided_literals,
        timings=result.timings,
        timed_out=result.timed_out,
        extra_flags=flags,
    )


def report_from_simplify(ds: DecisionSet, bk: BackgroundKnowledge, simplified: Simplified, model: str = "", timings=None) -> AuditReport:
    """Statistics where redundancy counts are the literals/rules actually removed."""
    return build_report(
        ds, bk, model=model, findings=simplified.findings, timings=timings,
        timed_out=simplified.partial, extra_flags=["simplify:" + simplified.policy.value],
    )


def mask_timings(rep: AuditReport) -> AuditReport:
    return replace(rep, TO=0.0, TB=0.0, TC=0.0, TR=0.0)


def exit_code(rep: AuditReport) -> int:
    """3 on timeout, else 2 on negative overlap, else 0."""
    if rep.EX:
        return 3
    if rep.NO > 0:
        return 2
    return 0


# -- serialization -------------------------------------------------------------


def _cell(rep: AuditReport, col: str) -> str:
    v = getattr(rep, col)
    if col in TIMING_FIELDS:
        return _ms(v)
    if isinstance(v, Fraction):
        return format_number(v)
    if col == "flags":
        return ";".join(v)
    return "" if v is None else str(v)


def to_json_lines(reports: Iterable[AuditReport]) -> str:
    return "".join(json.dumps(r.to_json(), ensure_ascii=False) + "\n" for r in reports)


def to_csv(reports: Iterable[AuditReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([_cell(r, c) for c in CSV_COLUMNS])
    return buf.getvalue()


TABLE_COLUMNS = ("model", "NR", "NP", "NO", "Total", "PO", "TO", "TB", "TC", "TR", "BS", "RS", "RM", "IR", "IL", "PL", "IG", "PG", "EX")
TABLE_WIDTH = 119


def _short(v) -> str:
    if isinstance(v, Fraction):
        return f"{float(v):.2f}"
    return str(v)


def to_table(reports: Sequence[AuditReport]) -> str:
    rows = []
    for r in reports:
        row = []
        for c in TABLE_COLUMNS:
            v = getattr(r, c)
            row.append(_ms(v) if c in TIMING_FIELDS else _short(v))
        rows.append(row)
    return _render(TABLE_COLUMNS, rows)


def _render(header: Sequence[str], rows: list[list[str]]) -> str:
    widths = [max([len(h)] + [len(r[k]) for r in rows]) for k, h in enumerate(header)]
    rest = sum(widths[1:]) + 2 * (len(widths) - 1)
    widths[0] = max(5, min(widths[0], TABLE_WIDTH - rest))

    def line(cells):
        first = cells[0] if len(cells[0]) <= widths[0] else cells[0][: widths[0] - 1] + "~"
        parts = [first.ljust(widths[0])] + [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join(parts).rstrip()

    out = [line(list(header)), "  ".join("-" * w for w in widths)]
    out += [line(r) for r in rows]
    return "\n".join(out) + "\n"


def serialize(reports: Sequence[AuditReport] | AuditReport, fmt: str = "json-lines") -> bytes:
    if isinstance(reports, AuditReport):
        reports = [reports]
    if fmt == "json-lines":
        text = to_json_lines(reports)
    elif fmt == "csv":
        text = to_csv(reports)
    elif fmt == "human-table":
        text = to_table(reports)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return text.encode("utf-8")


def parse_json_lines(text: str) -> list[AuditReport]:
    return [AuditReport.from_json(json.loads(line)) for line in text.splitlines() if line.strip()]


def parse_csv(text: str) -> list[AuditReport]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        d: dict = {"model": row["model"], "flags": [f for f in row["flags"].split(";") if f]}
        for c in CSV_COLUMNS[1:-1]:
            v = row[c]
            if c in ("PO", "PL", "PG"):
                d[c] = Fraction(v)
            elif c in TIMING_FIELDS:
                d[c] = float(v)
            elif c == "DR":
                d[c] = int(v) if v else None
            else:
                d[c] = int(v)
        out.append(AuditReport(**d))
    return out


# -- aggregation ---------------------------------------------------------------

AGGREGATE_COLUMNS = (
    "model", "DS", "EX", "NR", "NP", "NO", "PO", "TO", "TB", "TC", "TR", "BS", "RS", "RM", "IR", "IL", "PL", "IG", "PG",
)
_MEANS = ("NR", "NP", "NO", "PO", "TO", "TB", "TC", "TR", "BS", "RS", "RM")


@dataclass
class ModelSummary:
    model: str
    DS: int
    EX: int
    means: dict[str, Fraction]
    IR: int
    IL: int
    PL: Fraction
    IG: int
    PG: Fraction

    def row(self) -> list[str]:
        out = [self.model, str(self.DS), str(self.EX)]
        out += [f"{float(self.means[c]):.3f}" for c in _MEANS]
        out += [str(self.IR), str(self.IL), f"{float(self.PL):.3f}", str(self.IG), f"{float(self.PG):.3f}"]
        return out


def _mean(xs: list) -> Fraction:
    xs = [Fraction(x) if not isinstance(x, float) else Fraction(_ms(x)) for x in xs]
    return sum(xs, Fraction(0)) / len(xs) if xs else Fraction(0)


def aggregate(reports: Iterable[AuditReport]) -> list[ModelSummary]:
    """One summary per model tag; timed-out instances only count towards DS and EX.

    PL (PG) is averaged over instances with at least one locally (globally)
    redundant literal.
    """
    groups: dict[str, list[AuditReport]] = defaultdict(list)
    for r in reports:
        groups[r.model].append(r)
    out = []
    for model in sorted(groups):
        rs = groups[model]
        done = [r for r in rs if not r.EX]
        means = {c: _mean([getattr(r, c) for r in done]) for c in _MEANS}
        out.append(
            ModelSummary(
                model, len(rs), len(rs) - len(done), means,
                sum(r.IR for r in done),
                sum(r.IL for r in done), _mean([r.PL for r in done if r.IL]),
                sum(r.IG for r in done), _mean([r.PG for r in done if r.IG]),
            )
        )
    return out


def serialize_summaries(summaries: Sequence[ModelSummary], fmt: str = "csv") -> bytes:
    rows = [s.row() for s in summaries]
    if fmt == "human-table":
        return _render(AGGREGATE_COLUMNS, rows).encode("utf-8")
    if fmt == "json-lines":
        return "".join(json.dumps(dict(zip(AGGREGATE_COLUMNS, r))) + "\n" for r in rows).encode("utf-8")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGGREGATE_COLUMNS)
    w.writerows(rows)
    return buf.getvalue().encode("utf-8")
