"""Command-line interface.

Every option can also be set through an environment variable named
``DSAUDIT_<OPTION>`` (upper case, dashes as underscores), for example
``DSAUDIT_BUDGET_SECS=60``. Flags win over the environment.

Exit codes of ``audit``: 0 clean, 2 negative overlap found, 3 budget
exhausted, 1 input or usage error.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import click

from dsaudit import __version__
from dsaudit.analysis import AuditConfig, OrderPolicy, QueryEngine, audit, simplify
from dsaudit.background import BackgroundMode, background_for
from dsaudit.explain import Kind, Refusal, explain as explain_point, parse_point
from dsaudit.ingest import RuleFile, RuleFileError, load_model, serialize_rules
from dsaudit.model import ModelError, TieBreak
from dsaudit.oracle import GridTooLarge
from dsaudit.report import (
    FORMATS,
    aggregate as aggregate_reports,
    exit_code,
    parse_csv,
    parse_json_lines,
    report_from_audit,
    report_from_simplify,
    serialize,
    serialize_summaries,
)
from dsaudit.sat import DimacsError, format_dimacs

log = logging.getLogger("dsaudit")

KINDS = ("rules", "tree", "anchors")


class InputError(click.ClickException):
    exit_code = 1


def _env(name: str) -> str:
    return "DSAUDIT_" + name.upper().replace("-", "_")


def _opt(*decls, **kw):
    name = decls[0].lstrip("-")
    kw.setdefault("show_default", True)
    return click.option(*decls, envvar=_env(name), **kw)


def _input_opts(f):
    f = _opt("--kind", type=click.Choice(KINDS), default="rules", help="Input format.")(f)
    f = _opt("--tie-break", type=click.Choice([t.value for t in TieBreak]), default=None,
             help="Override the model's tie-break strategy.")(f)
    f = _opt("--bk-mode", type=click.Choice([m.value for m in BackgroundMode]),
             default=BackgroundMode.COMPLETE_ORDER.value, help="Background theory.")(f)
    return f


def _load(path: str, kind: str, tie_break: str | None) -> RuleFile:
    try:
        rf = load_model(path, kind)
    except (RuleFileError, ModelError, DimacsError) as exc:
        raise InputError(f"{path}: {exc}" if path not in str(exc) else str(exc)) from None
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: malformed input ({exc})") from None
    if tie_break:
        rf = RuleFile(dataclasses.replace(rf.ds, tie_break=TieBreak(tie_break)), rf.constraints)
    return rf


def _write(out: str | None, data: bytes) -> None:
    if out in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    try:
        Path(out).write_bytes(data)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc}") from None


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="dsaudit")
@_opt("--log-level", type=click.Choice(["debug", "info", "warning", "error"]), default="warning")
def cli(log_level):
    """Audit decision sets for overlap and redundancy."""
    logging.basicConfig(level=log_level.upper(), format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


@cli.command("audit")
@_opt("--input", "inputs", multiple=True, required=True, type=click.Path(dir_okay=False), help="Model file (repeatable).")
@_input_opts
@_opt("--budget-secs", type=click.FloatRange(min=0, min_open=True), default=3600.0, help="Seconds per decision set.")
@_opt("--budget-conflicts", type=click.IntRange(min=0), default=0, help="SAT conflicts per decision set (0: unlimited).")
@_opt("--order-policy", type=click.Choice([p.value for p in OrderPolicy]), default=OrderPolicy.ASCENDING.value)
@_opt("--jobs", type=click.IntRange(min=1), default=1, help="Worker processes for overlap queries.")
@_opt("--format", "fmt", type=click.Choice(FORMATS), default="json-lines")
@_opt("--out", type=click.Path(dir_okay=False), default=None, help="Report path (default: stdout).")
@_opt("--seed", type=int, default=0, help="Solver seed.")
@_opt("--timings", type=click.Choice(["wall", "off"]), default="wall", help="Record wall-clock timings or zeros.")
@_opt("--tag", default=None, help="Model tag for the report (default: input file stem).")
@_opt("--positive-overlap/--no-positive-overlap", default=False, help="Also check same-outcome pairs.")
def audit_cmd(inputs, kind, tie_break, bk_mode, budget_secs, budget_conflicts, order_policy, jobs, fmt, out, seed, timings, tag, positive_overlap):
    """Overlap, then redundant rules, then redundant literals."""
    config = AuditConfig(
        bk_mode=BackgroundMode(bk_mode),
        budget_seconds=budget_secs,
        budget_conflicts=budget_conflicts,
        order_policy=OrderPolicy(order_policy),
        jobs=jobs,
        seed=seed,
        positive_overlap=positive_overlap,
    )
    reports = []
    for path in inputs:
        rf = _load(path, kind, tie_break)
        result = audit(rf.ds, rf.constraints, config)
        if timings == "off":
            result.timings = {k: 0.0 for k in result.timings}
        reports.append(report_from_audit(result, tag or Path(path).stem))
    _write(out, serialize(reports, fmt))
    codes = [exit_code(r) for r in reports]
    sys.exit(3 if 3 in codes else max(codes))


def _parse_point_option(text: str) -> dict:
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"--point: invalid JSON ({exc.msg})") from None
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise InputError(f"--point: expected name=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


@cli.command("explain")
@_opt("--input", required=True, type=click.Path(dir_okay=False))
@_input_opts
@_opt("--point", required=True, help="Instance as name=value,... or a JSON object.")
@_opt("--rule", type=click.IntRange(min=1), default=None, help="Rule to explain through (default: first that fires).")
@_opt("--type", "xtype", type=click.Choice([k.value for k in Kind]), default=Kind.AXP.value)
@_opt("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@_opt("--out", type=click.Path(dir_okay=False), default=None)
@_opt("--seed", type=int, default=0)
def explain_cmd(input, kind, tie_break, bk_mode, point, rule, xtype, fmt, out, seed):
    """Abductive explanation of one prediction, or a refusal with certificate."""
    rf = _load(input, kind, tie_break)
    try:
        pt = parse_point(rf.ds, _parse_point_option(point))
    except ModelError as exc:
        raise InputError(f"--point: {exc}") from None
    bk = background_for(rf.ds, bk_mode, rf.constraints)
    try:
        if rule is not None:
            rf.ds.rule(rule)
    except KeyError:
        raise InputError(f"--rule: no rule {rule}") from None
    res = explain_point(rf.ds, bk, pt, xtype, rule, QueryEngine(bk, seed=seed))
    if fmt == "json":
        data = json.dumps(res.to_json(), ensure_ascii=False) + "\n"
    elif isinstance(res, Refusal):
        data = str(res) + "\n"
        cert = res.certificate.to_json()
        if cert:
            data += "certificate: " + json.dumps(cert, ensure_ascii=False) + "\n"
    else:
        data = f"{res.kind.value}: {', '.join(res.features)}\n"
        data += f"outcome: {res.to_json()['outcome']} (rule {res.rule}: {' and '.join(res.justification)})\n"
    _write(out, data.encode("utf-8"))


@cli.command("simplify")
@_opt("--input", required=True, type=click.Path(dir_okay=False))
@_input_opts
@_opt("--order-policy", type=click.Choice([p.value for p in OrderPolicy]), default=OrderPolicy.ASCENDING.value)
@_opt("--out", type=click.Path(dir_okay=False), default=None, help="Simplified rule file (default: stdout).")
@_opt("--findings", type=click.Path(dir_okay=False), default=None, help="Findings log (json-lines).")
@_opt("--report", type=click.Path(dir_okay=False), default=None, help="Statistics report (json-lines).")
@_opt("--budget-secs", type=click.FloatRange(min=0, min_open=True), default=3600.0)
@_opt("--budget-conflicts", type=click.IntRange(min=0), default=0)
@_opt("--seed", type=int, default=0)
def simplify_cmd(input, kind, tie_break, bk_mode, order_policy, out, findings, report, budget_secs, budget_conflicts, seed):
    """Remove redundant rules and literals; write the simplified model."""
    from dsaudit.analysis import BudgetTracker

    rf = _load(input, kind, tie_break)
    t0 = time.perf_counter()
    bk = background_for(rf.ds, bk_mode, rf.constraints)
    engine = QueryEngine(bk, BudgetTracker(budget_conflicts, budget_secs), seed=seed)
    result = simplify(rf.ds, bk, OrderPolicy(order_policy), engine)
    _write(out, serialize_rules(RuleFile(result.ds, rf.constraints)).encode("utf-8"))
    if findings:
        _write(findings, "".join(json.dumps(f.to_json(), ensure_ascii=False) + "\n" for f in result.findings).encode("utf-8"))
    if report:
        rep = report_from_simplify(rf.ds, bk, result, Path(input).stem, {"TR": time.perf_counter() - t0})
        _write(report, serialize(rep, "json-lines"))
    click.echo(
        f"removed {len(result.findings)} item(s); {result.ds.size} of {rf.ds.size} literals kept"
        + (" (partial: budget exhausted)" if result.partial else ""),
        err=True,
    )


@cli.command("export-cnf")
@_opt("--input", required=True, type=click.Path(dir_okay=False))
@_input_opts
@_opt("--out", type=click.Path(dir_okay=False), default=None)
def export_cnf_cmd(input, kind, tie_break, bk_mode, out):
    """Background theory as DIMACS, with an atom legend in comments."""
    rf = _load(input, kind, tie_break)
    bk = background_for(rf.ds, bk_mode, rf.constraints)
    _write(out, format_dimacs(bk.cnf()).encode("utf-8"))


def _report_files(paths) -> list[Path]:
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            files += sorted(q for q in p.iterdir() if q.suffix in (".jsonl", ".json", ".csv") and q.is_file())
        else:
            files.append(p)
    return files


@cli.command("aggregate")
@_opt("--input", "inputs", multiple=True, required=True, type=click.Path(), help="Report file or directory (repeatable).")
@_opt("--format", "fmt", type=click.Choice(FORMATS), default="csv")
@_opt("--out", type=click.Path(dir_okay=False), default=None)
def aggregate_cmd(inputs, fmt, out):
    """Per-model averages over instance reports, excluding timeouts."""
    reports = []
    for f in _report_files(inputs):
        try:
            text = f.read_text(encoding="utf-8")
            reports += parse_csv(text) if f.suffix == ".csv" else parse_json_lines(text)
        except OSError as exc:
            raise InputError(f"cannot read {f}: {exc}") from None
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"{f}: not a report ({exc})") from None
    _write(out, serialize_summaries(aggregate_reports(reports), fmt))


def main(argv=None) -> int:
    """Entry point; usage errors exit 1 so that 2 and 3 stay audit verdicts."""
    try:
        rv = cli.main(args=argv, prog_name="dsaudit", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except GridTooLarge as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else (0 if exc.code is None else 1)
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
