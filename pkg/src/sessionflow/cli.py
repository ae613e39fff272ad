"""Command-line front end: ``sessionflow <command> FILE ...``.

Exit status is 0 when the analysis succeeds (well typed, related, ...),
1 when it comes out negative (parse or type error, not related) and 2 for
usage and I/O problems.  ``--json`` switches every command to a single
JSON document described by ``schema/report.schema.json``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .checker import IllTyped, Judgment, check, check_closed
from .lattice import UnknownLevel
from .security import (
    ContextSpec,
    dsni_equivalent,
    observably_equivalent,
    relevant,
    secrecy_mode,
    term_related,
)
from .semantics import Network, enumerate_redexes, normal_form, reachable_states
from .surface import ParseError, ProcessDecl, SourceFile, parse_file, print_context_entries, print_process

OK, NEGATIVE, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class Report:
    command: str
    file: str
    exit_code: int = OK
    lines: List[str] = field(default_factory=list)
    result: Dict[str, Any] = field(default_factory=dict)
    diagnostics: List[Dict[str, Any]] = field(default_factory=list)

    def diag(self, severity, message, span=None):
        d = {"severity": severity, "message": message, "file": self.file}
        if span is not None:
            d.update(line=span.line, col=span.col, end_line=span.end_line, end_col=span.end_col)
            self.lines.append(f"{self.file}:{span.line}:{span.col}: {severity}: {message}")
        else:
            self.lines.append(f"{self.file}: {severity}: {message}")
        self.diagnostics.append(d)

    def to_json(self) -> dict:
        status = {OK: "ok", NEGATIVE: "negative"}.get(self.exit_code, "error")
        return {
            "command": self.command,
            "file": self.file,
            "exit_code": self.exit_code,
            "status": status,
            "diagnostics": self.diagnostics,
            "result": self.result,
        }


def _color_on() -> bool:
    env = os.environ.get("SESSIONFLOW_COLOR")
    if env is not None:
        return env == "1"
    return False


def _mark(ok: bool) -> str:
    word = "OK" if ok else "FAIL"
    if _color_on():
        return f"\033[{32 if ok else 31}m{word}\033[0m"
    return word


# --------------------------------------------------------------------------
# loading


def _load(path: str, report: Report, lattice_path: Optional[str]) -> Optional[SourceFile]:
    try:
        sf = parse_file(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}")
    except ParseError as exc:
        for d in exc.diagnostics:
            report.diag(d.severity, d.message, d.span)
        report.exit_code = NEGATIVE
        return None
    if lattice_path:
        try:
            override = parse_file(lattice_path)
        except OSError as exc:
            raise UsageError(f"cannot read {lattice_path}: {exc.strerror}")
        except ParseError as exc:
            raise UsageError(f"bad lattice file {lattice_path}: {exc}")
        sf = SourceFile(override.lattice, sf.type_aliases, sf.decls)
    return sf


def _decl(sf: SourceFile, name: str) -> ProcessDecl:
    try:
        return sf.decl(name)
    except KeyError:
        raise UsageError(f"no declaration named {name}; known: {', '.join(sf.names) or 'none'}")


def _observer(sf: SourceFile, level: str) -> str:
    if level not in sf.lattice.levels:
        raise UsageError(f"observer level {level} is not in the lattice {sorted(sf.lattice.levels)}")
    return level


def _judgment(sf: SourceFile, d: ProcessDecl) -> Judgment:
    return Judgment(sf.lattice, d.body, d.running, d.interface)


def _judgment_text(d: ProcessDecl) -> str:
    ctx = print_context_entries(d.interface) or "."
    return f"|- {d.name} @ {d.running} :: {ctx}"


def _issue_dict(issue, file) -> dict:
    out = {"kind": issue.kind, "rule": issue.rule, "message": issue.message}
    if issue.span is not None:
        out.update(line=issue.span.line, col=issue.span.col)
    return out


def _report_issues(report: Report, exc: IllTyped):
    for issue in exc.issues:
        report.diag("error", f"{issue.kind} ({issue.rule}): {issue.message}", issue.span)


# --------------------------------------------------------------------------
# commands


def cmd_check(args, report: Report, sf: SourceFile):
    decls = [_decl(sf, args.decl)] if args.decl else [d for d in sf.decls if not d.is_context]
    if not decls:
        raise UsageError("no process declarations to check")
    out = []
    for d in decls:
        entry = {"decl": d.name, "judgment": _judgment_text(d)}
        try:
            deriv = check(sf.lattice, d.body, d.running, d.interface)
        except IllTyped as exc:
            report.exit_code = NEGATIVE
            report.lines.append(f"{_mark(False)} {_judgment_text(d)}")
            _report_issues(report, exc)
            entry.update(ok=False, rules=[], side_conditions=[],
                         issues=[_issue_dict(i, report.file) for i in exc.issues])
            out.append(entry)
            continue
        except UnknownLevel as exc:
            raise UsageError(f"unknown secrecy level {exc}")
        conds = sorted({c for n in deriv.walk() for c in n.side_conditions if "<=" in c})
        rules = sorted({n.rule for n in deriv.walk()})
        report.lines.append(f"{_mark(True)} {_judgment_text(d)}")
        report.lines.append(f"   secrecy conditions: {', '.join(conds) if conds else 'none'}")
        if args.trace:
            report.lines.extend("   " + ln for ln in deriv.trace_lines())
        entry.update(ok=True, rules=rules, side_conditions=conds, issues=[])
        out.append(entry)
    report.result = {"judgments": out}


def _closed_decl(sf, name, report) -> Optional[ProcessDecl]:
    d = _decl(sf, name)
    if len(d.interface):
        raise UsageError(f"{name} is not closed: its interface is {print_context_entries(d.interface)}")
    try:
        check_closed(sf.lattice, d.body, d.running)
    except IllTyped as exc:
        report.exit_code = NEGATIVE
        _report_issues(report, exc)
        return None
    return d


def cmd_reduce(args, report: Report, sf: SourceFile):
    d = _closed_decl(sf, args.decl, report)
    if d is None:
        return
    if args.all_states:
        seen, status = reachable_states(d.body)
        states = []
        for k in sorted(seen):
            st = status.get(k, "reducible")
            states.append({"process": print_process(seen[k]), "status": st})
        states.sort(key=lambda s: (s["status"], s["process"]))
        for s in states:
            report.lines.append(f"[{s['status']}] {s['process']}")
        counts = {s: sum(1 for x in states if x["status"] == s) for s in ("finished", "deadlocked", "reducible")}
        report.lines.append(f"{len(states)} states: {counts['finished']} finished, "
                            f"{counts['deadlocked']} deadlocked")
        report.result = {"decl": d.name, "mode": "all-states", "states": states, "counts": counts}
        return
    p = d.body
    steps = []
    report.lines.append(f"   {print_process(p)}")
    for _ in range(args.steps):
        reps = enumerate_redexes(p)
        if not reps:
            break
        rep = reps[0]
        p = rep.reduct
        steps.append({"step": rep.step_line(), "process": print_process(p),
                      "alternatives": len(reps) - 1})
        report.lines.append(rep.step_line())
        report.lines.append(f"   {print_process(p)}")
    final = "reducible" if enumerate_redexes(p) else ("finished" if not normal_form(p).nodes else "deadlocked")
    report.lines.append(f"status: {final}")
    report.result = {"decl": d.name, "mode": "steps", "steps": steps, "final": print_process(p), "status": final}


def cmd_nf(args, report: Report, sf: SourceFile):
    from .canon import canonical_key

    d = _decl(sf, args.decl)
    nf = normal_form(d.body)
    binders = [f"new ({b.x} : {b.type} [{b.level}]) {b.y}" if b.type is not None else f"new {b.x} {b.y}"
               for b in nf.binders]
    nodes = [print_process(n) for n in nf.nodes]
    report.lines.append(f"binders ({len(binders)}):")
    report.lines.extend(f"   {b}" for b in binders)
    report.lines.append(f"nodes ({len(nodes)}):")
    report.lines.extend(f"   {n}" for n in nodes)
    key = canonical_key(d.body)
    report.lines.append(f"key: {key}")
    report.result = {"decl": d.name, "binders": binders, "nodes": nodes, "key": key}


def _typed(sf, d, report) -> bool:
    try:
        check(sf.lattice, d.body, d.running, d.interface)
        return True
    except IllTyped as exc:
        report.exit_code = NEGATIVE
        _report_issues(report, exc)
        return False


def cmd_relevant(args, report: Report, sf: SourceFile):
    xi = _observer(sf, args.observer)
    d = _decl(sf, args.decl)
    if not _typed(sf, d, report):
        return
    nf = normal_form(d.body)
    res = relevant(sf.lattice, xi, nf, d.interface, d.running)
    nodes = [print_process(n) for n in res.relevant_nodes]
    binders = [f"{b.x} {b.y}" for b in res.relevant_binders]
    form = print_process(res.relevant_form)
    quasi = [{"node": print_process(nf.nodes[i]), "level": lv} for i, lv in res.levels]
    report.lines.append(f"observer: {xi}")
    report.lines.append(f"relevant nodes ({len(nodes)} of {len(nf.nodes)}):")
    report.lines.extend(f"   {n}" for n in nodes)
    report.lines.append(f"relevant binders: {', '.join('(' + b + ')' for b in binders) or 'none'}")
    report.lines.append(f"relevant form: {form}")
    if args.trace:
        report.lines.append("quasi-running secrecy:")
        report.lines.extend(f"   {q['level']}  {q['node']}" for q in quasi)
    report.result = {"decl": d.name, "observer": xi, "nodes": nodes, "binders": binders,
                     "form": form, "quasi": quasi}


def cmd_obseq(args, report: Report, sf: SourceFile):
    xi = _observer(sf, args.observer)
    d1, d2 = _decl(sf, args.left), _decl(sf, args.right)
    notes = []
    for d in (d1, d2):
        try:
            _, note = secrecy_mode(sf.lattice, _judgment(sf, d))
        except IllTyped as exc:
            report.exit_code = NEGATIVE
            _report_issues(report, exc)
            return
        if note:
            notes.append(f"{d.name}: {note}")
    eq = observably_equivalent(sf.lattice, xi, _judgment(sf, d1), _judgment(sf, d2))
    report.lines.append(f"{d1.name} {'~' if eq else '/~'} {d2.name} at {xi}")
    report.lines.extend(f"   note: {n}" for n in notes)
    report.exit_code = OK if eq else NEGATIVE
    report.result = {"left": d1.name, "right": d2.name, "observer": xi, "equivalent": eq, "notes": notes}


def _verdict_lines(report, v, trace):
    report.lines.append(f"{_mark(v.related)} {'related' if v.related else 'not related'}")
    if not v.related:
        where = f" on {v.interface_name}" if v.interface_name else ""
        report.lines.append(f"   failed clause: {v.failed_clause}{where}")
        if v.message:
            report.lines.append(f"   {v.message}")
        if v.contexts is not None:
            report.lines.append(f"   E1 = {print_process(v.contexts[0])}")
            report.lines.append(f"   E2 = {print_process(v.contexts[1])}")
        if v.witness is not None:
            for side, n in zip(("left", "right"), v.witness):
                report.lines.append(f"   witness {side}: {n.describe()}")
        if trace:
            report.lines.extend(f"   {ln}" for ln in v.witness_trace)
    for note in v.notes:
        report.lines.append(f"   note: {note}")


def cmd_relate(args, report: Report, sf: SourceFile):
    xi = _observer(sf, args.observer)
    d1, d2 = _decl(sf, args.left), _decl(sf, args.right)
    e1 = _decl(sf, args.ctx)
    e2 = _decl(sf, args.ctx2 or args.ctx)
    for e in (e1, e2):
        if not e.is_context:
            raise UsageError(f"{e.name} has no hole")
    try:
        n1 = Network.from_parts(e1.body, d1.body, sf.lattice, xi)
        n2 = Network.from_parts(e2.body, d2.body, sf.lattice, xi)
    except ValueError as exc:
        raise UsageError(str(exc))
    v = term_related(n1, n2)
    _verdict_lines(report, v, args.trace)
    report.exit_code = OK if v.related else NEGATIVE
    report.result = {"left": d1.name, "right": d2.name, "observer": xi, "verdict": v.to_dict()}


def cmd_dsni(args, report: Report, sf: SourceFile):
    xi = _observer(sf, args.observer)
    d1 = _decl(sf, args.left)
    d2 = _decl(sf, args.right or args.left)
    spec = ContextSpec(depth=args.enumerate, max_pairs=args.max_pairs, strict=args.strict)
    if args.contexts:
        try:
            cf = parse_file(args.contexts)
        except OSError as exc:
            raise UsageError(f"cannot read {args.contexts}: {exc.strerror}")
        except ParseError as exc:
            for dg in exc.diagnostics:
                report.diag(dg.severity, dg.message, dg.span)
            report.exit_code = NEGATIVE
            return
        ctxs = [c.body for c in cf.decls if c.is_context]
        if not ctxs:
            raise UsageError(f"{args.contexts} declares no contexts (declarations with a hole)")
        spec.pairs = [(a, b) for a in ctxs for b in ctxs]
    try:
        v = dsni_equivalent(sf.lattice, xi, _judgment(sf, d1), _judgment(sf, d2), spec)
    except IllTyped as exc:
        report.exit_code = NEGATIVE
        _report_issues(report, exc)
        return
    source = f"contexts from {args.contexts}" if args.contexts else f"contexts enumerated to depth {args.enumerate}"
    report.lines.append(f"{d1.name} vs {d2.name} at {xi}, {source}: "
                        f"{v.pairs_checked} pairs checked, {v.pairs_skipped} skipped")
    _verdict_lines(report, v, args.trace)
    report.exit_code = OK if v.related else NEGATIVE
    report.result = {"left": d1.name, "right": d2.name, "observer": xi, "verdict": v.to_dict()}


COMMANDS = {
    "check": cmd_check,
    "reduce": cmd_reduce,
    "nf": cmd_nf,
    "relevant": cmd_relevant,
    "obseq": cmd_obseq,
    "relate": cmd_relate,
    "dsni": cmd_dsni,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one JSON report")
    common.add_argument("--trace", action="store_true", help="include derivations and step traces")
    common.add_argument("--lattice", metavar="FILE", help="take the lattice from another .sp file")

    ap = argparse.ArgumentParser(prog="sessionflow", description="Session-typed processes with secrecy levels.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="typecheck declarations")
    p.add_argument("file")
    p.add_argument("--decl", metavar="NAME")

    p = sub.add_parser("reduce", parents=[common], help="reduce a closed declaration")
    p.add_argument("file")
    p.add_argument("--decl", metavar="NAME", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--steps", type=int, default=1, metavar="N")
    g.add_argument("--all-states", action="store_true")

    p = sub.add_parser("nf", parents=[common], help="normal form and canonical key")
    p.add_argument("file")
    p.add_argument("--decl", metavar="NAME", required=True)

    p = sub.add_parser("relevant", parents=[common], help="relevant nodes and binders")
    p.add_argument("file")
    p.add_argument("--decl", metavar="NAME", required=True)
    p.add_argument("--observer", metavar="LEVEL", required=True)

    p = sub.add_parser("obseq", parents=[common], help="observable equivalence of two declarations")
    p.add_argument("file")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--observer", metavar="LEVEL", required=True)

    p = sub.add_parser("relate", parents=[common], help="relate two processes in given contexts")
    p.add_argument("file")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--ctx", metavar="NAME", required=True, help="context declaration for the left process")
    p.add_argument("--ctx2", metavar="NAME", help="context for the right process (default: --ctx)")
    p.add_argument("--observer", metavar="LEVEL", required=True)

    p = sub.add_parser("dsni", parents=[common], help="equivalence up to observable messages")
    p.add_argument("file")
    p.add_argument("left")
    p.add_argument("right", nargs="?")
    p.add_argument("--observer", metavar="LEVEL", required=True)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--enumerate", type=int, default=2, metavar="DEPTH")
    src.add_argument("--contexts", metavar="FILE")
    p.add_argument("--max-pairs", type=int, default=64)
    p.add_argument("--strict", action="store_true", help="fail when a context does not close a process")
    return ap


def run(argv: Optional[List[str]] = None):
    """Parse ``argv`` and run the command; returns ``(report, args)``."""
    args = build_parser().parse_args(argv)
    report = Report(args.command, getattr(args, "file", ""))
    try:
        sf = _load(args.file, report, args.lattice)
        if sf is not None:
            COMMANDS[args.command](args, report, sf)
    except UsageError as exc:
        report.exit_code = USAGE
        report.diag("error", str(exc))
    return report, args


def main(argv: Optional[List[str]] = None) -> int:
    report, args = run(argv)
    if args.json:
        sys.stdout.write(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    else:
        out = sys.stderr if report.exit_code == USAGE else sys.stdout
        for line in report.lines:
            print(line, file=out)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
