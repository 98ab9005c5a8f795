"""Command-line interface.

Subcommands:

* ``run``       — evaluate a program under one of the four semanticses
* ``trace``     — print the small-step transition sequence
* ``classify``  — decide converged / exception / stuck / proven-divergent
* ``compare``   — differential run of all four evaluators on one program
* ``fuzz``      — seeded differential campaign over generated programs
* ``rules``     — work with rule files: thread flags, count, check
* ``cert``      — re-check a saved divergence certificate

Exit status: 0 on success (including agreement and valid certificates),
1 on differential disagreement or an invalid certificate, 2 on usage,
parse, or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .big_step import Done, StuckB, eval_big
from .coinduction import (
    Abstraction,
    AbstractionUnsound,
    DEFAULT_CHECK_FUEL,
    Lasso,
    SYSTEMS,
    certificate_from_json,
    certificate_to_json,
    detect_lasso,
    graph_error,
    lasso_error,
    prove_divergence,
)
from .flag_based import FlagResult, StuckF, eval_flag
from .harness import (
    DEFAULT_WEIGHTS,
    GenConfig,
    compare_all,
    default_streams,
    fuzz_campaign,
)
from .parser import ParseError, parse_cmd, parse_stream, pretty_cmd
from .pretty_big import DoneP, StuckP, eval_pretty
from .rule_dsl import (
    RuleParseError,
    count_metrics,
    load_ruleset,
    parse_rules,
    pretty_rules,
    thread_flags,
)
from .small_step import SmallConfig, run_star
from .syntax import (
    Converged,
    ConvO,
    DOWN,
    Down,
    EMPTY_STORE,
    EMPTY_STREAM,
    Exc,
    ExceptionV,
    Plain,
    Stuck,
    Unknown,
    format_store,
    format_val,
    format_verdict,
    store_to_json,
    stream_to_json,
)

SEMANTICS = ("small", "big", "pretty", "flag")


class CliError(Exception):
    """An input problem that should terminate with exit status 2."""


def _read_program(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror or e}") from e
    try:
        return parse_cmd(text)
    except ParseError as e:
        raise CliError(f"{path}: parse error: {e}") from e


def _read_stream(text):
    if text is None:
        return EMPTY_STREAM
    try:
        return parse_stream(text)
    except ParseError as e:
        raise CliError(f"bad --input value: {e}") from e


def _read_abstraction(text) -> Abstraction:
    if not text:
        return Abstraction.none()
    names = tuple(part.strip() for part in text.split(",") if part.strip())
    return Abstraction.of(*names)


def _format_stream(s) -> str:
    return "[" + ",".join(format_val(v) for v in s.remaining()) + "]"


def _run_verdict(c, semantics: str, stream, fuel: int):
    """Evaluate under one semantics, normalized to a verdict."""
    if semantics == "small":
        verdict, _ = run_star(SmallConfig(c, EMPTY_STORE, stream), fuel)
        return verdict
    if semantics == "big":
        r = eval_big(c, EMPTY_STORE, stream, fuel)
        if isinstance(r, Done):
            return Converged(r.store)
        if isinstance(r, StuckB):
            return Stuck(r.reason)
        return Unknown(fuel)
    if semantics == "pretty":
        r = eval_pretty(Plain(c), EMPTY_STORE, stream, fuel)
        if isinstance(r, DoneP):
            if isinstance(r.outcome, ConvO):
                return Converged(r.outcome.store)
            return Stuck("divergent outcome from a source program")
        if isinstance(r, StuckP):
            return Stuck(r.reason)
        return Unknown(fuel)
    r = eval_flag(c, EMPTY_STORE, DOWN, stream, fuel)
    if isinstance(r, FlagResult):
        if isinstance(r.status, Down):
            return Converged(r.store)
        if isinstance(r.status, Exc):
            return ExceptionV(r.status.value, r.status.at)
        return Stuck("divergence flag from a normal start")
    if isinstance(r, StuckF):
        return Stuck(r.reason)
    return Unknown(fuel)


def _verdict_text(v) -> str:
    if isinstance(v, Converged):
        return f"⇓ {format_store(v.store)}"
    if isinstance(v, ExceptionV):
        return f"↯ {format_val(v.value)} {format_store(v.at)}"
    if isinstance(v, Stuck):
        return f"stuck: {v.reason}"
    return f"out of fuel (limit {v.fuel_spent})"


def _verdict_json(v) -> dict:
    if isinstance(v, Converged):
        return {"verdict": "converged", "store": store_to_json(v.store)}
    if isinstance(v, ExceptionV):
        return {
            "verdict": "exception",
            "value": format_val(v.value),
            "store": store_to_json(v.at),
        }
    if isinstance(v, Stuck):
        return {"verdict": "stuck", "reason": v.reason}
    return {"verdict": "unknown", "fuel": v.fuel_spent}


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_run(args) -> int:
    c = _read_program(args.file)
    stream = _read_stream(args.input)
    verdict = _run_verdict(c, args.semantics, stream, args.fuel)
    if args.format == "json":
        payload = {"semantics": args.semantics, **_verdict_json(verdict)}
        print(json.dumps(payload, ensure_ascii=False))
    else:
        print(_verdict_text(verdict))
    return 0


def _cmd_trace(args) -> int:
    c = _read_program(args.file)
    stream = _read_stream(args.input)
    verdict, trace = run_star(SmallConfig(c, EMPTY_STORE, stream), args.fuel)
    if args.format == "json":
        payload = {
            "steps": [
                {
                    "cmd": pretty_cmd(cfg.cmd),
                    "store": store_to_json(cfg.store),
                    "stream": stream_to_json(cfg.stream),
                }
                for cfg in trace.configs
            ],
            **_verdict_json(verdict),
        }
        print(json.dumps(payload, ensure_ascii=False))
        return 0
    for i, cfg in enumerate(trace.configs):
        print(
            f"{i:4d}  ⟨{pretty_cmd(cfg.cmd)}, {format_store(cfg.store)}, "
            f"{_format_stream(cfg.stream)}⟩"
        )
    print(_verdict_text(verdict))
    return 0


def _cmd_classify(args) -> int:
    c = _read_program(args.file)
    stream = _read_stream(args.input)
    abstraction = _read_abstraction(args.abstract_vars)
    verdict = _run_verdict(c, "flag", stream, args.fuel)
    cert = None
    line = None
    payload: dict = {}
    if isinstance(verdict, Unknown):
        try:
            lasso = detect_lasso(SmallConfig(c, EMPTY_STORE, stream), args.fuel, abstraction)
        except AbstractionUnsound as e:
            raise CliError(f"unsound abstraction: {e}") from e
        if lasso is None:
            line = f"Unknown (no lasso within fuel {args.fuel})"
            payload = {"verdict": "unknown", "fuel": args.fuel}
        elif args.cert_system == "lasso":
            cert = lasso
            line = f"DivergesProven (lasso, cycle={len(lasso.cycle)})"
            payload = {"verdict": "diverges-proven", "cycle": len(lasso.cycle)}
        else:
            graph = prove_divergence(
                c, EMPTY_STORE, stream, args.cert_system, args.fuel, abstraction
            )
            if graph is None:
                line = (
                    f"Unknown (lasso found, but no {args.cert_system} certificate "
                    f"within fuel {args.fuel})"
                )
                payload = {"verdict": "unknown", "fuel": args.fuel}
            else:
                cert = graph
                line = (
                    f"DivergesProven ({args.cert_system} graph, "
                    f"{len(graph.nodes)} nodes)"
                )
                payload = {
                    "verdict": "diverges-proven",
                    "system": args.cert_system,
                    "nodes": len(graph.nodes),
                }
    else:
        line = format_verdict(verdict)
        payload = _verdict_json(verdict)
    if cert is not None and args.cert_out:
        Path(args.cert_out).write_text(
            json.dumps(certificate_to_json(cert), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
    if args.format == "json":
        print(json.dumps(payload, ensure_ascii=False))
    else:
        print(line)
    return 0


def _cmd_compare(args) -> int:
    c = _read_program(args.file)
    if args.input:
        streams = [_read_stream(text) for text in args.input]
    else:
        streams = default_streams(c)
    report = compare_all(c, streams, args.fuel)
    if args.format == "json":
        payload = {
            "program": pretty_cmd(c),
            "flag_only": report.flag_only,
            "agreement": report.agreement,
            "comparisons": [
                {
                    "stream": stream_to_json(comp.stream),
                    "verdicts": {k: format_verdict(v) for k, v in comp.verdicts.items()},
                    "provers": comp.provers,
                    "failures": comp.failures,
                }
                for comp in report.comparisons
            ],
        }
        print(json.dumps(payload, ensure_ascii=False))
        return 0 if report.agreement else 1
    for comp in report.comparisons:
        primary = "flag" if report.flag_only else "small"
        print(
            f"stream {_format_stream(comp.stream)}: "
            f"{format_verdict(comp.verdicts[primary])}"
        )
        for failure in comp.failures:
            print(f"  disagreement: {failure}")
    scope = "flag-based only (program uses throw/catch)" if report.flag_only else "4 semantics"
    status = "agreement" if report.agreement else "DISAGREEMENT"
    print(f"{status}: {scope}, {len(report.comparisons)} stream(s)")
    return 0 if report.agreement else 1


def _cmd_fuzz(args) -> int:
    weights = dict(DEFAULT_WEIGHTS)
    if not args.enable_while:
        weights["while"] = 0.0
    cfg = GenConfig(
        seed=args.seed,
        max_depth=args.depth,
        num_vars=args.vars,
        allow_input=args.enable_input,
        allow_throw=args.enable_throw,
        wellformed=args.wellformed,
        weights=weights,
    )
    summary = fuzz_campaign(cfg, args.count, args.fuel, out_dir=args.out)
    if args.format == "json":
        print(json.dumps(summary.to_json(), ensure_ascii=False))
        return 0 if summary.ok() else 1
    print(f"programs: {summary.total}")
    counts = " ".join(f"{k}={v}" for k, v in sorted(summary.verdict_counts.items()))
    print(f"verdicts: {counts or '(none)'}")
    print(f"flag-stuck: {summary.flag_stuck}")
    print(f"disagreements: {len(summary.disagreements)}")
    for seed, text, failures in summary.disagreements[:10]:
        print(f"  seed {seed}: {text}")
        for failure in failures:
            print(f"    {failure}")
    print(f"elapsed: {summary.elapsed:.1f}s")
    return 0 if summary.ok() else 1


def _read_ruleset(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        # a bare name that is not a file on disk may still be a bundled ruleset
        if "/" not in path and "\\" not in path:
            try:
                return load_ruleset(path)
            except (FileNotFoundError, ModuleNotFoundError):
                pass
        raise CliError(f"cannot read {path}: {e.strerror or e}") from e
    try:
        return parse_rules(text)
    except RuleParseError as e:
        where = f"{path}:{e.line}" if e.line is not None else path
        raise CliError(f"{where}: {e.message}") from e


def _cmd_rules_thread(args) -> int:
    rs = thread_flags(_read_ruleset(args.file))
    text = pretty_rules(rs)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="" if text.endswith("\n") else "\n")
    return 0


def _cmd_rules_count(args) -> int:
    rs = _read_ruleset(args.files[0])
    for path in args.files[1:]:
        try:
            rs = rs.union(_read_ruleset(path))
        except ValueError as e:
            raise CliError(f"cannot combine {path}: {e}") from e
    base = _read_ruleset(args.base) if args.base else None
    metrics = count_metrics(rs, base=base)
    if args.format == "json":
        payload = {"rules": metrics.rules, "premises": metrics.premises}
        if metrics.duplicates is not None:
            payload["duplicates"] = metrics.duplicates
        print(json.dumps(payload))
    else:
        print(str(metrics))
    return 0


def _cmd_rules_check(args) -> int:
    for path in args.files:
        rs = _read_ruleset(path)
        n_rules = len(rs.rules)
        n_premises = sum(len(r.premises) for r in rs.rules)
        print(f"{path}: ok ({n_rules} rules, {n_premises} premises)")
    return 0


def _cmd_cert_check(args) -> int:
    try:
        data = json.loads(Path(args.file).read_text(encoding="utf-8"))
        cert = certificate_from_json(data)
    except OSError as e:
        raise CliError(f"cannot read {args.file}: {e.strerror or e}") from e
    except (ValueError, KeyError, TypeError) as e:
        raise CliError(f"{args.file}: malformed certificate: {e}") from e
    if isinstance(cert, Lasso):
        error = lasso_error(cert)
        describe = f"lasso, cycle={len(cert.cycle)}"
    else:
        error = graph_error(cert, fuel=args.fuel)
        describe = f"{cert.system} graph, {len(cert.nodes)} nodes"
    if args.format == "json":
        payload = {"valid": error is None, "kind": describe}
        if error is not None:
            payload["error"] = error
        print(json.dumps(payload, ensure_ascii=False))
    elif error is None:
        print(f"valid certificate ({describe})")
    else:
        print(f"invalid certificate: {error}")
    return 0 if error is None else 1


# ---------------------------------------------------------------------------
# Argument parsing


def _add_common(p, fuel_default=10_000, with_input=True):
    p.add_argument("--fuel", type=int, default=fuel_default, help="evaluation step budget")
    if with_input:
        p.add_argument(
            "--input",
            help="input stream as comma-separated values, e.g. '1,0,null'",
        )
    p.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="whilesem",
        description="Workbench for a While language under four operational semanticses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evaluate a program")
    p.add_argument("file")
    p.add_argument("--semantics", choices=SEMANTICS, default="flag")
    _add_common(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("trace", help="print the small-step transition sequence")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("classify", help="classify a program's behaviour")
    p.add_argument("file")
    p.add_argument(
        "--abstract-vars",
        help="comma-separated variables to ignore when matching repeated states",
    )
    p.add_argument(
        "--cert-system",
        choices=("lasso",) + SYSTEMS,
        default="lasso",
        help="certificate kind to build for proven divergence",
    )
    p.add_argument("--cert-out", help="write the certificate as JSON to this path")
    _add_common(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("compare", help="run all four evaluators and cross-check")
    p.add_argument("file")
    p.add_argument("--fuel", type=int, default=10_000)
    p.add_argument(
        "--input",
        action="append",
        help="input stream to test (repeatable); default: all short binary streams",
    )
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("fuzz", help="differential campaign over generated programs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", "-n", type=int, default=1000)
    p.add_argument("--fuel", type=int, default=500)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--vars", type=int, default=3)
    p.add_argument("--enable-input", action="store_true")
    p.add_argument("--enable-throw", action="store_true")
    p.add_argument("--enable-while", action="store_true", default=True)
    p.add_argument(
        "--no-while", dest="enable_while", action="store_false",
        help="generate loop-free programs only",
    )
    p.add_argument("--wellformed", type=float, default=0.9)
    p.add_argument("--out", help="directory for counterexample programs")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_fuzz)

    p = sub.add_parser("rules", help="work with rule files")
    rsub = p.add_subparsers(dest="rules_command", required=True)

    q = rsub.add_parser("thread", help="make implicit flag plumbing explicit")
    q.add_argument("file")
    q.add_argument("--out", help="write the threaded rules to this path")
    q.set_defaults(func=_cmd_rules_thread)

    q = rsub.add_parser("count", help="count rules and premises")
    q.add_argument("files", nargs="+")
    q.add_argument("--base", help="count premises shared with this rule file as duplicates")
    q.add_argument("--format", choices=("text", "json"), default="text")
    q.set_defaults(func=_cmd_rules_count)

    q = rsub.add_parser("check", help="parse rule files and report")
    q.add_argument("files", nargs="+")
    q.set_defaults(func=_cmd_rules_check)

    p = sub.add_parser("cert", help="work with divergence certificates")
    csub = p.add_subparsers(dest="cert_command", required=True)

    q = csub.add_parser("check", help="re-check a saved certificate")
    q.add_argument("file")
    q.add_argument("--fuel", type=int, default=DEFAULT_CHECK_FUEL)
    q.add_argument("--format", choices=("text", "json"), default="text")
    q.set_defaults(func=_cmd_cert_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
