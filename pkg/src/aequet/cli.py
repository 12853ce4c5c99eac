"""Command-line client.

Loads a theory plus CSV relations, then runs a REPL (or replays a script)
against the HTTP service.  By default the service runs in-process; with
--server the same client talks to a remote instance, and with --serve the
process hosts one instead.

REPL inputs:
    ?- <form>        ask a question (kw(...) asks a meta-question,
                     lambda([X..], Body) asks a WH-question)
    !- <form>        run a command
    +- <form>        assert a statement
    :show-discourse  print the logical discourse context
    :quit            leave
"""

from __future__ import annotations

import argparse
import sys

from .interface import Session
from .syntax import print_form
from .terms import Atom
from .theory import TheoryError, load_relation_csv, load_theory


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="aequet",
        description="translate logical forms into database queries and run them")
    p.add_argument("--theory", help="theory file (.ldt)")
    p.add_argument("--relation", action="append", default=[],
                   metavar="NAME=FILE.csv",
                   help="load rows for a declared relation (repeatable)")
    p.add_argument("--trace", choices=["translation", "inference"],
                   help="print engine activity to stderr")
    p.add_argument("--emit-sql", action="store_true",
                   help="print the synthesized SQL for each evaluable form")
    p.add_argument("--backward-readings", action="store_true",
                   help="let proofs use the backward Horn readings of "
                        "equivalences (slower, more complete)")
    p.add_argument("--script", help="replay a transcript file; exit nonzero "
                                    "on any output mismatch")
    p.add_argument("--server", metavar="URL",
                   help="talk to a running service instead of loading "
                        "a theory in-process")
    p.add_argument("--serve", nargs="?", const="127.0.0.1:8000",
                   metavar="HOST:PORT",
                   help="host the HTTP service instead of running a REPL")
    return p


def build_session(args) -> Session:
    if not args.theory:
        raise SystemExit("aequet: --theory is required unless --server is given")
    theory = load_theory(args.theory)
    for spec in args.relation:
        name, eq, path = spec.partition("=")
        if not eq:
            raise SystemExit(f"aequet: --relation wants NAME=FILE.csv, got {spec!r}")
        load_relation_csv(theory, name, path)
    trace_translation = trace_inference = None
    if args.trace == "translation":
        trace_translation = _print_step
    elif args.trace == "inference":
        trace_inference = _print_event
    return Session(theory, emit_sql=args.emit_sql,
                   backward=args.backward_readings,
                   trace_translation=trace_translation,
                   trace_inference=trace_inference)


def _print_step(step):
    print(f"[translate] {step.group}.{step.rule}: {print_form(step.atom)}"
          f" => {print_form(step.replacement)}", file=sys.stderr)


def _print_event(ev):
    detail = " ".join(
        f"{k}={print_form(v) if isinstance(v, Atom) else v}"
        for k, v in ev.detail.items())
    print(f"[infer] {ev.kind} {detail}", file=sys.stderr)


def make_client(args):
    if args.server:
        import httpx

        return httpx.Client(base_url=args.server, timeout=120)
    from fastapi.testclient import TestClient

    from .service import make_app

    return TestClient(make_app(build_session(args)))


# -- rendering ----------------------------------------------------------------

_HEADLINES = {
    "Yes": "Yes.",
    "No": "No.",
    "DontKnow": "Don't know.",
    "YesConditional": "Yes, under the assumptions above.",
    "NoConditional": "No, under the assumptions above.",
    "CannotExecute": "The command cannot be carried out.",
    "CannotExecuteUnderAssumptions":
        "The command cannot be carried out under the assumptions above.",
    "TupleAdded": "Tuple added.",
    "ContextUpdated": "Statement noted.",
    "ContradictionReported": "That cannot be true.",
}


def render(resp: dict) -> list:
    """Turn one service response into the lines the user sees."""
    lines = []
    if resp["assumptions"]:
        lines += ["Assumptions used in query translation:", ""]
        lines += ["  " + a["justification"] for a in resp["assumptions"]]
        lines.append("")
    for stmt in resp["sql"]:
        lines += stmt.splitlines()
        lines.append("")
    verdict = resp["verdict"]
    if verdict in ("Executed", "ExecutedWithCaveat"):
        lines += ["Executing command:", "", "Answer:", ""]
        lines += ["        " + act for act in resp["actions"]]
        lines += ["", "Command executed."]
    elif verdict in _HEADLINES:
        lines.append(_HEADLINES[verdict])
    lines += list(resp["warnings"])
    return lines


# -- the REPL and script replay -------------------------------------------------

PROMPT = "aequet> "


def dispatch(client, line: str):
    """Run one input line; returns the output lines, or None for :quit."""
    line = line.strip()
    if not line or line.startswith("#"):
        return []
    if line == ":quit":
        return None
    if line == ":show-discourse":
        r = client.get("/discourse")
        r.raise_for_status()
        return [r.json()["form"]]
    for prefix, route in (("?-", "/ask"), ("!-", "/command"), ("+-", "/assert")):
        if line.startswith(prefix):
            r = client.post(route, json={"form": line[len(prefix):].strip()})
            if r.status_code == 422:
                detail = r.json().get("detail")
                return [f"parse error: {detail}"]
            r.raise_for_status()
            return render(r.json())
    return [f"unrecognized input (expected ?- !- +- :show-discourse :quit): {line}"]


def repl(client) -> int:
    while True:
        try:
            line = input(PROMPT)
        except EOFError:
            print()
            return 0
        got = dispatch(client, line)
        if got is None:
            return 0
        for out in got:
            print(out)


def _script_blocks(text: str):
    """Split a transcript into (input line, expected output lines) pairs."""
    blocks = []
    for raw in text.splitlines():
        line = raw.rstrip("\n")
        s = line.strip()
        if s.startswith(("?-", "!-", "+-", ":")):
            blocks.append((s, []))
        elif s.startswith("#") or not blocks:
            continue
        else:
            blocks[-1][1].append(line)
    return blocks


def _squeeze(lines) -> list:
    return [" ".join(l.split()) for l in lines if l.strip()]


def run_script(client, path: str) -> int:
    with open(path) as fh:
        blocks = _script_blocks(fh.read())
    failures = 0
    for inp, expected in blocks:
        got = dispatch(client, inp)
        if got is None:  # :quit inside a script just stops the replay
            break
        want = _squeeze(expected)
        have = _squeeze(got)
        if want and want != have:
            failures += 1
            print(f"MISMATCH after {inp}", file=sys.stderr)
            print("  expected:", file=sys.stderr)
            for l in want:
                print(f"    {l}", file=sys.stderr)
            print("  got:", file=sys.stderr)
            for l in have:
                print(f"    {l}", file=sys.stderr)
    return 1 if failures else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.serve is not None:
        import uvicorn

        from .service import make_app

        host, _, port = args.serve.partition(":")
        app = make_app(build_session(args))
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
        return 0
    try:
        client = make_client(args)
    except TheoryError as e:
        print(f"aequet: {e}", file=sys.stderr)
        return 2
    with client:
        if args.script:
            return run_script(client, args.script)
        return repl(client)


if __name__ == "__main__":
    sys.exit(main())
