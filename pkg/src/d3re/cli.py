"""Command-line entry point."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import D3reError

DEFAULT_STORE = "./.d3re-store"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="d3re",
        description="Declarative binary-analysis workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("repl", help="interactive session loop")
    p.add_argument("--store", default=DEFAULT_STORE)
    p.add_argument("--server", default=None, help="viewer service URL")

    p = sub.add_parser("replay", help="run a command transcript")
    p.add_argument("script")
    p.add_argument("--store", default=DEFAULT_STORE)
    p.add_argument("--server", default=None)

    p = sub.add_parser("serve", help="run the session service")
    p.add_argument("--store", default=DEFAULT_STORE)
    p.add_argument("--listen", default="127.0.0.1:8374")
    p.add_argument("--ui-dir", default=None, help="static viewer assets")

    p = sub.add_parser("elf-facts", help="extract structural ELF facts")
    p.add_argument("binary")
    p.add_argument("outdir")

    p = sub.add_parser("report", help="session report: TSV + figures")
    p.add_argument("--store", default=DEFAULT_STORE)
    p.add_argument("--session", required=True)
    p.add_argument("--out", default="report")

    p = sub.add_parser(
        "chain-bench", help="cached vs from-scratch chain benchmark"
    )
    p.add_argument("facts", help="fact directory of the subject binary")
    p.add_argument("--out", default="report")

    p = sub.add_parser("gc", help="drop snapshots unreachable from sessions")
    p.add_argument("--store", default=DEFAULT_STORE)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except D3reError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    from .metadb import MetaDatabase

    if args.command == "repl":
        from .repl import interactive

        interactive(MetaDatabase(args.store), server_url=args.server)
        return 0

    if args.command == "replay":
        from .repl import replay

        script = Path(args.script).read_text(encoding="utf-8")
        replay(MetaDatabase(args.store), script, server_url=args.server)
        return 0

    if args.command == "serve":
        import uvicorn

        from .server import create_app

        host, _, port = args.listen.rpartition(":")
        app = create_app(args.store, ui_dir=args.ui_dir)
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
        return 0

    if args.command == "elf-facts":
        from .facts import extract_elf_facts, write_fact_dir

        db = extract_elf_facts(args.binary)
        write_fact_dir(db, args.outdir)
        print(f"wrote {len(db)} facts to {args.outdir}")
        return 0

    if args.command == "report":
        from .report import write_session_report
        from .session import Session

        session = Session.load(MetaDatabase(args.store), args.session)
        for path in write_session_report(session, args.out):
            print(path)
        return 0

    if args.command == "chain-bench":
        from .report import run_chain_benchmark, write_chain_report

        steps = run_chain_benchmark(args.facts)
        for s in steps:
            print(
                f"{s.name}: cached={s.cached.join_work} "
                f"scratch={s.scratch.join_work} ratio={s.ratio:.3f}"
            )
        for path in write_chain_report(steps, args.out):
            print(path)
        return 0

    if args.command == "gc":
        from .session import Session

        store = MetaDatabase(args.store)
        live = set()
        for path in (store.root_dir / "sessions").glob("s*.json"):
            s = Session.load(store, path.stem)
            live.add(s.current)
            live.add(s.root)
        removed = store.gc(live)
        print(f"removed {len(removed)} nodes")
        return 0

    raise D3reError(f"unknown command {args.command}")


if __name__ == "__main__":
    raise SystemExit(main())
