"""Interactive command loop and transcript replay.

Commands:
    open <binary|factdir>     create a session, register the root
    load <file.dl>            append rules to the session program
    run <file.dl|analysis>    load + evaluate with snapshot reuse
    query <relation>          print tuples, numbers as 8-digit hex
    highlight / comment       sync annotations of that kind to the viewer
    assume <fact>.            append a single ground fact
    analyses                  list registered analyses
    help / quit

Printed output is deterministic: replaying a transcript on a fresh
store produces byte-identical text.
"""

from __future__ import annotations

import json
import shlex
import sys
import urllib.request

from .errors import D3reError
from .metadb import MetaDatabase
from .session import Session, format_cell, open_session

SHORT_ID = 12


class Repl:
    def __init__(self, store: MetaDatabase, out=None, server_url: str | None = None):
        self.store = store
        self.out = out if out is not None else sys.stdout
        self.server_url = server_url.rstrip("/") if server_url else None
        self.session: Session | None = None

    # -- plumbing ------------------------------------------------------------

    def emit(self, text: str):
        self.out.write(text + "\n")

    def _need_session(self) -> Session:
        if self.session is None:
            raise D3reError("no open session (use: open <binary|factdir>)")
        return self.session

    def _read_rules(self, arg: str) -> str:
        from .rulelib import registry

        try:
            with open(arg, encoding="utf-8") as fh:
                return fh.read()
        except FileNotFoundError:
            analysis = registry().get(arg)
            if analysis is None:
                raise D3reError(f"no such file or analysis: {arg}") from None
            return analysis.source()

    # -- commands ------------------------------------------------------------

    def execute(self, line: str) -> bool:
        """Run one command; returns False when the loop should stop."""
        line = line.strip()
        if not line or line.startswith("#"):
            return True
        if line in ("quit", "exit"):
            return False
        try:
            self._dispatch(line)
        except D3reError as e:
            self.emit(f"error: {e}")
        return True

    def _dispatch(self, line: str):
        cmd, _, rest = line.partition(" ")
        rest = rest.strip()
        if cmd == "open":
            self.cmd_open(rest)
        elif cmd == "load":
            self.cmd_load(rest)
        elif cmd == "run":
            self.cmd_run(rest)
        elif cmd == "query":
            self.cmd_query(rest)
        elif cmd in ("highlight", "comment"):
            self.cmd_annotations(cmd)
        elif cmd == "assume":
            self.cmd_assume(rest)
        elif cmd == "analyses":
            self.cmd_analyses()
        elif cmd == "help":
            self.emit(__doc__.strip())
        else:
            raise D3reError(f"unknown command {cmd!r}")

    def cmd_open(self, arg: str):
        if not arg:
            raise D3reError("usage: open <binary|factdir>")
        path = shlex.split(arg)[0]
        self.session = open_session(self.store, path)
        self.emit(
            f"session {self.session.session_id} "
            f"root={self.session.root[:SHORT_ID]}"
        )

    def cmd_load(self, arg: str):
        session = self._need_session()
        text = self._read_rules(arg)
        incoming = session.load_rules(text)
        self.emit(f"loaded {arg}: {len(incoming.rules)} rules, {len(incoming.facts)} facts")

    def cmd_run(self, arg: str):
        session = self._need_session()
        self._refresh_cursor(session)
        text = self._read_rules(arg) if arg else None
        result = session.run(text)
        outputs = " ".join(result.output_relations)
        self.emit(f"node {result.node_id[:SHORT_ID]} outputs: {outputs}")

    def cmd_query(self, arg: str):
        session = self._need_session()
        if not arg:
            raise D3reError("usage: query <relation>")
        for row in session.query(arg):
            self.emit("\t".join(format_cell(v) for v in row))

    def cmd_annotations(self, kind: str):
        session = self._need_session()
        session.refresh_annotations()
        session.save()
        selected = [a for a in session.annotations if a.kind == kind]
        self._push_annotations(session)
        self.emit(f"{kind}: {len(selected)} annotations")

    def cmd_assume(self, arg: str):
        session = self._need_session()
        if not arg:
            raise D3reError("usage: assume <fact>.")
        session.assume(arg)
        self.emit(f"assumed {arg}")

    def cmd_analyses(self):
        from .rulelib import registry

        for name, analysis in sorted(registry().items()):
            self.emit(f"{name}: {', '.join(analysis.outputs)}")

    # -- viewer sync -----------------------------------------------------------

    def _refresh_cursor(self, session: Session):
        if self.server_url is None:
            return
        url = f"{self.server_url}/sessions/{session.session_id}/cursor"
        try:
            with urllib.request.urlopen(url, timeout=5) as resp:
                data = json.loads(resp.read().decode("utf-8"))
        except OSError as e:
            raise D3reError(f"viewer unreachable: {e}") from None
        addr = data.get("address")
        session.cursor = int(addr) if addr is not None else None

    def _push_annotations(self, session: Session):
        if self.server_url is None:
            return
        url = f"{self.server_url}/sessions/{session.session_id}/annotations"
        payload = json.dumps(
            {"annotations": [a.to_dict() for a in session.annotations]}
        ).encode("utf-8")
        req = urllib.request.Request(
            url, data=payload, headers={"Content-Type": "application/json"}
        )
        try:
            urllib.request.urlopen(req, timeout=5).close()
        except OSError as e:
            raise D3reError(f"viewer unreachable: {e}") from None


def replay(store: MetaDatabase, script_text: str, out=None, server_url=None) -> None:
    """Execute a transcript, echoing each command before its output."""
    repl = Repl(store, out=out, server_url=server_url)
    for line in script_text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        repl.emit(f">>> {stripped}")
        if not repl.execute(stripped):
            break


def interactive(store: MetaDatabase, server_url=None) -> None:
    repl = Repl(store, server_url=server_url)
    while True:
        try:
            line = input(">>> ")
        except EOFError:
            break
        if not repl.execute(line):
            break
