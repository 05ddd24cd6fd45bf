"""Session service: HTTP facade over the store for the browser viewer.

JSON wire rules: integers whose magnitude exceeds 2**53-1 are
serialized as decimal strings so addresses survive the browser
round-trip exactly; smaller integers stay numbers.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..errors import D3reError, SessionError, StoreError
from ..metadb import MetaDatabase
from ..session import Annotation, Session, format_address, open_session

JS_SAFE_MAX = 2**53 - 1


def encode_value(v):
    if isinstance(v, int) and abs(v) > JS_SAFE_MAX:
        return str(v)
    return v


def encode_row(row: tuple) -> list:
    return [encode_value(v) for v in row]


class SessionRequest(BaseModel):
    source: str


class RunRequest(BaseModel):
    text: str


class CursorRequest(BaseModel):
    address: int | str | None


class AnnotationsPush(BaseModel):
    annotations: list[dict]


def create_app(store_dir: str, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="d3re session service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["ETag"],
    )
    store = MetaDatabase(store_dir)
    run_locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def load(session_id: str) -> Session:
        try:
            return Session.load(store, session_id)
        except SessionError as e:
            raise _NotFound(str(e)) from None

    def run_lock(session_id: str) -> threading.Lock:
        with locks_guard:
            return run_locks.setdefault(session_id, threading.Lock())

    @app.exception_handler(_NotFound)
    async def _nf(request: Request, exc: "_NotFound"):
        return JSONResponse({"error": str(exc)}, status_code=404)

    @app.exception_handler(D3reError)
    async def _bad(request: Request, exc: D3reError):
        return JSONResponse({"error": str(exc)}, status_code=400)

    @app.get("/")
    async def index():
        return {"service": "d3re", "ui": "/ui/" if ui_dir else None}

    @app.post("/sessions")
    def create_session(body: SessionRequest):
        session = open_session(store, body.source)
        return {"session_id": session.session_id, "root": session.root}

    @app.get("/sessions")
    def list_sessions():
        out = []
        for path in sorted((store.root_dir / "sessions").glob("s*.json")):
            s = Session.load(store, path.stem)
            out.append(
                {
                    "session_id": s.session_id,
                    "source": s.source,
                    "root": s.root,
                    "current": s.current,
                }
            )
        return {"sessions": out}

    @app.post("/sessions/{session_id}/run")
    def run_rules(session_id: str, body: RunRequest):
        session = load(session_id)
        lock = run_lock(session_id)
        if not lock.acquire(blocking=False):
            return JSONResponse(
                {"error": "evaluation in progress"}, status_code=409
            )
        try:
            before = session.current
            result = session.run(body.text)
            return {
                "node_id": result.node_id,
                "output_relations": result.output_relations,
                "unchanged": result.node_id == before,
                "new_tuples": result.stats.new_tuples,
            }
        finally:
            lock.release()

    @app.get("/sessions/{session_id}/relations")
    def list_relations(session_id: str):
        session = load(session_id)
        db = session.database()
        out = []
        for name in sorted(session.program.declarations):
            decl = session.program.declarations[name]
            out.append(
                {
                    "name": name,
                    "arity": decl.arity,
                    "columns": [c for c, _ in decl.columns],
                    "tuples": len(db.relation(name)),
                }
            )
        return {"relations": out}

    @app.get("/sessions/{session_id}/relations/{name}")
    def get_relation(session_id: str, name: str):
        session = load(session_id)
        if name not in session.program.declarations:
            raise _NotFound(f"unknown relation {name}")
        decl = session.program.declarations[name]
        rows = session.database().sorted_tuples(name)
        return {
            "name": name,
            "columns": [c for c, _ in decl.columns],
            "types": list(decl.column_types()),
            "tuples": [encode_row(r) for r in rows],
        }

    @app.get("/sessions/{session_id}/listing")
    def get_listing(
        session_id: str,
        request: Request,
    ):
        session = load(session_id)
        lo = _parse_addr(request.query_params.get("from"))
        hi = _parse_addr(request.query_params.get("to"))
        rows = build_listing(session)
        if lo is not None:
            rows = [r for r in rows if r["address"] >= lo]
        if hi is not None:
            rows = [r for r in rows if r["address"] < hi]
        for r in rows:
            r["address"] = encode_value(r["address"])
        return {"rows": rows}

    @app.get("/sessions/{session_id}/annotations")
    def get_annotations(session_id: str, request: Request):
        timeout = float(request.query_params.get("timeout", "0"))
        client_etag = request.headers.get("if-none-match")
        deadline = time.monotonic() + min(timeout, 30.0)
        while True:
            session = load(session_id)
            etag = session.annotations_etag()
            if etag != client_etag:
                payload = {
                    "etag": etag,
                    "annotations": [
                        _encode_annotation(a) for a in session.annotations
                    ],
                }
                return JSONResponse(payload, headers={"ETag": etag})
            if time.monotonic() >= deadline:
                return Response(status_code=304, headers={"ETag": etag})
            time.sleep(0.1)

    @app.post("/sessions/{session_id}/annotations")
    def push_annotations(session_id: str, body: AnnotationsPush):
        session = load(session_id)
        session.annotations = sorted(
            (Annotation.from_dict(a) for a in body.annotations),
            key=lambda a: (a.address, a.kind, a.text or "", a.source_relation),
        )
        session.save()
        return {"etag": session.annotations_etag()}

    @app.post("/sessions/{session_id}/cursor")
    def set_cursor(session_id: str, body: CursorRequest):
        session = load(session_id)
        addr = body.address
        session.cursor = int(addr) if addr is not None else None
        session.save()
        return {"address": encode_value(session.cursor)}

    @app.get("/sessions/{session_id}/cursor")
    def get_cursor(session_id: str):
        session = load(session_id)
        return {"address": encode_value(session.cursor)}

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


class _NotFound(Exception):
    pass


def _parse_addr(text: str | None) -> int | None:
    if text is None or text == "":
        return None
    try:
        return int(text, 0)
    except ValueError:
        raise D3reError(f"bad address {text!r}") from None


def _encode_annotation(a: Annotation) -> dict:
    d = a.to_dict()
    d["address"] = encode_value(d["address"])
    return d


def build_listing(session: Session) -> list[dict]:
    """Rows for the code/data view, sorted strictly by address."""
    db = session.database()
    data_bytes = dict(db.relation("data_byte"))
    blocks = dict(db.relation("code_in_block"))
    pcrel = {(ea, idx): dest for ea, idx, dest in db.relation("pc_relative_operand")}
    imm = dict(db.relation("op_immediate"))
    reg = dict(db.relation("op_regdirect"))
    symbols = {t[0]: t[5] for t in db.relation("defined_symbol")}
    annotations: dict[int, list] = {}
    for a in session.annotations:
        annotations.setdefault(a.address, []).append(_encode_annotation(a))

    rows = []
    covered: set[int] = set()
    for t in sorted(db.relation("instruction")):
        ea, size, prefix, opcode = t[0], t[1], t[2], t[3]
        ops = [op for op in t[4:8] if op != 0]
        parts = []
        for idx, op in enumerate(ops, start=1):
            if (ea, idx) in pcrel:
                dest = pcrel[(ea, idx)]
                parts.append(symbols.get(dest, format_address(dest)))
            elif op in imm:
                parts.append(f"${imm[op]}")
            elif op in reg:
                parts.append(f"%{reg[op]}")
            else:
                parts.append(f"op{op}")
        text = (prefix + " " if prefix else "") + opcode
        if parts:
            text += " " + ", ".join(parts)
        raw = bytes(
            data_bytes[a] for a in range(ea, ea + size) if a in data_bytes
        )
        covered.update(range(ea, ea + size))
        rows.append(
            {
                "address": ea,
                "bytes": raw.hex(),
                "text": text,
                "block": blocks.get(ea),
                "annotations": annotations.get(ea, []),
            }
        )

    # group uncovered data bytes into 8-byte lines
    pending: list[tuple[int, int]] = []
    for addr in sorted(data_bytes):
        if addr in covered:
            continue
        if pending and addr == pending[-1][0] + 1 and len(pending) < 8:
            pending.append((addr, data_bytes[addr]))
        else:
            if pending:
                rows.append(_data_row(pending, annotations))
            pending = [(addr, data_bytes[addr])]
    if pending:
        rows.append(_data_row(pending, annotations))

    rows.sort(key=lambda r: r["address"])
    return rows


def _data_row(run: list[tuple[int, int]], annotations) -> dict:
    addr = run[0][0]
    blob = bytes(b for _, b in run)
    return {
        "address": addr,
        "bytes": blob.hex(),
        "text": ".byte " + " ".join(f"{b:02x}" for b in blob),
        "block": None,
        "annotations": annotations.get(addr, []),
    }
