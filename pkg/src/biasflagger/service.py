"""Expert review service: flag sentences in new documents, queue them for
review, record expert decisions, and export confirmed labels for retraining.

The store is a single-writer append-only JSONL log plus a materialized flag
table; every acknowledged write is flushed and fsynced before returning, and
replaying the log (ignoring a torn trailing line) reproduces the table.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Mapping, Sequence
from urllib.parse import parse_qs, urlparse

from .corpus import DocumentPage
from .labeling import BiasType, GENERAL_TASK, LabelVector, LabeledExample, NegativeKind, example_row
from .lexicon import Lexicon, find_identifiers, segment_sentences
from .model import MtlModel, forward, model_bytes

VERDICTS = ("bias", "potential_bias", "non_bias")
STATUS_PENDING = "pending"
STATUS_ACCEPTED = "accepted"
STATUS_REJECTED = "rejected"


class NotFoundError(KeyError):
    pass


class ConflictError(ValueError):
    pass


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class FlagRecord:
    flag_id: str
    doc_id: str
    page_no: int
    sentence: str
    score: float
    type_scores: Mapping[str, float]
    matches: tuple[dict, ...]        # {"type", "term", "start", "end"}
    status: str = STATUS_PENDING
    created_at: int | None = None    # store-assigned sequence number
    decision: dict | None = None

    def to_json(self) -> dict:
        return {
            "flag_id": self.flag_id, "doc_id": self.doc_id, "page_no": self.page_no,
            "sentence": self.sentence, "score": self.score,
            "type_scores": dict(self.type_scores), "matches": list(self.matches),
            "status": self.status, "created_at": self.created_at,
            "decision": self.decision,
        }

    @classmethod
    def from_json(cls, row: dict) -> "FlagRecord":
        return cls(
            flag_id=row["flag_id"], doc_id=row["doc_id"], page_no=int(row["page_no"]),
            sentence=row["sentence"], score=float(row["score"]),
            type_scores=dict(row.get("type_scores") or {}),
            matches=tuple(row.get("matches") or ()),
            status=row.get("status", STATUS_PENDING),
            created_at=row.get("created_at"),
            decision=row.get("decision"),
        )


@dataclass(frozen=True)
class ReviewDecision:
    flag_id: str
    verdict: str
    types: tuple[str, ...] = ()
    comment: str | None = None
    reviewer_id: str | None = None
    decided_at: str | None = None

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValidationError(f"unknown verdict {self.verdict!r}")
        valid = {t.value for t in BiasType}
        unknown = [t for t in self.types if t not in valid]
        if unknown:
            raise ValidationError(f"unknown bias types {unknown}")
        if self.verdict != "non_bias" and not self.types:
            raise ValidationError("bias and potential_bias verdicts require at least one type")
        if len(set(self.types)) != len(self.types):
            raise ValidationError("duplicate types in decision")

    def content(self) -> dict:
        """The fields compared for idempotence / conflict detection."""
        return {
            "verdict": self.verdict, "types": sorted(self.types),
            "comment": self.comment, "reviewer_id": self.reviewer_id,
        }

    def to_json(self) -> dict:
        return {"flag_id": self.flag_id, **self.content(), "decided_at": self.decided_at}


def _flag_id(doc_id: str, page_no: int, span: tuple[int, int], model_tag: str) -> str:
    key = f"{doc_id}\x1f{page_no}\x1f{span[0]}\x1f{span[1]}\x1f{model_tag}".encode("utf-8")
    return hashlib.sha1(key).hexdigest()[:16]


def flag_document(
    model: MtlModel,
    pages: Sequence[DocumentPage],
    lexicon: Lexicon,
    threshold: float = 0.5,
    type_models: Mapping[BiasType, MtlModel] | None = None,
) -> list[FlagRecord]:
    """Score every sentence that contains at least one social identifier and
    create a pending flag for each score strictly above the threshold.
    Sentences without identifiers are never flagged. Deterministic in
    (model bytes, page text, lexicon, threshold)."""
    if GENERAL_TASK not in model.tasks:
        raise ValueError("model has no general head")
    if not model.metadata.get("trained"):
        raise ValueError("model is not trained")
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    model_tag = hashlib.sha1(model_bytes(model)).hexdigest()[:12]

    flags: list[FlagRecord] = []
    for page in pages:
        for sentence, span in segment_sentences(page):
            matches = find_identifiers(sentence, lexicon)
            if not matches:
                continue
            by_task = forward(model, sentence)
            score = by_task[GENERAL_TASK]
            if not score > threshold:
                continue
            type_scores = {t: p for t, p in by_task.items() if t != GENERAL_TASK}
            if type_models:
                for t, tm in type_models.items():
                    type_scores[t.value] = forward(tm, sentence)[t.value]
            flags.append(FlagRecord(
                flag_id=_flag_id(page.doc_id, page.page_no, span, model_tag),
                doc_id=page.doc_id, page_no=page.page_no, sentence=sentence,
                score=score, type_scores=type_scores,
                matches=tuple(
                    {"type": m.type.value, "term": m.term, "start": m.span[0], "end": m.span[1]}
                    for m in matches
                ),
            ))
    return flags


class QueueStore:
    """Append-only log plus materialized table; single writer, durable
    acknowledgements, tolerant of a torn trailing line on replay."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.log_path = self.directory / "queue.log"
        self._lock = threading.Lock()
        self._flags: dict[str, FlagRecord] = {}
        self._seq = 0
        if self.log_path.exists():
            self._replay()
        self._fh = self.log_path.open("a", encoding="utf-8")

    def _replay(self) -> None:
        with self.log_path.open("rb") as fh:
            data = fh.read()
        for raw in data.split(b"\n"):
            if not raw:
                continue
            try:
                record = json.loads(raw.decode("utf-8"))
            except (json.JSONDecodeError, UnicodeDecodeError):
                break  # torn trailing write; everything before it is durable
            self._apply(record)

    def _apply(self, record: dict) -> None:
        op = record.get("op")
        if op == "flag":
            flag = FlagRecord.from_json(record["flag"])
            self._seq = max(self._seq, flag.created_at or 0)
            self._flags[flag.flag_id] = flag
        elif op == "decision":
            row = dict(record["decision"])
            row["types"] = tuple(row.get("types") or ())
            decision = ReviewDecision(**row)
            flag = self._flags.get(decision.flag_id)
            if flag is not None:
                self._flags[decision.flag_id] = _decided(flag, decision)

    def _append(self, record: dict) -> None:
        self._fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False))
        self._fh.write("\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()

    # -- operations ----------------------------------------------------------

    def add_flags(self, flags: Sequence[FlagRecord]) -> list[FlagRecord]:
        """New flags become pending with a store-assigned sequence number;
        an already-known flag_id is returned unchanged (re-flagging the same
        sentence with the same model is a no-op)."""
        out = []
        with self._lock:
            for flag in flags:
                existing = self._flags.get(flag.flag_id)
                if existing is not None:
                    out.append(existing)
                    continue
                self._seq += 1
                stored = replace(flag, status=STATUS_PENDING, created_at=self._seq, decision=None)
                self._append({"op": "flag", "flag": stored.to_json()})
                self._flags[flag.flag_id] = stored
                out.append(stored)
        return out

    def get(self, flag_id: str) -> FlagRecord:
        with self._lock:
            try:
                return self._flags[flag_id]
            except KeyError:
                raise NotFoundError(flag_id) from None

    def next_pending(self, limit: int | None = None) -> list[FlagRecord]:
        """Pending flags, highest general score first; ties broken by
        created_at then flag_id."""
        with self._lock:
            pending = [f for f in self._flags.values() if f.status == STATUS_PENDING]
        pending.sort(key=lambda f: (-f.score, f.created_at, f.flag_id))
        return pending if limit is None else pending[:limit]

    def decide(self, decision: ReviewDecision) -> FlagRecord:
        """Apply an expert decision. Idempotent on an exact duplicate; a
        different decision for an already-decided flag is a conflict."""
        with self._lock:
            flag = self._flags.get(decision.flag_id)
            if flag is None:
                raise NotFoundError(decision.flag_id)
            if flag.status != STATUS_PENDING:
                if flag.decision == decision.content():
                    return flag
                raise ConflictError(f"flag {decision.flag_id} already decided differently")
            updated = _decided(flag, decision)
            self._append({"op": "decision", "decision": decision.to_json()})
            self._flags[decision.flag_id] = updated
            return updated

    def stats(self) -> dict[str, int]:
        with self._lock:
            counts = {STATUS_PENDING: 0, STATUS_ACCEPTED: 0, STATUS_REJECTED: 0}
            for flag in self._flags.values():
                counts[flag.status] += 1
        return counts

    def all_flags(self) -> list[FlagRecord]:
        with self._lock:
            return sorted(self._flags.values(), key=lambda f: (f.created_at or 0, f.flag_id))


def _decided(flag: FlagRecord, decision: ReviewDecision) -> FlagRecord:
    status = STATUS_REJECTED if decision.verdict == "non_bias" else STATUS_ACCEPTED
    return replace(flag, status=status, decision=decision.content())


def export_labels(store: QueueStore) -> str:
    """Reviewed flags as a labeled dataset (same line format as the corpus
    labeling output, so the two concatenate). Accepted flags become positives
    with their reviewed types; rejected flags become EN-style negatives.
    Deterministic: re-export without new decisions is byte-identical."""
    lines = []
    for flag in store.all_flags():
        if flag.status == STATUS_PENDING:
            continue
        if flag.status == STATUS_ACCEPTED:
            chosen = set(flag.decision["types"])
            vec = LabelVector(1, tuple((t, int(t.value in chosen)) for t in BiasType))
            kind = None
        else:
            vec = LabelVector(0, tuple((t, 0) for t in BiasType))
            kind = NegativeKind.EN
        example = LabeledExample(
            text=flag.sentence, labels=vec, source=(flag.doc_id, flag.page_no),
            negative_kind=kind,
        )
        lines.append(json.dumps(example_row(example), ensure_ascii=False, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


# --- HTTP --------------------------------------------------------------------

class ReviewServer(ThreadingHTTPServer):
    def __init__(self, addr, handler, *, store, model, lexicon, threshold, token, static_dir):
        super().__init__(addr, handler)
        self.store: QueueStore = store
        self.model: MtlModel = model
        self.lexicon: Lexicon = lexicon
        self.threshold: float = threshold
        self.token: str | None = token
        self.static_dir: Path | None = static_dir


class ServiceHandler(BaseHTTPRequestHandler):
    server_version = "biasflagger"
    server: ReviewServer

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _authorized(self) -> bool:
        if not self.server.token:
            return True
        return self.headers.get("Authorization") == f"Bearer {self.server.token}"

    def _read_body(self):
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            return json.loads(raw.decode("utf-8")) if raw else None
        except (json.JSONDecodeError, UnicodeDecodeError):
            raise ValidationError("request body is not valid JSON")

    def do_GET(self) -> None:
        try:
            url = urlparse(self.path)
            if url.path == "/health":
                meta = self.server.model.metadata
                self._send_json(200, {"status": "ok", "model_version": meta.get("arch", "unknown")})
            elif url.path == "/queue":
                if not self._authorized():
                    return self._send_json(401, {"error": "unauthorized"})
                params = parse_qs(url.query)
                limit = None
                if "limit" in params:
                    try:
                        limit = int(params["limit"][0])
                    except ValueError:
                        return self._send_json(422, {"error": "limit must be an integer"})
                flags = self.server.store.next_pending(limit)
                self._send_json(200, {"flags": [f.to_json() for f in flags]})
            elif url.path == "/stats":
                self._send_json(200, self.server.store.stats())
            elif url.path == "/export":
                if not self._authorized():
                    return self._send_json(401, {"error": "unauthorized"})
                body = export_labels(self.server.store).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/x-ndjson; charset=utf-8")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
            else:
                self._serve_static(url.path)
        except Exception as exc:  # pragma: no cover - defensive
            self._send_json(500, {"error": str(exc)})

    def _serve_static(self, path: str) -> None:
        static = self.server.static_dir
        if static is None:
            return self._send_json(404, {"error": "not found"})
        name = "index.html" if path == "/" else path.lstrip("/")
        target = (static / name).resolve()
        if not str(target).startswith(str(static.resolve())) or not target.is_file():
            return self._send_json(404, {"error": "not found"})
        body = target.read_bytes()
        ctype = {
            ".html": "text/html", ".js": "text/javascript", ".css": "text/css",
            ".json": "application/json",
        }.get(target.suffix, "application/octet-stream")
        self.send_response(200)
        self.send_header("Content-Type", f"{ctype}; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self) -> None:
        try:
            if not self._authorized():
                return self._send_json(401, {"error": "unauthorized"})
            url = urlparse(self.path)
            body = self._read_body()
            if url.path == "/documents":
                self._post_documents(body)
            elif url.path == "/decisions":
                self._post_decision(body)
            else:
                self._send_json(404, {"error": "not found"})
        except ValidationError as exc:
            self._send_json(422, {"error": str(exc)})
        except NotFoundError as exc:
            self._send_json(404, {"error": f"unknown flag {exc.args[0]!r}"})
        except ConflictError as exc:
            self._send_json(409, {"error": str(exc)})

    def _post_documents(self, body) -> None:
        if not isinstance(body, dict) or not isinstance(body.get("pages"), list):
            raise ValidationError("body must be an object with a 'pages' array")
        try:
            pages = [
                DocumentPage(
                    doc_id=str(p["doc_id"]), page_no=int(p["page_no"]),
                    text=str(p["text"]),
                )
                for p in body["pages"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad page record: {exc}")
        srv = self.server
        flags = flag_document(srv.model, pages, srv.lexicon, srv.threshold)
        stored = srv.store.add_flags(flags)
        self._send_json(201, {"flags": [f.to_json() for f in stored]})

    def _post_decision(self, body) -> None:
        if not isinstance(body, dict):
            raise ValidationError("body must be a decision object")
        try:
            decision = ReviewDecision(
                flag_id=str(body["flag_id"]),
                verdict=str(body.get("verdict", "")),
                types=tuple(body.get("types") or ()),
                comment=body.get("comment"),
                reviewer_id=body.get("reviewer_id"),
                decided_at=body.get("decided_at"),
            )
        except KeyError as exc:
            raise ValidationError(f"missing field {exc.args[0]!r}")
        updated = self.server.store.decide(decision)
        self._send_json(200, updated.to_json())


def serve(
    store: QueueStore,
    model: MtlModel,
    lexicon: Lexicon,
    addr: tuple[str, int] = ("127.0.0.1", 8377),
    threshold: float = 0.5,
    token: str | None = None,
    static_dir: str | Path | None = None,
) -> "ReviewServer":
    """Bind the review service; caller runs serve_forever() (or uses the
    returned server's shutdown() from another thread)."""
    if not model.metadata.get("trained"):
        raise ValueError("refusing to serve an untrained model")
    return ReviewServer(
        addr, ServiceHandler,
        store=store, model=model, lexicon=lexicon, threshold=threshold,
        token=token, static_dir=Path(static_dir) if static_dir else None,
    )
