"""Corpus ingestion: annotated excerpts and raw document pages from
line-delimited JSON, normalized through a fixed, ordered cleaning pass.

Cleaning order is fixed (markup tags -> quote normalization -> whitespace) so
the whole pass is idempotent and testable. Text is NFC-normalized up front so
downstream lexicon matching is stable.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from typing import IO, Iterable, Union

_TAG_RE = re.compile(r"<[^>]*>")
_WS_RE = re.compile(r"\s+")
_QUOTE_MAP = str.maketrans({
    "“": '"', "”": '"', "„": '"', "«": '"', "»": '"',
    "‘": "'", "’": "'", "‚": "'",
})


class IngestError(ValueError):
    """Malformed or invalid record; message names the offending line."""


class DuplicateIdError(IngestError):
    pass


def clean_text(raw: str) -> str:
    """Strip <...> spans, map curly quotes to straight, collapse whitespace."""
    text = unicodedata.normalize("NFC", raw)
    text = _TAG_RE.sub(" ", text)
    text = text.translate(_QUOTE_MAP)
    return _WS_RE.sub(" ", text).strip()


@dataclass(frozen=True)
class DocumentPage:
    doc_id: str
    page_no: int
    text: str

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")
        if self.page_no < 1:
            raise ValueError(f"page_no must be >= 1, got {self.page_no}")


@dataclass(frozen=True)
class AnnotatedQuote:
    quote_id: str
    doc_id: str
    page_no: int
    text: str
    codes: frozenset[str]
    comment: str | None = None
    annotator_id: str | None = None
    timestamp: str | None = None  # reserved at ingest; nothing consumes it yet

    def __post_init__(self) -> None:
        if not self.codes:
            raise ValueError("codes set must be non-empty")
        if not self.text:
            raise ValueError("text must be non-empty after cleaning")


@dataclass(frozen=True)
class CorpusStats:
    n_files: int
    n_pages: int
    n_annotated: int
    n_annotated_pos: int
    n_annotated_neg: int
    n_extracted_neg: int


def _iter_lines(stream: Union[IO, Iterable[bytes], Iterable[str]]):
    for lineno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.strip()
        if line:
            yield lineno, line


def _parse_record(lineno: int, line: str) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise IngestError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(record, dict):
        raise IngestError(f"line {lineno}: record must be an object")
    return record


def _require(record: dict, name: str, lineno: int):
    if name not in record or record[name] is None:
        raise IngestError(f"line {lineno}: missing field {name!r}")
    return record[name]


def ingest_annotations(stream) -> list[AnnotatedQuote]:
    """One AnnotatedQuote per input line, order preserved, text cleaned."""
    quotes: list[AnnotatedQuote] = []
    seen: set[str] = set()
    for lineno, line in _iter_lines(stream):
        record = _parse_record(lineno, line)
        quote_id = str(_require(record, "quote_id", lineno))
        if quote_id in seen:
            raise DuplicateIdError(f"line {lineno}: duplicate quote_id {quote_id!r}")
        seen.add(quote_id)
        raw_codes = _require(record, "codes", lineno)
        if not isinstance(raw_codes, list):
            raise IngestError(f"line {lineno}: codes must be an array")
        codes = frozenset(c.strip() for c in raw_codes if c and c.strip())
        text = clean_text(str(_require(record, "text", lineno)))
        page_no = int(_require(record, "page_no", lineno))
        try:
            quotes.append(AnnotatedQuote(
                quote_id=quote_id,
                doc_id=str(_require(record, "doc_id", lineno)),
                page_no=page_no,
                text=text,
                codes=codes,
                comment=record.get("comment"),
                annotator_id=record.get("annotator_id"),
                timestamp=record.get("timestamp"),
            ))
        except ValueError as exc:
            raise IngestError(f"line {lineno}: {exc}") from exc
    return quotes


def ingest_documents(stream) -> list[DocumentPage]:
    """Pages cleaned and ordered by (doc_id, page_no)."""
    pages: list[DocumentPage] = []
    for lineno, line in _iter_lines(stream):
        record = _parse_record(lineno, line)
        try:
            pages.append(DocumentPage(
                doc_id=str(_require(record, "doc_id", lineno)),
                page_no=int(_require(record, "page_no", lineno)),
                text=clean_text(str(_require(record, "text", lineno))),
            ))
        except ValueError as exc:
            raise IngestError(f"line {lineno}: {exc}") from exc
    pages.sort(key=lambda p: (p.doc_id, p.page_no))
    return pages


def corpus_stats(pages, quotes, extracted_negatives) -> CorpusStats:
    """Exact category counts; positives/negatives via the label mapping."""
    from .labeling import general_label  # local import: labeling depends on this module

    n_pos = sum(1 for q in quotes if general_label(q.codes) == 1)
    return CorpusStats(
        n_files=len({p.doc_id for p in pages}),
        n_pages=len(pages),
        n_annotated=len(quotes),
        n_annotated_pos=n_pos,
        n_annotated_neg=len(quotes) - n_pos,
        n_extracted_neg=len(extracted_negatives),
    )
