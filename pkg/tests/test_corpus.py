"""Ingestion and cleaning tests, including the independent reference
implementation of the cleaning rule list."""

import io
import json
import re
import unicodedata

import pytest
from hypothesis import given, strategies as st

from biasflagger.corpus import (
    AnnotatedQuote,
    DocumentPage,
    DuplicateIdError,
    IngestError,
    clean_text,
    corpus_stats,
    ingest_annotations,
    ingest_documents,
)


def reference_clean(raw: str) -> str:
    """Same rule list, written differently: character-wise quote mapping and
    manual whitespace collapsing."""
    text = unicodedata.normalize("NFC", raw)
    while True:
        stripped = re.sub(r"<[^>]*>", " ", text)
        if stripped == text:
            break
        text = stripped
    out = []
    for ch in text:
        if ch in "“”„«»":
            out.append('"')
        elif ch in "‘’‚":
            out.append("'")
        else:
            out.append(ch)
    return " ".join("".join(out).split())


def test_clean_text_examples():
    assert clean_text("<b>Race</b>  and   health") == "Race and health"
    assert clean_text("plain text") == "plain text"
    assert clean_text("a “quote”\n\n b") == 'a "quote" b'


def test_clean_text_matches_reference():
    cases = [
        "<b>Race</b>  and   health",
        "a “quote”\n\n b",
        "BMI > 30 in ‘older’ adults",
        "<p>nested <i>tags</i></p> trailing   ",
        "no markup at all",
    ]
    for raw in cases:
        assert clean_text(raw) == reference_clean(raw)


@given(st.text(max_size=200))
def test_clean_text_idempotent(raw):
    once = clean_text(raw)
    assert clean_text(once) == once


@given(st.text(max_size=200))
def test_clean_text_agrees_with_reference(raw):
    assert clean_text(raw) == reference_clean(raw)


def _record(**overrides):
    row = {
        "quote_id": "q1", "doc_id": "D1", "page_no": 3,
        "text": "...adolescent females with BMI > 30...",
        "codes": ["female", "potential bias", "sex-disease"],
        "comment": None, "annotator_id": "a1",
    }
    row.update(overrides)
    return row


def _stream(rows):
    return io.StringIO("\n".join(json.dumps(r) for r in rows) + "\n")


def test_ingest_annotations_basic():
    quotes = ingest_annotations(_stream([_record()]))
    assert len(quotes) == 1
    q = quotes[0]
    assert q.codes == frozenset({"female", "potential bias", "sex-disease"})
    assert (q.doc_id, q.page_no) == ("D1", 3)


def test_ingest_empty_stream():
    assert ingest_annotations(io.StringIO("")) == []
    assert ingest_documents(io.StringIO("")) == []


def test_ingest_missing_codes_names_line():
    rows = [_record(), _record(quote_id="q2")]
    del rows[1]["codes"]
    with pytest.raises(IngestError, match="line 2"):
        ingest_annotations(_stream(rows))


def test_ingest_malformed_json_names_line():
    stream = io.StringIO(json.dumps(_record()) + "\nnot json\n")
    with pytest.raises(IngestError, match="line 2"):
        ingest_annotations(stream)


def test_ingest_duplicate_quote_id():
    with pytest.raises(DuplicateIdError):
        ingest_annotations(_stream([_record(), _record()]))


def test_ingest_roundtrip_preserves_identity():
    rows = [_record(quote_id=f"q{i}", page_no=i + 1) for i in range(4)]
    quotes = ingest_annotations(_stream(rows))
    assert [q.quote_id for q in quotes] == [r["quote_id"] for r in rows]
    for q, r in zip(quotes, rows):
        assert q.codes == frozenset(r["codes"])
        assert (q.doc_id, q.page_no) == (r["doc_id"], r["page_no"])


def test_ingested_text_has_no_tag_remnant():
    quotes = ingest_annotations(_stream([_record(text="<i>tagged</i> body <span>x</span>")]))
    assert not re.search(r"<[A-Za-z]", quotes[0].text)


def test_ingest_documents_sorted_and_validated():
    rows = [
        {"doc_id": "D1", "page_no": 2, "text": "second"},
        {"doc_id": "D1", "page_no": 1, "text": "first"},
    ]
    pages = ingest_documents(_stream(rows))
    assert [(p.doc_id, p.page_no) for p in pages] == [("D1", 1), ("D1", 2)]

    with pytest.raises(IngestError, match="page_no"):
        ingest_documents(_stream([{"doc_id": "D1", "page_no": 0, "text": "x"}]))


def test_quote_invariants():
    with pytest.raises(ValueError):
        AnnotatedQuote(quote_id="q", doc_id="d", page_no=1, text="x", codes=frozenset())
    with pytest.raises(ValueError):
        DocumentPage(doc_id="", page_no=1, text="x")


def test_corpus_stats_empty():
    stats = corpus_stats([], [], [])
    assert (stats.n_files, stats.n_pages, stats.n_annotated) == (0, 0, 0)
    assert (stats.n_annotated_pos, stats.n_annotated_neg, stats.n_extracted_neg) == (0, 0, 0)


def test_corpus_stats_counting_oracle():
    pages = [DocumentPage("D1", i + 1, f"page {i} text here") for i in range(10)]
    quotes = [
        AnnotatedQuote("q1", "D1", 1, "a b c", frozenset({"bias", "race-disease"})),
        AnnotatedQuote("q2", "D1", 2, "d e f", frozenset({"non-bias", "age-disease"})),
        AnnotatedQuote("q3", "D1", 3, "g h i", frozenset({"review"})),
        AnnotatedQuote("q4", "D1", 4, "j k l", frozenset({"sex misuse"})),
    ]
    stats = corpus_stats(pages, quotes, [])
    assert stats.n_files == 1
    assert stats.n_pages == 10
    assert stats.n_annotated == 4
    assert stats.n_annotated_pos == 2
    assert stats.n_annotated_neg == 2
    assert stats.n_annotated == stats.n_annotated_pos + stats.n_annotated_neg
