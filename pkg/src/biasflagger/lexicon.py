"""Social-identifier lexicons, sentence segmentation, extracted-negative (XN)
mining and categorization of annotated negatives into EN/IN/RN.

Identifier matching is whole-word phrase matching (1-4 words), case
insensitive, longest-match-wins on overlap; matches of different types over
the identical span are all kept. Age additionally matches numeric patterns
("over 40", "65 years", "12-year-old") which are built in rather than listed
in the data file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable, Sequence

from .corpus import DocumentPage, AnnotatedQuote
from .labeling import BiasType, NegativeKind, general_label

_WORD_RE = re.compile(r"[^\W_]+(?:-[^\W_]+)*", re.UNICODE)
_MAX_PHRASE_WORDS = 4

# Built-in numeric age identifiers, e.g. "over 40", "65 years", "12-year-old".
_AGE_NUMERIC_RE = re.compile(
    r"\b(?:(?:over|under)\s+\d{1,3}|\d{1,3}[\s-]*(?:years?[\s-]old|years?\b))",
    re.IGNORECASE,
)

_SENT_BOUNDARY_RE = re.compile(r"[.!?]+[\"')\]]*\s+")
_ABBREVIATIONS = frozenset({
    "dr", "mr", "mrs", "ms", "prof", "st", "jr", "sr", "vs", "etc", "fig",
    "e.g", "i.e", "al", "no", "vol", "approx", "dept", "inc", "est", "resp",
})


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class Lexicon:
    terms: "dict[BiasType, frozenset[str]]"

    def __post_init__(self) -> None:
        for t in BiasType:
            if not self.terms.get(t):
                raise LexiconError(f"lexicon has no terms for type {t.value!r}")
        for phrases in self.terms.values():
            for p in phrases:
                if "\t" in p or "\n" in p:
                    raise LexiconError(f"phrase contains tab/newline: {p!r}")


@dataclass(frozen=True)
class IdentifierMatch:
    type: BiasType
    term: str
    span: tuple[int, int]


@dataclass(frozen=True)
class NegativeExample:
    text: str
    kind: NegativeKind
    matches: tuple[IdentifierMatch, ...]
    source: tuple[str, int]

    def __post_init__(self) -> None:
        if self.kind is NegativeKind.XN and not self.matches:
            raise ValueError("XN examples must carry at least one identifier match")


def load_lexicon(stream: IO[str] | Iterable[str]) -> Lexicon:
    """TSV columns (type, phrase); '#' comment lines; phrases lowercased and
    deduplicated per type."""
    by_type: dict[BiasType, set[str]] = {t: set() for t in BiasType}
    valid = {t.value: t for t in BiasType}
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise LexiconError(f"line {lineno}: expected 2 tab-separated columns")
        type_tag, phrase = parts[0].strip().lower(), parts[1].strip().lower()
        if type_tag not in valid:
            raise LexiconError(f"line {lineno}: unknown type tag {type_tag!r}")
        if not phrase:
            raise LexiconError(f"line {lineno}: empty phrase")
        if len(_WORD_RE.findall(phrase)) > _MAX_PHRASE_WORDS:
            raise LexiconError(f"line {lineno}: phrase longer than {_MAX_PHRASE_WORDS} words")
        by_type[valid[type_tag]].add(phrase)
    return Lexicon({t: frozenset(v) for t, v in by_type.items()})


def default_lexicon() -> Lexicon:
    data = resources.files("biasflagger.data").joinpath("default_lexicon.tsv")
    with data.open("r", encoding="utf-8") as fh:
        return load_lexicon(fh)


def segment_sentences(page: DocumentPage) -> list[tuple[str, tuple[int, int]]]:
    """Rule-based splitting with an abbreviation stop-list; sentences shorter
    than 3 tokens are discarded. Spans index into the page text."""
    text = page.text
    spans: list[tuple[int, int]] = []
    start = 0
    for m in _SENT_BOUNDARY_RE.finditer(text):
        before = text[start : m.start()]
        last = _WORD_RE.findall(before.lower())
        # Guard abbreviations ("Dr."), initials ("J.") and decimals ("3.5 mg").
        if last:
            tok = last[-1]
            if tok in _ABBREVIATIONS or (len(tok) == 1 and tok.isalpha()):
                continue
        if m.group(0)[0] == "." and text[m.end() : m.end() + 1].islower():
            continue
        spans.append((start, m.end()))
        start = m.end()
    if start < len(text):
        spans.append((start, len(text)))

    out = []
    for s, e in spans:
        sent = text[s:e].strip()
        if len(_WORD_RE.findall(sent)) < 3:
            continue
        s2 = s + text[s:e].index(sent)
        out.append((sent, (s2, s2 + len(sent))))
    return out


def _word_spans(sentence: str) -> list[tuple[int, int]]:
    return [m.span() for m in _WORD_RE.finditer(sentence)]


def _phrase_index(lexicon: Lexicon) -> dict[tuple[str, ...], list[BiasType]]:
    index: dict[tuple[str, ...], list[BiasType]] = {}
    for t in BiasType:
        for phrase in lexicon.terms[t]:
            key = tuple(_WORD_RE.findall(phrase))
            if key:
                index.setdefault(key, []).append(t)
    return index


def find_identifiers(sentence: str, lexicon: Lexicon) -> list[IdentifierMatch]:
    """All maximal whole-word phrase matches of any type. Overlaps resolve
    longest-match-first (ties by start position); identical spans of distinct
    types are all kept."""
    index = _phrase_index(lexicon)
    words = _word_spans(sentence)
    lowered = sentence.lower()

    candidates: list[IdentifierMatch] = []
    for i in range(len(words)):
        for n in range(min(_MAX_PHRASE_WORDS, len(words) - i), 0, -1):
            key = tuple(lowered[s:e] for s, e in words[i : i + n])
            types = index.get(key)
            if not types:
                continue
            start, end = words[i][0], words[i + n - 1][1]
            term = lowered[start:end]
            for t in types:
                # the raw slice must itself equal the phrase: words separated
                # by anything but single spaces do not count as the phrase
                if term in lexicon.terms[t]:
                    candidates.append(IdentifierMatch(t, term, (start, end)))
    for m in _AGE_NUMERIC_RE.finditer(sentence):
        s, e = m.start(), m.end()
        candidates.append(IdentifierMatch(BiasType.AGE, lowered[s:e], (s, e)))

    return resolve_overlaps(candidates)


def resolve_overlaps(candidates: Sequence[IdentifierMatch]) -> list[IdentifierMatch]:
    """Greedy longest-match-wins; same-span candidates never block each other."""
    ordered = sorted(
        candidates,
        key=lambda m: (-(m.span[1] - m.span[0]), m.span[0], m.type.value, m.term),
    )
    kept: list[IdentifierMatch] = []
    for cand in ordered:
        blocked = False
        for acc in kept:
            if cand.span == acc.span:
                continue
            if cand.span[0] < acc.span[1] and acc.span[0] < cand.span[1]:
                blocked = True
                break
        if not blocked and cand not in kept:
            kept.append(cand)
    kept.sort(key=lambda m: (m.span, m.type.value))
    return kept


def _shingles(text: str, k: int = 8) -> set[str]:
    t = text.lower()
    if len(t) <= k:
        return {t}
    return {t[i : i + k] for i in range(len(t) - k + 1)}


def _quote_spans_in(page_text: str, quote_text: str) -> list[tuple[int, int]]:
    spans = []
    hay, needle = page_text.lower(), quote_text.lower()
    pos = hay.find(needle)
    while pos != -1:
        spans.append((pos, pos + len(needle)))
        pos = hay.find(needle, pos + 1)
    return spans


def extract_xn(
    pages: Sequence[DocumentPage],
    annotated_quotes: Sequence[AnnotatedQuote],
    lexicon: Lexicon,
    shingle_threshold: float = 0.8,
) -> list[NegativeExample]:
    """Sentences that overlap no annotated quote on their page and contain at
    least one social identifier. Overlap is exact substring containment of the
    quote in the page, falling back to 8-gram shingle overlap when the export
    and the page disagree on whitespace."""
    quotes_by_page: dict[tuple[str, int], list[AnnotatedQuote]] = {}
    for q in annotated_quotes:
        quotes_by_page.setdefault((q.doc_id, q.page_no), []).append(q)

    out: list[NegativeExample] = []
    for page in pages:
        page_quotes = quotes_by_page.get((page.doc_id, page.page_no), [])
        located: list[tuple[int, int]] = []
        unlocated: list[AnnotatedQuote] = []
        for q in page_quotes:
            spans = _quote_spans_in(page.text, q.text)
            if spans:
                located.extend(spans)
            else:
                unlocated.append(q)
        for sent, (s, e) in segment_sentences(page):
            if any(s < qe and qs < e for qs, qe in located):
                continue
            sent_sh = _shingles(sent)
            if any(
                len(sent_sh & _shingles(q.text)) / len(sent_sh) >= shingle_threshold
                for q in unlocated
            ):
                continue
            matches = find_identifiers(sent, lexicon)
            if matches:
                out.append(NegativeExample(
                    text=sent, kind=NegativeKind.XN,
                    matches=tuple(matches), source=(page.doc_id, page.page_no),
                ))
    return out


def categorize_negative(quote: AnnotatedQuote) -> NegativeKind:
    """EN: coded non-bias plus some *-disease. IN: some *-disease without
    non-bias. RN: everything else. Only defined for label-0 quotes."""
    if general_label(quote.codes) != 0:
        raise ValueError(f"quote {quote.quote_id!r} is positive; cannot categorize as negative")
    codes = {c.strip().lower() for c in quote.codes}
    has_disease = any(c.endswith("-disease") for c in codes)
    if "non-bias" in codes and has_disease:
        return NegativeKind.EN
    if has_disease:
        return NegativeKind.IN
    return NegativeKind.RN
