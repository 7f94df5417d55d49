"""Label mapping from annotation codes to the general bias label and the six
type-specific labels.

The general label is 1 when any of the codes "bias", "potential bias" or
"review" is present; a type label is 1 when the general label is 1 and the
exact "<type>-disease" code is present. Codes are matched case-insensitively
after trimming. Bias types beyond the six studied ones contribute only to the
general label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable

from .corpus import AnnotatedQuote


class BiasType(Enum):
    GENDER = "gender"
    SEX = "sex"
    RACE = "race"
    ETHNICITY = "ethnicity"
    AGE = "age"
    GEOGRAPHY = "geography"

    def __lt__(self, other: "BiasType") -> bool:
        return _ORDER[self] < _ORDER[other]


_ORDER = {t: i for i, t in enumerate(BiasType)}

POSITIVE_CODES = frozenset({"bias", "potential bias", "review"})

GENERAL_TASK = "general"
ALL_TASKS: tuple[str, ...] = (GENERAL_TASK,) + tuple(t.value for t in BiasType)


class NegativeKind(Enum):
    EN = "EN"  # explicit: coded non-bias plus some *-disease
    IN = "IN"  # implicit: some *-disease, no non-bias
    RN = "RN"  # remaining annotated negatives
    XN = "XN"  # extracted from un-annotated text


def _norm(codes: Iterable[str]) -> frozenset[str]:
    return frozenset(c.strip().lower() for c in codes)


def general_label(codes: Iterable[str]) -> int:
    return 1 if _norm(codes) & POSITIVE_CODES else 0


def type_label(codes: Iterable[str], t: BiasType) -> int:
    if general_label(codes) == 0:
        return 0
    return 1 if f"{t.value}-disease" in _norm(codes) else 0


@dataclass(frozen=True)
class LabelVector:
    y_any: int
    by_type: "tuple[tuple[BiasType, int], ...]"

    def __post_init__(self) -> None:
        if any(v == 1 for _, v in self.by_type) and self.y_any != 1:
            raise ValueError("a set type label requires y_any = 1")

    def get(self, t: BiasType) -> int:
        for typ, v in self.by_type:
            if typ is t:
                return v
        raise KeyError(t)

    def as_dict(self) -> dict[BiasType, int]:
        return dict(self.by_type)


def negative_vector() -> LabelVector:
    return LabelVector(0, tuple((t, 0) for t in BiasType))


@dataclass(frozen=True)
class LabeledExample:
    text: str
    labels: LabelVector
    source: tuple[str, int]  # (doc_id, page_no)
    negative_kind: NegativeKind | None = None

    def __post_init__(self) -> None:
        if self.labels.y_any == 1 and self.negative_kind is not None:
            raise ValueError("positive examples cannot carry a negative kind")


def label_record(quote: AnnotatedQuote) -> LabeledExample:
    """Apply the label mapping for all types; negative_kind left for later
    categorization of annotated negatives."""
    vec = LabelVector(
        general_label(quote.codes),
        tuple((t, type_label(quote.codes, t)) for t in BiasType),
    )
    return LabeledExample(text=quote.text, labels=vec, source=(quote.doc_id, quote.page_no))


# --- labeled dataset file: one flat JSON object per line -------------------

def example_row(ex: LabeledExample) -> dict:
    row = {"text": ex.text, "y_any": ex.labels.y_any}
    for t in BiasType:
        row[f"y_{t.value}"] = ex.labels.get(t)
    row["negative_kind"] = ex.negative_kind.value if ex.negative_kind else None
    row["doc_id"], row["page_no"] = ex.source
    return row


def write_labeled(examples: Iterable[LabeledExample], fh: IO[str]) -> None:
    for ex in examples:
        fh.write(json.dumps(example_row(ex), ensure_ascii=False, sort_keys=True))
        fh.write("\n")


def read_labeled(fh: IO[str]) -> list[LabeledExample]:
    out = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        row = json.loads(line)
        vec = LabelVector(int(row["y_any"]), tuple((t, int(row[f"y_{t.value}"])) for t in BiasType))
        kind = NegativeKind(row["negative_kind"]) if row.get("negative_kind") else None
        out.append(LabeledExample(
            text=row["text"], labels=vec,
            source=(row["doc_id"], int(row["page_no"])),
            negative_kind=kind,
        ))
    return out
