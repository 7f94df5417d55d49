"""Training-set assembly under the three negative-set variations, stratified
K-fold splitting with a constant test set per task, and synthetic corpus
generation for desk-scale verification.

The test pool of every dataset is positives plus all test-eligible negatives
(XN, EN, IN); the chosen variation filters only the training portion of each
fold, and RN examples never enter fold assignment (they train under ALL,
nothing else). That is what keeps test-fold membership identical across
variations.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import IO, Iterable, Mapping, Sequence

from .corpus import AnnotatedQuote, DocumentPage
from .labeling import (
    GENERAL_TASK,
    BiasType,
    LabeledExample,
    NegativeKind,
    label_record,
    negative_vector,
)
from .lexicon import Lexicon, NegativeExample, categorize_negative, extract_xn, load_lexicon


class VariationKind(Enum):
    XN_ONLY = "xn"
    ALL = "an"
    ALL_MINUS_RN = "an-rn"

    @property
    def training_kinds(self) -> frozenset[NegativeKind]:
        return _TRAINING_KINDS[self]


_TRAINING_KINDS = {
    VariationKind.XN_ONLY: frozenset({NegativeKind.XN}),
    VariationKind.ALL: frozenset(NegativeKind),
    VariationKind.ALL_MINUS_RN: frozenset({NegativeKind.XN, NegativeKind.EN, NegativeKind.IN}),
}


class EmptyClassError(ValueError):
    pass


class StratificationError(ValueError):
    pass


def example_id(text: str, doc_id: str, page_no: int) -> str:
    key = f"{text.casefold()}\x1f{doc_id}\x1f{page_no}".encode("utf-8")
    return hashlib.sha1(key).hexdigest()[:16]


@dataclass(frozen=True)
class CorpusExample:
    """A labeled example plus the origin facts task filtering needs."""

    example_id: str
    example: LabeledExample
    codes: frozenset[str] = frozenset()                 # annotated quotes only
    identifier_types: frozenset[BiasType] = frozenset() # XN only

    @property
    def text(self) -> str:
        return self.example.text

    @property
    def labels(self):
        return self.example.labels

    @property
    def negative_kind(self) -> NegativeKind | None:
        return self.example.negative_kind

    @property
    def source(self) -> tuple[str, int]:
        return self.example.source

    def task_label(self, task: str) -> int:
        if task == GENERAL_TASK:
            return self.labels.y_any
        return self.labels.get(BiasType(task))


@dataclass(frozen=True)
class LabeledCorpus:
    positives: tuple[CorpusExample, ...]
    en: tuple[CorpusExample, ...]
    in_: tuple[CorpusExample, ...]
    rn: tuple[CorpusExample, ...]
    xn: tuple[CorpusExample, ...]

    def negatives(self) -> tuple[CorpusExample, ...]:
        return self.en + self.in_ + self.rn + self.xn


def _from_quote(quote: AnnotatedQuote) -> CorpusExample:
    labeled = label_record(quote)
    if labeled.labels.y_any == 0:
        labeled = replace(labeled, negative_kind=categorize_negative(quote))
    return CorpusExample(
        example_id=example_id(labeled.text, quote.doc_id, quote.page_no),
        example=labeled,
        codes=frozenset(c.strip().lower() for c in quote.codes),
    )


def _from_extracted(neg: NegativeExample) -> CorpusExample:
    labeled = LabeledExample(
        text=neg.text, labels=negative_vector(), source=neg.source,
        negative_kind=NegativeKind.XN,
    )
    return CorpusExample(
        example_id=example_id(neg.text, neg.source[0], neg.source[1]),
        example=labeled,
        identifier_types=frozenset(m.type for m in neg.matches),
    )


def assemble_corpus(
    quotes: Sequence[AnnotatedQuote],
    pages: Sequence[DocumentPage],
    lexicon: Lexicon,
) -> LabeledCorpus:
    """Label and categorize annotated quotes, mine XN, dedupe by
    (normalized text, doc_id, page_no)."""
    pools: dict = {"pos": [], NegativeKind.EN: [], NegativeKind.IN: [], NegativeKind.RN: [], NegativeKind.XN: []}
    seen: set[str] = set()

    def add(key, ex: CorpusExample) -> None:
        if ex.example_id not in seen:
            seen.add(ex.example_id)
            pools[key].append(ex)

    for q in quotes:
        ex = _from_quote(q)
        add("pos" if ex.labels.y_any == 1 else ex.negative_kind, ex)
    for neg in extract_xn(pages, quotes, lexicon):
        add(NegativeKind.XN, _from_extracted(neg))

    return LabeledCorpus(
        positives=tuple(pools["pos"]),
        en=tuple(pools[NegativeKind.EN]),
        in_=tuple(pools[NegativeKind.IN]),
        rn=tuple(pools[NegativeKind.RN]),
        xn=tuple(pools[NegativeKind.XN]),
    )


def build_variation(positives, en, in_, rn, xn, v: VariationKind) -> list:
    """Training negatives for variation v. Inputs must be pairwise disjoint."""
    groups = [list(positives), list(en), list(in_), list(rn), list(xn)]
    ids = [getattr(e, "example_id", id(e)) for g in groups for e in g]
    if len(ids) != len(set(ids)):
        raise ValueError("build_variation inputs must be disjoint")
    if v is VariationKind.XN_ONLY:
        return list(xn)
    if v is VariationKind.ALL:
        return list(en) + list(in_) + list(rn) + list(xn)
    return list(en) + list(in_) + list(xn)


@dataclass(frozen=True)
class Dataset:
    task: str                       # "general" or a BiasType value
    variation: VariationKind
    examples: tuple[CorpusExample, ...]

    def __post_init__(self) -> None:
        labels = [ex.task_label(self.task) for ex in self.examples]
        if 1 not in labels or 0 not in labels:
            raise EmptyClassError(f"dataset for task {self.task!r} needs both classes")
        ids = [ex.example_id for ex in self.examples]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate (text, source) pairs in dataset")

    def positives(self) -> list[CorpusExample]:
        return [ex for ex in self.examples if ex.task_label(self.task) == 1]

    def negatives(self) -> list[CorpusExample]:
        return [ex for ex in self.examples if ex.task_label(self.task) == 0]


def _finalize(task: str, v: VariationKind, pos, xn, en, in_, rn) -> Dataset:
    examples = list(pos) + list(xn) + list(en) + list(in_)
    if v is VariationKind.ALL:
        examples += list(rn)
    examples.sort(key=lambda ex: ex.example_id)
    return Dataset(task=task, variation=v, examples=tuple(examples))


def task_dataset(t: BiasType, corpus: LabeledCorpus, v: VariationKind) -> Dataset:
    """Type-specific dataset: positives with the type label set; negatives
    gated by identifier type (XN) or by the '<type>-disease' code (EN/IN);
    RN joins the training pool unfiltered under ALL."""
    pos = [ex for ex in corpus.positives if ex.labels.get(t) == 1]
    if not pos:
        raise EmptyClassError(f"no positive examples for type {t.value!r}")
    code = f"{t.value}-disease"
    xn = [ex for ex in corpus.xn if t in ex.identifier_types]
    en = [ex for ex in corpus.en if code in ex.codes]
    in_ = [ex for ex in corpus.in_ if code in ex.codes]
    return _finalize(t.value, v, pos, xn, en, in_, corpus.rn)


def mtl_dataset(corpus: LabeledCorpus, v: VariationKind) -> Dataset:
    """All positives with their full label vectors plus all negatives; the
    general binary classifier trains on the same examples using y_any only."""
    if not corpus.positives:
        raise EmptyClassError("no positive examples in corpus")
    return _finalize(GENERAL_TASK, v, corpus.positives, corpus.xn, corpus.en, corpus.in_, corpus.rn)


@dataclass(frozen=True)
class FoldAssignment:
    """Fold ids for every test-eligible example (everything except RN).

    RN examples never receive a fold: they are training-only material under
    the ALL variation, which is what keeps the test set constant across
    variations.
    """

    K: int
    fold_of: "dict[str, int]"
    val_fraction: float
    seed: int

    def test_ids(self, fold: int) -> set[str]:
        return {eid for eid, f in self.fold_of.items() if f == fold}


def stratified_kfold(dataset: Dataset, K: int, seed: int, val_fraction: float = 0.1) -> FoldAssignment:
    """Deterministic stratified assignment; per-fold positive counts differ by
    at most one. Only positives, XN, EN and IN are assigned."""
    if K < 2:
        raise StratificationError(f"K must be >= 2, got {K}")
    eligible = [ex for ex in dataset.examples if ex.negative_kind is not NegativeKind.RN]
    pos = sorted((ex for ex in eligible if ex.task_label(dataset.task) == 1), key=lambda e: e.example_id)
    neg = sorted((ex for ex in eligible if ex.task_label(dataset.task) == 0), key=lambda e: e.example_id)
    for name, members in (("positive", pos), ("negative", neg)):
        if len(members) < K:
            raise StratificationError(f"{name} class has {len(members)} members, fewer than K={K}")
    rng = random.Random(seed)
    fold_of: dict[str, int] = {}
    for members in (pos, neg):
        members = list(members)
        rng.shuffle(members)
        for i, ex in enumerate(members):
            fold_of[ex.example_id] = i % K
    return FoldAssignment(K=K, fold_of=fold_of, val_fraction=val_fraction, seed=seed)


def fold_split(
    dataset: Dataset, assignment: FoldAssignment, fold: int
) -> tuple[list[CorpusExample], list[CorpusExample], list[CorpusExample]]:
    """(train, val, test) for one fold. Test ignores the variation; train is
    variation-filtered; val is a stratified slice of the training portion."""
    if not 0 <= fold < assignment.K:
        raise ValueError(f"fold {fold} out of range for K={assignment.K}")
    allowed = dataset.variation.training_kinds
    test, pool = [], []
    for ex in dataset.examples:
        assigned = assignment.fold_of.get(ex.example_id)
        if assigned == fold:
            test.append(ex)
        elif ex.negative_kind is None or ex.negative_kind in allowed:
            pool.append(ex)

    rng = random.Random(f"{assignment.seed}:{fold}:val")
    pool.sort(key=lambda e: e.example_id)
    val: list[CorpusExample] = []
    train: list[CorpusExample] = []
    for label in (1, 0):
        members = [ex for ex in pool if ex.task_label(dataset.task) == label]
        rng.shuffle(members)
        n_val = int(len(members) * assignment.val_fraction)
        val.extend(members[:n_val])
        train.extend(members[n_val:])
    train.sort(key=lambda e: e.example_id)
    val.sort(key=lambda e: e.example_id)
    test.sort(key=lambda e: e.example_id)
    return train, val, test


def write_folds(assignment: FoldAssignment, fh: IO[str]) -> None:
    for eid in sorted(assignment.fold_of):
        fh.write(json.dumps({"example_id": eid, "fold": assignment.fold_of[eid]}))
        fh.write("\n")


def read_folds(fh: IO[str], K: int, val_fraction: float, seed: int) -> FoldAssignment:
    fold_of = {}
    for line in fh:
        line = line.strip()
        if line:
            row = json.loads(line)
            fold_of[row["example_id"]] = int(row["fold"])
    return FoldAssignment(K=K, fold_of=fold_of, val_fraction=val_fraction, seed=seed)


# --- synthetic corpus generator ---------------------------------------------

_IDENTIFIERS: dict[BiasType, tuple[str, ...]] = {
    BiasType.GENDER: ("women", "men", "girls", "boys", "mothers"),
    BiasType.SEX: ("female", "male", "females", "males"),
    BiasType.RACE: ("african american", "black", "white", "patients of color"),
    BiasType.ETHNICITY: ("hispanic", "latino", "alaskan native", "native american"),
    BiasType.AGE: ("elderly", "adolescent", "pediatric", "older adults"),
    BiasType.GEOGRAPHY: ("brazilian", "european", "mediterranean", "rural population"),
}

_CONDITIONS = (
    "hypertension", "asthma", "migraine", "anemia", "dermatitis", "arthritis",
    "glaucoma", "neuropathy", "gastritis", "insomnia", "bronchitis", "sinusitis",
    "tendonitis", "colitis", "eczema", "vertigo", "sciatica", "rhinitis",
    "psoriasis", "cataracts", "thyroiditis", "pancreatitis", "cystitis",
    "laryngitis", "pharyngitis", "pneumonia", "pleurisy", "hepatitis",
    "nephritis", "myopathy", "dyspepsia", "urticaria", "rosacea", "keratitis",
    "phlebitis", "bursitis", "gingivitis", "otitis", "scoliosis", "fibrosis",
)

_FILLER_TEMPLATES = (
    "The clinic reviewed {cond} treatment protocols {noise}.",
    "Routine documentation for {cond} was updated {noise}.",
    "The lecture summarized current therapeutic guidance for {cond} {noise}.",
    "Laboratory workflows for {cond} screening were audited {noise}.",
    "Staff discussed referral pathways for {cond} {noise}.",
    "The module outlines differential diagnosis strategies for {cond} {noise}.",
    "Imaging follow-up for {cond} remains scheduled {noise}.",
    "Charting standards for {cond} were harmonized {noise}.",
)

# Positives, hard negatives and XN share sentence skeletons; the classes
# differ in sparse marker vocabulary, not in surface shape.
_XN_TEMPLATES = (
    "{ident} patients with {cond} completed the scheduled follow-up {noise}.",
    "{ident} participants reported stable {cond} symptoms {noise}.",
    "The registry enrolled {ident} patients for routine {cond} monitoring {noise}.",
    "{ident} volunteers attended the {cond} education session {noise}.",
    "{ident} patients with {cond} were reassessed without incident {noise}.",
)

_HARD_NEG_TEMPLATES = (
    "{ident} patients show {degree} rates of {cond} in a {cite} {noise}.",
    "{ident} patients carry {degree} {cond} burden according to a {cite} {noise}.",
    "A {cite} reported {degree} {cond} prevalence in {ident} patients {noise}.",
    "{ident} patients had {degree} {cond} incidence in a {cite} {noise}.",
)

_STRONG_POS_TEMPLATES = (
    "{ident} patients are {marker} {cue} to develop {cond} {noise}.",
    "{ident} patients show {degree} rates of {cond} so {waive} {noise}.",
    "{ident} patients carry {degree} {cond} burden because they are {marker} {cue} {noise}.",
    "Presume {cond} whenever {ident} patients present, as it is {marker} expected {noise}.",
)

_WEAK_POS_TEMPLATES = (
    "{ident} patients show {degree} rates of {cond}, which {waive} {noise}.",
    "{ident} patients had {degree} {cond} incidence, so {waive} {noise}.",
    "{ident} patients carry {degree} {cond} burden and {waive} {noise}.",
)

_MULTI_POS_TEMPLATE = (
    "{ident} and {ident2} patients are {marker} {cue} to develop {cond} {noise}."
)

_DEGREE_WORDS = ("elevated", "higher", "increased", "raised", "greater", "disproportionate")

_CITATIONS = (
    "large cited cohort study", "registry analysis with citations",
    "randomized controlled trial", "peer-reviewed surveillance summary",
    "referenced longitudinal survey", "published meta-analysis",
)

# Sparse bias markers: each appears only a handful of times in a corpus, so a
# trainable embedding can amplify them while a frozen random projection
# cannot isolate them.
_BIAS_MARKERS = (
    "inherently", "naturally", "invariably", "characteristically", "universally",
    "predictably", "unquestionably", "axiomatically", "undeniably", "obviously",
    "intrinsically", "constitutionally", "innately", "fundamentally", "essentially",
    "categorically", "uniformly", "necessarily", "demonstrably", "self-evidently",
    "unavoidably", "indisputably", "definitionally", "immutably", "irreversibly",
    "congenitally", "temperamentally", "habitually", "notoriously", "proverbially",
    "stereotypically", "reflexively", "instinctively", "organically", "elementally",
    "irreducibly", "unalterably", "perpetually", "chronically", "incorrigibly",
    "genetically", "biologically", "culturally", "dispositionally", "natively",
    "structurally", "basally", "wholly",
)
_BIAS_CUES = (
    "prone", "predisposed", "destined", "inclined", "fated", "bound",
    "condemned", "doomed", "wired", "primed", "driven", "given",
)

_WAIVERS = (
    "screening can be skipped", "confirmation is unnecessary",
    "the workup can be abbreviated", "further testing is wasteful",
    "referral is superfluous", "counseling can be omitted",
    "documentation may be waived", "follow-up is redundant",
    "imaging adds nothing", "consultation is dispensable",
    "verification is pointless", "escalation is excessive",
    "review can be deferred indefinitely", "charting is optional",
    "monitoring may be curtailed", "assessment is perfunctory",
)

# Label-independent clause vocabulary appended to every sentence; inflates the
# feature count so sparse markers matter relative to the bulk of the text.
_NOISE_PATTERNS = (
    "as noted in the {w1} {w2} log beside the {w3} {w4} register",
    "per the {w1} {w2} register filed with the {w3} {w4} office",
    "during the {w1} {w2} cycle preceding the {w3} {w4} review",
    "alongside the {w1} {w2} review and the {w3} {w4} rota",
    "following the {w1} {w2} audit and the {w3} {w4} census",
)
_NOISE_ADJECTIVES = (
    "quarterly", "annual", "internal", "external", "regional", "provisional",
    "interim", "archived", "consolidated", "departmental", "rotating", "supplemental",
    "preliminary", "standing", "expanded", "revised", "joint", "central",
)
_NOISE_NOUNS = (
    "radiology", "pharmacy", "endoscopy", "telemetry", "phlebotomy", "biopsy",
    "triage", "credentialing", "inventory", "formulary", "sterilization",
    "scheduling", "billing", "transport", "dietary", "procurement", "orientation",
    "compliance", "utilization", "immunization", "microbiology", "pathology",
    "rehabilitation", "anesthesia", "dialysis", "oncology", "cardiology",
    "dermatology", "neurology", "psychiatry",
)

_RN_TEMPLATES = (
    "The narrator described the subject as reckless and difficult during {when} rounds.",
    "Course notes used dismissive slang when characterizing the {when} ward residents.",
    "The vignette repeated outdated slurs taken from the {when} transcript archive.",
    "Handout margins contained flippant remarks about noncompliant {when} attendees.",
    "The recording mocked the speech patterns heard in the {when} overflow ward.",
)
_RN_WHEN = (
    "weekend", "overnight", "holiday", "evening", "morning", "midweek",
    "quarterly", "seasonal", "afternoon", "preliminary",
)
_RN_CODES = ("inappropriate use of language", "sex misuse", "gender misuse")


@dataclass(frozen=True)
class SyntheticSpec:
    n_pages: int = 40
    positives_per_type: Mapping[BiasType, int] = field(
        default_factory=lambda: {t: 20 for t in BiasType}
    )
    multi_label_pairs: Mapping[tuple[BiasType, BiasType], int] = field(default_factory=dict)
    en_per_type: int = 8
    in_per_type: int = 8
    rn_count: int = 24
    filler_per_page: int = 30
    identifier_density: float = 0.3
    weak_positive_fraction: float = 0.3
    # positives that read exactly like cited hard negatives (irreducible overlap)
    ambiguous_fraction: float = 0.06
    pages_per_doc: int = 8


def synthetic_lexicon() -> Lexicon:
    lines = [f"{t.value}\t{phrase}" for t, phrases in _IDENTIFIERS.items() for phrase in phrases]
    return load_lexicon(lines)


def _sentence_case(s: str) -> str:
    return s[0].upper() + s[1:]


def generate_synthetic_corpus(
    spec: SyntheticSpec, seed: int
) -> tuple[list[DocumentPage], list[AnnotatedQuote], Lexicon]:
    """Plant positives (identifier + bias-cue phrasing), hard negatives
    (identifier + cited-evidence phrasing), RN confounders and identifier-only
    fillers; deterministic per seed."""
    rng = random.Random(seed)
    planted: list[tuple[str, frozenset[str]]] = []
    used_planted: set[str] = set()

    def plant(render) -> tuple[str, frozenset[str]]:
        # planted sentences are globally unique so per-type counts are exact
        for _ in range(200):
            text, codes = render()
            if text not in used_planted:
                used_planted.add(text)
                planted.append((text, codes))
                return text, codes
        raise RuntimeError("could not render a unique planted sentence")

    def pick_ident(t: BiasType) -> str:
        return rng.choice(_IDENTIFIERS[t])

    def noise_clause() -> str:
        return rng.choice(_NOISE_PATTERNS).format(
            w1=rng.choice(_NOISE_ADJECTIVES), w2=rng.choice(_NOISE_NOUNS),
            w3=rng.choice(_NOISE_ADJECTIVES), w4=rng.choice(_NOISE_NOUNS),
        )

    def fills_for(t: BiasType) -> dict[str, str]:
        return {
            "ident": pick_ident(t),
            "cond": rng.choice(_CONDITIONS),
            "degree": rng.choice(_DEGREE_WORDS),
            "cite": rng.choice(_CITATIONS),
            "marker": rng.choice(_BIAS_MARKERS),
            "cue": rng.choice(_BIAS_CUES),
            "waive": rng.choice(_WAIVERS),
            "noise": noise_clause(),
        }

    def pos_codes(types: Iterable[BiasType], ident: str) -> frozenset[str]:
        level2 = rng.choice(("bias", "potential bias", "potential bias", "review"))
        return frozenset({ident, level2, *(f"{t.value}-disease" for t in types)})

    def render_positive(types: list[BiasType], weak: bool) -> tuple[str, frozenset[str]]:
        fills = fills_for(types[0])
        if len(types) > 1:
            fills["ident2"] = pick_ident(types[1])
            text = _MULTI_POS_TEMPLATE.format(**fills)
        elif rng.random() < spec.ambiguous_fraction:
            text = rng.choice(_HARD_NEG_TEMPLATES).format(**fills)
        elif weak:
            text = rng.choice(_WEAK_POS_TEMPLATES).format(**fills)
        else:
            text = rng.choice(_STRONG_POS_TEMPLATES).format(**fills)
        return _sentence_case(text), pos_codes(types, fills["ident"])

    def render_hard_negative(t: BiasType, explicit: bool) -> tuple[str, frozenset[str]]:
        fills = fills_for(t)
        text = rng.choice(_HARD_NEG_TEMPLATES).format(**fills)
        codes = {fills["ident"], f"{t.value}-disease"}
        if explicit:
            codes.add("non-bias")
        return _sentence_case(text), frozenset(codes)

    def render_rn() -> tuple[str, frozenset[str]]:
        text = rng.choice(_RN_TEMPLATES).format(when=rng.choice(_RN_WHEN))
        return text, frozenset({rng.choice(_RN_CODES)})

    remaining = {t: int(spec.positives_per_type.get(t, 0)) for t in BiasType}
    for (t1, t2), count in sorted(
        spec.multi_label_pairs.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
    ):
        for _ in range(count):
            remaining[t1] -= 1
            remaining[t2] -= 1
            plant(lambda: render_positive([t1, t2], weak=False))
    if any(c < 0 for c in remaining.values()):
        raise ValueError("multi_label_pairs exceed positives_per_type budgets")
    for t in BiasType:
        for _ in range(remaining[t]):
            weak = rng.random() < spec.weak_positive_fraction
            plant(lambda: render_positive([t], weak=weak))

    for t in BiasType:
        for _ in range(spec.en_per_type):
            plant(lambda: render_hard_negative(t, explicit=True))
        for _ in range(spec.in_per_type):
            plant(lambda: render_hard_negative(t, explicit=False))
    for _ in range(spec.rn_count):
        plant(render_rn)

    rng.shuffle(planted)

    pages: list[DocumentPage] = []
    quotes: list[AnnotatedQuote] = []
    quote_no = 0
    type_cycle = list(BiasType)
    for page_idx in range(spec.n_pages):
        doc_id = f"D{page_idx // spec.pages_per_doc + 1:03d}"
        page_no = page_idx % spec.pages_per_doc + 1
        sentences: list[str] = []
        used: set[str] = set()

        def emit(text: str) -> bool:
            if text in used:
                return False
            used.add(text)
            sentences.append(text)
            return True

        for _ in range(spec.filler_per_page):
            for _attempt in range(40):
                if rng.random() < spec.identifier_density:
                    t = type_cycle[rng.randrange(len(type_cycle))]
                    text = rng.choice(_XN_TEMPLATES).format(
                        ident=pick_ident(t), cond=rng.choice(_CONDITIONS),
                        noise=noise_clause(),
                    )
                    text = _sentence_case(text)
                else:
                    text = rng.choice(_FILLER_TEMPLATES).format(
                        cond=rng.choice(_CONDITIONS), noise=noise_clause()
                    )
                if emit(text):
                    break

        lo = page_idx * len(planted) // spec.n_pages
        hi = (page_idx + 1) * len(planted) // spec.n_pages
        for text, codes in planted[lo:hi]:
            if not emit(text):
                continue  # duplicate planted sentence on this page; drop silently
            quote_no += 1
            quotes.append(AnnotatedQuote(
                quote_id=f"q{quote_no:05d}", doc_id=doc_id, page_no=page_no,
                text=text, codes=codes, annotator_id="synthetic",
            ))
        rng.shuffle(sentences)
        pages.append(DocumentPage(doc_id=doc_id, page_no=page_no, text=" ".join(sentences)))

    pages.sort(key=lambda p: (p.doc_id, p.page_no))
    return pages, quotes, synthetic_lexicon()
