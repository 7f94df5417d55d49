"""Dataset assembly, variation filtering, stratified folds with a constant
test set, and the synthetic corpus generator."""

import io

import pytest

from biasflagger.dataset import (
    CorpusExample,
    Dataset,
    EmptyClassError,
    LabeledCorpus,
    StratificationError,
    SyntheticSpec,
    VariationKind,
    assemble_corpus,
    build_variation,
    example_id,
    fold_split,
    generate_synthetic_corpus,
    mtl_dataset,
    read_folds,
    stratified_kfold,
    task_dataset,
    write_folds,
)
from biasflagger.labeling import BiasType, LabeledExample, LabelVector, NegativeKind, negative_vector
from biasflagger.lexicon import find_identifiers


def make_pos(text, types=(), doc="D1", page=1):
    vec = LabelVector(1, tuple((t, int(t in types)) for t in BiasType))
    ex = LabeledExample(text=text, labels=vec, source=(doc, page))
    codes = frozenset({"bias"} | {f"{t.value}-disease" for t in types})
    return CorpusExample(example_id=example_id(text, doc, page), example=ex, codes=codes)


def make_neg(text, kind, codes=(), ident_types=(), doc="D1", page=1):
    ex = LabeledExample(text=text, labels=negative_vector(), source=(doc, page),
                        negative_kind=kind)
    return CorpusExample(example_id=example_id(text, doc, page), example=ex,
                         codes=frozenset(codes), identifier_types=frozenset(ident_types))


def corpus_of(positives=(), en=(), in_=(), rn=(), xn=()):
    return LabeledCorpus(positives=tuple(positives), en=tuple(en), in_=tuple(in_),
                         rn=tuple(rn), xn=tuple(xn))


def test_build_variation_counts():
    en = [make_neg(f"en {i}", NegativeKind.EN) for i in range(2)]
    in_ = [make_neg(f"in {i}", NegativeKind.IN) for i in range(3)]
    rn = [make_neg(f"rn {i}", NegativeKind.RN) for i in range(1)]
    xn = [make_neg(f"xn {i}", NegativeKind.XN, ident_types=[BiasType.RACE]) for i in range(4)]
    assert len(build_variation([], en, in_, rn, xn, VariationKind.ALL)) == 10
    assert len(build_variation([], en, in_, rn, xn, VariationKind.ALL_MINUS_RN)) == 9
    assert len(build_variation([], en, in_, rn, xn, VariationKind.XN_ONLY)) == 4


def test_build_variation_rejects_overlap():
    shared = make_neg("dup", NegativeKind.EN)
    with pytest.raises(ValueError, match="disjoint"):
        build_variation([], [shared], [shared], [], [], VariationKind.ALL)


def test_task_dataset_race_counting_oracle():
    positives = [make_pos(f"race positive {i}", [BiasType.RACE], page=i + 1) for i in range(5)]
    xn_race = [make_neg(f"race xn {i}", NegativeKind.XN, ident_types=[BiasType.RACE], page=i + 1)
               for i in range(7)]
    xn_other = [make_neg(f"age xn {i}", NegativeKind.XN, ident_types=[BiasType.AGE], page=i + 1)
                for i in range(3)]
    corpus = corpus_of(positives=positives, xn=xn_race + xn_other)
    data = task_dataset(BiasType.RACE, corpus, VariationKind.XN_ONLY)
    assert len(data.positives()) == 5
    assert len(data.negatives()) == 7


def test_task_dataset_requires_positives():
    corpus = corpus_of(positives=[make_pos("gender pos", [BiasType.GENDER])],
                       xn=[make_neg("xn", NegativeKind.XN, ident_types=[BiasType.RACE])])
    with pytest.raises(EmptyClassError):
        task_dataset(BiasType.RACE, corpus, VariationKind.ALL)


def test_task_dataset_filters_en_by_code():
    pos = make_pos("sex positive", [BiasType.SEX])
    en_sex = make_neg("female rats study", NegativeKind.EN, codes={"non-bias", "sex-disease"})
    en_age = make_neg("older cohort study", NegativeKind.EN, codes={"non-bias", "age-disease"})
    xn = make_neg("female follow-up", NegativeKind.XN, ident_types=[BiasType.SEX])
    corpus = corpus_of(positives=[pos], en=[en_sex, en_age], xn=[xn])
    data = task_dataset(BiasType.SEX, corpus, VariationKind.ALL)
    ids = {ex.example_id for ex in data.examples}
    assert en_sex.example_id in ids
    assert en_age.example_id not in ids


def test_mtl_dataset_multilabel_once_and_variations_share_positives():
    multi = make_pos("race and ethnicity quote", [BiasType.RACE, BiasType.ETHNICITY])
    singles = [make_pos(f"pos {i}", [BiasType.GENDER], page=i + 2) for i in range(3)]
    xn = [make_neg(f"xn {i}", NegativeKind.XN, ident_types=[BiasType.GENDER], page=i + 9)
          for i in range(2)]
    rn = [make_neg("rn text", NegativeKind.RN, codes={"sex misuse"})]
    corpus = corpus_of(positives=[multi] + singles, xn=xn, rn=rn)

    all_v = mtl_dataset(corpus, VariationKind.ALL)
    xn_v = mtl_dataset(corpus, VariationKind.XN_ONLY)
    assert sum(1 for ex in all_v.examples if ex.example_id == multi.example_id) == 1
    assert {e.example_id for e in all_v.positives()} == {e.example_id for e in xn_v.positives()}
    # RN is carried only under ALL (training-only material)
    assert len(all_v.examples) == len(xn_v.examples) + 1


def _balanced_corpus(n_pos, n_neg):
    positives = [make_pos(f"p{i}", [BiasType.RACE], page=i + 1) for i in range(n_pos)]
    xn = [make_neg(f"n{i}", NegativeKind.XN, ident_types=[BiasType.RACE], page=i + 1)
          for i in range(n_neg)]
    return mtl_dataset(corpus_of(positives=positives, xn=xn), VariationKind.ALL)


def test_stratified_kfold_balanced():
    data = _balanced_corpus(50, 50)
    assignment = stratified_kfold(data, K=5, seed=11)
    for fold in range(5):
        members = [ex for ex in data.examples if assignment.fold_of[ex.example_id] == fold]
        pos = sum(ex.task_label("general") for ex in members)
        assert pos == 10
        assert len(members) - pos == 10


def test_stratified_kfold_uneven_counting_oracle():
    data = _balanced_corpus(13, 37)
    assignment = stratified_kfold(data, K=5, seed=2)
    counts = [0] * 5
    for ex in data.examples:
        if ex.task_label("general") == 1:
            counts[assignment.fold_of[ex.example_id]] += 1
    assert sum(counts) == 13
    assert set(counts) <= {2, 3}


def test_stratified_kfold_deterministic():
    data = _balanced_corpus(20, 30)
    a = stratified_kfold(data, K=5, seed=9)
    b = stratified_kfold(data, K=5, seed=9)
    assert a.fold_of == b.fold_of
    c = stratified_kfold(data, K=5, seed=10)
    assert a.fold_of != c.fold_of


def test_stratified_kfold_validates():
    data = _balanced_corpus(3, 30)
    with pytest.raises(StratificationError):
        stratified_kfold(data, K=5, seed=0)
    with pytest.raises(StratificationError):
        stratified_kfold(data, K=1, seed=0)


def _mixed_corpus():
    positives = [make_pos(f"p{i}", [BiasType.RACE], page=i + 1) for i in range(12)]
    en = [make_neg(f"en{i}", NegativeKind.EN, codes={"non-bias", "race-disease"}, page=i + 1)
          for i in range(6)]
    in_ = [make_neg(f"in{i}", NegativeKind.IN, codes={"race-disease"}, page=i + 1)
           for i in range(6)]
    rn = [make_neg(f"rn{i}", NegativeKind.RN, codes={"sex misuse"}, page=i + 1)
          for i in range(4)]
    xn = [make_neg(f"xn{i}", NegativeKind.XN, ident_types=[BiasType.RACE], page=i + 1)
          for i in range(12)]
    return corpus_of(positives=positives, en=en, in_=in_, rn=rn, xn=xn)


def test_test_folds_constant_across_variations():
    corpus = _mixed_corpus()
    datasets = {v: mtl_dataset(corpus, v) for v in VariationKind}
    assignments = {v: stratified_kfold(d, K=3, seed=4) for v, d in datasets.items()}
    for fold in range(3):
        test_sets = []
        for v in VariationKind:
            _, _, test = fold_split(datasets[v], assignments[v], fold)
            test_sets.append({ex.example_id for ex in test})
        assert test_sets[0] == test_sets[1] == test_sets[2]


def test_rn_never_in_test_and_only_trains_under_all():
    corpus = _mixed_corpus()
    rn_ids = {ex.example_id for ex in corpus.rn}
    data_all = mtl_dataset(corpus, VariationKind.ALL)
    data_anrn = mtl_dataset(corpus, VariationKind.ALL_MINUS_RN)
    a_all = stratified_kfold(data_all, K=3, seed=4)
    a_anrn = stratified_kfold(data_anrn, K=3, seed=4)
    for fold in range(3):
        train_all, val_all, test_all = fold_split(data_all, a_all, fold)
        train_anrn, val_anrn, _ = fold_split(data_anrn, a_anrn, fold)
        assert not rn_ids & {ex.example_id for ex in test_all}
        assert rn_ids <= {ex.example_id for ex in train_all} | {ex.example_id for ex in val_all}
        assert not rn_ids & ({ex.example_id for ex in train_anrn} | {ex.example_id for ex in val_anrn})


def test_union_of_test_folds_covers_eligible_exactly_once():
    corpus = _mixed_corpus()
    data = mtl_dataset(corpus, VariationKind.ALL)
    assignment = stratified_kfold(data, K=3, seed=4)
    seen = []
    for fold in range(3):
        _, _, test = fold_split(data, assignment, fold)
        seen.extend(ex.example_id for ex in test)
    eligible = {ex.example_id for ex in data.examples if ex.negative_kind is not NegativeKind.RN}
    assert sorted(seen) == sorted(eligible)


def test_fold_split_val_is_stratified_slice():
    data = _balanced_corpus(40, 60)
    assignment = stratified_kfold(data, K=4, seed=1, val_fraction=0.1)
    train, val, test = fold_split(data, assignment, 0)
    assert not {e.example_id for e in val} & {e.example_id for e in train}
    assert not {e.example_id for e in val} & {e.example_id for e in test}
    val_pos = sum(ex.task_label("general") for ex in val)
    assert val_pos == 3  # floor(30 * 0.1)
    assert len(val) - val_pos == 4  # floor(45 * 0.1)


def test_fold_positive_rate_within_bound():
    for n_pos, n_neg in ((13, 37), (21, 80), (50, 50)):
        data = _balanced_corpus(n_pos, n_neg)
        assignment = stratified_kfold(data, K=5, seed=6)
        eligible = [ex for ex in data.examples if ex.example_id in assignment.fold_of]
        global_rate = sum(ex.task_label("general") for ex in eligible) / len(eligible)
        for fold in range(5):
            members = [ex for ex in eligible if assignment.fold_of[ex.example_id] == fold]
            rate = sum(ex.task_label("general") for ex in members) / len(members)
            assert abs(rate - global_rate) <= 1 / len(members)


def test_fold_determinism_same_seed_same_split():
    data = _balanced_corpus(20, 20)
    a = stratified_kfold(data, K=4, seed=7)
    t1 = fold_split(data, a, 2)
    t2 = fold_split(data, a, 2)
    assert t1 == t2


def test_task_positives_subset_of_mtl_positives():
    pages, quotes, lexicon = generate_synthetic_corpus(SyntheticSpec(n_pages=8), seed=3)
    corpus = assemble_corpus(quotes, pages, lexicon)
    mtl_ids = {ex.example_id for ex in corpus.positives}
    for t in BiasType:
        data = task_dataset(t, corpus, VariationKind.ALL)
        assert {ex.example_id for ex in data.positives()} <= mtl_ids


def test_dataset_rejects_duplicates():
    ex = make_pos("same text", [BiasType.RACE])
    neg = make_neg("other", NegativeKind.XN, ident_types=[BiasType.RACE])
    with pytest.raises(ValueError, match="duplicate"):
        Dataset(task="race", variation=VariationKind.ALL, examples=(ex, ex, neg))


def test_generator_exact_type_counts():
    spec = SyntheticSpec(positives_per_type={t: (20 if t is BiasType.RACE else 4) for t in BiasType})
    pages, quotes, lexicon = generate_synthetic_corpus(spec, seed=5)
    corpus = assemble_corpus(quotes, pages, lexicon)
    race_pos = [ex for ex in corpus.positives if ex.labels.get(BiasType.RACE) == 1]
    assert len(race_pos) == 20


def test_generator_zero_density_yields_no_xn():
    spec = SyntheticSpec(n_pages=6, identifier_density=0.0)
    pages, quotes, lexicon = generate_synthetic_corpus(spec, seed=9)
    corpus = assemble_corpus(quotes, pages, lexicon)
    assert corpus.xn == ()


def test_generator_seeds_differ_counts_match():
    spec = SyntheticSpec(n_pages=6)
    pages_a, quotes_a, _ = generate_synthetic_corpus(spec, seed=1)
    pages_b, quotes_b, _ = generate_synthetic_corpus(spec, seed=2)
    assert len(quotes_a) == len(quotes_b)
    assert [p.text for p in pages_a] != [p.text for p in pages_b]


def test_generator_multilabel_plan():
    spec = SyntheticSpec(
        n_pages=6,
        positives_per_type={t: 6 for t in BiasType},
        multi_label_pairs={(BiasType.RACE, BiasType.ETHNICITY): 2},
    )
    pages, quotes, lexicon = generate_synthetic_corpus(spec, seed=2)
    corpus = assemble_corpus(quotes, pages, lexicon)
    both = [ex for ex in corpus.positives
            if ex.labels.get(BiasType.RACE) == 1 and ex.labels.get(BiasType.ETHNICITY) == 1]
    race_total = [ex for ex in corpus.positives if ex.labels.get(BiasType.RACE) == 1]
    assert len(both) == 2
    assert len(race_total) == 6


def test_generator_xn_sentences_match_lexicon():
    spec = SyntheticSpec(n_pages=6)
    pages, quotes, lexicon = generate_synthetic_corpus(spec, seed=4)
    corpus = assemble_corpus(quotes, pages, lexicon)
    assert corpus.xn
    for ex in corpus.xn[:20]:
        assert find_identifiers(ex.text, lexicon)


def test_assemble_dedupes_text_source_pairs():
    quote_text = "Elderly patients are inherently prone to develop asthma per the annual audit."
    from biasflagger.corpus import AnnotatedQuote
    from biasflagger.dataset import synthetic_lexicon
    quotes = [
        AnnotatedQuote("q1", "D1", 1, quote_text, frozenset({"bias", "age-disease"})),
        AnnotatedQuote("q2", "D1", 1, quote_text, frozenset({"bias", "age-disease"})),
    ]
    corpus = assemble_corpus(quotes, [], synthetic_lexicon())
    assert len(corpus.positives) == 1


def test_folds_file_roundtrip():
    data = _balanced_corpus(10, 10)
    assignment = stratified_kfold(data, K=2, seed=3)
    buf = io.StringIO()
    write_folds(assignment, buf)
    buf.seek(0)
    loaded = read_folds(buf, K=2, val_fraction=assignment.val_fraction, seed=3)
    assert loaded.fold_of == assignment.fold_of
