"""Metric oracles: brute-force confusion fixtures, F-beta arithmetic, the
trapezoid-equals-Mann-Whitney AUC identity, fold aggregation and report
emission."""

import math
import random

import pytest

from biasflagger.dataset import CorpusExample, example_id
from biasflagger.evaluation import (
    ConfusionCounts,
    MetricsRecord,
    aggregate_folds,
    confusion,
    cooccurrence,
    emit_report,
    f_beta,
    mean_roc_points,
    metrics,
    roc_auc,
)
from biasflagger.labeling import BiasType, LabeledExample, LabelVector


def test_confusion_examples():
    c = confusion([1, 0], [1, 0])
    assert (c.tp, c.tn, c.fp, c.fn) == (1, 1, 0, 0)
    c = confusion([1], [0])
    assert c.fn == 1
    with pytest.raises(ValueError):
        confusion([1, 0], [1])
    with pytest.raises(ValueError):
        confusion([], [])


def test_confusion_brute_force_fixtures():
    rng = random.Random(42)
    for _ in range(100):
        n = rng.randint(1, 50)
        labels = [rng.randint(0, 1) for _ in range(n)]
        preds = [rng.randint(0, 1) for _ in range(n)]
        c = confusion(labels, preds)
        assert c.tp == sum(1 for y, p in zip(labels, preds) if y == 1 and p == 1)
        assert c.fp == sum(1 for y, p in zip(labels, preds) if y == 0 and p == 1)
        assert c.fn == sum(1 for y, p in zip(labels, preds) if y == 1 and p == 0)
        assert c.tn == sum(1 for y, p in zip(labels, preds) if y == 0 and p == 0)
        assert c.total == n


def test_metrics_hand_arithmetic():
    m = metrics(ConfusionCounts(tp=8, fp=2, fn=2, tn=88))
    assert m.precision == 0.8
    assert m.recall == 0.8
    assert m.f1 == pytest.approx(0.8)
    assert m.f2 == pytest.approx(0.8)
    assert m.accuracy == 0.96


def test_metrics_perfect():
    m = metrics(ConfusionCounts(tp=5, fp=0, fn=0, tn=5))
    assert (m.accuracy, m.precision, m.recall, m.f1, m.f2) == (1.0, 1.0, 1.0, 1.0, 1.0)


def test_f_beta_formula_oracle():
    assert f_beta(0.5, 1.0, 1.0) == pytest.approx(2 / 3)
    assert f_beta(0.5, 1.0, 2.0) == pytest.approx(5 / 6)


def test_metrics_undefined_marked_not_zeroed():
    m = metrics(ConfusionCounts(tp=0, fp=0, fn=3, tn=7))
    assert m.precision is None
    assert m.recall == 0.0
    assert m.f1 is None


def test_f2_exceeds_f1_iff_recall_exceeds_precision():
    rng = random.Random(1)
    for _ in range(200):
        p = rng.uniform(0.05, 1.0)
        r = rng.uniform(0.05, 1.0)
        f1 = f_beta(p, r, 1.0)
        f2 = f_beta(p, r, 2.0)
        if r > p:
            assert f2 > f1
        elif r < p:
            assert f2 < f1
        else:
            assert f2 == pytest.approx(f1)


def mann_whitney(labels, scores):
    """Pairwise counting oracle with half credit for ties, in exact integers."""
    pos = [s for y, s in zip(labels, scores) if y == 1]
    neg = [s for y, s in zip(labels, scores) if y == 0]
    if not pos or not neg:
        return None
    twice_wins = 0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                twice_wins += 2
            elif sp == sn:
                twice_wins += 1
    return twice_wins / (2 * len(pos) * len(neg))


def test_roc_auc_examples():
    _, auc = roc_auc([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1])
    assert auc == 1.0
    _, auc = roc_auc([1, 0, 1, 0], [0.9, 0.8, 0.7, 0.1])
    assert auc == 0.75


def test_roc_auc_reversal_symmetry():
    labels = [1, 0, 1, 0, 1, 0, 0]
    scores = [0.9, 0.8, 0.6, 0.5, 0.4, 0.3, 0.1]
    _, auc = roc_auc(labels, scores)
    _, rev = roc_auc(labels, [-s for s in scores])
    assert rev == 1.0 - auc


def test_roc_auc_single_class_undefined():
    _, auc = roc_auc([1, 1], [0.4, 0.6])
    assert auc is None


def test_roc_curve_shape():
    curve, _ = roc_auc([1, 0, 1, 0], [0.9, 0.8, 0.7, 0.1])
    assert curve[0][1:] == (0.0, 0.0)
    assert curve[-1][1:] == (1.0, 1.0)
    for (_, f1_, t1), (_, f2_, t2) in zip(curve, curve[1:]):
        assert f2_ >= f1_ and t2 >= t1
        assert 0.0 <= f2_ <= 1.0 and 0.0 <= t2 <= 1.0


def test_roc_auc_equals_mann_whitney_exactly():
    rng = random.Random(99)
    for trial in range(60):
        n = rng.randint(2, 120)
        labels = [rng.randint(0, 1) for _ in range(n)]
        if len(set(labels)) < 2:
            labels = [0, 1] + labels[2:]
        # coarse score grid forces plenty of ties
        scores = [rng.choice([0.1, 0.25, 0.5, 0.5, 0.75, 0.9]) for _ in range(n)]
        _, auc = roc_auc(labels, scores)
        assert auc == mann_whitney(labels, scores), trial


def test_aggregate_folds_examples():
    records = [MetricsRecord(None, None, None, None, None, auc=0.9, task="general",
                             method="binary", variation="an", fold=i) for i in range(5)]
    agg = aggregate_folds(records)
    assert agg.stats["auc"] == (pytest.approx(0.9), pytest.approx(0.0), 5)

    two = [MetricsRecord(None, None, None, None, None, auc=v, task="g", method="m",
                         variation="an", fold=i) for i, v in enumerate([0.8, 1.0])]
    agg = aggregate_folds(two)
    mean, std, n = agg.stats["auc"]
    assert mean == pytest.approx(0.9)
    assert std == pytest.approx(math.sqrt(0.02), abs=1e-9)  # ~0.1414
    assert n == 2


def test_aggregate_folds_skips_undefined():
    records = [MetricsRecord(None, None, None, None, None,
                             auc=(None if i == 2 else 0.9),
                             task="g", method="m", variation="an", fold=i) for i in range(5)]
    agg = aggregate_folds(records)
    assert agg.stats["auc"][2] == 4


def test_aggregate_folds_rejects_mixed_groups():
    records = [
        MetricsRecord(None, None, None, None, None, auc=0.9, task="a", method="m", variation="an"),
        MetricsRecord(None, None, None, None, None, auc=0.9, task="b", method="m", variation="an"),
    ]
    with pytest.raises(ValueError):
        aggregate_folds(records)
    with pytest.raises(ValueError):
        aggregate_folds([])


def _pos_example(types, idx):
    vec = LabelVector(1, tuple((t, int(t in types)) for t in BiasType))
    ex = LabeledExample(text=f"pos {idx}", labels=vec, source=("D1", idx))
    return CorpusExample(example_id=example_id(f"pos {idx}", "D1", idx), example=ex)


def test_cooccurrence_examples():
    both = _pos_example({BiasType.RACE, BiasType.ETHNICITY}, 1)
    matrix, totals = cooccurrence([both])
    types = list(BiasType)
    i, j = types.index(BiasType.RACE), types.index(BiasType.ETHNICITY)
    assert matrix[i][j] == 1 and matrix[j][i] == 1
    assert totals[BiasType.RACE] == 1

    singles = [_pos_example({BiasType.AGE}, k) for k in range(3)]
    matrix, totals = cooccurrence(singles)
    for a in range(6):
        for b in range(6):
            if a != b:
                assert matrix[a][b] == 0
    assert totals[BiasType.AGE] == 3


def test_cooccurrence_matches_generator_plan():
    from biasflagger.dataset import SyntheticSpec, assemble_corpus, generate_synthetic_corpus
    spec = SyntheticSpec(
        n_pages=6,
        positives_per_type={t: 6 for t in BiasType},
        multi_label_pairs={(BiasType.RACE, BiasType.ETHNICITY): 2,
                           (BiasType.SEX, BiasType.AGE): 1},
    )
    pages, quotes, lexicon = generate_synthetic_corpus(spec, seed=13)
    corpus = assemble_corpus(quotes, pages, lexicon)
    matrix, totals = cooccurrence(corpus.positives)
    types = list(BiasType)
    assert matrix[types.index(BiasType.RACE)][types.index(BiasType.ETHNICITY)] == 2
    assert matrix[types.index(BiasType.SEX)][types.index(BiasType.AGE)] == 1
    for t in BiasType:
        assert totals[t] == 6


def test_emit_report_layout_and_stability(tmp_path):
    aggregates = []
    for method in ("binary", "mtl"):
        for variation in ("xn", "an", "an-rn"):
            records = [MetricsRecord(0.9, 0.8, 0.7, 0.74, 0.72, auc=0.91, task="general",
                                     method=method, variation=variation, fold=i)
                       for i in range(2)]
            aggregates.append(aggregate_folds(records))
    curve, _ = roc_auc([1, 0, 1, 0], [0.9, 0.8, 0.7, 0.1])
    curves = {"general_binary_an_fold0": curve}

    dest = tmp_path / "r1"
    written = emit_report(aggregates, curves, dest)
    names = {p.name for p in written}
    assert "summary.csv" in names
    assert "roc_general_binary_an_fold0.csv" in names
    assert "summary.json" in names

    body = (dest / "summary.csv").read_text()
    lines = body.strip().splitlines()
    assert lines[0] == "task,method,variation,metric,mean,std,folds"
    # 2 methods x 3 variations x 6 metrics
    assert len(lines) - 1 == 36

    dest2 = tmp_path / "r2"
    emit_report(aggregates, curves, dest2)
    for name in ("summary.csv", "summary.json", "roc_general_binary_an_fold0.csv"):
        assert (dest / name).read_bytes() == (dest2 / name).read_bytes()


def test_emit_report_empty_curves(tmp_path):
    records = [MetricsRecord(1.0, 1.0, 1.0, 1.0, 1.0, auc=1.0, task="race",
                             method="binary", variation="an", fold=0),
               MetricsRecord(1.0, 1.0, 1.0, 1.0, 1.0, auc=1.0, task="race",
                             method="binary", variation="an", fold=1)]
    written = emit_report([aggregate_folds(records)], {}, tmp_path)
    assert {p.name for p in written} == {"summary.csv", "summary.json"}


def test_emit_report_golden_row(tmp_path):
    records = [MetricsRecord(0.96, 0.8, 0.8, 0.8, 0.8, auc=0.9, task="general",
                             method="binary", variation="an", fold=i) for i in range(2)]
    emit_report([aggregate_folds(records)], {}, tmp_path)
    lines = (tmp_path / "summary.csv").read_text().strip().splitlines()
    assert lines[1] == "general,binary,an,accuracy,0.960000,0.000000,2"
    assert lines[2] == "general,binary,an,auc,0.900000,0.000000,2"


def test_mean_roc_points_vertical_average():
    curve_a, _ = roc_auc([1, 0], [0.9, 0.1])
    curve_b, _ = roc_auc([1, 0], [0.1, 0.9])
    points = mean_roc_points([curve_a, curve_b], grid_size=3)
    assert points[0] == (0.0, 0.5)
    assert points[-1] == (1.0, 1.0)


def test_metrics_permutation_invariance():
    rng = random.Random(5)
    labels = [rng.randint(0, 1) for _ in range(40)]
    preds = [rng.randint(0, 1) for _ in range(40)]
    base = metrics(confusion(labels, preds))
    order = list(range(40))
    rng.shuffle(order)
    shuffled = metrics(confusion([labels[i] for i in order], [preds[i] for i in order]))
    assert base == shuffled
