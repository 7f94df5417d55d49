"""Classifiers and training: a shared dense backbone over pooled hashed
embeddings, one logistic head per task, class-weighted binary cross-entropy
averaged over tasks and examples, an OR-ensemble over type-specific models,
and a frozen-embedding logistic baseline.

Training is plain mini-batch gradient descent with adaptive moment estimation
(0.9/0.999, eps 1e-8), seeded shuffling, and is bit-reproducible for a fixed
seed under single-threaded execution.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import IO, Mapping, Sequence

import numpy as np

from .dataset import CorpusExample, Dataset, FoldAssignment, fold_split
from .features import FeaturizerConfig, featurize, init_table
from .labeling import ALL_TASKS, GENERAL_TASK, BiasType

MODEL_MAGIC = b"BFM1"
MODEL_VERSION = 1
PROB_EPS = 1e-7

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


class NumericError(ArithmeticError):
    """Non-finite activation or loss; signals exploding parameters."""


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    epochs: int = 10
    learning_rate: float = 1e-3
    batch_size: int = 32
    threshold: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @classmethod
    def paper(cls, **overrides) -> "Hyperparams":
        """The published fine-tuning setting (lr 4e-5, 10 epochs, batch 32)."""
        overrides.setdefault("learning_rate", 4e-5)
        return cls(**overrides)


@dataclass(frozen=True)
class ClassWeights:
    """Per task: (w0, w1), both positive."""

    weights: Mapping[str, tuple[float, float]]

    def pair(self, task: str) -> tuple[float, float]:
        return self.weights[task]

    @classmethod
    def uniform(cls, tasks: Sequence[str]) -> "ClassWeights":
        return cls({t: (1.0, 1.0) for t in tasks})


def class_weights(examples, task: str) -> tuple[float, float]:
    """Balanced heuristic w_c = N / (2 * N_c) over the given examples."""
    if isinstance(examples, Dataset):
        examples = examples.examples
    labels = [ex.task_label(task) for ex in examples]
    n = len(labels)
    n1 = sum(labels)
    n0 = n - n1
    if n0 == 0 or n1 == 0:
        raise ValueError(f"task {task!r} has a class with zero members")
    return n / (2.0 * n0), n / (2.0 * n1)


def dataset_class_weights(examples, tasks: Sequence[str]) -> ClassWeights:
    return ClassWeights({t: class_weights(examples, t) for t in tasks})


def wbce(y: int, p: float, w0: float, w1: float) -> float:
    """Class-weighted binary cross-entropy for one example; p is clamped to
    [eps, 1-eps] so the value is always finite."""
    p = min(max(p, PROB_EPS), 1.0 - PROB_EPS)
    w = w1 if y == 1 else w0
    return w * (-y * np.log(p) - (1 - y) * np.log(1.0 - p))


@dataclass
class MtlModel:
    """Backbone plus task heads. hidden_w of None means the heads read the
    pooled embedding directly (the baseline shape)."""

    config: FeaturizerConfig
    tasks: tuple[str, ...]
    embedding: np.ndarray                 # (B, d)
    hidden_w: np.ndarray | None           # (d, h)
    hidden_b: np.ndarray | None           # (h,)
    head_w: np.ndarray                    # (h or d, T)
    head_b: np.ndarray                    # (T,)
    trainable_embedding: bool = True
    metadata: dict = field(default_factory=dict)

    @property
    def n_parameters(self) -> int:
        n = self.embedding.size + self.head_w.size + self.head_b.size
        if self.hidden_w is not None:
            n += self.hidden_w.size + self.hidden_b.size
        return n


def init_model(
    config: FeaturizerConfig,
    tasks: Sequence[str],
    seed: int,
    hidden_dim: int | None = 64,
    trainable_embedding: bool = True,
) -> MtlModel:
    """Heads start at zero (every probability is exactly 0.5); embedding and
    hidden layer get seeded random init."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xB1A5)))
    d = config.embed_dim
    embedding = init_table(config, seed)
    if hidden_dim is None:
        hidden_w = hidden_b = None
        head_dim = d
    else:
        hidden_w = rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, hidden_dim))
        hidden_b = np.zeros(hidden_dim)
        head_dim = hidden_dim
    return MtlModel(
        config=config,
        tasks=tuple(tasks),
        embedding=embedding,
        hidden_w=hidden_w,
        hidden_b=hidden_b,
        head_w=np.zeros((head_dim, len(tasks))),
        head_b=np.zeros(len(tasks)),
        trainable_embedding=trainable_embedding,
    )


# --- forward ----------------------------------------------------------------

def _pool(ids_list: Sequence[Sequence[int]], table: np.ndarray) -> np.ndarray:
    x = np.zeros((len(ids_list), table.shape[1]))
    for i, ids in enumerate(ids_list):
        if ids:
            x[i] = table[np.asarray(ids, dtype=np.intp)].mean(axis=0)
    return x


def _forward_arrays(model: MtlModel, x: np.ndarray):
    if model.hidden_w is not None:
        z = x @ model.hidden_w + model.hidden_b
        a = np.maximum(z, 0.0)
    else:
        z = a = x
    logits = a @ model.head_w + model.head_b
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite activation in forward pass")
    probs = 1.0 / (1.0 + np.exp(-logits))
    return probs, logits, z, a


def forward(model: MtlModel, text: str) -> dict[str, float]:
    ids = featurize(text, model.config)
    probs, _, _, _ = _forward_arrays(model, _pool([ids], model.embedding))
    return {t: float(probs[0, j]) for j, t in enumerate(model.tasks)}


def predict(model: MtlModel, text: str, threshold: float = 0.5) -> dict[str, int]:
    """Strict inequality: probability exactly at the threshold predicts 0."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    return {t: int(p > threshold) for t, p in forward(model, text).items()}


def ensemble_predict(
    type_models: Mapping[BiasType, MtlModel], text: str, threshold: float = 0.5
) -> int:
    """Logic OR over the six type-specific predictions."""
    missing = [t.value for t in BiasType if t not in type_models]
    if missing:
        raise ConfigurationError(f"missing type models: {missing}")
    for t, m in type_models.items():
        if m.tasks != (t.value,):
            raise ConfigurationError(f"model for {t.value!r} serves tasks {m.tasks}")
    return int(any(
        predict(type_models[t], text, threshold)[t.value] for t in BiasType
    ))


# --- loss -------------------------------------------------------------------

Batch = Sequence[tuple[str, Mapping[str, int]]]


def batch_from_examples(examples: Sequence[CorpusExample], tasks: Sequence[str]) -> Batch:
    return [(ex.text, {t: ex.task_label(t) for t in tasks}) for ex in examples]


def _weight_matrix(weights: ClassWeights, tasks: Sequence[str], y: np.ndarray) -> np.ndarray:
    w0 = np.array([weights.pair(t)[0] for t in tasks])
    w1 = np.array([weights.pair(t)[1] for t in tasks])
    return np.where(y == 1, w1[None, :], w0[None, :])


def _loss_value(probs: np.ndarray, y: np.ndarray, wgt: np.ndarray) -> float:
    p = np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
    bce = -y * np.log(p) - (1.0 - y) * np.log(1.0 - p)
    return float(np.sum(wgt * bce) / y.size)


def total_loss(batch: Batch, model: MtlModel, weights: ClassWeights) -> float:
    """Mean class-weighted BCE over all tasks and examples: the sum of
    per-task WBCE divided by N * (number of tasks)."""
    if not batch:
        raise ValueError("batch must be non-empty")
    ids_list = [featurize(text, model.config) for text, _ in batch]
    y = np.array([[labels[t] for t in model.tasks] for _, labels in batch], dtype=float)
    probs, _, _, _ = _forward_arrays(model, _pool(ids_list, model.embedding))
    return _loss_value(probs, y, _weight_matrix(weights, model.tasks, y))


# --- gradients ---------------------------------------------------------------

def _loss_and_grads(model, ids_list, y, wgt):
    n, d = len(ids_list), model.config.embed_dim
    x = _pool(ids_list, model.embedding)
    probs, logits, z, a = _forward_arrays(model, x)
    loss = _loss_value(probs, y, wgt)
    if not np.isfinite(loss):
        raise NumericError("non-finite training loss")

    dlogit = wgt * (probs - y) / y.size
    grads = {
        "head_w": a.T @ dlogit,
        "head_b": dlogit.sum(axis=0),
    }
    da = dlogit @ model.head_w.T
    if model.hidden_w is not None:
        dz = da * (z > 0.0)
        grads["hidden_w"] = x.T @ dz
        grads["hidden_b"] = dz.sum(axis=0)
        dx = dz @ model.hidden_w.T
    else:
        dx = da
    if model.trainable_embedding:
        grad_e = np.zeros_like(model.embedding)
        for i, ids in enumerate(ids_list):
            if ids:
                np.add.at(grad_e, np.asarray(ids, dtype=np.intp), dx[i] / len(ids))
        grads["embedding"] = grad_e
    return loss, grads


def _trainable_params(model: MtlModel) -> dict[str, np.ndarray]:
    params = {"head_w": model.head_w, "head_b": model.head_b}
    if model.hidden_w is not None:
        params["hidden_w"] = model.hidden_w
        params["hidden_b"] = model.hidden_b
    if model.trainable_embedding:
        params["embedding"] = model.embedding
    return params


class _Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float):
        self.lr = lr
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - _ADAM_BETA1**self.t
        c2 = 1.0 - _ADAM_BETA2**self.t
        for k, p in params.items():
            g = grads[k]
            self.m[k] = _ADAM_BETA1 * self.m[k] + (1.0 - _ADAM_BETA1) * g
            self.v[k] = _ADAM_BETA2 * self.v[k] + (1.0 - _ADAM_BETA2) * g * g
            p -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + _ADAM_EPS)


# --- training ----------------------------------------------------------------

@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float | None
    val_auc: Mapping[str, float | None]


@dataclass(frozen=True)
class TrainingHistory:
    records: tuple[EpochRecord, ...]


@dataclass(frozen=True)
class FoldRun:
    fold: int
    model: MtlModel
    history: TrainingHistory


def _arch_tasks(arch: str) -> tuple[str, ...]:
    if arch == "mtl":
        return ALL_TASKS
    if arch == "binary-general":
        return (GENERAL_TASK,)
    if arch.startswith("binary-"):
        t = arch[len("binary-"):]
        BiasType(t)  # validates
        return (t,)
    raise ConfigurationError(f"unknown architecture {arch!r}")


def train(
    dataset: Dataset,
    folds: FoldAssignment,
    arch: str,
    hp: Hyperparams,
    config: FeaturizerConfig,
    hidden_dim: int = 64,
) -> list[FoldRun]:
    return _train_folds(dataset, folds, _arch_tasks(arch), hp, config,
                        hidden_dim=hidden_dim, trainable_embedding=True, arch=arch)


def train_baseline(
    dataset: Dataset,
    folds: FoldAssignment,
    hp: Hyperparams,
    config: FeaturizerConfig,
) -> list[FoldRun]:
    """Frozen random embedding table, one trained logistic layer per task."""
    tasks = ALL_TASKS if dataset.task == GENERAL_TASK else (dataset.task,)
    return _train_folds(dataset, folds, tasks, hp, config,
                        hidden_dim=None, trainable_embedding=False, arch="baseline")


def _train_folds(dataset, folds, tasks, hp, config, hidden_dim, trainable_embedding, arch):
    from .evaluation import roc_auc

    feature_cache = {ex.example_id: featurize(ex.text, config) for ex in dataset.examples}
    runs: list[FoldRun] = []
    for fold in range(folds.K):
        train_ex, val_ex, _ = fold_split(dataset, folds, fold)
        weights = dataset_class_weights(train_ex, tasks)
        model = init_model(config, tasks, seed=hp.seed, hidden_dim=hidden_dim,
                           trainable_embedding=trainable_embedding)
        params = _trainable_params(model)
        opt = _Adam(params, hp.learning_rate)
        rng = np.random.default_rng(np.random.SeedSequence((hp.seed, fold)))

        ids_train = [feature_cache[ex.example_id] for ex in train_ex]
        y_train = np.array([[ex.task_label(t) for t in tasks] for ex in train_ex], dtype=float)
        ids_val = [feature_cache[ex.example_id] for ex in val_ex]
        y_val = np.array([[ex.task_label(t) for t in tasks] for ex in val_ex], dtype=float)

        records = []
        for epoch in range(hp.epochs):
            order = rng.permutation(len(train_ex))
            total, seen = 0.0, 0
            for start in range(0, len(order), hp.batch_size):
                idx = order[start : start + hp.batch_size]
                yb = y_train[idx]
                wgt = _weight_matrix(weights, tasks, yb)
                loss, grads = _loss_and_grads(model, [ids_train[i] for i in idx], yb, wgt)
                opt.step(params, grads)
                total += loss * len(idx)
                seen += len(idx)
            val_loss, val_auc = _validate(model, ids_val, y_val, tasks, weights, roc_auc)
            records.append(EpochRecord(
                epoch=epoch + 1,
                train_loss=total / max(seen, 1),
                val_loss=val_loss,
                val_auc=val_auc,
            ))
        model.metadata = {
            "arch": arch, "fold": fold, "seed": hp.seed, "epochs": hp.epochs,
            "learning_rate": hp.learning_rate, "batch_size": hp.batch_size,
            "task": dataset.task, "variation": dataset.variation.value,
            "trained": True,
        }
        runs.append(FoldRun(fold=fold, model=model, history=TrainingHistory(tuple(records))))
    return runs


def _validate(model, ids_val, y_val, tasks, weights, roc_auc):
    if not ids_val:
        return None, {t: None for t in tasks}
    probs, _, _, _ = _forward_arrays(model, _pool(ids_val, model.embedding))
    val_loss = _loss_value(probs, y_val, _weight_matrix(weights, tasks, y_val))
    aucs = {}
    for j, t in enumerate(tasks):
        labels = y_val[:, j].astype(int).tolist()
        if len(set(labels)) < 2:
            aucs[t] = None
        else:
            _, auc = roc_auc(labels, probs[:, j].tolist())
            aucs[t] = auc
    return val_loss, aucs


def score_examples(model: MtlModel, examples: Sequence[CorpusExample], task: str) -> list[float]:
    ids = [featurize(ex.text, model.config) for ex in examples]
    probs, _, _, _ = _forward_arrays(model, _pool(ids, model.embedding))
    j = model.tasks.index(task)
    return probs[:, j].tolist()


# --- gradient check -----------------------------------------------------------

def gradient_check(
    model: MtlModel,
    batch: Batch,
    weights: ClassWeights | None = None,
    step: float = 1e-4,
) -> float:
    """Max relative error between analytic gradients of total_loss and central
    finite differences. Embedding rows not touched by the batch must have an
    exactly zero analytic gradient and are not differenced."""
    if model.n_parameters > 10_000:
        raise ValueError("gradient_check is meant for tiny models (<= 1e4 parameters)")
    if weights is None:
        weights = ClassWeights.uniform(model.tasks)
    ids_list = [featurize(text, model.config) for text, _ in batch]
    y = np.array([[labels[t] for t in model.tasks] for _, labels in batch], dtype=float)
    wgt = _weight_matrix(weights, model.tasks, y)
    _, grads = _loss_and_grads(model, ids_list, y, wgt)

    def loss_now() -> float:
        # total_loss with featurization hoisted out (ids are parameter-free)
        probs, _, _, _ = _forward_arrays(model, _pool(ids_list, model.embedding))
        return _loss_value(probs, y, wgt)

    max_err = 0.0
    params = _trainable_params(model)
    touched = sorted({i for ids in ids_list for i in ids})
    for name, param in params.items():
        grad = grads[name]
        if name == "embedding":
            untouched = np.delete(np.arange(param.shape[0]), touched)
            if untouched.size and np.any(grad[untouched] != 0.0):
                raise AssertionError("analytic gradient non-zero for untouched embedding row")
            coords = [(r, c) for r in touched for c in range(param.shape[1])]
        else:
            coords = list(np.ndindex(param.shape))
        for coord in coords:
            orig = param[coord]
            param[coord] = orig + step
            hi = loss_now()
            param[coord] = orig - step
            lo = loss_now()
            param[coord] = orig
            fd = (hi - lo) / (2.0 * step)
            a = grad[coord]
            err = abs(a - fd) / max(abs(a), abs(fd), 1e-6)
            max_err = max(max_err, err)
    return max_err


# --- serialization -------------------------------------------------------------

def _array_entries(model: MtlModel) -> list[tuple[str, np.ndarray]]:
    entries = [("embedding", model.embedding)]
    if model.hidden_w is not None:
        entries += [("hidden_w", model.hidden_w), ("hidden_b", model.hidden_b)]
    entries += [("head_w", model.head_w), ("head_b", model.head_b)]
    return entries


def model_bytes(model: MtlModel) -> bytes:
    """Versioned container: magic 'BFM1', JSON header, then each weight matrix
    row-major as 8-byte little-endian floats."""
    entries = _array_entries(model)
    header = {
        "format_version": MODEL_VERSION,
        "featurizer": {
            "n_buckets": model.config.n_buckets,
            "word_ngram_max": model.config.word_ngram_max,
            "char_ngram_min": model.config.char_ngram_min,
            "char_ngram_max": model.config.char_ngram_max,
            "embed_dim": model.config.embed_dim,
            "hash_seed": model.config.hash_seed,
        },
        "tasks": list(model.tasks),
        "has_hidden": model.hidden_w is not None,
        "trainable_embedding": model.trainable_embedding,
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in entries],
        "metadata": model.metadata,
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    out = bytearray()
    out += MODEL_MAGIC
    out += struct.pack("<I", MODEL_VERSION)
    out += struct.pack("<Q", len(head))
    out += head
    for _, arr in entries:
        out += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    return bytes(out)


def save_model(model: MtlModel, fh: IO[bytes]) -> None:
    fh.write(model_bytes(model))


def load_model_bytes(data: bytes) -> MtlModel:
    if data[:4] != MODEL_MAGIC:
        raise ValueError("not a model file (bad magic)")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != MODEL_VERSION:
        raise ValueError(f"unsupported model version {version}")
    (head_len,) = struct.unpack_from("<Q", data, 8)
    header = json.loads(data[16 : 16 + head_len].decode("utf-8"))
    config = FeaturizerConfig(**header["featurizer"])
    offset = 16 + head_len
    arrays = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        arrays[entry["name"]] = arr
        offset += count * 8
    return MtlModel(
        config=config,
        tasks=tuple(header["tasks"]),
        embedding=arrays["embedding"],
        hidden_w=arrays.get("hidden_w"),
        hidden_b=arrays.get("hidden_b"),
        head_w=arrays["head_w"],
        head_b=arrays["head_b"],
        trainable_embedding=header["trainable_embedding"],
        metadata=header["metadata"],
    )


def load_model(fh: IO[bytes]) -> MtlModel:
    return load_model_bytes(fh.read())
