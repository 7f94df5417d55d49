"""Deterministic text featurizer: hashed word/char n-grams pooled through a
trainable embedding table.

The hash is FNV-1a (64-bit) with the seed folded in as an 8-byte little-endian
prefix, so feature ids are identical across runs, platforms and languages.
Reference values live in tests/data/hash_vectors.json.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

# Alphanumeric runs, internal hyphens kept ("african-american" is one token).
_TOKEN_RE = re.compile(r"[^\W_]+(?:-[^\W_]+)*", re.UNICODE)


def stable_hash64(text: str, seed: int = 0) -> int:
    """FNV-1a over seed bytes (8, little-endian) followed by UTF-8 text."""
    h = _FNV_OFFSET
    for b in seed.to_bytes(8, "little", signed=False) + text.encode("utf-8"):
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class FeaturizerConfig:
    n_buckets: int = 2**18
    word_ngram_max: int = 2       # word n-grams for n = 1..word_ngram_max
    char_ngram_min: int = 3       # char n-grams over "<token>"; 0/0 disables
    char_ngram_max: int = 5
    embed_dim: int = 64
    hash_seed: int = 2024

    def __post_init__(self) -> None:
        if self.n_buckets < 2**10 or self.n_buckets & (self.n_buckets - 1):
            raise ValueError(f"n_buckets must be a power of two >= 1024, got {self.n_buckets}")
        if self.embed_dim < 8:
            raise ValueError(f"embed_dim must be >= 8, got {self.embed_dim}")
        if self.word_ngram_max < 1:
            raise ValueError("word_ngram_max must be >= 1")


def tokenize(text: str) -> list[str]:
    """Lowercase tokens: split on non-alphanumeric except internal hyphens."""
    return _TOKEN_RE.findall(unicodedata.normalize("NFC", text).lower())


def _feature_strings(tokens: list[str], config: FeaturizerConfig) -> list[str]:
    feats: list[str] = []
    for n in range(1, config.word_ngram_max + 1):
        for i in range(len(tokens) - n + 1):
            feats.append(" ".join(tokens[i : i + n]))
    if config.char_ngram_max >= config.char_ngram_min >= 1:
        for tok in tokens:
            padded = f"<{tok}>"
            for n in range(config.char_ngram_min, config.char_ngram_max + 1):
                for i in range(len(padded) - n + 1):
                    feats.append(padded[i : i + n])
    return feats


def hash_features(tokens: list[str], config: FeaturizerConfig) -> list[int]:
    """Bucket ids (multiset, generation order) for all word and char n-grams."""
    mod = config.n_buckets
    return [stable_hash64(f, config.hash_seed) % mod for f in _feature_strings(tokens, config)]


def featurize(text: str, config: FeaturizerConfig) -> list[int]:
    return hash_features(tokenize(text), config)


def init_table(config: FeaturizerConfig, seed: int) -> np.ndarray:
    """Embedding table, B x d, seeded normal init scaled by 1/sqrt(d)."""
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(config.embed_dim)
    return rng.normal(0.0, scale, size=(config.n_buckets, config.embed_dim))


def embed(ids: list[int], table: np.ndarray) -> np.ndarray:
    """Mean of the id rows (multiplicity respected); empty ids -> zero vector."""
    if not ids:
        return np.zeros(table.shape[1], dtype=table.dtype)
    return table[np.asarray(ids, dtype=np.intp)].mean(axis=0)
