"""Character n-gram extraction and hashing into bucket ids.

Every word is wrapped in boundary markers (``<word>``) and its character
n-grams are hashed into a fixed range of ``bucket`` extra input-matrix rows
placed after the vocabulary rows. A word's input representation is then the
set of rows ``{word_id} ∪ {V + hash(g) for each n-gram g}``, which also lets
out-of-vocabulary words be composed from n-grams alone at query time.

Setting ``minn = maxn = 0`` disables n-grams entirely (pure-word training).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Vocab

BOW = "<"
EOW = ">"

_FNV_OFFSET = 2166136261
_FNV_PRIME = 16777619


@dataclass(frozen=True)
class SubwordConfig:
    """N-gram length range and hash bucket count."""

    minn: int = 3
    maxn: int = 6
    bucket: int = 2_000_000

    def __post_init__(self) -> None:
        if self.minn == 0 or self.maxn == 0:
            if (self.minn, self.maxn) != (0, 0):
                raise ValueError("disable n-grams with minn == maxn == 0")
        elif not 1 <= self.minn <= self.maxn:
            raise ValueError(f"need 1 <= minn <= maxn, got {self.minn}..{self.maxn}")
        elif self.bucket < 1:
            raise ValueError("bucket must be >= 1 when n-grams are enabled")

    @property
    def enabled(self) -> bool:
        return self.minn >= 1


@dataclass(frozen=True)
class SubwordIds:
    """Input-matrix row ids for one word: its vocab id (if any) plus n-gram ids."""

    word_id: int | None
    ngram_ids: np.ndarray

    @property
    def ids(self) -> np.ndarray:
        """All input rows for this word, word id first."""
        if self.word_id is None:
            return self.ngram_ids
        head = np.array([self.word_id], dtype=np.int64)
        if self.ngram_ids.size == 0:
            return head
        return np.concatenate([head, self.ngram_ids])


def extract_ngrams(word: str, minn: int, maxn: int) -> list[str]:
    """All n-grams of ``<word>`` with length in [minn, maxn], excluding the full wrapped form.

    Ordered left to right by start position, shortest first at each position.
    The full wrapped word is omitted because the word itself is represented
    by its vocabulary row.
    """
    if not word:
        return []
    if not 1 <= minn <= maxn:
        raise ValueError(f"need 1 <= minn <= maxn, got {minn}..{maxn}")
    wrapped = BOW + word + EOW
    length = len(wrapped)
    grams: list[str] = []
    for start in range(length):
        for n in range(minn, maxn + 1):
            end = start + n
            if end > length:
                break
            if start == 0 and end == length:
                continue
            grams.append(wrapped[start:end])
    return grams


def fnv1a_32(data: bytes) -> int:
    """32-bit FNV-1a over ``data``, XORing each byte as a sign-extended value.

    The sign extension (bytes >= 0x80 enter as their two's-complement 32-bit
    value) matches the hash used by the common subword-embedding ecosystem,
    so bucket assignments are interchangeable with models trained elsewhere.
    """
    h = _FNV_OFFSET
    for b in data:
        if b >= 128:
            b -= 256
        h ^= b & 0xFFFFFFFF
        h = (h * _FNV_PRIME) & 0xFFFFFFFF
    return h


def hash_ngram(ngram: str, bucket: int) -> int:
    """Deterministically map an n-gram to a bucket id in [0, bucket)."""
    if bucket < 1:
        raise ValueError(f"bucket must be >= 1, got {bucket}")
    return fnv1a_32(ngram.encode("utf-8")) % bucket


def subword_ids(word: str, vocab: Vocab, config: SubwordConfig) -> SubwordIds:
    """Resolve a word to its input-matrix rows under ``config``.

    In-vocabulary words contribute their own row plus hashed n-gram rows;
    out-of-vocabulary words contribute n-gram rows only (an empty id set if
    the word is too short to produce any n-gram).
    """
    word_id = vocab.id_of(word)
    if config.enabled:
        offset = len(vocab)
        grams = extract_ngrams(word, config.minn, config.maxn)
        ngram_ids = np.array(
            [offset + hash_ngram(g, config.bucket) for g in grams], dtype=np.int64
        )
    else:
        ngram_ids = np.empty(0, dtype=np.int64)
    return SubwordIds(word_id, ngram_ids)


def build_subword_cache(vocab: Vocab, config: SubwordConfig) -> list[np.ndarray]:
    """Precompute the full input-row id array for every vocabulary word.

    Index ``w`` of the result holds the rows averaged whenever word ``w``
    appears in an input bag; computing these once keeps the hot training
    loop free of string work.
    """
    return [subword_ids(w, vocab, config).ids for w in vocab.words]
