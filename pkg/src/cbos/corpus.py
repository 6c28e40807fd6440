"""Corpus preprocessing: normalization, tokenization, vocabulary, sampling tables.

The training pipeline expects plain UTF-8 text with one sentence per line.
`normalize_text` produces that form from raw text (lowercase, punctuation
stripped); the remaining functions build the word inventory and the two
sampling structures every training schedule relies on: per-word discard
probabilities for frequent-word subsampling and the unigram^power table
used to draw negative samples.
"""

from __future__ import annotations

import math
import sys
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np

SUBSAMPLE_THRESHOLD = 1e-4
NEGATIVE_TABLE_SIZE = 10_000_000
NEGATIVE_POWER = 0.75


class EmptyVocabError(ValueError):
    """No words survived vocabulary construction."""


def normalize_text(text: str) -> str:
    """Lowercase ``text`` and replace punctuation and symbol characters by spaces.

    Characters in the Unicode general categories P* (punctuation) and S*
    (symbols) each become a single space; letters, digits, and whitespace
    (including newlines, which delimit sentences) pass through unchanged.
    Idempotent: normalizing already-normalized text is a no-op.
    """
    lowered = text.lower()
    table = {
        ord(ch): " "
        for ch in set(lowered)
        if unicodedata.category(ch)[0] in ("P", "S")
    }
    return lowered.translate(table) if table else lowered


def tokenize(text: str) -> list[str]:
    """Split one sentence into tokens (maximal runs of non-whitespace)."""
    return text.split()


def iter_sentences(lines: Iterable[str]) -> Iterator[list[str]]:
    """Yield one token list per input line; blank lines are skipped."""
    for line in lines:
        tokens = line.split()
        if tokens:
            yield tokens


def iter_file_tokens(path: str) -> Iterator[str]:
    """Stream every token of a one-sentence-per-line UTF-8 text file."""
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            yield from line.split()


@dataclass(frozen=True)
class VocabEntry:
    """One retained word: its surface form, corpus count, and dense id."""

    word: str
    count: int
    id: int


class Vocab:
    """Word inventory with counts, dense ids, and training-time sampling state.

    Ids are contiguous ``0..V-1``, assigned in descending count order with
    ties broken by first occurrence. ``discard_probs`` and ``negative_table``
    start unset; training populates them via :meth:`set_discard_probs` and
    :func:`build_negative_table`.
    """

    def __init__(self, words: Iterable[str], counts: Iterable[int]):
        self.words: list[str] = list(words)
        self.counts: np.ndarray = np.asarray(list(counts), dtype=np.int64)
        if len(self.words) != self.counts.size:
            raise ValueError("words and counts length mismatch")
        self.word2id: dict[str, int] = {w: i for i, w in enumerate(self.words)}
        self.total_tokens: int = int(self.counts.sum())
        self.discard_probs: np.ndarray | None = None
        self.negative_table: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.word2id

    def id_of(self, word: str) -> int | None:
        return self.word2id.get(word)

    @property
    def entries(self) -> list[VocabEntry]:
        return [
            VocabEntry(w, int(c), i)
            for i, (w, c) in enumerate(zip(self.words, self.counts))
        ]

    def frequencies(self) -> np.ndarray:
        """Per-word occurrence fraction count/total_tokens."""
        return self.counts / float(self.total_tokens)

    def set_discard_probs(self, threshold: float) -> np.ndarray:
        """Compute and cache the subsampling discard probability per word id."""
        if threshold <= 0:
            raise ValueError(f"subsample threshold must be positive, got {threshold}")
        freqs = self.frequencies()
        keep = np.minimum(1.0, np.sqrt(threshold / freqs) + threshold / freqs)
        self.discard_probs = 1.0 - keep
        return self.discard_probs

    def dump_tsv(self, out: TextIO | None = None) -> None:
        """Write the debug dump: one ``word<TAB>count<TAB>id`` line per entry."""
        if out is None:
            out = sys.stdout
        for entry in self.entries:
            out.write(f"{entry.word}\t{entry.count}\t{entry.id}\n")


def build_vocab(tokens: Iterable[str], min_count: int = 1) -> Vocab:
    """Count ``tokens`` and build a :class:`Vocab` of words seen >= ``min_count`` times.

    Raises :class:`EmptyVocabError` when nothing survives the threshold.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counter: Counter[str] = Counter(tokens)
    # Counter preserves first-occurrence order; a stable sort on -count then
    # breaks count ties by first occurrence, as required for determinism.
    items = [(w, c) for w, c in counter.items() if c >= min_count]
    items.sort(key=lambda wc: -wc[1])
    if not items:
        raise EmptyVocabError("no words with count >= min_count")
    return Vocab((w for w, _ in items), (c for _, c in items))


def build_vocab_from_file(path: str, min_count: int = 1) -> Vocab:
    return build_vocab(iter_file_tokens(path), min_count)


def discard_probability(word_freq: float, threshold: float) -> float:
    """Probability of discarding one occurrence of a word with corpus fraction ``word_freq``.

    The keep probability is ``min(1, sqrt(t/f) + t/f)``; words rarer than
    roughly the threshold ``t`` are always kept.
    """
    if not 0.0 < word_freq <= 1.0:
        raise ValueError(f"word frequency must be in (0, 1], got {word_freq}")
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    ratio = threshold / word_freq
    keep = min(1.0, math.sqrt(ratio) + ratio)
    return 1.0 - keep


def build_negative_table(
    vocab: Vocab,
    power: float = NEGATIVE_POWER,
    table_size: int = NEGATIVE_TABLE_SIZE,
) -> np.ndarray:
    """Build the negative-sampling table: word ids repeated ∝ count^power.

    Word ``i`` occupies the slots between ``floor(size * cum[i-1])`` and
    ``floor(size * cum[i])`` of the table, where ``cum`` is the cumulative
    normalized ``count^power`` distribution, so drawing uniform indices
    samples the unigram^power distribution.
    """
    if len(vocab) == 0:
        raise EmptyVocabError("cannot build a negative table for an empty vocab")
    if not 0.0 < power <= 1.0:
        raise ValueError(f"power must be in (0, 1], got {power}")
    if table_size < len(vocab):
        raise ValueError(
            f"table_size {table_size} smaller than vocabulary size {len(vocab)}"
        )
    weights = vocab.counts.astype(np.float64) ** power
    cum = np.cumsum(weights)
    cum /= cum[-1]
    # The epsilon keeps exact rational boundaries (e.g. 8/9 of 9 slots) from
    # landing one slot short after float rounding.
    bounds = np.floor(cum * table_size + 1e-6).astype(np.int64)
    slots = np.diff(np.concatenate(([0], bounds)))
    table = np.repeat(np.arange(len(vocab), dtype=np.int32), slots)
    vocab.negative_table = table
    return table
