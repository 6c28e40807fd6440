"""Word-analogy benchmark (3CosAdd), nearest neighbors, and report formatting.

Questions come in the Mikolov text format: a ``: category-name`` line opens
a category, every other non-blank line holds four words ``a b c d`` asking
"a is to b as c is to ?" with gold answer d. Prediction maximizes cosine
similarity between candidate vectors and ``norm(b) - norm(a) + norm(c)``,
never returning a, b, or c themselves. Categories aggregate into semantic,
syntactic, and total accuracy.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .corpus import Vocab
from .model import EmbeddingModel, composed_word_matrix, model_subword_config
from .subword import subword_ids

logger = logging.getLogger(__name__)

NORM_EPSILON = 1e-12
SYNTACTIC_PREFIX = "gram"
SPLITS = ("semantic", "syntactic")


class AnalogyParseError(ValueError):
    """Malformed question file; message carries path and line number."""


class OOVQuestionError(LookupError):
    """A question word has no vocabulary id; the question must be skipped."""


class UnresolvableWordError(LookupError):
    """A word with neither a vocab id nor any n-gram rows to compose from."""


class DegenerateVectorError(ValueError):
    """A vector involved in a cosine query has near-zero norm."""


@dataclass(frozen=True)
class AnalogyQuestion:
    a: str
    b: str
    c: str
    d: str
    category: str

    def __post_init__(self) -> None:
        if not all((self.a, self.b, self.c, self.d)):
            raise ValueError("analogy questions need four non-empty words")
        if not self.category:
            raise ValueError("analogy questions need a non-empty category")

    @property
    def words(self) -> tuple[str, str, str, str]:
        return (self.a, self.b, self.c, self.d)


@dataclass
class AnalogyDataset:
    """Questions plus the category names in file order (even empty ones)."""

    questions: list[AnalogyQuestion]
    categories: list[str]

    def __iter__(self) -> Iterator[AnalogyQuestion]:
        return iter(self.questions)

    def __len__(self) -> int:
        return len(self.questions)


def load_analogy_file(path: str) -> AnalogyDataset:
    """Parse a Mikolov-format question file; words are lowercased.

    Raises :class:`AnalogyParseError` for a non-header line that does not
    hold exactly four words, or for questions before the first header.
    """
    questions: list[AnalogyQuestion] = []
    categories: list[str] = []
    category: str | None = None
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith(":"):
                category = line[1:].strip().lower()
                if not category:
                    raise AnalogyParseError(f"{path}:{lineno}: empty category name")
                if category not in categories:
                    categories.append(category)
                continue
            tokens = line.split()
            if len(tokens) != 4:
                raise AnalogyParseError(
                    f"{path}:{lineno}: expected 4 words, got {len(tokens)}"
                )
            if category is None:
                raise AnalogyParseError(
                    f"{path}:{lineno}: question before any ': category' header"
                )
            a, b, c, d = (t.lower() for t in tokens)
            questions.append(AnalogyQuestion(a, b, c, d, category))
    return AnalogyDataset(questions, categories)


def load_split_file(path: str) -> dict[str, str]:
    """Read a ``category<TAB>semantic|syntactic`` sidecar mapping."""
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise AnalogyParseError(
                    f"{path}:{lineno}: expected 'category<TAB>split'"
                )
            category, split = parts[0].strip().lower(), parts[1].strip().lower()
            if split not in SPLITS:
                raise AnalogyParseError(
                    f"{path}:{lineno}: split must be one of {SPLITS}, got {split!r}"
                )
            mapping[category] = split
    return mapping


def category_split(category: str, split_map: Mapping[str, str] | None = None) -> str:
    """Semantic or syntactic bucket for a category name.

    A sidecar mapping wins when it covers the category; otherwise the
    Mikolov-dataset convention applies: names starting with "gram" are
    syntactic, everything else semantic.
    """
    if split_map and category in split_map:
        return split_map[category]
    return "syntactic" if category.startswith(SYNTACTIC_PREFIX) else "semantic"


def word_vector(model: EmbeddingModel, vocab: Vocab, word: str) -> np.ndarray:
    """Compose a word's vector: mean of its word row (if any) and n-gram rows.

    Out-of-vocabulary words are composed from n-gram rows alone, which is
    what makes subword models useful on unseen words. Raises
    :class:`UnresolvableWordError` when no rows exist at all (OOV with
    n-grams disabled, or a word too short to yield a single n-gram).
    """
    ids = subword_ids(word, vocab, model_subword_config(model)).ids
    if ids.size == 0:
        raise UnresolvableWordError(word)
    return model.input_matrix[ids].mean(axis=0)


class VectorSpace:
    """Unit-normalized composed vectors for every vocab word, built once.

    ``degenerate`` flags rows whose norm is below ``NORM_EPSILON``; those
    can neither form queries nor win an argmax. Scoring happens in float64
    so ranking does not depend on float32 summation order.
    """

    def __init__(self, model: EmbeddingModel, vocab: Vocab):
        self.vocab = vocab
        matrix = composed_word_matrix(model, vocab).astype(np.float64)
        norms = np.linalg.norm(matrix, axis=1)
        self.degenerate = norms < NORM_EPSILON
        norms[self.degenerate] = 1.0
        self.unit = matrix / norms[:, np.newaxis]

    def predict_id(self, ia: int, ib: int, ic: int) -> int:
        """Argmax-cosine answer id for norm(b) - norm(a) + norm(c)."""
        for i in (ia, ib, ic):
            if self.degenerate[i]:
                raise DegenerateVectorError(self.vocab.words[i])
        query = self.unit[ib] - self.unit[ia] + self.unit[ic]
        scores = self.unit @ query
        scores[[ia, ib, ic]] = -np.inf
        scores[self.degenerate] = -np.inf
        best = int(np.argmax(scores))  # first maximum, so ties pick the lower id
        if not np.isfinite(scores[best]):
            raise DegenerateVectorError("no candidate with a usable vector")
        return best


def analogy_predict(
    model: EmbeddingModel,
    vocab: Vocab,
    a: str,
    b: str,
    c: str,
    space: VectorSpace | None = None,
) -> str:
    """The vocab word whose unit vector is closest to norm(b) - norm(a) + norm(c).

    The three question words are excluded from the candidates. Passing a
    prebuilt :class:`VectorSpace` amortizes normalization across questions.
    Raises :class:`OOVQuestionError` if any input word lacks a vocab id.
    """
    ids = [vocab.id_of(w) for w in (a, b, c)]
    missing = [w for w, i in zip((a, b, c), ids) if i is None]
    if missing:
        raise OOVQuestionError(", ".join(missing))
    if space is None:
        space = VectorSpace(model, vocab)
    return vocab.words[space.predict_id(*ids)]


@dataclass
class CategoryResult:
    name: str
    split: str
    correct: int = 0
    attempted: int = 0
    skipped_oov: int = 0
    skipped_degenerate: int = 0

    @property
    def skipped(self) -> int:
        return self.skipped_oov + self.skipped_degenerate

    @property
    def accuracy(self) -> float | None:
        """Percent correct of attempted; None when nothing was attempted."""
        if self.attempted == 0:
            return None
        return 100.0 * self.correct / self.attempted

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "split": self.split,
            "correct": self.correct,
            "attempted": self.attempted,
            "skipped_oov": self.skipped_oov,
            "skipped_degenerate": self.skipped_degenerate,
            "accuracy": self.accuracy,
        }


_UNDEFINED = "n/a"


@dataclass
class AnalogyReport:
    categories: list[CategoryResult]

    def _bucket(self, split: str | None) -> CategoryResult:
        merged = CategoryResult(name=split or "total", split=split or "total")
        for cat in self.categories:
            if split is not None and cat.split != split:
                continue
            merged.correct += cat.correct
            merged.attempted += cat.attempted
            merged.skipped_oov += cat.skipped_oov
            merged.skipped_degenerate += cat.skipped_degenerate
        return merged

    @property
    def semantic(self) -> CategoryResult:
        return self._bucket("semantic")

    @property
    def syntactic(self) -> CategoryResult:
        return self._bucket("syntactic")

    @property
    def total(self) -> CategoryResult:
        return self._bucket(None)

    @property
    def semantic_acc(self) -> float | None:
        return self.semantic.accuracy

    @property
    def syntactic_acc(self) -> float | None:
        return self.syntactic.accuracy

    @property
    def total_acc(self) -> float | None:
        return self.total.accuracy

    def to_dict(self) -> dict:
        return {
            "categories": [c.to_dict() for c in self.categories],
            "semantic": self.semantic.to_dict(),
            "syntactic": self.syntactic.to_dict(),
            "total": self.total.to_dict(),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def format_table(self) -> str:
        width = max([len("Category")] + [len(c.name) for c in self.categories]) + 2
        lines = [
            f"{'Category':<{width}}{'Correct':>9}{'Attempted':>11}"
            f"{'Skipped':>9}{'Accuracy':>10}"
        ]

        def fmt(row: CategoryResult, label: str | None = None) -> str:
            acc = _UNDEFINED if row.accuracy is None else f"{row.accuracy:.2f}%"
            return (
                f"{label or row.name:<{width}}{row.correct:>9}{row.attempted:>11}"
                f"{row.skipped:>9}{acc:>10}"
            )

        lines.extend(fmt(c) for c in self.categories)
        lines.append("-" * (width + 39))
        lines.append(fmt(self.semantic, "Semantic"))
        lines.append(fmt(self.syntactic, "Syntactic"))
        lines.append(fmt(self.total, "Total"))
        return "\n".join(lines)


def evaluate(
    model: EmbeddingModel,
    vocab: Vocab,
    questions: AnalogyDataset | list[AnalogyQuestion],
    split_map: Mapping[str, str] | None = None,
) -> AnalogyReport:
    """Score every question and aggregate per category and split.

    A question counts attempted only when all four words have vocab ids and
    usable vectors; OOV questions and near-zero-norm vectors are skipped
    (the latter also logged). Correct means the top-1 prediction equals d
    exactly.
    """
    space = VectorSpace(model, vocab)
    results: dict[str, CategoryResult] = {}
    for q in questions:
        cat = results.get(q.category)
        if cat is None:
            cat = CategoryResult(q.category, category_split(q.category, split_map))
            results[q.category] = cat
        ids = [vocab.id_of(w) for w in q.words]
        if any(i is None for i in ids):
            cat.skipped_oov += 1
            continue
        ia, ib, ic, expected = ids
        if any(space.degenerate[i] for i in ids):
            cat.skipped_degenerate += 1
            logger.warning(
                "skipping %r: near-zero vector norm in (%s)", q, ", ".join(q.words)
            )
            continue
        try:
            predicted = space.predict_id(ia, ib, ic)
        except DegenerateVectorError as exc:
            cat.skipped_degenerate += 1
            logger.warning("skipping %r: %s", q, exc)
            continue
        cat.attempted += 1
        if predicted == expected:
            cat.correct += 1
    return AnalogyReport(list(results.values()))


def nearest_neighbors(
    model: EmbeddingModel,
    vocab: Vocab,
    word: str,
    k: int,
    space: VectorSpace | None = None,
) -> list[tuple[str, float]]:
    """Top-k vocab words by cosine to the word's composed vector.

    The query word itself is excluded when in vocab; ties order by lower
    vocab id. Fewer than k pairs come back when the vocabulary is small.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    vec = word_vector(model, vocab, word).astype(np.float64)
    norm = float(np.linalg.norm(vec))
    if norm < NORM_EPSILON:
        raise DegenerateVectorError(word)
    if space is None:
        space = VectorSpace(model, vocab)
    scores = space.unit @ (vec / norm)
    scores[space.degenerate] = -np.inf
    own_id = vocab.id_of(word)
    if own_id is not None:
        scores[own_id] = -np.inf
    order = np.argsort(-scores, kind="stable")[:k]
    return [(vocab.words[i], float(scores[i])) for i in order if np.isfinite(scores[i])]
