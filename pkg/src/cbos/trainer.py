"""Training schedules and epoch/worker orchestration.

Three schedules share the :func:`cbos.model.ns_update` primitive. At each
sentence position with a per-position window draw ``b``:

* ``skipgram``: the center word's rows predict each context word.
* ``cbow``: the averaged context bag predicts the center word.
* ``cbos``: a skip-gram phase followed by a bag phase in which the context
  minus one randomly chosen word ``p`` predicts ``p``. Five alternative bag
  phases are selectable via ``TrainConfig.variant``.

Multi-worker training is asynchronous (hogwild style): workers are forked
processes sharing the embedding matrices through anonymous shared memory,
updating rows without locks. Lost or torn updates are tolerated; bit-exact
reproducibility is guaranteed only at ``workers=1``.
"""

from __future__ import annotations

import json
import mmap
import multiprocessing
import os
import sys
import time
from dataclasses import asdict, dataclass
from typing import Callable, IO, Iterator

import numpy as np

from .corpus import (
    NEGATIVE_TABLE_SIZE,
    Vocab,
    build_negative_table,
    build_vocab_from_file,
)
from .model import EmbeddingModel, compute_hidden, initialize_matrices, ns_update
from .subword import SubwordConfig, build_subword_cache

MODEL_KINDS = ("cbow", "skipgram", "cbos")
CBOS_VARIANTS = (
    "baseline",
    "next_word",
    "central_word",
    "non_random",
    "variable_window",
    "non_repeated",
)

LR_FLOOR = 1e-6
VARIABLE_WINDOW_MAX = 5
NEGATIVE_RETRY_LIMIT = 8

_NEG_BUFFER = 8192
_EMPTY_IDS = np.empty(0, dtype=np.int32)


@dataclass
class TrainConfig:
    """All tuning parameters of one training run.

    Defaults mirror the standard unsupervised fastText-style configuration.
    ``variant`` selects the cbos bag phase and is only meaningful (and only
    accepted) when ``model_kind == "cbos"``; ``minn = maxn = 0`` disables
    subword n-grams.
    """

    model_kind: str = "cbos"
    variant: str | None = None
    dim: int = 100
    ws: int = 5
    epochs: int = 5
    lr0: float = 0.05
    negatives: int = 5
    minn: int = 3
    maxn: int = 6
    bucket: int = 2_000_000
    min_count: int = 5
    t: float = 1e-4
    workers: int = 1
    seed: int = 1

    def __post_init__(self) -> None:
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if self.model_kind == "cbos":
            if self.variant is None:
                self.variant = "baseline"
            if self.variant not in CBOS_VARIANTS:
                raise ValueError(f"unknown cbos variant {self.variant!r}")
        elif self.variant is not None:
            raise ValueError("variant is only valid with model_kind='cbos'")
        for name, minimum in (
            ("dim", 1),
            ("ws", 1),
            ("epochs", 1),
            ("min_count", 1),
            ("workers", 1),
            ("negatives", 0),
        ):
            if getattr(self, name) < minimum:
                raise ValueError(f"{name} must be >= {minimum}")
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if self.t <= 0:
            raise ValueError("subsample threshold t must be positive")
        self.subword_config()  # validates the minn/maxn/bucket combination

    def subword_config(self) -> SubwordConfig:
        return SubwordConfig(self.minn, self.maxn, self.bucket)

    @property
    def bucket_rows(self) -> int:
        """Extra input-matrix rows for hashed n-grams (0 when disabled)."""
        return self.bucket if self.minn >= 1 else 0


@dataclass(frozen=True)
class TraceEvent:
    """One recorded prediction: which input rows predicted which target."""

    phase: str  # "skipgram" or "bag"
    input_ids: tuple[int, ...]
    target_id: int
    position: int
    variant: str | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "phase": self.phase,
                "input_ids": list(self.input_ids),
                "target_id": self.target_id,
                "position": self.position,
                "variant": self.variant,
            }
        )


TraceSink = Callable[[TraceEvent], object]


class JsonTraceWriter:
    """Trace sink writing newline-delimited JSON events to a file object."""

    def __init__(self, out: IO[str]):
        self.out = out

    def __call__(self, event: TraceEvent) -> None:
        self.out.write(event.to_json())
        self.out.write("\n")


def sample_window(ws: int, rng: np.random.Generator) -> int:
    """Draw the window half-width for one position, uniform on {1..ws}."""
    if ws < 1:
        raise ValueError(f"ws must be >= 1, got {ws}")
    return int(rng.integers(1, ws + 1))


def lr_schedule(lr0: float, tokens_done: int, tokens_total_all_epochs: int) -> float:
    """Linearly decayed learning rate, floored at ``LR_FLOOR``."""
    if tokens_total_all_epochs <= 0:
        return LR_FLOOR
    progress = min(1.0, tokens_done / tokens_total_all_epochs)
    return max(LR_FLOOR, lr0 * (1.0 - progress))


class Trainer:
    """Per-worker training state: rng, sampling buffers, and the step functions.

    A trainer never owns the matrices; several trainers may share one model
    (hogwild workers). All step functions operate on a ``sentence`` given as
    a list of vocab ids (already subsampled) and return the summed loss of
    the updates they issued.
    """

    def __init__(
        self,
        model: EmbeddingModel,
        vocab: Vocab,
        config: TrainConfig,
        rng: np.random.Generator | None = None,
        trace: TraceSink | None = None,
        subwords: list[np.ndarray] | None = None,
    ):
        self.model = model
        self.vocab = vocab
        self.cfg = config
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.trace = trace
        if subwords is None:
            subwords = build_subword_cache(vocab, config.subword_config())
        self.subwords = subwords
        self._plain_words = not config.subword_config().enabled
        if vocab.discard_probs is None:
            vocab.set_discard_probs(config.t)
        self._discard = vocab.discard_probs
        self._subsample_active = bool((self._discard > 0).any())
        if vocab.negative_table is None:
            build_negative_table(
                vocab, table_size=max(NEGATIVE_TABLE_SIZE, len(vocab))
            )
        self._table = vocab.negative_table
        self._neg_buf = _EMPTY_IDS
        self._neg_pos = 0
        self.loss_sum = 0.0
        self.n_updates = 0
        self.tokens_seen = 0
        self._step = {
            "skipgram": self.skipgram_step,
            "cbow": self.cbow_step,
            "cbos": self.cbos_step
            if config.variant in (None, "baseline")
            else self.cbos_variant_step,
        }[config.model_kind]

    # -- sampling ----------------------------------------------------------

    def _next_negative_block(self, k: int) -> np.ndarray:
        if self._neg_pos + k > self._neg_buf.size:
            idx = self.rng.integers(0, self._table.size, size=_NEG_BUFFER)
            self._neg_buf = self._table[idx]
            self._neg_pos = 0
        block = self._neg_buf[self._neg_pos : self._neg_pos + k]
        self._neg_pos += k
        return block

    def draw_negatives(self, target: int) -> np.ndarray:
        """Sample up to ``negatives`` ids from the table, none equal to ``target``.

        A collision with the target is redrawn up to ``NEGATIVE_RETRY_LIMIT``
        times, then that slot is dropped (the update simply uses one negative
        fewer). A single-word vocabulary therefore yields no negatives.
        """
        k = self.cfg.negatives
        if k == 0:
            return _EMPTY_IDS
        block = self._next_negative_block(k)
        if target not in block:
            return block
        kept: list[int] = []
        for value in block.tolist():
            if value != target:
                kept.append(value)
                continue
            for _ in range(NEGATIVE_RETRY_LIMIT):
                redrawn = int(self._next_negative_block(1)[0])
                if redrawn != target:
                    kept.append(redrawn)
                    break
        return np.array(kept, dtype=np.int32)

    # -- shared machinery --------------------------------------------------

    def _update(
        self, input_ids: np.ndarray, target: int, lr: float, phase: str, position: int
    ) -> float:
        hidden = compute_hidden(input_ids, self.model)
        negatives = self.draw_negatives(target)
        loss = ns_update(hidden, target, negatives, lr, self.model)
        self.loss_sum += loss
        self.n_updates += 1
        if self.trace is not None:
            self.trace(
                TraceEvent(
                    phase=phase,
                    input_ids=tuple(int(i) for i in np.atleast_1d(input_ids)),
                    target_id=int(target),
                    position=position,
                    variant=self.cfg.variant,
                )
            )
        return loss

    @staticmethod
    def _context(n: int, pos: int, b: int) -> list[int]:
        lo = pos - b
        if lo < 0:
            lo = 0
        hi = pos + b
        if hi > n - 1:
            hi = n - 1
        return [j for j in range(lo, hi + 1) if j != pos]

    def _bag_ids(self, sentence: list[int], positions: list[int]) -> np.ndarray:
        if self._plain_words:
            return np.array([sentence[j] for j in positions], dtype=np.int64)
        parts = [self.subwords[sentence[j]] for j in positions]
        if len(parts) == 1:
            return parts[0]
        return np.concatenate(parts)

    # -- schedules ---------------------------------------------------------

    def skipgram_step(self, sentence: list[int], pos: int, b: int, lr: float) -> float:
        """Center word predicts each context word within ``b`` positions."""
        ids = self.subwords[sentence[pos]]
        loss = 0.0
        for j in self._context(len(sentence), pos, b):
            loss += self._update(ids, sentence[j], lr, "skipgram", pos)
        return loss

    def cbow_step(self, sentence: list[int], pos: int, b: int, lr: float) -> float:
        """Averaged context bag predicts the center word; skipped when the bag is empty."""
        ctx = self._context(len(sentence), pos, b)
        if not ctx:
            return 0.0
        return self._update(self._bag_ids(sentence, ctx), sentence[pos], lr, "bag", pos)

    def cbos_step(
        self,
        sentence: list[int],
        pos: int,
        b: int,
        lr: float,
        p_index: int | None = None,
    ) -> float:
        """Skip-gram phase, then the context minus one random word predicts that word.

        ``p_index`` (an index into the left-to-right context list) overrides
        the random choice of the predicted word; instrumentation and tests
        use it to force a particular replay. The bag phase is skipped when
        excluding the chosen word would empty the bag.
        """
        loss = self.skipgram_step(sentence, pos, b, lr)
        ctx = self._context(len(sentence), pos, b)
        if len(ctx) < 2:
            return loss
        i = int(self.rng.integers(0, len(ctx))) if p_index is None else p_index
        p_pos = ctx[i]
        bag = self._bag_ids(sentence, [j for j in ctx if j != p_pos])
        loss += self._update(bag, sentence[p_pos], lr, "bag", pos)
        return loss

    def cbos_variant_step(
        self,
        sentence: list[int],
        pos: int,
        b: int,
        lr: float,
        variant: str | None = None,
    ) -> float:
        """One of the five alternative bag phases, after the shared skip-gram phase.

        next_word: the bag grows left to right, predicting the next context
        word after each addition. central_word: the growing bag predicts the
        center word at every size, including the full bag. non_random: the
        full bag predicts the center word. variable_window: the bag phase
        redraws its window uniform on [1, 5] and then behaves like the
        baseline inside the new window. non_repeated: like the baseline but
        each distinct word enters the bag once.
        """
        if variant is None:
            variant = self.cfg.variant
        loss = self.skipgram_step(sentence, pos, b, lr)
        ctx = self._context(len(sentence), pos, b)
        if variant == "next_word":
            for i in range(len(ctx) - 1):
                loss += self._update(
                    self._bag_ids(sentence, ctx[: i + 1]),
                    sentence[ctx[i + 1]],
                    lr,
                    "bag",
                    pos,
                )
        elif variant == "central_word":
            for i in range(len(ctx)):
                loss += self._update(
                    self._bag_ids(sentence, ctx[: i + 1]), sentence[pos], lr, "bag", pos
                )
        elif variant == "non_random":
            if ctx:
                loss += self._update(
                    self._bag_ids(sentence, ctx), sentence[pos], lr, "bag", pos
                )
        elif variant == "variable_window":
            b2 = sample_window(VARIABLE_WINDOW_MAX, self.rng)
            ctx2 = self._context(len(sentence), pos, b2)
            if len(ctx2) >= 2:
                i = int(self.rng.integers(0, len(ctx2)))
                p_pos = ctx2[i]
                bag = self._bag_ids(sentence, [j for j in ctx2 if j != p_pos])
                loss += self._update(bag, sentence[p_pos], lr, "bag", pos)
        elif variant == "non_repeated":
            if len(ctx) >= 2:
                i = int(self.rng.integers(0, len(ctx)))
                p_pos = ctx[i]
                seen: set[int] = set()
                words: list[int] = []
                for j in ctx:
                    if j == p_pos:
                        continue
                    w = sentence[j]
                    if w not in seen:
                        seen.add(w)
                        words.append(w)
                if self._plain_words:
                    bag = np.array(words, dtype=np.int64)
                else:
                    parts = [self.subwords[w] for w in words]
                    bag = parts[0] if len(parts) == 1 else np.concatenate(parts)
                loss += self._update(bag, sentence[p_pos], lr, "bag", pos)
        else:
            raise ValueError(f"unknown cbos variant {variant!r}")
        return loss

    # -- sentence loop -----------------------------------------------------

    def prepare_sentence(self, tokens: list[str]) -> tuple[list[int], int]:
        """Map tokens to vocab ids and subsample; returns (kept ids, in-vocab count)."""
        w2id = self.vocab.word2id
        ids = [w2id[t] for t in tokens if t in w2id]
        scanned = len(ids)
        self.tokens_seen += scanned
        if ids and self._subsample_active:
            arr = np.array(ids, dtype=np.int64)
            keep = self.rng.random(arr.size) >= self._discard[arr]
            ids = arr[keep].tolist()
        return ids, scanned

    def train_sentence(self, sentence: list[int], lr: float) -> None:
        """Run the configured step at every position with per-position windows."""
        if not sentence:
            return
        bs = self.rng.integers(1, self.cfg.ws + 1, size=len(sentence)).tolist()
        step = self._step
        for pos in range(len(sentence)):
            step(sentence, pos, bs[pos], lr)


# -- corpus slicing and worker loop ---------------------------------------


def iter_slice_sentences(
    path: str, worker_id: int, n_workers: int
) -> Iterator[list[str]]:
    """Token lists of every line starting inside this worker's byte range.

    The file is split into ``n_workers`` equal byte ranges; a worker whose
    range starts mid-line skips forward to the next newline, so every line
    is processed by exactly one worker.
    """
    size = os.path.getsize(path)
    start = size * worker_id // n_workers
    end = size * (worker_id + 1) // n_workers
    with open(path, "rb") as handle:
        if start > 0:
            handle.seek(start - 1)
            handle.readline()
        while True:
            pos = handle.tell()
            if pos >= end:
                break
            line = handle.readline()
            if not line:
                break
            tokens = line.decode("utf-8").split()
            if tokens:
                yield tokens


@dataclass
class TrainStats:
    duration: float
    tokens_scanned: int
    tokens_per_sec: float
    updates: int
    avg_loss: float


@dataclass
class TrainResult:
    model: EmbeddingModel
    vocab: Vocab
    config: TrainConfig
    stats: TrainStats


def _shared_array(shape: tuple[int, ...], dtype: np.dtype) -> np.ndarray:
    """Zero-filled array in anonymous shared memory, visible across fork()."""
    nbytes = int(np.prod(shape)) * np.dtype(dtype).itemsize
    buf = mmap.mmap(-1, max(nbytes, 1))
    return np.frombuffer(buf, dtype=dtype, count=int(np.prod(shape))).reshape(shape)


class _Counters:
    """Token/loss/update totals; shared (racily, by design) across workers."""

    def __init__(self, shared: bool):
        alloc = _shared_array if shared else (lambda s, d: np.zeros(s, d))
        self.tokens = alloc((1,), np.int64)
        self.loss_sum = alloc((1,), np.float64)
        self.updates = alloc((1,), np.int64)


def _print_progress(
    out: IO[str], counters: _Counters, total: int, lr0: float, t0: float
) -> None:
    done = int(counters.tokens[0])
    updates = int(counters.updates[0])
    pct = 100.0 * min(1.0, done / total) if total else 100.0
    lr = lr_schedule(lr0, done, total)
    avg = counters.loss_sum[0] / updates if updates else float("nan")
    tps = done / max(time.monotonic() - t0, 1e-9)
    out.write(
        f"\rprogress: {pct:5.1f}% lr: {lr:.6f} loss: {avg:.4f} tokens/sec: {tps:.0f}"
    )
    out.flush()


def _run_worker(
    trainer: Trainer,
    path: str,
    worker_id: int,
    n_workers: int,
    counters: _Counters,
    total_expected: int,
    progress_out: IO[str] | None,
    t0: float,
) -> None:
    cfg = trainer.cfg
    last_print = time.monotonic()
    for _epoch in range(cfg.epochs):
        for tokens in iter_slice_sentences(path, worker_id, n_workers):
            ids, scanned = trainer.prepare_sentence(tokens)
            counters.tokens[0] += scanned
            if ids:
                lr = lr_schedule(cfg.lr0, int(counters.tokens[0]), total_expected)
                loss_before = trainer.loss_sum
                updates_before = trainer.n_updates
                trainer.train_sentence(ids, lr)
                counters.loss_sum[0] += trainer.loss_sum - loss_before
                counters.updates[0] += trainer.n_updates - updates_before
            if progress_out is not None:
                now = time.monotonic()
                if now - last_print >= 0.5:
                    _print_progress(progress_out, counters, total_expected, cfg.lr0, t0)
                    last_print = now


def train(
    config: TrainConfig,
    corpus_path: str,
    *,
    vocab: Vocab | None = None,
    trace: TraceSink | None = None,
    progress: bool = False,
    progress_out: IO[str] | None = None,
) -> TrainResult:
    """Train a model on a one-sentence-per-line corpus file.

    Builds the vocabulary (unless one is supplied), the negative-sampling
    table, and the subword cache, then runs ``config.epochs`` passes with
    ``config.workers`` workers over equal byte-range slices of the corpus.
    ``stats.duration`` covers the training passes only, not vocabulary I/O.

    Tracing requires ``workers=1``; multi-worker runs share matrices without
    locks and are not bit-reproducible.
    """
    if trace is not None and config.workers != 1:
        raise ValueError("tracing requires workers=1")
    if vocab is None:
        vocab = build_vocab_from_file(corpus_path, config.min_count)
    vocab.set_discard_probs(config.t)
    if vocab.negative_table is None:
        build_negative_table(vocab, table_size=max(NEGATIVE_TABLE_SIZE, len(vocab)))
    subwords = build_subword_cache(vocab, config.subword_config())

    n_rows = len(vocab) + config.bucket_rows
    shared = config.workers > 1
    if shared:
        input_matrix = _shared_array((n_rows, config.dim), np.float32)
        output_matrix = _shared_array((len(vocab), config.dim), np.float32)
    else:
        input_matrix = np.empty((n_rows, config.dim), dtype=np.float32)
        output_matrix = np.empty((len(vocab), config.dim), dtype=np.float32)
    model = EmbeddingModel(
        input_matrix=input_matrix,
        output_matrix=output_matrix,
        dim=config.dim,
        bucket=config.bucket_rows,
        minn=config.minn,
        maxn=config.maxn,
    )
    initialize_matrices(model, config.seed)

    total_expected = vocab.total_tokens * config.epochs
    counters = _Counters(shared)
    out = progress_out if progress_out is not None else sys.stderr
    t0 = time.monotonic()

    if config.workers == 1:
        trainer = Trainer(
            model,
            vocab,
            config,
            rng=np.random.default_rng(config.seed),
            trace=trace,
            subwords=subwords,
        )
        _run_worker(
            trainer,
            corpus_path,
            0,
            1,
            counters,
            total_expected,
            out if progress else None,
            t0,
        )
    else:
        ctx = multiprocessing.get_context("fork")
        procs = []
        for w in range(config.workers):

            def _child(worker_id: int = w) -> None:
                rng = np.random.default_rng(config.seed + worker_id)
                worker_trainer = Trainer(
                    model, vocab, config, rng=rng, subwords=subwords
                )
                _run_worker(
                    worker_trainer,
                    corpus_path,
                    worker_id,
                    config.workers,
                    counters,
                    total_expected,
                    None,
                    t0,
                )

            proc = ctx.Process(target=_child, name=f"cbos-worker-{w}")
            proc.start()
            procs.append(proc)
        while any(p.is_alive() for p in procs):
            time.sleep(0.25)
            if progress:
                _print_progress(out, counters, total_expected, config.lr0, t0)
        for p in procs:
            p.join()
        failed = [p.name for p in procs if p.exitcode != 0]
        if failed:
            raise RuntimeError(f"training workers failed: {', '.join(failed)}")

    duration = time.monotonic() - t0
    if progress:
        _print_progress(out, counters, total_expected, config.lr0, t0)
        out.write("\n")
        out.flush()
    scanned = int(counters.tokens[0])
    updates = int(counters.updates[0])
    stats = TrainStats(
        duration=duration,
        tokens_scanned=scanned,
        tokens_per_sec=scanned / max(duration, 1e-9),
        updates=updates,
        avg_loss=float(counters.loss_sum[0] / updates) if updates else float("nan"),
    )
    return TrainResult(model=model, vocab=vocab, config=config, stats=stats)


def config_to_dict(config: TrainConfig) -> dict:
    return asdict(config)


def config_from_dict(data: dict) -> TrainConfig:
    return TrainConfig(**data)
