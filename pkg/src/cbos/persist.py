"""Model serialization: ecosystem `.vec` text vectors and a lossless native binary.

The `.vec` file is the interchange format (header line ``V dim``, then one
word and its composed vector per line) and is lossy by construction: floats
print with fixed decimals and n-gram rows are baked into per-word means.
The `.cbos` binary is the source of truth, preserving both matrices, the
vocabulary with counts, and the training configuration bit for bit.
"""

from __future__ import annotations

import json
import struct
from typing import BinaryIO

import numpy as np

from .corpus import EmptyVocabError, Vocab
from .model import EmbeddingModel, composed_word_matrix
from .trainer import TrainConfig, config_from_dict, config_to_dict

MAGIC = b"CBOS"
FORMAT_VERSION = 1

# magic, version, V, bucket, dim, minn, maxn
_HEADER = struct.Struct("<4sIQQIII")


class FormatError(ValueError):
    """The file is not a readable model of the expected format/version."""


class TruncatedFileError(FormatError):
    """The file ends before the advertised payload; message carries the offset."""


def save_vec(
    model: EmbeddingModel, vocab: Vocab, path: str, precision: int = 4
) -> None:
    """Write the text vector file: ``V dim`` header, then word + floats per line.

    Vectors are the composed per-word means, so subword information is
    already folded in. Raises :class:`EmptyVocabError` before creating the
    file when the vocabulary is empty.
    """
    if len(vocab) == 0:
        raise EmptyVocabError("refusing to write a .vec file for an empty vocab")
    if precision < 1:
        raise ValueError(f"precision must be >= 1, got {precision}")
    matrix = composed_word_matrix(model, vocab)
    with open(path, "w", encoding="utf-8") as out:
        out.write(f"{len(vocab)} {model.dim}\n")
        for word, row in zip(vocab.words, matrix):
            values = " ".join(f"{x:.{precision}f}" for x in row)
            out.write(f"{word} {values}\n")


def load_vec(path: str) -> tuple[list[str], np.ndarray]:
    """Read a `.vec` file back as (words, float32 matrix in file order)."""
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().split()
        if len(header) != 2:
            raise FormatError(f"{path}: expected 'V dim' header")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise FormatError(f"{path}: non-integer header: {exc}") from exc
        words: list[str] = []
        matrix = np.empty((count, dim), dtype=np.float32)
        for i in range(count):
            fields = handle.readline().split()
            if len(fields) != dim + 1:
                raise FormatError(
                    f"{path}: line {i + 2}: expected {dim + 1} fields, "
                    f"got {len(fields)}"
                )
            words.append(fields[0])
            matrix[i] = [float(x) for x in fields[1:]]
    return words, matrix


def _write_block(out: BinaryIO, payload: bytes) -> None:
    out.write(struct.pack("<Q", len(payload)))
    out.write(payload)


def _read_exact(handle: BinaryIO, n: int, what: str) -> bytes:
    data = handle.read(n)
    if len(data) != n:
        offset = handle.tell() - len(data)
        raise TruncatedFileError(
            f"truncated at byte {offset}: needed {n} more bytes for {what}, "
            f"got {len(data)}"
        )
    return data


def _read_block(handle: BinaryIO, what: str) -> bytes:
    (length,) = struct.unpack("<Q", _read_exact(handle, 8, f"{what} length"))
    return _read_exact(handle, length, what)


def _matrix_bytes(matrix: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(matrix, dtype="<f4")


def save_bin(model: EmbeddingModel, vocab: Vocab, config: TrainConfig, path: str) -> None:
    """Write the native binary model file.

    Layout: fixed header (magic, version, V, bucket, dim, minn, maxn), a
    JSON config block, a JSON vocab block (words and counts, preserving id
    order), then the input and output matrices as row-major little-endian
    float32. Only float32 models are serialized; the format has no wider
    payload type.
    """
    if np.dtype(model.dtype) != np.float32:
        raise ValueError(f"only float32 models are serialized, got {model.dtype}")
    if len(vocab) != model.vocab_size:
        raise ValueError("vocab size does not match model")
    with open(path, "wb") as out:
        out.write(
            _HEADER.pack(
                MAGIC,
                FORMAT_VERSION,
                len(vocab),
                model.bucket,
                model.dim,
                model.minn,
                model.maxn,
            )
        )
        _write_block(out, json.dumps(config_to_dict(config)).encode("utf-8"))
        vocab_block = {"words": vocab.words, "counts": vocab.counts.tolist()}
        _write_block(out, json.dumps(vocab_block).encode("utf-8"))
        _matrix_bytes(model.input_matrix).tofile(out)
        _matrix_bytes(model.output_matrix).tofile(out)


def _read_matrix(handle: BinaryIO, rows: int, dim: int, what: str) -> np.ndarray:
    expected = rows * dim
    offset = handle.tell()
    data = np.fromfile(handle, dtype="<f4", count=expected)
    if data.size != expected:
        raise TruncatedFileError(
            f"truncated at byte {offset + data.size * 4}: {what} matrix needs "
            f"{rows}x{dim} float32 values, got {data.size}"
        )
    return data.reshape(rows, dim)


def load_bin(path: str) -> tuple[EmbeddingModel, Vocab, TrainConfig]:
    """Read a native binary model; exact inverse of :func:`save_bin`."""
    with open(path, "rb") as handle:
        raw = _read_exact(handle, _HEADER.size, "header")
        magic, version, v, bucket, dim, minn, maxn = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise FormatError(f"{path}: not a model file (bad magic {magic!r})")
        if version != FORMAT_VERSION:
            raise FormatError(
                f"{path}: unsupported format version {version} "
                f"(this build reads {FORMAT_VERSION})"
            )
        try:
            config = config_from_dict(json.loads(_read_block(handle, "config")))
            vocab_block = json.loads(_read_block(handle, "vocab"))
            words, counts = vocab_block["words"], vocab_block["counts"]
        except TruncatedFileError:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}: corrupt metadata block: {exc}") from exc
        if len(words) != v:
            raise FormatError(
                f"{path}: header claims {v} words, vocab block has {len(words)}"
            )
        vocab = Vocab(words, counts)
        input_matrix = _read_matrix(handle, v + bucket, dim, "input")
        output_matrix = _read_matrix(handle, v, dim, "output")
        trailing = handle.read(1)
        if trailing:
            raise FormatError(f"{path}: unexpected trailing bytes")
    model = EmbeddingModel(
        input_matrix=input_matrix,
        output_matrix=output_matrix,
        dim=dim,
        bucket=bucket,
        minn=minn,
        maxn=maxn,
    )
    return model, vocab, config
