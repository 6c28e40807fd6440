import hypothesis
import numpy as np
import pytest
from hypothesis import strategies as st

from cbos.corpus import build_vocab
from cbos.subword import (
    SubwordConfig,
    build_subword_cache,
    extract_ngrams,
    fnv1a_32,
    hash_ngram,
    subword_ids,
)

# values frozen from a struct-based reference implementation of FNV-1a
# with signed-char XOR; the multibyte case exercises the sign extension
FNV_KNOWN = {
    b"<wh": 1048167652,
    b"whe": 888420941,
    b"her": 4105473420,
    b"abc": 440920331,
    b"<go": 1570936865,
    b"go>": 2384203055,
    "λό".encode("utf-8"): 1798789085,
}


@pytest.mark.parametrize("data,expected", sorted(FNV_KNOWN.items()))
def test_fnv1a_known_values(data, expected):
    assert fnv1a_32(data) == expected


def test_fnv1a_empty_is_offset_basis():
    assert fnv1a_32(b"") == 2166136261


@hypothesis.given(st.binary(max_size=64))
def test_fnv1a_stays_32_bit(data):
    assert 0 <= fnv1a_32(data) < 1 << 32


def test_extract_ngrams_where():
    expected = [
        "<wh", "<whe", "<wher", "<where",
        "whe", "wher", "where", "where>",
        "her", "here", "here>",
        "ere", "ere>",
        "re>",
    ]
    assert extract_ngrams("where", 3, 6) == expected


def test_extract_ngrams_short_word():
    # wrapped form <go> has length 4; the full form is excluded
    assert extract_ngrams("go", 3, 6) == ["<go", "go>"]
    assert extract_ngrams("ab", 3, 6) == ["<ab", "ab>"]


def test_extract_ngrams_single_char_none():
    # <a> is exactly the excluded full form at length 3
    assert extract_ngrams("a", 3, 6) == []


def test_extract_ngrams_empty_word():
    assert extract_ngrams("", 3, 6) == []


def test_extract_ngrams_rejects_bad_range():
    with pytest.raises(ValueError):
        extract_ngrams("word", 0, 3)
    with pytest.raises(ValueError):
        extract_ngrams("word", 4, 3)


@hypothesis.given(
    st.text(alphabet="abcdefgh", min_size=1, max_size=12),
    st.integers(min_value=1, max_value=4),
    st.integers(min_value=0, max_value=4),
)
def test_extract_ngrams_properties(word, minn, extra):
    maxn = minn + extra
    wrapped = f"<{word}>"
    grams = extract_ngrams(word, minn, maxn)
    assert wrapped not in grams
    for g in grams:
        assert minn <= len(g) <= maxn
        assert g in wrapped
    # count: every (start, length) window inside the wrapped form, minus the
    # full form when its length is in range
    expected = sum(max(0, len(wrapped) - n + 1) for n in range(minn, maxn + 1))
    if minn <= len(wrapped) <= maxn:
        expected -= 1
    assert len(grams) == expected


@hypothesis.given(st.text(min_size=1, max_size=10), st.integers(1, 10**6))
def test_hash_ngram_in_range(ngram, bucket):
    assert 0 <= hash_ngram(ngram, bucket) < bucket


def test_hash_ngram_matches_fnv_mod():
    assert hash_ngram("abc", 100) == 440920331 % 100
    assert hash_ngram("λό", 100) == 1798789085 % 100


def test_subword_config_validation():
    SubwordConfig(0, 0, 0)  # disabled
    SubwordConfig(3, 6, 10)
    with pytest.raises(ValueError):
        SubwordConfig(0, 6, 10)
    with pytest.raises(ValueError):
        SubwordConfig(3, 0, 10)
    with pytest.raises(ValueError):
        SubwordConfig(4, 3, 10)
    with pytest.raises(ValueError):
        SubwordConfig(3, 6, 0)
    assert not SubwordConfig(0, 0, 0).enabled
    assert SubwordConfig(1, 1, 5).enabled


def test_subword_ids_in_vocab_word_first():
    vocab = build_vocab(["cat", "cat", "dog"])
    cfg = SubwordConfig(3, 6, 100)
    ids = subword_ids("cat", vocab, cfg)
    assert ids.word_id == 0
    # n-grams of <cat>: <ca, <cat, cat, cat>, at>  (full <cat> excluded)
    grams = ["<ca", "<cat", "cat", "cat>", "at>"]
    expected = [len(vocab) + fnv1a_32(g.encode()) % 100 for g in grams]
    assert ids.ngram_ids.tolist() == expected
    assert ids.ids.tolist() == [0] + expected


def test_subword_ids_oov_has_no_word_row():
    vocab = build_vocab(["cat"])
    cfg = SubwordConfig(3, 6, 100)
    ids = subword_ids("dog", vocab, cfg)
    assert ids.word_id is None
    assert ids.ngram_ids.size > 0
    assert (ids.ids >= len(vocab)).all()


def test_subword_ids_disabled_config():
    vocab = build_vocab(["cat"])
    cfg = SubwordConfig(0, 0, 0)
    ids = subword_ids("cat", vocab, cfg)
    assert ids.ids.tolist() == [0]
    oov = subword_ids("dog", vocab, cfg)
    assert oov.ids.size == 0


def test_build_subword_cache_matches_per_word():
    vocab = build_vocab(["alpha", "beta", "beta", "gamma"])
    cfg = SubwordConfig(2, 3, 50)
    cache = build_subword_cache(vocab, cfg)
    assert len(cache) == len(vocab)
    for wid, word in enumerate(vocab.words):
        expected = subword_ids(word, vocab, cfg).ids
        np.testing.assert_array_equal(cache[wid], expected)
        assert cache[wid][0] == wid


@hypothesis.given(st.text(alphabet="abcxyz", min_size=1, max_size=8))
def test_subword_ids_deterministic(word):
    vocab = build_vocab(["filler"])
    cfg = SubwordConfig(2, 4, 1000)
    first = subword_ids(word, vocab, cfg).ids
    second = subword_ids(word, vocab, cfg).ids
    np.testing.assert_array_equal(first, second)
