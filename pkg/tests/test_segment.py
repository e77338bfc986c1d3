import math
import random

import pytest

from domaintriage.segment import LanguageModel, segment_keywords
from oracles import oracle_segment

VOCAB_50 = [
    "the", "of", "and", "to", "in", "is", "for", "on", "at", "by",
    "shop", "store", "online", "buy", "sale", "best", "new", "free", "home", "web",
    "mask", "test", "virus", "covid", "corona", "care", "cure", "safe", "stay", "help",
    "san", "antonio", "news", "info", "site", "net", "world", "health", "med", "a",
    "cat", "cats", "catalog", "log", "dog", "house", "work", "live", "one", "art",
]


@pytest.fixture(scope="module")
def small_model():
    return LanguageModel(words=list(VOCAB_50))


@pytest.fixture(scope="module")
def default_model():
    return LanguageModel.default()


def test_rank_cost_formula(small_model):
    n = small_model.size
    assert n == 50
    scale = math.log(n + 1)
    assert small_model.word_cost("the") == pytest.approx(math.log(1 * scale), abs=0)
    assert small_model.word_cost("art") == pytest.approx(math.log(50 * scale), abs=0)
    assert small_model.word_cost("zzz") is None
    assert small_model.oov_cost(3) == 3 * (10.0 + scale)


def test_boost_words_move_to_front():
    model = LanguageModel(words=["apple", "covid", "banana"], boosted=["covid", "mask"])
    # vocabulary order: mask(?) no: boosted order first: covid rank 1, mask rank 2,
    # then base minus boosted: apple 3, banana 4
    scale = math.log(model.size + 1)
    assert model.size == 4
    assert model.word_cost("covid") == math.log(1 * scale)
    assert model.word_cost("mask") == math.log(2 * scale)
    assert model.word_cost("apple") == math.log(3 * scale)
    assert model.word_cost("banana") == math.log(4 * scale)


def test_model_rejects_bad_words():
    with pytest.raises(ValueError):
        LanguageModel(words=["ok", "Not-Ok"])
    with pytest.raises(ValueError):
        LanguageModel(words=["dup", "dup"])
    with pytest.raises(ValueError):
        LanguageModel(words=["fine"], boosted=["x", "x"])


def test_documented_splits(default_model):
    assert segment_keywords("mask", default_model) == ["mask"]
    assert segment_keywords("covidtest", default_model) == ["covid", "test"]
    assert segment_keywords("coronaviruspreventionsanantonio", default_model) == [
        "coronavirus", "prevention", "san", "antonio",
    ]


def test_separators_are_hard_boundaries(default_model):
    assert segment_keywords("covid-test", default_model) == ["covid", "test"]
    assert segment_keywords("covid.test", default_model) == ["covid", "test"]
    # separator parts never merge even when the joined text is a vocab word
    model = LanguageModel(words=["mask", "ma", "sk"])
    assert segment_keywords("ma-sk", model) == ["ma", "sk"]


def test_oov_runs_stay_whole(small_model):
    # no vocab word inside: the whole chunk is one unknown run
    assert segment_keywords("qqqq", small_model) == ["qqqq"]
    # unknown prefix before a vocab word
    assert segment_keywords("xqcovid", small_model) == ["xq", "covid"]
    assert segment_keywords("covidxq", small_model) == ["covid", "xq"]


def test_tie_breaks_prefer_fewer_words(small_model):
    # "catalog" is rank 43; "cat"+"a"+"log" or "cat"+"alog"... the single
    # word must win whenever costs tie or beat the split
    result = segment_keywords("catalog", small_model)
    assert result == ["catalog"]


def test_empty_and_separator_only(default_model):
    assert segment_keywords("", default_model) == []
    assert segment_keywords("-", default_model) == []
    assert segment_keywords(".-.", default_model) == []


def test_dp_matches_exhaustive_oracle(small_model):
    rng = random.Random(11)
    alphabet = "abcdefghijklmnopqrstuvwxyz"
    cases = set()
    # strings built from vocab words, with occasional noise characters
    while len(cases) < 400:
        parts = [rng.choice(VOCAB_50) for _ in range(rng.randint(1, 3))]
        s = "".join(parts)
        if rng.random() < 0.4:
            pos = rng.randint(0, len(s))
            noise = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 3)))
            s = s[:pos] + noise + s[pos:]
        if 0 < len(s) <= 12:
            cases.add(s)
    # plus fully random strings
    for _ in range(200):
        s = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 10)))
        cases.add(s)
    for s in sorted(cases):
        assert segment_keywords(s, small_model) == oracle_segment(s, small_model), s


def test_boosted_split_is_stable(default_model):
    first = segment_keywords("coronaviruspreventionsanantonio", default_model)
    for _ in range(5):
        model = LanguageModel.default()
        assert segment_keywords("coronaviruspreventionsanantonio", model) == first
