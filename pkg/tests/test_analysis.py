import random

from passagekit.analysis import STOPWORDS, tokenize


def test_half_moon_example():
    assert tokenize("The Half Moon, Putney") == ["half", "moon", "putnei"]


def test_empty_input():
    assert tokenize("") == []
    assert tokenize("   \t\n") == []


def test_stopwords_removed():
    assert tokenize("the cat and the hat") == ["cat", "hat"]
    assert len(STOPWORDS) == 33


def test_lowercases_and_splits_punctuation():
    assert tokenize("State-Of-The-Art!") == ["state", "art"]
    assert tokenize("foo_bar") == ["foo", "bar"]


def test_numbers_kept():
    assert tokenize("season 7 of homeland") == ["season", "7", "homeland"]


def test_deterministic_on_random_strings():
    rng = random.Random(7)
    alphabet = "abcdefghijklmnopqrstuvwxyz ,.!-'\"0123456789"
    for _ in range(1000):
        text = "".join(rng.choices(alphabet, k=rng.randint(0, 60)))
        assert tokenize(text) == tokenize(text)
