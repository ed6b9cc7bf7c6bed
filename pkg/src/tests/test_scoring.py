import random

import pytest
from pydantic import ValidationError

from src.core.errors import EmptyInput, OrderMismatch
from src.core.names import parse_name
from src.core.ngrams import NgramTable, build_fingerprint, build_table
from src.core.scoring import MatchParams, freq_match, rank_match, total_match


def _table(*texts, n=1):
    return build_table([parse_name(t) for t in texts], n=n)


def _fp(*texts, n=1):
    return build_fingerprint([parse_name(t) for t in texts], source_label="test", n=n)


def test_identity_scores_one():
    fp = _fp("www.example.com", "mail.example.org")
    table = _table("www.example.com", "mail.example.org")
    for a in (0.5, 1.0, 3.0):
        params = MatchParams(a=a, b=a, x=0.3, y=0.7)
        assert rank_match(table, fp, params) == 1.0
        assert freq_match(table, fp, params) == 1.0
        assert total_match(table, fp, params).total_match == pytest.approx(1.0)


def test_aab_against_abb():
    fp = _fp("aab")
    table = _table("abb")
    score = total_match(table, fp)
    assert score.rank_match == pytest.approx(0.5, abs=1e-12)
    assert score.freq_match == pytest.approx(1.0, abs=1e-12)
    assert score.total_match == pytest.approx(0.75, abs=1e-12)
    assert (score.k_input, score.k_fingerprint) == (2, 2)


def test_missing_ngrams_take_rank_k_plus_one():
    fp = _fp("aab")
    table = _table("ccd")
    assert rank_match(table, fp) == pytest.approx(0.25)


def test_rank_match_clamps_at_zero():
    fp = _fp("aab")
    table = NgramTable.from_counts({"x": 1}, n=1)
    # D = |1 - 3| = 2 > K = 1
    assert rank_match(table, fp) == 0.0


def test_freq_match_ignores_ranks_past_fingerprint():
    fp = _fp("aab")
    table = NgramTable.from_counts({"a": 2, "b": 1, "c": 1}, n=1)
    # ranks 1 and 2 compare (1/2 vs 2/3, 1/4 vs 1/3); rank 3 contributes 0
    expected = ((1 / 2) / (2 / 3) + (1 / 4) / (1 / 3) + 0) / 3
    assert freq_match(table, fp) == pytest.approx(expected)


def test_exponents_apply():
    fp = _fp("aab")
    table = _table("abb")
    params = MatchParams(a=2, b=1)
    assert rank_match(table, fp, params) == pytest.approx(0.25)
    assert total_match(table, fp, params).total_match == pytest.approx(0.5 * 0.25 + 0.5 * 1.0)


def test_weights_shift_total():
    fp = _fp("aab")
    table = _table("abb")
    assert total_match(table, fp, MatchParams(x=1.0, y=0.0)).total_match == pytest.approx(0.5)
    assert total_match(table, fp, MatchParams(x=0.0, y=1.0)).total_match == pytest.approx(1.0)


def test_order_mismatch_and_empty_input():
    with pytest.raises(OrderMismatch):
        total_match(_table("abcd", n=2), _fp("abcd", n=1))
    empty = NgramTable.from_counts({}, n=1)
    with pytest.raises(EmptyInput):
        rank_match(empty, _fp("abc"))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"x": 0.6, "y": 0.6},
        {"x": 1.2, "y": -0.2},
        {"a": -1},
        {"b": -0.5},
    ],
)
def test_match_params_validation(kwargs):
    with pytest.raises(ValidationError):
        MatchParams(**kwargs)


def _random_table(rng, alphabet="abcdefghij"):
    counts = {c: rng.randint(1, 40) for c in rng.sample(alphabet, rng.randint(1, len(alphabet)))}
    return NgramTable.from_counts(counts, n=1)


@pytest.mark.parametrize("seed", range(10))
def test_scaling_counts_changes_no_score(seed):
    rng = random.Random(seed)
    fp = _fp("www.example.com", "mail.google.com", "cdn.news.org")
    table = _random_table(rng)
    for k in (2, 7, 1000):
        scaled = NgramTable.from_counts({g: c * k for g, c in table.counts.items()}, n=1)
        assert scaled.ranking == table.ranking
        a, b = total_match(table, fp), total_match(scaled, fp)
        assert b.rank_match == pytest.approx(a.rank_match, abs=1e-12)
        assert b.freq_match == pytest.approx(a.freq_match, abs=1e-12)
        assert b.total_match == pytest.approx(a.total_match, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_raising_exponents_never_raises_scores(seed):
    rng = random.Random(seed)
    fp = _fp("www.example.com", "mail.google.com", "cdn.news.org")
    table = _random_table(rng, alphabet="abcdefghijxyz0")
    exponents = [0, 0.5, 1, 2, 4]
    ranks = [rank_match(table, fp, MatchParams(a=e)) for e in exponents]
    freqs = [freq_match(table, fp, MatchParams(b=e)) for e in exponents]
    for scores in (ranks, freqs):
        assert all(0.0 <= s <= 1.0 for s in scores)
        assert all(later <= earlier + 1e-12 for earlier, later in zip(scores, scores[1:]))
