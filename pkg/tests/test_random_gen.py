import numpy as np
import pytest

from src.random_gen import (
    NURAND_A_LAST,
    NURandConstants,
    RandomSource,
    make_last_name,
    nurand,
    random_last_name,
    valid_run_delta,
)


def test_nurand_degenerate_range():
    assert nurand(0, 5, 5, 0, RandomSource(1)) == 5


def test_nurand_stays_in_range():
    rng = RandomSource(2)
    draws = [nurand(1023, 1, 3000, 259, rng) for _ in range(20_000)]
    assert min(draws) >= 1 and max(draws) <= 3000


def test_nurand_is_skewed():
    rng = RandomSource(3)
    draws = np.array([nurand(NURAND_A_LAST, 0, 999, 0, rng) for _ in range(100_000)])
    histogram, _ = np.histogram(draws, bins=30, range=(0, 1000))
    assert histogram.max() / histogram.min() > 1.5


def test_nurand_rejects_empty_range():
    with pytest.raises(ValueError):
        nurand(255, 10, 5, 0, RandomSource(1))


def test_last_names():
    assert make_last_name(0) == "BARBARBAR"
    assert make_last_name(371) == "PRICALLYOUGHT"
    assert make_last_name(999) == "EINGEINGEING"
    with pytest.raises(ValueError):
        make_last_name(1000)


def test_random_last_name_respects_small_districts():
    rng = RandomSource(4)
    allowed = {make_last_name(n) for n in range(10)}
    assert {random_last_name(rng, 10, 123) for _ in range(500)} <= allowed


def test_run_constant_delta_rule():
    assert valid_run_delta(0, 65)
    assert valid_run_delta(200, 81)
    for delta in (64, 96, 112, 120):
        assert not valid_run_delta(0, delta)
    load = NURandConstants.for_load(RandomSource(5))
    run = NURandConstants.for_run(load, RandomSource(6))
    assert valid_run_delta(load.c_last, run.c_last)


def test_same_seed_same_stream():
    first, second = RandomSource(42), RandomSource(42)
    assert [first.number(1, 100) for _ in range(1000)] == [second.number(1, 100) for _ in range(1000)]
    assert first.astring(5, 30) == second.astring(5, 30)
    assert RandomSource(43).astring(30, 30) != RandomSource(42).astring(30, 30)


def test_string_generators():
    rng = RandomSource(7)
    for _ in range(200):
        text = rng.astring(8, 16)
        assert 8 <= len(text) <= 16 and text.isalnum()
    phone = rng.nstring(16, 16)
    assert len(phone) == 16 and phone.isdigit()
    assert rng.zip_code().endswith("11111")
    assert "ORIGINAL" in rng.with_original(rng.astring(26, 50))


def test_exponential_mean_and_cap():
    rng = RandomSource(8)
    draws = [rng.exponential(2.0) for _ in range(50_000)]
    assert np.mean(draws) == pytest.approx(2.0, rel=0.03)
    assert max(draws) <= 20.0
    assert rng.exponential(0.0) == 0.0


def test_weighted_index():
    rng = RandomSource(9)
    picks = [rng.weighted_index([0.25, 1.0]) for _ in range(20_000)]
    assert np.mean(np.array(picks) == 0) == pytest.approx(0.25, abs=0.02)
