"""Generator-stream determinism and range contracts."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from textrts.prng import Prng

# splitmix64 outputs for seed 0 and seed 42, computed independently from the
# published constants (gamma 0x9E3779B97F4A7C15, mixers 0xBF58476D1CE4E5B9 /
# 0x94D049BB133111EB, shifts 30/27/31).
_SEED0_FIRST3 = (
    0xE220A8397B1DCDAF,
    0x6E789E6AA1B965F4,
    0x06C45D188009454F,
)
_SEED42_FIRST3 = (
    0xBDD732262FEB6E95,
    0x28EFE333B266F103,
    0x47526757130F9F52,
)


def _reference_next(state: int) -> tuple[int, int]:
    mask = (1 << 64) - 1
    state = (state + 0x9E3779B97F4A7C15) & mask
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return state, (z ^ (z >> 31)) & mask


def test_known_stream_seed0():
    rng = Prng(0)
    assert tuple(rng.next_u64() for _ in range(3)) == _SEED0_FIRST3


def test_known_stream_seed42():
    rng = Prng(42)
    assert tuple(rng.next_u64() for _ in range(3)) == _SEED42_FIRST3


@given(st.integers(min_value=0, max_value=(1 << 64) - 1))
def test_matches_reference_step(seed):
    rng = Prng(seed)
    state, want = _reference_next(seed)
    assert rng.next_u64() == want
    assert rng.state == state


def test_same_seed_same_stream():
    a, b = Prng(123), Prng(123)
    assert [a.next_u64() for _ in range(50)] == [b.next_u64() for _ in range(50)]


def test_state_roundtrip_resumes_stream():
    a = Prng(9)
    first = [a.next_u64() for _ in range(5)]
    b = Prng(9)
    for _ in range(2):
        b.next_u64()
    resumed = Prng(b.state)
    assert [resumed.next_u64() for _ in range(3)] == first[2:]


@given(st.integers(min_value=0, max_value=(1 << 64) - 1), st.integers(min_value=1, max_value=1000))
def test_randrange_bounds(seed, n):
    rng = Prng(seed)
    for _ in range(20):
        assert 0 <= rng.randrange(n) < n


@given(
    st.integers(min_value=0, max_value=(1 << 64) - 1),
    st.integers(min_value=-50, max_value=50),
    st.integers(min_value=0, max_value=100),
)
def test_randint_inclusive(seed, lo, width):
    rng = Prng(seed)
    hi = lo + width
    for _ in range(10):
        assert lo <= rng.randint(lo, hi) <= hi


def test_randrange_rejects_zero():
    with pytest.raises(ValueError):
        Prng(1).randrange(0)


def test_chance_extremes():
    rng = Prng(5)
    assert all(rng.chance(100) for _ in range(20))
    assert not any(rng.chance(0) for _ in range(20))
