"""Kernel correctness: pure-Python oracle checks and compiled/pure agreement."""

from __future__ import annotations

from functools import lru_cache

from hypothesis import given, strategies as st

from textrts._kernels import KERNEL_BACKEND, _pure
from textrts._kernels import combat_exchange, levenshtein


@lru_cache(maxsize=None)
def _lev_recursive(a: str, b: str) -> int:
    """Textbook recursion; independent of the iterative implementations."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    cost = 0 if a[-1] == b[-1] else 1
    return min(
        _lev_recursive(a[:-1], b) + 1,
        _lev_recursive(a, b[:-1]) + 1,
        _lev_recursive(a[:-1], b[:-1]) + cost,
    )


def test_levenshtein_known_values():
    assert levenshtein("", "") == 0
    assert levenshtein("abc", "abc") == 0
    assert levenshtein("abc", "") == 3
    assert levenshtein("", "abc") == 3
    assert levenshtein("kitten", "sitting") == 3
    assert levenshtein("BUILD PYLON", "BULD PYLON") == 1
    assert levenshtein("flaw", "lawn") == 2


_SHORT = st.text(alphabet="AB C", max_size=8)


@given(_SHORT, _SHORT)
def test_levenshtein_matches_recursive_oracle(a, b):
    assert levenshtein(a, b) == _lev_recursive(a, b)


@given(_SHORT, _SHORT)
def test_levenshtein_symmetry_and_bounds(a, b):
    d = levenshtein(a, b)
    assert d == levenshtein(b, a)
    assert abs(len(a) - len(b)) <= d <= max(len(a), len(b))
    assert (d == 0) == (a == b)


@given(_SHORT, _SHORT, _SHORT)
def test_levenshtein_triangle_inequality(a, b, c):
    assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


_forces = st.integers(min_value=1, max_value=4).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 300), min_size=n, max_size=n),
        st.lists(st.integers(1, 60), min_size=n, max_size=n),
        st.lists(st.integers(0, 15), min_size=n, max_size=n),
        st.lists(st.integers(0, 15), min_size=n, max_size=n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n),
    )
)
_levels = st.integers(min_value=0, max_value=3)


@given(_forces, _levels, _levels, _forces, _levels, _levels)
def test_combat_exchange_invariants(fa, atk_a, arm_a, fb, atk_b, arm_b):
    new_a, new_b = combat_exchange(*fa, atk_a, arm_a, *fb, atk_b, arm_b)
    # pools never grow, never go negative, inputs stay untouched
    for before, after in ((fa[0], new_a), (fb[0], new_b)):
        assert len(after) == len(before)
        for x, y in zip(before, after):
            assert 0 <= y <= max(x, 0)


@given(_forces, _levels, _levels, _forces, _levels, _levels)
def test_combat_exchange_symmetric(fa, atk_a, arm_a, fb, atk_b, arm_b):
    """Simultaneous resolution: swapping the argument order swaps the result."""
    ab = combat_exchange(*fa, atk_a, arm_a, *fb, atk_b, arm_b)
    ba = combat_exchange(*fb, atk_b, arm_b, *fa, atk_a, arm_a)
    assert ab == (ba[1], ba[0])


def test_combat_exchange_no_input_mutation():
    pools_a = [100, 50]
    args_a = (pools_a, [10, 10], [5, 0], [0, 5], [0, 1])
    pools_b = [80]
    args_b = (pools_b, [20], [8], [0], [0])
    combat_exchange(*args_a, 1, 1, *args_b, 0, 0)
    assert pools_a == [100, 50]
    assert pools_b == [80]


def test_combat_air_priority_and_idle_guns():
    # side A: one anti-air shooter; side B: one air pool, one ground pool.
    # A's damage must land on the air pool, ground-only guns stay idle on air.
    new_a, new_b = combat_exchange(
        [100], [10], [0], [7], [0], 0, 0,
        [30, 200], [10, 20], [0, 0], [0, 0], [1, 0], 0, 0,
    )
    # 10 shooters x 7 anti-air dps = 70 damage onto the 30-point air pool,
    # overflow stops at the class boundary (ground pool untouched)
    assert new_b == [0, 200]
    assert new_a == [100]


def test_combat_focuses_lowest_pool_with_cascade():
    # 12 damage onto ground pools [5, 9]: the 5 dies first, 7 cascades
    _, new_b = combat_exchange(
        [10], [10], [12], [0], [0], 0, 0,
        [9, 5], [10, 10], [0, 0], [0, 0], [0, 0], 0, 0,
    )
    assert new_b == [2, 0]


def test_attack_and_armor_scaling():
    # base 10 dps, +10% per attack level, -level scaling on armor side
    _, plain = combat_exchange([10], [10], [10], [0], [0], 0, 0, [100], [10], [0], [0], [0], 0, 0)
    _, buffed = combat_exchange([10], [10], [10], [0], [0], 3, 0, [100], [10], [0], [0], [0], 0, 0)
    _, armored = combat_exchange([10], [10], [10], [0], [0], 0, 0, [100], [10], [0], [0], [0], 0, 3)
    assert plain == [90]  # 10 damage
    assert buffed == [87]  # 13 damage
    assert armored == [93]  # 10*100//130 = 7 damage


@given(_forces, _levels, _levels, _forces, _levels, _levels)
def test_compiled_and_pure_combat_agree(fa, atk_a, arm_a, fb, atk_b, arm_b):
    selected = combat_exchange(*fa, atk_a, arm_a, *fb, atk_b, arm_b)
    pure = _pure.combat_exchange(*fa, atk_a, arm_a, *fb, atk_b, arm_b)
    assert tuple(map(list, selected)) == tuple(map(list, pure))


@given(_SHORT, _SHORT)
def test_compiled_and_pure_levenshtein_agree(a, b):
    assert levenshtein(a, b) == _pure.levenshtein(a, b)


def test_compiled_backend_is_active():
    """The build ships the extension; agreement tests above are only meaningful
    when the selected backend is actually the compiled one."""
    assert KERNEL_BACKEND == "compiled"


def test_pure_fallback_env_override():
    import subprocess
    import sys

    code = (
        "import os; os.environ['TEXTRTS_PURE_KERNELS']='1'; "
        "from textrts._kernels import KERNEL_BACKEND; print(KERNEL_BACKEND)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "pure"
