"""Pure-Python reference implementations of the hot kernels.

The compiled module in _core.pyx mirrors these semantics exactly; the two are
held to bit-identical outputs by tests. Integer arithmetic only, so results
are stable across platforms.
"""

from __future__ import annotations


def levenshtein(a: str, b: str) -> int:
    """Character edit distance (insert/delete/substitute, unit costs)."""
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev = list(range(lb + 1))
    cur = [0] * (lb + 1)
    for i in range(1, la + 1):
        cur[0] = i
        ca = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ca == b[j - 1] else 1
            d = prev[j] + 1
            ins = cur[j - 1] + 1
            if ins < d:
                d = ins
            sub = prev[j - 1] + cost
            if sub < d:
                d = sub
            cur[j] = d
        prev, cur = cur, prev
    return prev[lb]


def _damage_output(
    pools: list[int],
    hps: list[int],
    dps_ground: list[int],
    dps_air: list[int],
    is_air: list[int],
    enemy_has_ground: int,
    enemy_has_air: int,
    attack_level: int,
) -> tuple[int, int]:
    """Total (ground, air) damage one side emits this round.

    Units that can hit air shoot air while enemy air is alive; everything
    else shoots ground. Output scales +10% per attack tech level.
    """
    dmg_g = 0
    dmg_a = 0
    for i in range(len(pools)):
        pool = pools[i]
        if pool <= 0:
            continue
        hp = hps[i]
        count = (pool + hp - 1) // hp
        if enemy_has_air and dps_air[i] > 0:
            dmg_a += count * dps_air[i]
        elif enemy_has_ground and dps_ground[i] > 0:
            dmg_g += count * dps_ground[i]
    scale = 100 + 10 * attack_level
    return (dmg_g * scale) // 100, (dmg_a * scale) // 100


def _apply_damage(
    pools: list[int],
    is_air: list[int],
    dmg: int,
    want_air: int,
    armor_level: int,
) -> None:
    """Focus damage on the lowest surviving pool of the wanted class; overflow
    cascades to the next-lowest; overkill beyond the class vanishes."""
    dmg = (dmg * 100) // (100 + 10 * armor_level)
    n = len(pools)
    while dmg > 0:
        best = -1
        for i in range(n):
            if pools[i] > 0 and is_air[i] == want_air:
                if best < 0 or pools[i] < pools[best]:
                    best = i
        if best < 0:
            break
        hit = pools[best] if pools[best] < dmg else dmg
        pools[best] -= hit
        dmg -= hit


def combat_exchange(
    pools_a: list[int],
    hps_a: list[int],
    dps_ground_a: list[int],
    dps_air_a: list[int],
    is_air_a: list[int],
    attack_a: int,
    armor_a: int,
    pools_b: list[int],
    hps_b: list[int],
    dps_ground_b: list[int],
    dps_air_b: list[int],
    is_air_b: list[int],
    attack_b: int,
    armor_b: int,
) -> tuple[list[int], list[int]]:
    """One simultaneous pooled-HP exchange round between two forces.

    Both outputs are computed from the pre-round snapshot, then applied, so
    the exchange is order-free. Returns new pool lists; inputs not mutated.
    """
    b_ground = 0
    b_air = 0
    for i in range(len(pools_b)):
        if pools_b[i] > 0:
            if is_air_b[i]:
                b_air = 1
            else:
                b_ground = 1
    a_ground = 0
    a_air = 0
    for i in range(len(pools_a)):
        if pools_a[i] > 0:
            if is_air_a[i]:
                a_air = 1
            else:
                a_ground = 1

    out_a = _damage_output(pools_a, hps_a, dps_ground_a, dps_air_a, is_air_a, b_ground, b_air, attack_a)
    out_b = _damage_output(pools_b, hps_b, dps_ground_b, dps_air_b, is_air_b, a_ground, a_air, attack_b)

    new_a = list(pools_a)
    new_b = list(pools_b)
    _apply_damage(new_b, is_air_b, out_a[0], 0, armor_b)
    _apply_damage(new_b, is_air_b, out_a[1], 1, armor_b)
    _apply_damage(new_a, is_air_a, out_b[0], 0, armor_a)
    _apply_damage(new_a, is_air_a, out_b[1], 1, armor_a)
    return new_a, new_b
