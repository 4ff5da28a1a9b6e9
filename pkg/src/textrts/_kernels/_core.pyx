# cython: language_level=3
"""Compiled kernels. Semantics mirror _pure.py exactly (bit-identical)."""

from libc.stdlib cimport malloc, free


def levenshtein(str a, str b):
    """Character edit distance (insert/delete/substitute, unit costs)."""
    if a == b:
        return 0
    cdef Py_ssize_t la = len(a), lb = len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    cdef int *prev = <int *> malloc((lb + 1) * sizeof(int))
    cdef int *cur = <int *> malloc((lb + 1) * sizeof(int))
    if prev == NULL or cur == NULL:
        if prev != NULL:
            free(prev)
        if cur != NULL:
            free(cur)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef int d, ins, sub, cost
    cdef Py_UCS4 ca
    cdef int *tmp
    try:
        for j in range(lb + 1):
            prev[j] = <int> j
        for i in range(1, la + 1):
            cur[0] = <int> i
            ca = a[i - 1]
            for j in range(1, lb + 1):
                cost = 0 if ca == <Py_UCS4> b[j - 1] else 1
                d = prev[j] + 1
                ins = cur[j - 1] + 1
                if ins < d:
                    d = ins
                sub = prev[j - 1] + cost
                if sub < d:
                    d = sub
                cur[j] = d
            tmp = prev
            prev = cur
            cur = tmp
        return prev[lb]
    finally:
        free(prev)
        free(cur)


cdef void _damage_output(long long *pools, long long *hps, long long *dps_g,
                         long long *dps_a, long long *air, Py_ssize_t n,
                         int enemy_ground, int enemy_air, long long attack,
                         long long *out_g, long long *out_a):
    cdef long long dmg_g = 0, dmg_a = 0, pool, hp, count
    cdef Py_ssize_t i
    for i in range(n):
        pool = pools[i]
        if pool <= 0:
            continue
        hp = hps[i]
        count = (pool + hp - 1) // hp
        if enemy_air and dps_a[i] > 0:
            dmg_a += count * dps_a[i]
        elif enemy_ground and dps_g[i] > 0:
            dmg_g += count * dps_g[i]
    cdef long long scale = 100 + 10 * attack
    out_g[0] = (dmg_g * scale) // 100
    out_a[0] = (dmg_a * scale) // 100


cdef void _apply_damage(long long *pools, long long *air, Py_ssize_t n,
                        long long dmg, long long want_air, long long armor):
    dmg = (dmg * 100) // (100 + 10 * armor)
    cdef Py_ssize_t i, best
    cdef long long hit
    while dmg > 0:
        best = -1
        for i in range(n):
            if pools[i] > 0 and air[i] == want_air:
                if best < 0 or pools[i] < pools[best]:
                    best = i
        if best < 0:
            break
        hit = pools[best] if pools[best] < dmg else dmg
        pools[best] -= hit
        dmg -= hit


cdef long long *_to_arr(list src) except NULL:
    cdef Py_ssize_t n = len(src), i
    cdef long long *arr = <long long *> malloc((n if n > 0 else 1) * sizeof(long long))
    if arr == NULL:
        raise MemoryError()
    for i in range(n):
        arr[i] = <long long> src[i]
    return arr


def combat_exchange(list pools_a, list hps_a, list dps_ground_a, list dps_air_a,
                    list is_air_a, long long attack_a, long long armor_a,
                    list pools_b, list hps_b, list dps_ground_b, list dps_air_b,
                    list is_air_b, long long attack_b, long long armor_b):
    """One simultaneous pooled-HP exchange round between two forces."""
    cdef Py_ssize_t na = len(pools_a), nb = len(pools_b), i
    cdef long long *pa = NULL
    cdef long long *ha = NULL
    cdef long long *ga = NULL
    cdef long long *aa = NULL
    cdef long long *ia = NULL
    cdef long long *pb = NULL
    cdef long long *hb = NULL
    cdef long long *gb = NULL
    cdef long long *ab = NULL
    cdef long long *ib = NULL
    cdef long long out_ag = 0, out_aa = 0, out_bg = 0, out_ba = 0
    cdef int a_ground = 0, a_air = 0, b_ground = 0, b_air = 0
    try:
        pa = _to_arr(pools_a); ha = _to_arr(hps_a); ga = _to_arr(dps_ground_a)
        aa = _to_arr(dps_air_a); ia = _to_arr(is_air_a)
        pb = _to_arr(pools_b); hb = _to_arr(hps_b); gb = _to_arr(dps_ground_b)
        ab = _to_arr(dps_air_b); ib = _to_arr(is_air_b)

        for i in range(nb):
            if pb[i] > 0:
                if ib[i]:
                    b_air = 1
                else:
                    b_ground = 1
        for i in range(na):
            if pa[i] > 0:
                if ia[i]:
                    a_air = 1
                else:
                    a_ground = 1

        _damage_output(pa, ha, ga, aa, ia, na, b_ground, b_air, attack_a, &out_ag, &out_aa)
        _damage_output(pb, hb, gb, ab, ib, nb, a_ground, a_air, attack_b, &out_bg, &out_ba)

        _apply_damage(pb, ib, nb, out_ag, 0, armor_b)
        _apply_damage(pb, ib, nb, out_aa, 1, armor_b)
        _apply_damage(pa, ia, na, out_bg, 0, armor_a)
        _apply_damage(pa, ia, na, out_ba, 1, armor_a)

        return [pa[i] for i in range(na)], [pb[i] for i in range(nb)]
    finally:
        if pa != NULL: free(pa)
        if ha != NULL: free(ha)
        if ga != NULL: free(ga)
        if aa != NULL: free(aa)
        if ia != NULL: free(ia)
        if pb != NULL: free(pb)
        if hb != NULL: free(hb)
        if gb != NULL: free(gb)
        if ab != NULL: free(ab)
        if ib != NULL: free(ib)
