"""Scripted micro combat: force assembly types and the per-tick exchange.

Both sides' unit-level behavior during combat is rule-driven and identical:
anti-air-capable damage shoots air while enemy air is alive, everything else
shoots ground, damage focuses the lowest surviving HP pool. The arithmetic
lives in the kernels so the compiled and pure paths stay bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from textrts._kernels import combat_exchange
from textrts.prng import Prng


@dataclass
class ForceEntry:
    """One HP pool in an engagement: a unit kind, worker group, or building."""

    key: str  # "unit:KIND" | "workers" | "bld:KIND"
    hp_each: int
    count: int
    damage: int  # partial damage carried into the round, < count*hp_each
    dps_ground: int
    dps_air: int
    is_air: bool

    @property
    def pool(self) -> int:
        return self.count * self.hp_each - self.damage


@dataclass
class EngagementState:
    region: str
    forces: tuple[list[ForceEntry], list[ForceEntry]]
    attack_levels: tuple[int, int] = (0, 0)
    armor_levels: tuple[int, int] = (0, 0)


@dataclass
class MicroPolicy:
    """Shared combat doctrine. Targeting order is fixed (anti-air first when
    air is present, else lowest-HP pool); only the retreat point varies."""

    retreat_threshold_percent: int = 25


@dataclass
class EngagementResolution:
    pools_after: tuple[list[int], list[int]]
    losses: tuple[dict[str, int], dict[str, int]] = field(default_factory=lambda: ({}, {}))
    retreat: tuple[bool, bool] = (False, False)


def micro_step(
    engagement: EngagementState,
    policy: MicroPolicy,
    rng: Prng,
    baselines: tuple[int, int] = (0, 0),
) -> EngagementResolution:
    """One simultaneous combat round.

    `baselines` are each side's army pool sizes at engagement start; a side
    whose surviving army pool drops below the retreat threshold fraction of
    its baseline gets the retreat flag. rng is accepted for interface parity
    with the macro policies; the exchange itself is deterministic.
    """
    del rng
    fa, fb = engagement.forces
    new_a, new_b = combat_exchange(
        [e.pool for e in fa],
        [e.hp_each for e in fa],
        [e.dps_ground for e in fa],
        [e.dps_air for e in fa],
        [1 if e.is_air else 0 for e in fa],
        engagement.attack_levels[0],
        engagement.armor_levels[0],
        [e.pool for e in fb],
        [e.hp_each for e in fb],
        [e.dps_ground for e in fb],
        [e.dps_air for e in fb],
        [1 if e.is_air else 0 for e in fb],
        engagement.attack_levels[1],
        engagement.armor_levels[1],
    )

    losses: tuple[dict[str, int], dict[str, int]] = ({}, {})
    retreat = [False, False]
    for side, (entries, pools) in enumerate(((fa, new_a), (fb, new_b))):
        army_pool = 0
        for entry, pool in zip(entries, pools):
            alive = (pool + entry.hp_each - 1) // entry.hp_each if pool > 0 else 0
            died = entry.count - alive
            if died > 0:
                losses[side][entry.key] = died
            if entry.key.startswith("unit:"):
                army_pool += pool
        baseline = baselines[side]
        if baseline > 0 and army_pool * 100 < baseline * policy.retreat_threshold_percent:
            retreat[side] = True

    return EngagementResolution(
        pools_after=(new_a, new_b),
        losses=losses,
        retreat=(retreat[0], retreat[1]),
    )
