"""Randomized short-match driver with fog, bookkeeping, and metrics oracles.

Shared by the property suite and the acceptance gate: both need matches that
are short, varied, and verified tick by tick against independent oracles.
"""

from __future__ import annotations

import random

from textrts.records import MatchRecord
from textrts.sim import engine as se
from textrts.sim.types import P1, P2, PlayerId, Race

Presence = dict[str, tuple[dict[str, int], dict[str, int], int]]


def staged_short_match(seed: int, max_ticks: int = 90, staleness: int = 15) -> se.GameState:
    """A fresh match pre-loaded with small armies and supply headroom so that
    random action scripts produce scouting, fights, and eliminations."""
    cfg = se.MatchConfig(max_ticks=max_ticks, staleness=staleness)
    state = se.new_match(cfg, seed=seed)
    p1 = state.players[P1]
    p1.units["ZEALOT"] = 4
    p1.buildings["P1_MAIN"]["PYLON"] = 2
    p1.minerals = 400
    p2 = state.players[P2]
    p2.units["ZERGLING"] = 6
    p2.units["OVERLORD"] = 2
    p2.minerals = 400
    return state


def drive_random_actions(state: se.GameState, rng: random.Random, p_act: float = 0.5) -> None:
    for side in (P1, P2):
        if rng.random() < p_act:
            legal = se.legal_actions(state, side)
            if legal:
                se.apply_macro(state, side, rng.choice(legal))


def true_presence(state: se.GameState, side: PlayerId) -> Presence:
    """Ground-truth enemy presence per region, as the fog would render it."""
    return {
        v.region: (v.units, v.buildings, v.workers)
        for v in se.observe(state, side, true_vision=True).enemy
    }


def check_fog_views(
    state: se.GameState, side: PlayerId, history: dict[int, Presence]
) -> None:
    """Every fog view must be a verbatim replay of the recorded truth at the
    tick the sighting was taken, and never older than the staleness window."""
    for view in se.observe(state, side).enemy:
        assert 0 <= view.age <= state.config.staleness, f"stale view: age {view.age}"
        truth = history[state.tick - view.age]
        assert view.region in truth, f"view of {view.region} which was empty at sighting time"
        assert (view.units, view.buildings, view.workers) == truth[view.region]


def check_bookkeeping(state: se.GameState) -> None:
    """Resource, supply, and queue invariants that must hold after any tick."""
    for side in (P1, P2):
        pl = state.players[side]
        assert pl.minerals >= 0 and pl.gas >= 0
        assert pl.workers >= 0 and pl.larvae >= 0
        assert all(c > 0 for c in pl.units.values()), "zero-count unit entry survived"
        assert all(i.remaining >= 1 for i in pl.queue)
        assert pl.chrono_charges <= se.CHRONO_CHARGE_CAP
        assert pl.army_region in state.map.regions
        used = se.supply_used(pl, state.tree)
        cap = se.supply_cap(pl, state.tree)
        military = any(
            c > 0 and state.tree.get(k).supply_cost > 0 for k, c in pl.units.items()
        )
        if military or pl.workers > 0:
            assert used <= cap, f"supply {used}/{cap} after cull"


def play_random_match(seed: int, max_ticks: int = 90, staleness: int = 15) -> se.GameState:
    """Run one randomized short match to its terminal state, checking fog
    soundness and bookkeeping invariants after every tick."""
    rng = random.Random(seed)
    state = staged_short_match(seed, max_ticks=max_ticks, staleness=staleness)
    history: dict[PlayerId, dict[int, Presence]] = {P1: {}, P2: {}}
    for side in (P1, P2):
        history[side][0] = true_presence(state, side)
    while state.outcome is None:
        drive_random_actions(state, rng)
        se.tick(state)
        for side in (P1, P2):
            history[side][state.tick] = true_presence(state, side)
        check_bookkeeping(state)
        for side in (P1, P2):
            check_fog_views(state, side, history[side])
    return state


def brute_force_metrics(record: MatchRecord) -> dict:
    """Recompute the four analytics figures straight from raw events.

    Deliberately avoids every analytics helper: raw dict scans only, so it can
    serve as an independent oracle for the metrics module.
    """
    samples = sorted(
        (ev for ev in record.events if ev.get("kind") == "sample"),
        key=lambda ev: ev["t"],
    )
    if not samples:
        raise ValueError("oracle needs at least one sample")
    horizon = samples[-1]["t"]
    for ev in samples:
        if ev["su"] == 200 and ev["sc"] == 200:
            horizon = ev["t"]
            break
    span = [ev for ev in samples if ev["t"] <= horizon]
    denom = horizon if horizon > 0 else 1

    capped = [ev for ev in span if ev["su"] == ev["sc"]]
    ratios = [ev["su"] / ev["sc"] for ev in span if ev["sc"] > 0]

    race = Race(record.header["match_config"]["p1_race"])
    tree = se.default_tree()
    available = set()
    for entity in list(tree.buildings(race)) + list(tree.techs(race)):
        available.add(entity.id)
    done = set()
    for ev in record.events:
        if ev.get("kind") != "complete" or ev.get("side") != "p1":
            continue
        if ev.get("kind_id") in available:
            done.add(ev["kind_id"])

    reward = None
    for ev in record.events:
        if ev.get("kind") == "result":
            reward = ev["reward"]
    return {
        "won": reward is not None and reward > 0,
        "pbr": len(capped) / denom,
        "rur": (span[-1]["sm"] + span[-1]["sg"]) / denom,
        "apu": sum(ratios) / len(ratios) if ratios else 0.0,
        "tr": len(done) / len(available),
        "horizon_tick": horizon,
    }


# Completion ids drawn by the synthetic-record generator. A mix of buildings,
# techs, units (never counted), the wrong side, and plain junk.
_COMPLETE_POOL = {
    "P": (
        ("building", "PYLON"), ("building", "GATEWAY"), ("building", "FORGE"),
        ("building", "CYBERNETICSCORE"), ("building", "NEXUS"),
        ("tech", "CHARGE"), ("tech", "BLINK"), ("tech", "WARPGATERESEARCH"),
        ("unit", "ZEALOT"), ("unit", "PROBE"), ("building", "WIDGETWORKS"),
    ),
    "Z": (
        ("building", "SPAWNINGPOOL"), ("building", "EXTRACTOR"),
        ("building", "LAIR"), ("building", "ROACHWARREN"),
        ("tech", "METABOLICBOOST"), ("tech", "GROOVEDSPINES"),
        ("unit", "ZERGLING"), ("unit", "DRONE"), ("tech", "WIDGETRY"),
    ),
}


def random_metrics_record(build_record, rng: random.Random) -> MatchRecord:
    """One synthetic record with adversarial sample/complete/result shapes:
    horizon triggers, sc==0 ticks, duplicate and off-side completions."""
    race = rng.choice(("P", "Z"))
    samples = []
    t, sm, sg, sc = 0, 0, 0, rng.choice((14, 15, 23))
    for _ in range(rng.randint(1, 50)):
        t += rng.randint(1, 25)
        roll = rng.random()
        if roll < 0.06:
            sc_now, su = 0, 0
        elif roll < 0.12:
            sc_now = 200
            su = 200 if rng.random() < 0.5 else rng.randint(0, 200)
        else:
            sc_now = min(sc, 200)
            su = sc_now if rng.random() < 0.2 else rng.randint(0, sc_now)
        sm += rng.randint(0, 400)
        sg += rng.randint(0, 120)
        samples.append((t, su, sc_now, sm, sg))
        sc += rng.choice((0, 0, 8, 15))
    completes = []
    for _ in range(rng.randint(0, 8)):
        ct = rng.randint(1, t)
        side = rng.choice(("p1", "p1", "p2"))
        category, kind_id = rng.choice(_COMPLETE_POOL[race])
        completes.append((ct, side, category, kind_id))
    reward = rng.choice((None, -1, 0, 1, 1))
    identity = rng.randrange(3)
    return build_record(
        samples,
        completes=completes,
        reward=reward,
        match_id=f"m{rng.randrange(10**6)}" if identity == 0 else None,
        seed=rng.randrange(10**6) if identity == 1 else None,
        p1_race=race,
    )
