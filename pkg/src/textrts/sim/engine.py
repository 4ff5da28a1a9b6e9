"""Deterministic macro-RTS state machine.

All mutation flows through apply_macro/tick on a single thread; observe and
state_hash never mutate. Integer arithmetic only, so a (config, seed, action
trace) triple reproduces bit-identical states on any platform.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from textrts.prng import Prng
from textrts.sim.mapgraph import MapConfig, load_maps
from textrts.sim.micro import EngagementState, ForceEntry, MicroPolicy, micro_step
from textrts.sim.techtree import Entity, TechTree, load_tech_tree
from textrts.sim.types import (
    ATTACK_REFS,
    ActionKind,
    EnemySightingView,
    MacroAction,
    Observation,
    P1,
    P2,
    PlayerId,
    ProductionItem,
    Race,
    REJECT_ARMY,
    REJECT_BUSY,
    REJECT_CHARGE,
    REJECT_EXPANSION,
    REJECT_GAS,
    REJECT_LARVA,
    REJECT_MINERALS,
    REJECT_PREREQ,
    REJECT_SCOUT,
    REJECT_SUPPLY,
    REJECT_TARGET,
    REJECT_TERMINAL,
    REJECT_UNKNOWN,
    REJECT_WORKER,
    ResourceView,
    Sighting,
    other_player,
)

SUPPLY_HARD_CAP = 200
MINERAL_WORKERS_PER_BASE = 16  # 2 per slot, 8 slots
GAS_WORKERS_PER_BUILDING = 3
CHRONO_CYCLE = 30
CHRONO_CHARGE_CAP = 3
CHRONO_CUT_PERCENT = 30
INJECT_CYCLE = 25
INJECT_LARVAE = 2
LARVA_CYCLE = 15
LARVA_CAP_PER_HATCHERY = 3
START_LARVAE = 3
HEAL_PER_BUILDING = 5
START_MINERALS = 50
START_WORKERS = 12


class ConfigError(ValueError):
    """Unknown map, race, or data file at match setup."""


@dataclass
class MatchConfig:
    map_name: str = "MERIDIAN"
    p1_race: Race = Race.PROTOSS
    p2_race: Race = Race.ZERG
    max_ticks: int = 21600
    staleness: int = 45
    p1_income_permille: int = 1000
    p2_income_permille: int = 1000

    def to_dict(self) -> dict:
        return {
            "map_name": self.map_name,
            "p1_race": self.p1_race.value,
            "p2_race": self.p2_race.value,
            "max_ticks": self.max_ticks,
            "staleness": self.staleness,
            "p1_income_permille": self.p1_income_permille,
            "p2_income_permille": self.p2_income_permille,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MatchConfig":
        return cls(
            map_name=d["map_name"],
            p1_race=Race(d["p1_race"]),
            p2_race=Race(d["p2_race"]),
            max_ticks=d["max_ticks"],
            staleness=d["staleness"],
            p1_income_permille=d["p1_income_permille"],
            p2_income_permille=d["p2_income_permille"],
        )


@dataclass
class PlayerState:
    race: Race
    main_region: str
    income_permille: int = 1000
    minerals: int = START_MINERALS
    gas: int = 0
    mined_minerals: int = 0
    mined_gas: int = 0
    spent_minerals: int = 0
    spent_gas: int = 0
    mineral_frac: int = 0
    gas_frac: int = 0
    workers: int = START_WORKERS
    units: dict[str, int] = field(default_factory=dict)
    unit_damage: dict[str, int] = field(default_factory=dict)
    buildings: dict[str, dict[str, int]] = field(default_factory=dict)
    building_damage: dict[str, int] = field(default_factory=dict)
    queue: list[ProductionItem] = field(default_factory=list)
    research_done: list[str] = field(default_factory=list)
    base_order: list[str] = field(default_factory=list)
    army_region: str = ""
    army_dest: str | None = None
    army_step: int = 0
    chrono_charges: int = 0
    chrono_progress: int = 0
    inject_charges: int = 0
    inject_progress: int = 0
    larvae: int = 0
    larva_progress: int = 0
    attack_level: int = 0
    armor_level: int = 0
    unit_buffs: dict[str, list[int]] = field(default_factory=dict)
    scout_active: bool = False
    scout_path: list[str] = field(default_factory=list)
    scout_idx: int = 0
    scout_step: int = 0
    scouted: dict[str, Sighting] = field(default_factory=dict)
    engage_baseline: int = 0

    def to_dict(self) -> dict:
        return {
            "race": self.race.value,
            "main_region": self.main_region,
            "income_permille": self.income_permille,
            "minerals": self.minerals,
            "gas": self.gas,
            "mined_minerals": self.mined_minerals,
            "mined_gas": self.mined_gas,
            "spent_minerals": self.spent_minerals,
            "spent_gas": self.spent_gas,
            "mineral_frac": self.mineral_frac,
            "gas_frac": self.gas_frac,
            "workers": self.workers,
            "units": dict(sorted(self.units.items())),
            "unit_damage": dict(sorted(self.unit_damage.items())),
            "buildings": {r: dict(sorted(b.items())) for r, b in sorted(self.buildings.items())},
            "building_damage": dict(sorted(self.building_damage.items())),
            "queue": [item.to_dict() for item in self.queue],
            "research_done": list(self.research_done),
            "base_order": list(self.base_order),
            "army_region": self.army_region,
            "army_dest": self.army_dest,
            "army_step": self.army_step,
            "chrono_charges": self.chrono_charges,
            "chrono_progress": self.chrono_progress,
            "inject_charges": self.inject_charges,
            "inject_progress": self.inject_progress,
            "larvae": self.larvae,
            "larva_progress": self.larva_progress,
            "attack_level": self.attack_level,
            "armor_level": self.armor_level,
            "unit_buffs": {k: list(v) for k, v in sorted(self.unit_buffs.items())},
            "scout_active": self.scout_active,
            "scout_path": list(self.scout_path),
            "scout_idx": self.scout_idx,
            "scout_step": self.scout_step,
            "scouted": {r: s.to_dict() for r, s in sorted(self.scouted.items())},
            "engage_baseline": self.engage_baseline,
        }


@dataclass
class GameState:
    config: MatchConfig
    seed: int
    tick: int
    rng: Prng
    players: dict[PlayerId, PlayerState]
    outcome: dict | None
    tree: TechTree = field(repr=False)
    map: MapConfig = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "seed": self.seed,
            "tick": self.tick,
            "rng": self.rng.state,
            "outcome": self.outcome,
            "players": {side: self.players[side].to_dict() for side in (P1, P2)},
        }


@dataclass
class ActionEvent:
    """Result of apply_macro; rejection is a normal event, never an error."""

    ok: bool
    reason: str | None
    action: MacroAction
    tick: int


_TREE_CACHE: TechTree | None = None
_MAPS_CACHE: dict[str, MapConfig] | None = None


def default_tree() -> TechTree:
    global _TREE_CACHE
    if _TREE_CACHE is None:
        _TREE_CACHE = load_tech_tree()
    return _TREE_CACHE


def default_maps() -> dict[str, MapConfig]:
    global _MAPS_CACHE
    if _MAPS_CACHE is None:
        _MAPS_CACHE = load_maps()
    return _MAPS_CACHE


def new_match(
    config: MatchConfig | None = None,
    seed: int = 0,
    tree: TechTree | None = None,
    maps: dict[str, MapConfig] | None = None,
) -> GameState:
    """Fresh two-player state per race start. Identical seeds yield identical
    states; unknown map or race data raises ConfigError."""
    cfg = config or MatchConfig()
    tree = tree or default_tree()
    maps = maps or default_maps()
    if cfg.map_name not in maps:
        raise ConfigError(f"unknown map: {cfg.map_name}")
    game_map = maps[cfg.map_name]

    players: dict[PlayerId, PlayerState] = {}
    for side, race, income in (
        (P1, cfg.p1_race, cfg.p1_income_permille),
        (P2, cfg.p2_race, cfg.p2_income_permille),
    ):
        main = game_map.main_of(side)
        townhall = tree.townhall(race)
        pl = PlayerState(race=race, main_region=main, income_permille=income)
        pl.buildings = {main: {townhall.id: 1}}
        pl.base_order = [main]
        pl.army_region = main
        if race is Race.ZERG:
            pl.units["OVERLORD"] = 1
            pl.larvae = START_LARVAE
        players[side] = pl

    return GameState(
        config=cfg,
        seed=seed,
        tick=0,
        rng=Prng(state=seed & ((1 << 64) - 1)),
        players=players,
        outcome=None,
        tree=tree,
        map=game_map,
    )


# ---------------------------------------------------------------- queries


def completed_count(pl: PlayerState, kind: str) -> int:
    return sum(per.get(kind, 0) for per in pl.buildings.values())


def base_regions(state: GameState, side: PlayerId) -> list[str]:
    """Regions with a completed townhall, in map order."""
    pl = state.players[side]
    th = state.tree.townhall(pl.race).id
    return [r for r in state.map.regions if pl.buildings.get(r, {}).get(th, 0) > 0]


def worker_split(state: GameState, side: PlayerId) -> dict[str, int]:
    """Deterministic even split of the worker pool across base regions;
    earliest map-order base takes the remainder."""
    pl = state.players[side]
    bases = base_regions(state, side)
    if not bases:
        return {pl.main_region: pl.workers}
    per, rem = divmod(pl.workers, len(bases))
    return {r: per + (1 if i < rem else 0) for i, r in enumerate(bases)}


def _is_army_kind(ent: Entity) -> bool:
    return ent.dps_ground > 0 or ent.dps_air > 0


def army_count(pl: PlayerState, tree: TechTree) -> int:
    return sum(c for k, c in pl.units.items() if c > 0 and _is_army_kind(tree.get(k)))


def army_supply(pl: PlayerState, tree: TechTree) -> int:
    return sum(
        c * tree.get(k).supply_cost for k, c in pl.units.items() if c > 0 and _is_army_kind(tree.get(k))
    )


def supply_cap(pl: PlayerState, tree: TechTree) -> int:
    cap = 0
    for per in pl.buildings.values():
        for kind, count in per.items():
            cap += tree.get(kind).supply_gives * count
    for kind, count in pl.units.items():
        cap += tree.get(kind).supply_gives * count
    return min(cap, SUPPLY_HARD_CAP)


def supply_used(pl: PlayerState, tree: TechTree) -> int:
    used = pl.workers + (1 if pl.scout_active else 0)
    for kind, count in pl.units.items():
        used += tree.get(kind).supply_cost * count
    return used


def reserved_supply(pl: PlayerState, tree: TechTree) -> int:
    return sum(tree.get(i.kind).supply_cost for i in pl.queue if i.category == "unit")


def research_complete(pl: PlayerState, kind: str) -> bool:
    return kind in pl.research_done


def _prereqs_met(state: GameState, pl: PlayerState, ent: Entity) -> bool:
    for pre in ent.prereqs:
        pre_ent = state.tree.get(pre)
        if pre_ent.category == "tech":
            if not research_complete(pl, pre):
                return False
        elif completed_count(pl, pre) == 0:
            return False
    return True


def _queued_with_producer(pl: PlayerState, producer: str) -> int:
    return sum(1 for i in pl.queue if i.producer == producer)


def _producer_region(state: GameState, pl: PlayerState, producer: str) -> str:
    """First map-order region holding a producer with a free slot."""
    for r in state.map.regions:
        have = pl.buildings.get(r, {}).get(producer, 0)
        if have == 0:
            continue
        busy = sum(1 for i in pl.queue if i.producer == producer and i.region == r)
        if busy < have:
            return r
    return pl.main_region


def _free_expansion(state: GameState, side: PlayerId) -> str | None:
    pl = state.players[side]
    th = state.tree.townhall(pl.race).id
    for r in state.map.expansions_of(side):
        if pl.buildings.get(r, {}).get(th, 0) > 0:
            continue
        if any(i.kind == th and i.region == r for i in pl.queue):
            continue
        return r
    return None


def _placement_region(state: GameState, side: PlayerId, ent: Entity) -> str:
    """Rule-driven placement: defensive structures at the oldest standing
    base (the one raiders reach first), gas at the first under-built base,
    everything else at the main."""
    pl = state.players[side]
    if ent.is_defensive:
        return pl.base_order[0] if pl.base_order else pl.main_region
    if ent.is_gas:
        for r in base_regions(state, side):
            have = pl.buildings.get(r, {}).get(ent.id, 0)
            queued = sum(1 for i in pl.queue if i.kind == ent.id and i.region == r)
            if have + queued < 2:
                return r
    return pl.main_region


# ---------------------------------------------------------------- actions


def _production_ticks(state: GameState, pl: PlayerState, ent: Entity) -> int:
    """Build time after production-speed tech effects."""
    ticks = ent.build_ticks
    if ent.producer:
        for tech_id in pl.research_done:
            effect = state.tree.get(tech_id).effect
            if effect and effect.startswith("faster:"):
                _, target, pct = effect.split(":")
                if target == ent.producer:
                    ticks = ticks * (100 - int(pct)) // 100
    return max(1, ticks)


def _spend(pl: PlayerState, minerals: int, gas: int) -> None:
    pl.minerals -= minerals
    pl.gas -= gas
    pl.spent_minerals += minerals
    pl.spent_gas += gas


def _try_apply(state: GameState, side: PlayerId, action: MacroAction, commit: bool) -> tuple[bool, str | None]:
    if state.outcome is not None:
        return False, REJECT_TERMINAL
    pl = state.players[side]
    tree = state.tree
    kind = action.kind

    if kind is ActionKind.NOOP:
        return True, None

    if kind is ActionKind.TRAIN:
        if action.arg is None or not tree.has(action.arg):
            return False, REJECT_UNKNOWN
        ent = tree.get(action.arg)
        if ent.category != "unit" or ent.race is not pl.race:
            return False, REJECT_UNKNOWN
        producer = ent.producer or ""
        have = completed_count(pl, producer)
        if have == 0 or not _prereqs_met(state, pl, ent):
            return False, REJECT_PREREQ
        # Larva morphs run in parallel: the larva pool is the throttle, not
        # the producer slot. Everything else occupies its producer.
        uses_larva = pl.race is Race.ZERG and ent.needs_larva
        if not uses_larva and _queued_with_producer(pl, producer) >= have:
            return False, REJECT_BUSY
        if pl.minerals < ent.minerals:
            return False, REJECT_MINERALS
        if pl.gas < ent.gas:
            return False, REJECT_GAS
        if ent.supply_cost > 0:
            cap = supply_cap(pl, tree)
            if supply_used(pl, tree) + reserved_supply(pl, tree) + ent.supply_cost > cap:
                return False, REJECT_SUPPLY
        if pl.race is Race.ZERG and ent.needs_larva and pl.larvae < 1:
            return False, REJECT_LARVA
        if commit:
            _spend(pl, ent.minerals, ent.gas)
            if pl.race is Race.ZERG and ent.needs_larva:
                pl.larvae -= 1
            region = _producer_region(state, pl, producer)
            pl.queue.append(
                ProductionItem("unit", ent.id, _production_ticks(state, pl, ent), region, producer)
            )
        return True, None

    if kind is ActionKind.BUILD or kind is ActionKind.EXPAND:
        if kind is ActionKind.EXPAND:
            ent = tree.townhall(pl.race)
        else:
            if action.arg is None or not tree.has(action.arg):
                return False, REJECT_UNKNOWN
            ent = tree.get(action.arg)
            if ent.category != "building" or ent.race is not pl.race:
                return False, REJECT_UNKNOWN
        if not _prereqs_met(state, pl, ent):
            return False, REJECT_PREREQ
        if ent.is_townhall:
            region = _free_expansion(state, side)
            if region is None:
                return False, REJECT_EXPANSION
        else:
            region = _placement_region(state, side, ent)
        if pl.minerals < ent.minerals:
            return False, REJECT_MINERALS
        if pl.gas < ent.gas:
            return False, REJECT_GAS
        if pl.workers < 1:
            return False, REJECT_WORKER
        if commit:
            _spend(pl, ent.minerals, ent.gas)
            if pl.race is Race.ZERG:
                pl.workers -= 1  # the drone becomes the building
            pl.queue.append(ProductionItem("building", ent.id, ent.build_ticks, region, None))
        return True, None

    if kind is ActionKind.RESEARCH:
        if action.arg is None or not tree.has(action.arg):
            return False, REJECT_UNKNOWN
        ent = tree.get(action.arg)
        if ent.category != "tech" or ent.race is not pl.race:
            return False, REJECT_UNKNOWN
        if research_complete(pl, ent.id) or any(i.kind == ent.id for i in pl.queue):
            return False, REJECT_TARGET
        producer = ent.producer or ""
        have = completed_count(pl, producer)
        if have == 0 or not _prereqs_met(state, pl, ent):
            return False, REJECT_PREREQ
        if _queued_with_producer(pl, producer) >= have:
            return False, REJECT_BUSY
        if pl.minerals < ent.minerals:
            return False, REJECT_MINERALS
        if pl.gas < ent.gas:
            return False, REJECT_GAS
        if commit:
            _spend(pl, ent.minerals, ent.gas)
            region = _producer_region(state, pl, producer)
            pl.queue.append(ProductionItem("tech", ent.id, ent.build_ticks, region, producer))
        return True, None

    if kind is ActionKind.CHRONO:
        if pl.chrono_charges < 1:
            return False, REJECT_CHARGE
        target = action.arg or ""
        item = next((i for i in pl.queue if i.producer == target), None)
        if item is None:
            return False, REJECT_TARGET
        if commit:
            pl.chrono_charges -= 1
            item.remaining -= item.remaining * CHRONO_CUT_PERCENT // 100
        return True, None

    if kind is ActionKind.INJECT:
        if pl.race is not Race.ZERG:
            return False, REJECT_UNKNOWN
        if pl.inject_charges < 1:
            return False, REJECT_CHARGE
        if commit:
            pl.inject_charges -= 1
            pl.larvae += INJECT_LARVAE
        return True, None

    if kind is ActionKind.SCOUT:
        if pl.scout_active:
            return False, REJECT_SCOUT
        if pl.workers < 1:
            return False, REJECT_WORKER
        if commit:
            pl.workers -= 1
            pl.scout_active = True
            enemy_main = state.map.main_of(other_player(side))
            pl.scout_path = state.map.shortest_path(pl.main_region, enemy_main)
            pl.scout_idx = 0
            pl.scout_step = 0
        return True, None

    if kind is ActionKind.ATTACK:
        if action.arg not in ATTACK_REFS:
            return False, REJECT_UNKNOWN
        if army_count(pl, tree) == 0:
            return False, REJECT_ARMY
        if commit:
            pl.army_dest = state.map.resolve_ref(action.arg, side)
        return True, None

    if kind is ActionKind.RETREAT:
        if army_count(pl, tree) == 0:
            return False, REJECT_ARMY
        if commit:
            pl.army_dest = pl.main_region
        return True, None

    return False, REJECT_UNKNOWN


def apply_macro(state: GameState, side: PlayerId, action: MacroAction) -> ActionEvent:
    """Apply one macro command. Illegal commands reject without mutating."""
    ok, reason = _try_apply(state, side, action, commit=True)
    return ActionEvent(ok=ok, reason=reason, action=action, tick=state.tick)


def legal_actions(state: GameState, side: PlayerId) -> list[MacroAction]:
    """Exactly the actions whose checks pass now; NoOp always included on
    non-terminal states, empty on terminal states."""
    if state.outcome is not None:
        return []
    pl = state.players[side]
    tree = state.tree
    candidates: list[MacroAction] = []
    for ent in tree.units(pl.race):
        candidates.append(MacroAction(ActionKind.TRAIN, ent.id))
    for ent in tree.buildings(pl.race):
        candidates.append(MacroAction(ActionKind.BUILD, ent.id))
    for ent in tree.techs(pl.race):
        candidates.append(MacroAction(ActionKind.RESEARCH, ent.id))
    if pl.race is Race.PROTOSS:
        targets = sorted({i.producer for i in pl.queue if i.producer})
        for target in targets:
            candidates.append(MacroAction(ActionKind.CHRONO, target))
    if pl.race is Race.ZERG:
        candidates.append(MacroAction(ActionKind.INJECT))
    candidates.append(MacroAction(ActionKind.SCOUT))
    candidates.append(MacroAction(ActionKind.EXPAND))
    for ref in ATTACK_REFS:
        candidates.append(MacroAction(ActionKind.ATTACK, ref))
    candidates.append(MacroAction(ActionKind.RETREAT))

    out = [a for a in candidates if _try_apply(state, side, a, commit=False)[0]]
    out.append(MacroAction(ActionKind.NOOP))
    return out


# ---------------------------------------------------------------- tick


def tick(state: GameState) -> list[dict]:
    """Advance one tick; returns the tick's event dicts."""
    if state.outcome is not None:
        return [{"e": "warning", "t": state.tick, "msg": "tick_on_terminal"}]
    state.tick += 1
    events: list[dict] = []
    for side in (P1, P2):
        _income(state, side)
    for side in (P1, P2):
        _charges(state, side)
        _production(state, side, events)
    for side in (P1, P2):
        _movement(state, side)
    _combat_phase(state, events)
    _heal_phase(state)
    _supply_cull(state, events)
    for side in (P1, P2):
        _scouting(state, side)
    _terminal_check(state, events)
    return events


def _income(state: GameState, side: PlayerId) -> None:
    pl = state.players[side]
    bases = base_regions(state, side)
    if not bases:
        return
    gas_buildings = 0
    for r in bases:
        for kind, count in pl.buildings.get(r, {}).items():
            if state.tree.get(kind).is_gas:
                gas_buildings += count
    gas_workers = min(GAS_WORKERS_PER_BUILDING * gas_buildings, pl.workers)
    mineral_workers = min(pl.workers - gas_workers, MINERAL_WORKERS_PER_BASE * len(bases))

    pl.mineral_frac += mineral_workers * pl.income_permille
    gain, pl.mineral_frac = divmod(pl.mineral_frac, 1000)
    pl.minerals += gain
    pl.mined_minerals += gain

    pl.gas_frac += gas_workers * pl.income_permille
    gain, pl.gas_frac = divmod(pl.gas_frac, 1000)
    pl.gas += gain
    pl.mined_gas += gain


def _charges(state: GameState, side: PlayerId) -> None:
    pl = state.players[side]
    if pl.race is Race.PROTOSS:
        nexuses = completed_count(pl, state.tree.townhall(Race.PROTOSS).id)
        if nexuses > 0 and pl.chrono_charges < CHRONO_CHARGE_CAP:
            pl.chrono_progress += nexuses
            if pl.chrono_progress >= CHRONO_CYCLE:
                pl.chrono_progress -= CHRONO_CYCLE
                pl.chrono_charges += 1
    else:
        hatcheries = completed_count(pl, state.tree.townhall(Race.ZERG).id)
        if hatcheries > 0:
            if pl.inject_charges < hatcheries:
                pl.inject_progress += hatcheries
                if pl.inject_progress >= INJECT_CYCLE:
                    pl.inject_progress -= INJECT_CYCLE
                    pl.inject_charges += 1
            if pl.larvae < LARVA_CAP_PER_HATCHERY * hatcheries:
                pl.larva_progress += hatcheries
                if pl.larva_progress >= LARVA_CYCLE:
                    pl.larva_progress -= LARVA_CYCLE
                    pl.larvae += 1


def _production(state: GameState, side: PlayerId, events: list[dict]) -> None:
    pl = state.players[side]
    remaining: list[ProductionItem] = []
    for item in pl.queue:
        item.remaining -= 1
        if item.remaining > 0:
            remaining.append(item)
            continue
        _complete(state, side, item, events)
    pl.queue = remaining


def _complete(state: GameState, side: PlayerId, item: ProductionItem, events: list[dict]) -> None:
    pl = state.players[side]
    ent = state.tree.get(item.kind)
    if item.category == "building":
        per = pl.buildings.setdefault(item.region, {})
        per[item.kind] = per.get(item.kind, 0) + 1
        if ent.is_townhall and item.region not in pl.base_order:
            pl.base_order.append(item.region)
    elif item.category == "unit":
        if ent.is_worker:
            pl.workers += 1
        else:
            pl.units[item.kind] = pl.units.get(item.kind, 0) + 1
    else:
        pl.research_done.append(item.kind)
        _apply_tech_effect(pl, ent)
    events.append(
        {"e": "complete", "t": state.tick, "side": side, "category": item.category, "kind": item.kind, "region": item.region}
    )


def _apply_tech_effect(pl: PlayerState, ent: Entity) -> None:
    effect = ent.effect
    if not effect:
        return
    if effect == "attack":
        pl.attack_level += 1
    elif effect == "armor":
        pl.armor_level += 1
    elif effect.startswith("buff:"):
        _, kind, dg, da = effect.split(":")
        buff = pl.unit_buffs.setdefault(kind, [0, 0])
        buff[0] += int(dg)
        buff[1] += int(da)
    # faster:* effects are read at enqueue time


def _movement(state: GameState, side: PlayerId) -> None:
    pl = state.players[side]
    if army_count(pl, state.tree) == 0:
        pl.army_region = pl.main_region
        pl.army_dest = None
        pl.army_step = 0
    elif pl.army_dest and pl.army_dest != pl.army_region:
        path = state.map.shortest_path(pl.army_region, pl.army_dest)
        nxt = path[1]
        pl.army_step += 1
        if pl.army_step >= state.map.travel_ticks(pl.army_region, nxt):
            pl.army_region = nxt
            pl.army_step = 0
            if pl.army_region == pl.army_dest:
                pl.army_dest = None
    elif pl.army_dest == pl.army_region:
        pl.army_dest = None

    if pl.scout_active and pl.scout_idx < len(pl.scout_path) - 1:
        cur = pl.scout_path[pl.scout_idx]
        nxt = pl.scout_path[pl.scout_idx + 1]
        pl.scout_step += 1
        if pl.scout_step >= state.map.travel_ticks(cur, nxt):
            pl.scout_idx += 1
            pl.scout_step = 0


def _effective_dps(pl: PlayerState, ent: Entity) -> tuple[int, int]:
    buff = pl.unit_buffs.get(ent.id)
    if buff:
        return ent.dps_ground + buff[0], ent.dps_air + buff[1]
    return ent.dps_ground, ent.dps_air


def _force_entries(state: GameState, side: PlayerId, region: str, passive: bool) -> list[ForceEntry]:
    """Fighting presence of a side in a region: army units (if the army is
    here), stationed zero-dps units at the main, local workers, defensive
    structures. With passive=True returns the non-defensive buildings instead
    (targets once the garrison is gone)."""
    pl = state.players[side]
    tree = state.tree
    entries: list[ForceEntry] = []
    if passive:
        for kind in sorted(pl.buildings.get(region, {})):
            count = pl.buildings[region][kind]
            ent = tree.get(kind)
            if count > 0 and not ent.is_defensive:
                entries.append(
                    ForceEntry(
                        key=f"bld:{kind}",
                        hp_each=ent.hp,
                        count=count,
                        damage=pl.building_damage.get(f"{region}:{kind}", 0),
                        dps_ground=0,
                        dps_air=0,
                        is_air=False,
                    )
                )
        # Unfinished buildings are targetable sites at half hit points, so a
        # razed base cannot be replanted safely under the attacker's army.
        sites: dict[str, int] = {}
        for item in pl.queue:
            if item.category == "building" and item.region == region:
                sites[item.kind] = sites.get(item.kind, 0) + 1
        for kind in sorted(sites):
            ent = tree.get(kind)
            entries.append(
                ForceEntry(
                    key=f"site:{kind}",
                    hp_each=(ent.hp + 1) // 2,
                    count=sites[kind],
                    damage=0,
                    dps_ground=0,
                    dps_air=0,
                    is_air=False,
                )
            )
        return entries

    army_here = pl.army_region == region and army_count(pl, tree) > 0
    for kind in sorted(pl.units):
        count = pl.units[kind]
        if count <= 0:
            continue
        ent = tree.get(kind)
        here = army_here if _is_army_kind(ent) else region == pl.main_region
        if not here:
            continue
        dg, da = _effective_dps(pl, ent)
        entries.append(
            ForceEntry(
                key=f"unit:{kind}",
                hp_each=ent.hp,
                count=count,
                damage=pl.unit_damage.get(kind, 0),
                dps_ground=dg,
                dps_air=da,
                is_air=ent.is_air,
            )
        )
    workers_here = worker_split(state, side).get(region, 0)
    if workers_here > 0:
        worker = tree.worker(pl.race)
        entries.append(
            ForceEntry(
                key="workers",
                hp_each=worker.hp,
                count=workers_here,
                damage=0,
                dps_ground=worker.dps_ground,
                dps_air=worker.dps_air,
                is_air=False,
            )
        )
    for kind in sorted(pl.buildings.get(region, {})):
        count = pl.buildings[region][kind]
        ent = tree.get(kind)
        if count > 0 and ent.is_defensive:
            dg, da = _effective_dps(pl, ent)
            entries.append(
                ForceEntry(
                    key=f"bld:{kind}",
                    hp_each=ent.hp,
                    count=count,
                    damage=pl.building_damage.get(f"{region}:{kind}", 0),
                    dps_ground=dg,
                    dps_air=da,
                    is_air=False,
                )
            )
    return entries


def _can_hit(attackers: list[ForceEntry], defenders: list[ForceEntry]) -> bool:
    has_ground = any(not e.is_air and e.pool > 0 for e in defenders)
    has_air = any(e.is_air and e.pool > 0 for e in defenders)
    for e in attackers:
        if e.pool <= 0:
            continue
        if e.dps_ground > 0 and has_ground:
            return True
        if e.dps_air > 0 and has_air:
            return True
    return False


_MICRO = MicroPolicy()


def _combat_phase(state: GameState, events: list[dict]) -> None:
    engaged = {P1: False, P2: False}
    for region in state.map.regions:
        f1 = _force_entries(state, P1, region, passive=False)
        f2 = _force_entries(state, P2, region, passive=False)
        sides_passive = [False, False]
        if f1 and f2 and (_can_hit(f1, f2) or _can_hit(f2, f1)):
            pass
        elif f1 and not f2 and _can_hit(f1, p := _force_entries(state, P2, region, passive=True)) and p:
            f2 = p
            sides_passive[1] = True
        elif f2 and not f1 and _can_hit(f2, p := _force_entries(state, P1, region, passive=True)) and p:
            f1 = p
            sides_passive[0] = True
        else:
            continue

        baselines = []
        for side, force in ((P1, f1), (P2, f2)):
            pl = state.players[side]
            army_pool = sum(e.pool for e in force if e.key.startswith("unit:"))
            if pl.engage_baseline == 0 and army_pool > 0:
                pl.engage_baseline = army_pool
            baselines.append(pl.engage_baseline)
            engaged[side] = True

        engagement = EngagementState(
            region=region,
            forces=(f1, f2),
            attack_levels=(state.players[P1].attack_level, state.players[P2].attack_level),
            armor_levels=(state.players[P1].armor_level, state.players[P2].armor_level),
        )
        res = micro_step(engagement, _MICRO, state.rng, baselines=(baselines[0], baselines[1]))

        for idx, side in enumerate((P1, P2)):
            _apply_resolution(state, side, region, engagement.forces[idx], res.pools_after[idx], events)
            if res.retreat[idx] and not sides_passive[idx]:
                pl = state.players[side]
                pl.army_dest = pl.main_region
                pl.engage_baseline = 0
                events.append({"e": "retreat", "t": state.tick, "side": side, "region": region})

        if res.losses[0] or res.losses[1]:
            events.append(
                {
                    "e": "combat",
                    "t": state.tick,
                    "region": region,
                    "losses": {P1: dict(sorted(res.losses[0].items())), P2: dict(sorted(res.losses[1].items()))},
                }
            )
    for side in (P1, P2):
        if not engaged[side]:
            state.players[side].engage_baseline = 0


def _apply_resolution(
    state: GameState,
    side: PlayerId,
    region: str,
    entries: list[ForceEntry],
    pools: list[int],
    events: list[dict],
) -> None:
    pl = state.players[side]
    for entry, pool in zip(entries, pools):
        alive = (pool + entry.hp_each - 1) // entry.hp_each if pool > 0 else 0
        if entry.key == "workers":
            died = entry.count - alive
            if died > 0:
                pl.workers -= died
            continue
        tag, kind = entry.key.split(":", 1)
        if tag == "site":
            died = entry.count - alive
            if died > 0:
                # Newest sites collapse first; the most-finished one survives.
                for item in reversed(pl.queue):
                    if died == 0:
                        break
                    if item.category == "building" and item.region == region and item.kind == kind:
                        pl.queue.remove(item)
                        died -= 1
                        events.append({"e": "razed_site", "t": state.tick, "side": side, "kind": kind, "region": region})
            continue
        if tag == "unit":
            if alive <= 0:
                pl.units.pop(kind, None)
                pl.unit_damage.pop(kind, None)
            else:
                pl.units[kind] = alive
                partial = alive * entry.hp_each - pool
                if partial > 0:
                    pl.unit_damage[kind] = partial
                else:
                    pl.unit_damage.pop(kind, None)
        else:
            dkey = f"{region}:{kind}"
            if alive <= 0:
                pl.buildings.get(region, {}).pop(kind, None)
                pl.building_damage.pop(dkey, None)
                if state.tree.get(kind).is_townhall and region in pl.base_order:
                    if pl.buildings.get(region, {}).get(kind, 0) == 0:
                        pl.base_order.remove(region)
                events.append({"e": "razed", "t": state.tick, "side": side, "kind": kind, "region": region})
            else:
                pl.buildings[region][kind] = alive
                partial = alive * entry.hp_each - pool
                if partial > 0:
                    pl.building_damage[dkey] = partial
                else:
                    pl.building_damage.pop(dkey, None)


def _heal_phase(state: GameState) -> None:
    for side in (P1, P2):
        pl = state.players[side]
        if not pl.unit_damage:
            continue
        region = pl.army_region
        healers = 0
        for kind, count in pl.buildings.get(region, {}).items():
            if "heal" in state.tree.get(kind).flags:
                healers += count
        if healers == 0:
            continue
        budget = HEAL_PER_BUILDING * healers
        while budget > 0 and pl.unit_damage:
            kind = max(sorted(pl.unit_damage), key=lambda k: pl.unit_damage[k])
            healed = min(budget, pl.unit_damage[kind])
            pl.unit_damage[kind] -= healed
            budget -= healed
            if pl.unit_damage[kind] <= 0:
                del pl.unit_damage[kind]


def _supply_cull(state: GameState, events: list[dict]) -> None:
    """Keep supply_used <= supply_cap strict even after supply structures die:
    excess units disband, highest supply cost first."""
    for side in (P1, P2):
        pl = state.players[side]
        tree = state.tree
        culled: dict[str, int] = {}
        while supply_used(pl, tree) > supply_cap(pl, tree):
            military = [k for k, c in pl.units.items() if c > 0 and tree.get(k).supply_cost > 0]
            if military:
                kind = max(military, key=lambda k: (tree.get(k).supply_cost, k))
                pl.units[kind] -= 1
                if pl.units[kind] <= 0:
                    pl.units.pop(kind, None)
                    pl.unit_damage.pop(kind, None)
                culled[kind] = culled.get(kind, 0) + 1
            elif pl.workers > 0:
                pl.workers -= 1
                culled["workers"] = culled.get("workers", 0) + 1
            else:
                break
        if culled:
            events.append({"e": "supply_cull", "t": state.tick, "side": side, "units": dict(sorted(culled.items()))})


def _scouting(state: GameState, side: PlayerId) -> None:
    pl = state.players[side]
    enemy_side = other_player(side)
    enemy = state.players[enemy_side]
    tree = state.tree

    visible: set[str] = set()
    if army_count(pl, tree) > 0:
        visible.add(pl.army_region)
    for region, per in pl.buildings.items():
        if any(c > 0 for c in per.values()):
            visible.add(region)
    if pl.workers > 0:
        visible.update(r for r, c in worker_split(state, side).items() if c > 0)
    if pl.scout_active:
        visible.add(pl.scout_path[pl.scout_idx])

    enemy_workers = worker_split(state, enemy_side)
    enemy_army_here = army_count(enemy, tree)
    for region in sorted(visible):
        units: dict[str, int] = {}
        if enemy.army_region == region and enemy_army_here > 0:
            for kind, count in enemy.units.items():
                if count > 0 and _is_army_kind(tree.get(kind)):
                    units[kind] = count
        if region == enemy.main_region:
            for kind, count in enemy.units.items():
                if count > 0 and not _is_army_kind(tree.get(kind)):
                    units[kind] = count
        buildings = {k: c for k, c in enemy.buildings.get(region, {}).items() if c > 0}
        workers = enemy_workers.get(region, 0) if enemy.workers > 0 else 0
        pl.scouted[region] = Sighting(tick=state.tick, units=units, buildings=buildings, workers=workers)

    if pl.scout_active and pl.scout_idx >= len(pl.scout_path) - 1:
        pl.scout_active = False  # the scout is lost at the enemy main
        pl.scout_path = []
        pl.scout_idx = 0
        pl.scout_step = 0


def _terminal_check(state: GameState, events: list[dict]) -> None:
    eliminated: list[PlayerId] = []
    for side in (P1, P2):
        pl = state.players[side]
        tree = state.tree
        townhall = tree.townhall(pl.race).id
        townhalls = completed_count(pl, townhall)
        producers = sum(completed_count(pl, b) for b in tree.producers(pl.race))
        inflight = any(i.kind == townhall for i in pl.queue)
        if townhalls == 0 and producers == 0 and not inflight:
            eliminated.append(side)

    if len(eliminated) == 2:
        state.outcome = {"winner": None, "reason": "mutual_elimination", "tick": state.tick}
    elif len(eliminated) == 1:
        winner = other_player(eliminated[0])
        state.outcome = {"winner": winner, "reason": "elimination", "tick": state.tick}
    elif state.tick >= state.config.max_ticks:
        state.outcome = {"winner": None, "reason": "draw_ceiling", "tick": state.tick}
    if state.outcome is not None:
        events.append({"e": "terminal", "t": state.tick, **state.outcome})


# ---------------------------------------------------------------- views


def observe(state: GameState, side: PlayerId, true_vision: bool = False) -> Observation:
    """Player view: own side complete, enemy side fog-filtered (or the true
    current presence when true_vision is set, for cheating opponents)."""
    pl = state.players[side]
    tree = state.tree
    worker_ent = tree.worker(pl.race)

    units: dict[str, int] = {worker_ent.display: pl.workers}
    for kind in sorted(pl.units):
        if pl.units[kind] > 0:
            units[tree.get(kind).display] = pl.units[kind]

    buildings: dict[str, int] = {}
    for region in state.map.regions:
        for kind, count in sorted(pl.buildings.get(region, {}).items()):
            if count > 0:
                disp = tree.get(kind).display
                buildings[disp] = buildings.get(disp, 0) + count

    in_process: list[tuple[str, int]] = []
    research_in_progress: list[tuple[str, int]] = []
    for item in pl.queue:
        disp = tree.get(item.kind).display
        if item.category == "tech":
            research_in_progress.append((disp, item.remaining))
        else:
            in_process.append((disp, item.remaining))

    resources = ResourceView(
        minerals=pl.minerals,
        gas=pl.gas,
        supply_used=supply_used(pl, tree),
        supply_cap=supply_cap(pl, tree),
        workers=pl.workers,
        army_supply=army_supply(pl, tree),
        larvae=pl.larvae if pl.race is Race.ZERG else 0,
        boost_charges=pl.chrono_charges if pl.race is Race.PROTOSS else pl.inject_charges,
    )

    enemy_views = _enemy_views(state, side, true_vision)

    return Observation(
        tick=state.tick,
        side=side,
        race=pl.race,
        resources=resources,
        units=units,
        buildings=buildings,
        in_process=in_process,
        enemy=enemy_views,
        research_done=[tree.get(k).display for k in pl.research_done],
        research_in_progress=research_in_progress,
        army_location=state.map.display[pl.army_region],
    )


def _enemy_views(state: GameState, side: PlayerId, true_vision: bool) -> list[EnemySightingView]:
    pl = state.players[side]
    enemy_side = other_player(side)
    enemy = state.players[enemy_side]
    tree = state.tree
    views: list[EnemySightingView] = []

    if true_vision:
        enemy_workers = worker_split(state, enemy_side)
        army_here = army_count(enemy, tree)
        for region in state.map.regions:
            units: dict[str, int] = {}
            if enemy.army_region == region and army_here > 0:
                for kind, count in sorted(enemy.units.items()):
                    if count > 0 and _is_army_kind(tree.get(kind)):
                        units[tree.get(kind).display] = count
            if region == enemy.main_region:
                for kind, count in sorted(enemy.units.items()):
                    if count > 0 and not _is_army_kind(tree.get(kind)):
                        units[tree.get(kind).display] = count
            buildings = {
                tree.get(k).display: c for k, c in sorted(enemy.buildings.get(region, {}).items()) if c > 0
            }
            workers = enemy_workers.get(region, 0) if enemy.workers > 0 else 0
            if units or buildings or workers:
                views.append(
                    EnemySightingView(
                        region=region,
                        region_display=state.map.display[region],
                        age=0,
                        units=units,
                        buildings=buildings,
                        workers=workers,
                    )
                )
        return views

    for region in state.map.regions:
        sighting = pl.scouted.get(region)
        if sighting is None or sighting.is_empty():
            continue
        age = state.tick - sighting.tick
        if age > state.config.staleness:
            continue
        views.append(
            EnemySightingView(
                region=region,
                region_display=state.map.display[region],
                age=age,
                units={tree.get(k).display: c for k, c in sorted(sighting.units.items())},
                buildings={tree.get(k).display: c for k, c in sorted(sighting.buildings.items())},
                workers=sighting.workers,
            )
        )
    return views


def outcome(state: GameState, side: PlayerId) -> int | None:
    """Terminal reward for a side: +1 win, 0 draw, -1 loss; None before."""
    if state.outcome is None:
        return None
    winner = state.outcome["winner"]
    if winner is None:
        return 0
    return 1 if winner == side else -1


def state_hash(state: GameState) -> str:
    payload = json.dumps(state.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
