"""Core simulation domain types shared by every module."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Race(Enum):
    PROTOSS = "P"
    ZERG = "Z"

    @property
    def display(self) -> str:
        return "Protoss" if self is Race.PROTOSS else "Zerg"


# Player slots. p1 is always the agent seat in the experiment harness.
PlayerId = str
P1: PlayerId = "p1"
P2: PlayerId = "p2"


def other_player(side: PlayerId) -> PlayerId:
    return P2 if side == P1 else P1


class ActionKind(Enum):
    TRAIN = "train"
    BUILD = "build"
    RESEARCH = "research"
    CHRONO = "chrono"
    INJECT = "inject"
    SCOUT = "scout"
    EXPAND = "expand"
    ATTACK = "attack"
    RETREAT = "retreat"
    NOOP = "noop"


# Side-relative attack target references, resolved by the engine.
ATTACK_REFS = ("ENEMY_MAIN", "ENEMY_NATURAL", "ENEMY_THIRD", "CENTER")


@dataclass(frozen=True)
class MacroAction:
    """A strategic command: production, research, or an 'other' ability.

    `arg` holds the unit/building/tech id or the attack target reference;
    abilities without a target leave it None.
    """

    kind: ActionKind
    arg: str | None = None

    def token(self) -> str:
        """Canonical uppercase token, round-trippable through the catalog."""
        k = self.kind
        if k is ActionKind.TRAIN:
            return f"TRAIN {self.arg}"
        if k is ActionKind.BUILD:
            return f"BUILD {self.arg}"
        if k is ActionKind.RESEARCH:
            return f"RESEARCH {self.arg}"
        if k is ActionKind.CHRONO:
            return f"CHRONOBOOST {self.arg}"
        if k is ActionKind.INJECT:
            return "INJECTLARVA"
        if k is ActionKind.SCOUT:
            return "SCOUTING PROBE"
        if k is ActionKind.EXPAND:
            return "EXPAND TO NEW RESOURCE LOCATION"
        if k is ActionKind.ATTACK:
            return "ATTACK " + str(self.arg).replace("_", " ")
        if k is ActionKind.RETREAT:
            return "RETREAT HOME"
        return "NOOP"

    def action_id(self) -> str:
        """Stable id used by the catalog data file and record logs."""
        if self.arg is None:
            return self.kind.value
        return f"{self.kind.value}:{self.arg}"

    @classmethod
    def from_id(cls, action_id: str) -> "MacroAction":
        if ":" in action_id:
            kind, arg = action_id.split(":", 1)
            return cls(ActionKind(kind), arg)
        return cls(ActionKind(action_id))


NOOP_ACTION = MacroAction(ActionKind.NOOP)


# apply_macro rejection reasons (normal events, never exceptions)
REJECT_TERMINAL = "terminal"
REJECT_PREREQ = "missing_prerequisite"
REJECT_BUSY = "producer_busy"
REJECT_MINERALS = "insufficient_minerals"
REJECT_GAS = "insufficient_gas"
REJECT_SUPPLY = "supply_blocked"
REJECT_WORKER = "no_worker"
REJECT_LARVA = "no_larva"
REJECT_CHARGE = "no_charge"
REJECT_TARGET = "no_target"
REJECT_EXPANSION = "no_free_expansion"
REJECT_ARMY = "no_army"
REJECT_SCOUT = "scout_already_out"
REJECT_UNKNOWN = "unknown_action"


@dataclass
class ProductionItem:
    """One in-flight unit/building/tech."""

    category: str  # unit | building | tech
    kind: str
    remaining: int
    region: str
    producer: str | None = None

    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "kind": self.kind,
            "remaining": self.remaining,
            "region": self.region,
            "producer": self.producer,
        }


@dataclass
class Sighting:
    """Snapshot of enemy presence in one region at scouting time."""

    tick: int
    units: dict[str, int] = field(default_factory=dict)
    buildings: dict[str, int] = field(default_factory=dict)
    workers: int = 0

    def is_empty(self) -> bool:
        return not self.units and not self.buildings and self.workers == 0

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "units": dict(sorted(self.units.items())),
            "buildings": dict(sorted(self.buildings.items())),
            "workers": self.workers,
        }


@dataclass
class ResourceView:
    minerals: int
    gas: int
    supply_used: int
    supply_cap: int
    workers: int
    army_supply: int
    larvae: int
    boost_charges: int


@dataclass
class EnemySightingView:
    region: str
    region_display: str
    age: int
    units: dict[str, int]
    buildings: dict[str, int]
    workers: int


@dataclass
class Observation:
    """Player-visible snapshot: own side complete, enemy side fog-filtered."""

    tick: int
    side: PlayerId
    race: Race
    resources: ResourceView
    units: dict[str, int]
    buildings: dict[str, int]
    in_process: list[tuple[str, int]]
    enemy: list[EnemySightingView]
    research_done: list[str]
    research_in_progress: list[tuple[str, int]]
    army_location: str = ""  # region display name of the standing army
