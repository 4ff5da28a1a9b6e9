"""Deterministic macro-RTS simulation core."""

from textrts.sim.engine import (
    ActionEvent,
    ConfigError,
    GameState,
    MatchConfig,
    PlayerState,
    apply_macro,
    legal_actions,
    new_match,
    observe,
    outcome,
    state_hash,
    tick,
)
from textrts.sim.mapgraph import MapConfig, load_maps
from textrts.sim.techtree import Entity, TechTree, load_tech_tree
from textrts.sim.types import (
    ActionKind,
    MacroAction,
    NOOP_ACTION,
    Observation,
    P1,
    P2,
    Race,
    other_player,
)

__all__ = [
    "ActionEvent",
    "ActionKind",
    "ConfigError",
    "Entity",
    "GameState",
    "MacroAction",
    "MapConfig",
    "MatchConfig",
    "NOOP_ACTION",
    "Observation",
    "P1",
    "P2",
    "PlayerState",
    "Race",
    "TechTree",
    "apply_macro",
    "legal_actions",
    "load_maps",
    "load_tech_tree",
    "new_match",
    "observe",
    "other_player",
    "outcome",
    "state_hash",
    "tick",
]
