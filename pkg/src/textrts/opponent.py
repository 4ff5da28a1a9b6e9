"""Built-in scripted Zerg opponent graded by a 10-level difficulty ladder.

Difficulty is realized through three parameter axes (income multiplier,
decision cadence, attack timing) plus the two top-level cheat flags; the
macro script itself is identical at every level. Levels 1-7 see the world
through the same fog-filtered Observation a player gets, enforced by the
policy signature: `builtin_policy` receives a view, never engine state.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from textrts.datafiles import DataFileError, data_path, display_name, load_rows
from textrts.prng import Prng
from textrts.sim import engine as se
from textrts.sim.engine import ConfigError
from textrts.sim.types import ActionKind, MacroAction, Observation, P2

DIFFICULTY_FILE = "difficulty.txt"
ATTACK_WAVE_PERIOD = 300  # ticks between attack waves after the first


@dataclass(frozen=True)
class DifficultyParams:
    level: int
    name: str
    income_permille: int
    decision_period: int
    aggression_tick: int
    cheat_vision: bool
    cheat_money: bool

    @property
    def income_multiplier(self) -> float:
        return self.income_permille / 1000.0


@lru_cache(maxsize=1)
def _ladder() -> tuple[DifficultyParams, ...]:
    path = data_path(DIFFICULTY_FILE)
    rows: list[DifficultyParams] = []
    for lineno, cols in load_rows(path):
        if len(cols) != 7:
            raise DataFileError(f"{path.name}:{lineno}: expected 7 columns, got {len(cols)}")
        try:
            rows.append(
                DifficultyParams(
                    level=int(cols[0]),
                    name=display_name(cols[1]),
                    income_permille=int(cols[2]),
                    decision_period=int(cols[3]),
                    aggression_tick=int(cols[4]),
                    cheat_vision=cols[5] == "1",
                    cheat_money=cols[6] == "1",
                )
            )
        except ValueError as exc:
            raise DataFileError(f"{path.name}:{lineno}: {exc}") from exc

    if [p.level for p in rows] != list(range(1, 11)):
        raise DataFileError(f"{path.name}: levels must be exactly 1..10 in order")
    for a, b in zip(rows, rows[1:]):
        if b.income_permille < a.income_permille:
            raise DataFileError(f"{path.name}: income must be non-decreasing (level {b.level})")
        if b.decision_period > a.decision_period:
            raise DataFileError(f"{path.name}: decision period must be non-increasing (level {b.level})")
    for p in rows:
        want_vision = p.level in (8, 10)
        want_money = p.level in (9, 10)
        if p.cheat_vision != want_vision or p.cheat_money != want_money:
            raise DataFileError(f"{path.name}: wrong cheat flags at level {p.level}")
    return tuple(rows)


def difficulty_params(level: int) -> DifficultyParams:
    """Frozen parameter row for a ladder level; out of range is a ConfigError."""
    if not isinstance(level, int) or not 1 <= level <= 10:
        raise ConfigError(f"difficulty level must be 1..10, got {level!r}")
    return _ladder()[level - 1]


def _pending(view: Observation, display: str) -> int:
    n = sum(1 for name, _ in view.in_process if name == display)
    n += sum(1 for name, _ in view.research_in_progress if name == display)
    return n


def _have(view: Observation, display: str) -> int:
    return view.buildings.get(display, 0)


def _attack_window(tick: int, params: DifficultyParams) -> bool:
    # Decision ticks land every decision_period ticks, so at most one falls
    # inside each wave window; this keeps the policy pure yet roughly one
    # attack order per wave.
    if tick < params.aggression_tick:
        return False
    return (tick - params.aggression_tick) % ATTACK_WAVE_PERIOD < params.decision_period


def builtin_policy(view: Observation, params: DifficultyParams, rng: Prng) -> list[MacroAction]:
    """Fixed Zerg macro script: drone up, Spawning Pool, expand, Roach/Hydra
    army, timed attack waves. Emits a batch of macro commands for one decision
    tick; the engine rejects whatever is not currently affordable."""
    tree = se.default_tree()

    def disp(kind: str) -> str:
        return tree.get(kind).display

    actions: list[MacroAction] = []
    res = view.resources
    hatcheries = _have(view, disp("HATCHERY"))
    pool_done = _have(view, disp("SPAWNINGPOOL")) > 0
    warren_done = _have(view, disp("ROACHWARREN")) > 0
    lair_done = _have(view, disp("LAIR")) > 0
    den_done = _have(view, disp("HYDRALISKDEN")) > 0
    extractors = _have(view, disp("EXTRACTOR")) + _pending(view, disp("EXTRACTOR"))
    drones = res.workers
    queens = view.units.get(disp("QUEEN"), 0)

    # Larva economy first: charges accrue one per 25-tick hatchery cycle.
    if res.boost_charges > 0 and res.larvae < hatcheries * 2:
        actions.append(MacroAction(ActionKind.INJECT))

    # Supply: overlords take 18 ticks, so order before the block hits.
    headroom = res.supply_cap - res.supply_used
    overlords_coming = _pending(view, disp("OVERLORD"))
    if res.supply_cap < 200 and headroom < 4 + 2 * hatcheries and overlords_coming == 0:
        actions.append(MacroAction(ActionKind.TRAIN, "OVERLORD"))

    # Tech skeleton, one step per decision.
    if not pool_done and _pending(view, disp("SPAWNINGPOOL")) == 0 and drones >= 13:
        actions.append(MacroAction(ActionKind.BUILD, "SPAWNINGPOOL"))
    elif pool_done and extractors < min(hatcheries, 2) and drones >= 14:
        actions.append(MacroAction(ActionKind.BUILD, "EXTRACTOR"))
    elif pool_done and not warren_done and _pending(view, disp("ROACHWARREN")) == 0 and res.minerals >= 150:
        actions.append(MacroAction(ActionKind.BUILD, "ROACHWARREN"))
    elif warren_done and not lair_done and _pending(view, disp("LAIR")) == 0 and res.gas >= 100:
        actions.append(MacroAction(ActionKind.BUILD, "LAIR"))
    elif lair_done and not den_done and _pending(view, disp("HYDRALISKDEN")) == 0 and res.gas >= 100:
        actions.append(MacroAction(ActionKind.BUILD, "HYDRALISKDEN"))

    # Expand once saturated and banked; three bases is the script's ceiling.
    saturation = 16 * hatcheries + 3 * extractors
    expanding = _pending(view, disp("HATCHERY"))
    if hatcheries + expanding < 3 and expanding == 0 and (
        drones >= saturation - 2 and res.minerals >= 350 or res.minerals >= 700
    ):
        actions.append(MacroAction(ActionKind.EXPAND))

    # Drones to saturation; queens backstop defense one per hatchery.
    if drones < saturation and res.larvae > 0:
        actions.append(MacroAction(ActionKind.TRAIN, "DRONE"))
    elif pool_done and queens < hatcheries and res.minerals >= 150:
        actions.append(MacroAction(ActionKind.TRAIN, "QUEEN"))

    # Army from the best unlocked source; mix picked by the seeded stream.
    # A growing bank buys extra units per decision, so the income axis turns
    # directly into wave size at higher levels.
    def pick_unit() -> str | None:
        if den_done and warren_done:
            return "HYDRALISK" if rng.randrange(3) == 0 else "ROACH"
        if warren_done:
            return "ROACH"
        if pool_done:
            return "ZERGLING"
        return None

    if drones >= 13:
        batch = 1 + min(res.minerals // 400, 3)
        for _ in range(min(batch, res.larvae)):
            unit = pick_unit()
            if unit is None:
                break
            actions.append(MacroAction(ActionKind.TRAIN, unit))

    if _attack_window(view.tick, params) and res.army_supply >= 4:
        # Mostly the main, sometimes the natural, rarely the third: waves
        # stay predictable but no base is permanently safe.
        roll = rng.randrange(8)
        target = "ENEMY_MAIN" if roll >= 3 else ("ENEMY_NATURAL" if roll >= 1 else "ENEMY_THIRD")
        actions.append(MacroAction(ActionKind.ATTACK, target))

    return actions


class OpponentDriver:
    """Applies the built-in policy at its decision cadence.

    Owns a private rng stream seeded independently of the engine, so replay
    (which feeds recorded actions without re-running the policy) leaves the
    engine's stream untouched and hashes stay identical.
    """

    def __init__(self, params: DifficultyParams, seed: int):
        self.params = params
        self.rng = Prng(seed)

    def maybe_act(self, state: se.GameState, recorder=None) -> None:
        if state.outcome is not None:
            return
        if state.tick % self.params.decision_period != 0:
            return
        view = se.observe(state, P2, true_vision=self.params.cheat_vision)
        for action in builtin_policy(view, self.params, self.rng):
            ev = se.apply_macro(state, P2, action)
            if recorder is not None:
                recorder.executed(P2, ev, source={"builtin": self.params.level})
