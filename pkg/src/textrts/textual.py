"""Observation-to-text adapter.

Section order and header strings are frozen: prompts, summaries, and the
recorded corpora all depend on them byte-for-byte.
"""

from __future__ import annotations

from dataclasses import dataclass

from textrts.sim.types import Observation, Race

SECTION_TITLES = ("Resources", "Units", "Buildings", "In-Process", "Enemy Status", "Research")

EMPTY_ENEMY_LINE = "No enemy units or buildings sighted"
EMPTY_PRODUCTION_LINE = "Nothing in production"
EMPTY_RESEARCH_LINE = "Nothing researched"
EMPTY_SECTION_LINE = "None"


@dataclass(frozen=True)
class RenderedObservation:
    game_time: str
    sections: tuple[tuple[str, tuple[str, ...]], ...]

    def section(self, title: str) -> tuple[str, ...]:
        for name, lines in self.sections:
            if name == title:
                return lines
        raise KeyError(title)

    def as_text(self) -> str:
        parts = [f"Game time: {self.game_time}"]
        for title, lines in self.sections:
            parts.append(f"{title}:")
            parts.extend(f"  {line}" for line in lines)
        return "\n".join(parts)


def render_time(tick: int) -> str:
    """Zero-padded MM:SS at one tick per second."""
    minutes, seconds = divmod(max(0, tick), 60)
    return f"{minutes:02d}:{seconds:02d}"


def _count_lines(counts: dict[str, int]) -> list[str]:
    return [f"{name}: {count}" for name, count in counts.items()]


def render_observation(obs: Observation) -> RenderedObservation:
    """Pure rendering: same Observation in, same strings out."""
    res = obs.resources
    resource_lines = [
        f"Minerals: {res.minerals}",
        f"Gas: {res.gas}",
        f"Supply: {res.supply_used}/{res.supply_cap}",
        f"Workers: {res.workers}",
        f"Army supply: {res.army_supply}",
    ]
    if obs.army_location:
        resource_lines.append(f"Army location: {obs.army_location}")
    if obs.race is Race.ZERG:
        resource_lines.append(f"Larvae: {res.larvae}")
        resource_lines.append(f"Inject charges: {res.boost_charges}")
    else:
        resource_lines.append(f"Boost charges: {res.boost_charges}")

    unit_lines = _count_lines(obs.units) or [EMPTY_SECTION_LINE]
    building_lines = _count_lines(obs.buildings) or [EMPTY_SECTION_LINE]

    process_lines = [f"{name}: {remaining}s remaining" for name, remaining in obs.in_process]
    if not process_lines:
        process_lines = [EMPTY_PRODUCTION_LINE]

    enemy_lines: list[str] = []
    for view in obs.enemy:
        suffix = f" (last seen {view.age}s ago)" if view.age > 0 else ""
        for name, count in view.units.items():
            enemy_lines.append(f"{name}: {count} at {view.region_display}{suffix}")
        for name, count in view.buildings.items():
            enemy_lines.append(f"{name}: {count} at {view.region_display}{suffix}")
        if view.workers > 0:
            enemy_lines.append(f"Workers: {view.workers} at {view.region_display}{suffix}")
    if not enemy_lines:
        enemy_lines = [EMPTY_ENEMY_LINE]

    research_lines = [f"{name}: complete" for name in obs.research_done]
    research_lines.extend(f"{name}: {remaining}s remaining" for name, remaining in obs.research_in_progress)
    if not research_lines:
        research_lines = [EMPTY_RESEARCH_LINE]

    sections = (
        ("Resources", tuple(resource_lines)),
        ("Units", tuple(unit_lines)),
        ("Buildings", tuple(building_lines)),
        ("In-Process", tuple(process_lines)),
        ("Enemy Status", tuple(enemy_lines)),
        ("Research", tuple(research_lines)),
    )
    return RenderedObservation(game_time=render_time(obs.tick), sections=sections)
