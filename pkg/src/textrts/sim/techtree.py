"""Data-driven tech tree: the single source of truth for entity stats."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from textrts.datafiles import DataFileError, data_path, display_name, load_rows
from textrts.sim.types import Race

CATEGORIES = ("unit", "building", "tech")


@dataclass(frozen=True)
class Entity:
    race: Race
    category: str
    id: str
    display: str
    minerals: int
    gas: int
    supply_cost: int
    supply_gives: int
    build_ticks: int
    producer: str | None
    prereqs: tuple[str, ...]
    hp: int
    dps_ground: int
    dps_air: int
    flags: frozenset[str]
    effect: str | None

    @property
    def is_worker(self) -> bool:
        return "worker" in self.flags

    @property
    def is_air(self) -> bool:
        return "air" in self.flags

    @property
    def is_townhall(self) -> bool:
        return "townhall" in self.flags

    @property
    def is_gas(self) -> bool:
        return "gas" in self.flags

    @property
    def is_defensive(self) -> bool:
        return "defensive" in self.flags

    @property
    def needs_larva(self) -> bool:
        return "nolarva" not in self.flags


@dataclass
class TechTree:
    entities: dict[str, Entity]
    order: list[str] = field(default_factory=list)

    def get(self, kind: str) -> Entity:
        ent = self.entities.get(kind)
        if ent is None:
            raise KeyError(f"unknown entity: {kind}")
        return ent

    def has(self, kind: str) -> bool:
        return kind in self.entities

    def by_race(self, race: Race, category: str | None = None) -> list[Entity]:
        out = []
        for kind in self.order:
            ent = self.entities[kind]
            if ent.race is race and (category is None or ent.category == category):
                out.append(ent)
        return out

    def units(self, race: Race) -> list[Entity]:
        return self.by_race(race, "unit")

    def buildings(self, race: Race) -> list[Entity]:
        return self.by_race(race, "building")

    def techs(self, race: Race) -> list[Entity]:
        return self.by_race(race, "tech")

    def townhall(self, race: Race) -> Entity:
        for ent in self.buildings(race):
            if ent.is_townhall:
                return ent
        raise DataFileError(f"no townhall for race {race.value}")

    def worker(self, race: Race) -> Entity:
        for ent in self.units(race):
            if ent.is_worker:
                return ent
        raise DataFileError(f"no worker for race {race.value}")

    def producers(self, race: Race) -> set[str]:
        """Building kinds that produce at least one unit."""
        out = set()
        for ent in self.units(race):
            if ent.producer:
                out.add(ent.producer)
        return out

    def progress_kinds(self, race: Race) -> int:
        """Denominator of the tech-completion metric: building + tech kinds
        available to this race (alternative: whole-file count; not used)."""
        return len(self.buildings(race)) + len(self.techs(race))


def _parse_flags(raw: str) -> tuple[frozenset[str], str | None]:
    if raw == "-":
        return frozenset(), None
    flags = set()
    effect = None
    for part in raw.split(","):
        if part.startswith("effect="):
            effect = part[len("effect=") :]
        else:
            flags.add(part)
    return frozenset(flags), effect


def load_tech_tree(path: str | Path | None = None) -> TechTree:
    """Parse the tech-tree data file; validates the prerequisite graph."""
    p = Path(path) if path is not None else data_path("tech_tree.txt")
    entities: dict[str, Entity] = {}
    order: list[str] = []
    for lineno, cols in load_rows(p):
        if len(cols) != 15:
            raise DataFileError(f"{p.name}:{lineno}: expected 15 columns, got {len(cols)}")
        try:
            race = Race(cols[0])
        except ValueError:
            raise DataFileError(f"{p.name}:{lineno}: unknown race {cols[0]!r}") from None
        category = cols[1]
        if category not in CATEGORIES:
            raise DataFileError(f"{p.name}:{lineno}: unknown category {category!r}")
        kind = cols[2]
        if kind in entities:
            raise DataFileError(f"{p.name}:{lineno}: duplicate entity {kind}")
        try:
            nums = [int(c) for c in cols[4:9]] + [int(c) for c in cols[11:14]]
        except ValueError:
            raise DataFileError(f"{p.name}:{lineno}: non-integer numeric column") from None
        producer = None if cols[9] == "-" else cols[9]
        prereqs = () if cols[10] == "-" else tuple(cols[10].split(","))
        flags, effect = _parse_flags(cols[14])
        ent = Entity(
            race=race,
            category=category,
            id=kind,
            display=display_name(cols[3]),
            minerals=nums[0],
            gas=nums[1],
            supply_cost=nums[2],
            supply_gives=nums[3],
            build_ticks=nums[4],
            producer=producer,
            prereqs=prereqs,
            hp=nums[5],
            dps_ground=nums[6],
            dps_air=nums[7],
            flags=flags,
            effect=effect,
        )
        entities[kind] = ent
        order.append(kind)

    tree = TechTree(entities=entities, order=order)
    _validate(tree, p.name)
    return tree


def _validate(tree: TechTree, filename: str) -> None:
    for kind, ent in tree.entities.items():
        if ent.producer is not None and ent.producer not in tree.entities:
            raise DataFileError(f"{filename}: {kind} has unknown producer {ent.producer}")
        for pre in ent.prereqs:
            if pre not in tree.entities:
                raise DataFileError(f"{filename}: {kind} has unknown prerequisite {pre}")
        if ent.category == "unit" and ent.producer is None:
            raise DataFileError(f"{filename}: unit {kind} has no producer")
        if ent.category == "tech" and ent.producer is None:
            raise DataFileError(f"{filename}: tech {kind} has no research building")

    # prerequisite graph must be acyclic
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {k: WHITE for k in tree.entities}

    def visit(k: str, stack: list[str]) -> None:
        color[k] = GRAY
        ent = tree.entities[k]
        deps = list(ent.prereqs)
        if ent.producer:
            deps.append(ent.producer)
        for dep in deps:
            if color[dep] == GRAY:
                raise DataFileError(f"{filename}: prerequisite cycle at {dep} via {' -> '.join(stack + [k])}")
            if color[dep] == WHITE:
                visit(dep, stack + [k])
        color[k] = BLACK

    for k in tree.entities:
        if color[k] == WHITE:
            visit(k, [])

    for race in Race:
        tree.townhall(race)
        tree.worker(race)
