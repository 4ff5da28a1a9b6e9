"""Region-graph maps: 7 named regions, weighted edges, no coordinates."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from pathlib import Path

from textrts.datafiles import DataFileError, data_path, display_name, load_rows
from textrts.sim.types import P1, PlayerId

ROLES = ("p1_main", "p1_expansion", "p2_main", "p2_expansion", "neutral")


@dataclass
class MapConfig:
    name: str
    regions: list[str]
    display: dict[str, str]
    role: dict[str, str]
    edges: dict[tuple[str, str], int]
    neighbors: dict[str, list[str]] = field(default_factory=dict)

    def travel_ticks(self, a: str, b: str) -> int:
        return self.edges[(a, b)]

    def main_of(self, side: PlayerId) -> str:
        want = "p1_main" if side == P1 else "p2_main"
        for r in self.regions:
            if self.role[r] == want:
                return r
        raise DataFileError(f"map {self.name}: no main for {side}")

    def expansions_of(self, side: PlayerId) -> list[str]:
        """Expansion regions for a side, nearest-to-main first (main excluded)."""
        want = "p1_expansion" if side == P1 else "p2_expansion"
        main = self.main_of(side)
        exps = [r for r in self.regions if self.role[r] == want]
        exps.sort(key=lambda r: (self.path_ticks(main, r), self.regions.index(r)))
        return exps

    def resource_regions(self, side: PlayerId) -> list[str]:
        return [self.main_of(side)] + self.expansions_of(side)

    def resolve_ref(self, ref: str, side: PlayerId) -> str:
        """Side-relative attack reference -> region id."""
        enemy: PlayerId = "p2" if side == P1 else "p1"
        if ref == "ENEMY_MAIN":
            return self.main_of(enemy)
        if ref == "ENEMY_NATURAL":
            return self.expansions_of(enemy)[0]
        if ref == "ENEMY_THIRD":
            exps = self.expansions_of(enemy)
            return exps[1] if len(exps) > 1 else exps[0]
        if ref == "CENTER":
            for r in self.regions:
                if self.role[r] == "neutral":
                    return r
            raise DataFileError(f"map {self.name}: no neutral region")
        raise KeyError(f"unknown attack reference: {ref}")

    def shortest_path(self, a: str, b: str) -> list[str]:
        """Dijkstra over travel ticks; ties broken by region order. Returns
        the region sequence including both endpoints."""
        if a == b:
            return [a]
        idx = {r: i for i, r in enumerate(self.regions)}
        dist: dict[str, int] = {a: 0}
        prev: dict[str, str] = {}
        heap: list[tuple[int, int, str]] = [(0, idx[a], a)]
        seen: set[str] = set()
        while heap:
            d, _, cur = heapq.heappop(heap)
            if cur in seen:
                continue
            seen.add(cur)
            if cur == b:
                break
            for nxt in self.neighbors[cur]:
                nd = d + self.edges[(cur, nxt)]
                if nxt not in dist or nd < dist[nxt] or (nd == dist[nxt] and idx[cur] < idx[prev[nxt]]):
                    dist[nxt] = nd
                    prev[nxt] = cur
                    heapq.heappush(heap, (nd, idx[nxt], nxt))
        if b not in dist:
            raise DataFileError(f"map {self.name}: no path {a} -> {b}")
        path = [b]
        while path[-1] != a:
            path.append(prev[path[-1]])
        path.reverse()
        return path

    def path_ticks(self, a: str, b: str) -> int:
        path = self.shortest_path(a, b)
        return sum(self.edges[(path[i], path[i + 1])] for i in range(len(path) - 1))


def load_maps(path: str | Path | None = None) -> dict[str, MapConfig]:
    """Parse the maps data file; validates connectivity and roles."""
    p = Path(path) if path is not None else data_path("maps.txt")
    maps: dict[str, MapConfig] = {}
    cur: MapConfig | None = None
    for lineno, cols in load_rows(p):
        tag = cols[0]
        if tag == "map":
            if len(cols) != 2:
                raise DataFileError(f"{p.name}:{lineno}: map needs exactly one id")
            cur = MapConfig(name=cols[1], regions=[], display={}, role={}, edges={})
            if cur.name in maps:
                raise DataFileError(f"{p.name}:{lineno}: duplicate map {cur.name}")
            maps[cur.name] = cur
        elif tag == "region":
            if cur is None or len(cols) != 4:
                raise DataFileError(f"{p.name}:{lineno}: bad region record")
            rid, disp, role = cols[1], cols[2], cols[3]
            if role not in ROLES:
                raise DataFileError(f"{p.name}:{lineno}: unknown role {role!r}")
            if rid in cur.role:
                raise DataFileError(f"{p.name}:{lineno}: duplicate region {rid}")
            cur.regions.append(rid)
            cur.display[rid] = display_name(disp)
            cur.role[rid] = role
        elif tag == "edge":
            if cur is None or len(cols) != 4:
                raise DataFileError(f"{p.name}:{lineno}: bad edge record")
            a, b, ticks = cols[1], cols[2], int(cols[3])
            if a not in cur.role or b not in cur.role:
                raise DataFileError(f"{p.name}:{lineno}: edge references unknown region")
            if ticks <= 0:
                raise DataFileError(f"{p.name}:{lineno}: edge ticks must be positive")
            cur.edges[(a, b)] = ticks
            cur.edges[(b, a)] = ticks
        else:
            raise DataFileError(f"{p.name}:{lineno}: unknown record {tag!r}")

    for m in maps.values():
        m.neighbors = {r: [] for r in m.regions}
        for (a, b) in m.edges:
            if b not in m.neighbors[a]:
                m.neighbors[a].append(b)
        for r in m.regions:
            m.neighbors[r].sort(key=m.regions.index)
        _validate(m, p.name)
    return maps


def _validate(m: MapConfig, filename: str) -> None:
    for side in ("p1", "p2"):
        m.main_of(side)
        if len(m.expansions_of(side)) < 2:
            raise DataFileError(f"{filename}: map {m.name}: {side} needs >= 2 expansion regions")
    # connectivity
    seen = {m.regions[0]}
    frontier = [m.regions[0]]
    while frontier:
        cur = frontier.pop()
        for nxt in m.neighbors[cur]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    if seen != set(m.regions):
        raise DataFileError(f"{filename}: map {m.name} is not connected")
