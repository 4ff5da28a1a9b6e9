"""Match-record analytics: per-match figures, report rows, dataset cuts.

Four per-match figures, each measured up to the horizon (the first tick the
player sits at the 200/200 hard supply cap; matches that never reach it use
their full duration):

  pbr  population block ratio: fraction of sampled ticks pinned at the
       supply cap. Lower means fewer supply blocks, better macro.
  rur  resource utilization ratio: minerals plus gas spent per tick.
  apu  average population utilization: mean supply_used/supply_cap.
  tr   technology rate: unique building and tech kinds completed, over the
       kinds available to the player's race. Measured over the whole match,
       not horizon-limited. The numerator counts spending, not mining; the
       mined-total alternative would reward hoarding.

Dataset cuts rank won matches by apu (rank 0 = highest) and split them into
four near-equal buckets: "Top 25% APU, 0-25%" down to
"Bottom 25% APU, 75-100%". Fine-tune pairs strip every analysis section from
a completion, keeping only its decision list.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from textrts.records import MatchRecord
from textrts.sim.engine import SUPPLY_HARD_CAP
from textrts.sim.techtree import TechTree, load_tech_tree
from textrts.sim.types import P1, Race

BUCKET_LABELS = (
    "Top 25% APU, 0-25%",
    "25-50% APU",
    "50-75% APU",
    "Bottom 25% APU, 75-100%",
)

PAIR_FILTERS = ("all", "wins") + BUCKET_LABELS


@dataclass(frozen=True)
class TickSample:
    tick: int
    supply_used: int
    supply_cap: int
    total_minerals_spent: int
    total_gas_spent: int

    @property
    def at_population_cap(self) -> bool:
        return self.supply_used == self.supply_cap

    @classmethod
    def from_event(cls, ev: dict) -> "TickSample":
        return cls(
            tick=ev["t"],
            supply_used=ev["su"],
            supply_cap=ev["sc"],
            total_minerals_spent=ev["sm"],
            total_gas_spent=ev["sg"],
        )


@dataclass(frozen=True)
class MetricsReport:
    won: bool
    pbr: float
    rur: float
    apu: float
    tr: float
    horizon_tick: int

    def to_dict(self) -> dict:
        return {
            "won": self.won,
            "pbr": self.pbr,
            "rur": self.rur,
            "apu": self.apu,
            "tr": self.tr,
            "horizon_tick": self.horizon_tick,
        }


@lru_cache(maxsize=1)
def _default_tree() -> TechTree:
    return load_tech_tree()


def _record_race(record: MatchRecord) -> Race:
    cfg = record.header.get("match_config") or {}
    return Race(cfg.get("p1_race", Race.PROTOSS.value))


def record_id(record: MatchRecord):
    """Stable tie-break key: explicit id, else seed, else content digest."""
    header = record.header
    if "match_id" in header:
        return header["match_id"]
    if "seed" in header:
        return header["seed"]
    return record.digest()


def samples_of(record: MatchRecord) -> list[TickSample]:
    out = [TickSample.from_event(ev) for ev in record.of_kind("sample")]
    out.sort(key=lambda s: s.tick)
    return out


def compute(record: MatchRecord, tree: TechTree | None = None) -> MetricsReport:
    """Derive the four per-match figures from one record's sample stream."""
    samples = samples_of(record)
    if not samples:
        raise ValueError("record has no tick samples")
    tree = tree or _default_tree()

    horizon_tick = samples[-1].tick
    for s in samples:
        if s.supply_used == s.supply_cap == SUPPLY_HARD_CAP:
            horizon_tick = s.tick
            break
    span = [s for s in samples if s.tick <= horizon_tick]
    denom_ticks = max(horizon_tick, 1)

    capped = sum(1 for s in span if s.at_population_cap)
    pbr = capped / denom_ticks
    last = span[-1]
    rur = (last.total_minerals_spent + last.total_gas_spent) / denom_ticks
    # supply_cap 0 means an eliminated-in-progress tick; no utilization to read
    ratios = [s.supply_used / s.supply_cap for s in span if s.supply_cap > 0]
    apu = sum(ratios) / len(ratios) if ratios else 0.0

    race = _record_race(record)
    available = {e.id for e in tree.buildings(race)} | {e.id for e in tree.techs(race)}
    done = {
        ev["kind_id"]
        for ev in record.of_kind("complete")
        if ev.get("side") == P1 and ev.get("kind_id") in available
    }
    tr = len(done) / len(available) if available else 0.0

    reward = record.reward()
    return MetricsReport(
        won=reward is not None and reward > 0,
        pbr=pbr,
        rur=rur,
        apu=apu,
        tr=tr,
        horizon_tick=horizon_tick,
    )


@dataclass(frozen=True)
class SummaryRow:
    label: str
    wins: int
    total: int
    pbr: float
    rur: float
    apu: float
    tr: float

    @property
    def win_rate(self) -> str:
        return f"{self.wins}/{self.total}"

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "win_rate": self.win_rate,
            "wins": self.wins,
            "total": self.total,
            "pbr": self.pbr,
            "rur": self.rur,
            "apu": self.apu,
            "tr": self.tr,
        }


def aggregate(reports: list[MetricsReport], label: str = "agent") -> SummaryRow:
    """Collapse per-match reports into one report row: wins/total plus means."""
    if not reports:
        raise ValueError("cannot aggregate zero reports")
    n = len(reports)
    return SummaryRow(
        label=label,
        wins=sum(1 for r in reports if r.won),
        total=n,
        pbr=sum(r.pbr for r in reports) / n,
        rur=sum(r.rur for r in reports) / n,
        apu=sum(r.apu for r in reports) / n,
        tr=sum(r.tr for r in reports) / n,
    )


def render_table(rows: list[SummaryRow]) -> str:
    """Plain-text report table, one row per aggregate."""
    header = ("", "Win Rate", "PBR", "RUR", "APU", "TR")
    body = [
        (r.label, r.win_rate, f"{r.pbr:.4f}", f"{r.rur:.1f}", f"{r.apu:.4f}", f"{r.tr:.4f}")
        for r in rows
    ]
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
    out = []
    for line in [header] + body:
        out.append("  ".join(col.ljust(w) for col, w in zip(line, widths)).rstrip())
    out.insert(1, "-" * len(out[0]))
    return "\n".join(out)


def partition_by_apu(
    records: list[MatchRecord],
    reports: list[MetricsReport] | None = None,
    tree: TechTree | None = None,
) -> dict[str, list[MatchRecord]]:
    """Cut the won matches into four apu-ranked buckets.

    Wins only; descending apu, ties broken by record id; bucket sizes differ
    by at most one with the larger buckets first. Returns a dict keyed by the
    four bucket labels, every label always present.
    """
    if reports is None:
        reports = [compute(r, tree=tree) for r in records]
    if len(reports) != len(records):
        raise ValueError("reports and records must pair up one to one")
    wins = [(rep.apu, record_id(rec), rec) for rec, rep in zip(records, reports) if rep.won]
    wins.sort(key=lambda item: (-item[0], item[1]))

    buckets: dict[str, list[MatchRecord]] = {label: [] for label in BUCKET_LABELS}
    n = len(wins)
    base, extra = divmod(n, len(BUCKET_LABELS))
    start = 0
    for i, label in enumerate(BUCKET_LABELS):
        size = base + (1 if i < extra else 0)
        buckets[label] = [rec for _, _, rec in wins[start : start + size]]
        start += size
    return buckets


def _decisions_only(completion_text: str) -> str:
    from textrts.pipeline import parse_reasoning

    out = parse_reasoning(completion_text)
    body = out.sections.get("decisions")
    if body is None:
        body = "\n".join(f"{i}: {d}" for i, d in enumerate(out.decisions, start=1))
    return f"Decisions:\n{body}"


def export_finetune_pairs(
    records: list[MatchRecord],
    which: str = "all",
    tree: TechTree | None = None,
) -> list[dict]:
    """(input, output) training pairs: one per inference in the kept records.

    input is the period summary handed to the backend; output is the
    completion cut down to its decision list. `which` keeps all records,
    wins only, or one apu bucket (by its label).
    """
    if which not in PAIR_FILTERS:
        raise ValueError(f"unknown pair filter {which!r}; expected one of {PAIR_FILTERS}")
    if which == "all":
        kept = list(records)
    elif which == "wins":
        kept = [r for r in records if compute(r, tree=tree).won]
    else:
        kept = partition_by_apu(records, tree=tree)[which]

    pairs: list[dict] = []
    for record in kept:
        period_text: str | None = None
        for ev in record.events:
            kind = ev.get("kind")
            if kind == "period_summary":
                period_text = ev["text"]
            elif kind == "completion" and period_text is not None:
                pairs.append({"input": period_text, "output": _decisions_only(ev["text"])})
                period_text = None
    return pairs
