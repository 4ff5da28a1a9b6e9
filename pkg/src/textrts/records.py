"""Match record log: append-only JSONL, one header line then event lines.

Event kinds:
  header            config hash, seed, map, difficulty, K, prompt, match config
  observation       rendered observation text pushed to the observation queue
  frame_summary     condensed single-frame text
  period_summary    aggregated multi-frame text handed to the backend
  completion        raw backend completion for one inference
  extracted_actions tokens extracted from one completion, plus diagnostics
  executed_action   one macro command applied to the environment (either side)
  rejection         executed_action that the rules refused, with reason
  combat            one combat round's losses
  complete          a building or tech finished (units are omitted as noise)
  sample            per-tick supply/spend sample for metrics
  state_hash        full-state checkpoint every 100 ticks and at terminal
  degradation       backend failure note (fallback or abort)
  terminal          end of match, exactly once in a finished record
  result            final reward from the agent seat's perspective

Replayability contract: re-simulating from the header's seed and feeding the
executed_action stream back into the engine reproduces every state_hash line.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from textrts.sim import engine as se
from textrts.sim.types import MacroAction, P1, P2

RECORD_VERSION = 1
HASH_EVERY_TICKS = 100


class RecordParseError(ValueError):
    def __init__(self, path: str, lineno: int, detail: str):
        super().__init__(f"{path}:{lineno}: {detail}")
        self.path = path
        self.lineno = lineno
        self.detail = detail


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class MatchRecord:
    header: dict
    events: list[dict] = field(default_factory=list)

    def write_jsonl(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(_dumps({"kind": "header", **self.header}) + "\n")
            for ev in self.events:
                fh.write(_dumps(ev) + "\n")

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(_dumps({"kind": "header", **self.header}).encode("utf-8"))
        for ev in self.events:
            h.update(b"\n")
            h.update(_dumps(ev).encode("utf-8"))
        return h.hexdigest()

    def of_kind(self, kind: str) -> list[dict]:
        return [ev for ev in self.events if ev.get("kind") == kind]

    def terminal(self) -> dict | None:
        found = self.of_kind("terminal")
        return found[0] if found else None

    def reward(self) -> int | None:
        found = self.of_kind("result")
        return found[0]["reward"] if found else None


def read_jsonl(path: str) -> MatchRecord:
    header: dict | None = None
    events: list[dict] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except ValueError as exc:
                raise RecordParseError(path, lineno, f"bad JSON: {exc}")
            if not isinstance(obj, dict) or "kind" not in obj:
                raise RecordParseError(path, lineno, "not an event object")
            if lineno == 1:
                if obj["kind"] != "header":
                    raise RecordParseError(path, lineno, "first line must be the header")
                header = {k: v for k, v in obj.items() if k != "kind"}
            else:
                events.append(obj)
    if header is None:
        raise RecordParseError(path, 1, "empty record file")
    return MatchRecord(header=header, events=events)


class RecordBuilder:
    """Collects events during an episode; the single owner of its buffer."""

    def __init__(self, header: dict):
        self.record = MatchRecord(header=dict(header))

    def emit(self, kind: str, **fields) -> None:
        self.record.events.append({"kind": kind, **fields})

    def executed(self, side: str, ev: se.ActionEvent, source: dict | None = None) -> None:
        entry = {
            "kind": "executed_action",
            "t": ev.tick,
            "side": side,
            "token": ev.action.token(),
            "action_id": ev.action.action_id(),
            "ok": ev.ok,
        }
        if source:
            entry["source"] = source
        if not ev.ok:
            entry["reason"] = ev.reason
            self.record.events.append(entry)
            self.emit("rejection", t=ev.tick, side=side, token=ev.action.token(), reason=ev.reason)
        else:
            self.record.events.append(entry)

    def engine_events(self, events: list[dict]) -> None:
        for ev in events:
            if ev["e"] == "combat":
                self.emit("combat", t=ev["t"], region=ev["region"], losses=ev["losses"])
            elif ev["e"] == "complete" and ev["category"] in ("building", "tech"):
                self.emit(
                    "complete",
                    t=ev["t"],
                    side=ev["side"],
                    category=ev["category"],
                    kind_id=ev["kind"],
                )
            elif ev["e"] == "terminal":
                self.emit(
                    "terminal",
                    t=ev["t"],
                    winner=ev["winner"],
                    reason=ev["reason"],
                )

    def sample(self, state: se.GameState, side: str = P1) -> None:
        pl = state.players[side]
        self.emit(
            "sample",
            t=state.tick,
            su=se.supply_used(pl, state.tree),
            sc=se.supply_cap(pl, state.tree),
            sm=pl.spent_minerals,
            sg=pl.spent_gas,
        )

    def checkpoint(self, state: se.GameState) -> None:
        self.emit("state_hash", t=state.tick, hash=se.state_hash(state))


@dataclass
class VerifyReport:
    ok: bool
    checkpoints: int
    divergence_tick: int | None = None
    expected: str | None = None
    actual: str | None = None
    detail: str = ""

    def describe(self) -> str:
        if self.ok:
            return f"verified: {self.checkpoints} state-hash checkpoints match"
        return (
            f"divergence at tick {self.divergence_tick}: expected {self.expected} "
            f"got {self.actual} ({self.detail})"
        )


def replay_verify(record: MatchRecord) -> VerifyReport:
    """Re-simulate from the header seed, feeding the executed action stream,
    and compare every state-hash checkpoint."""
    cfg = se.MatchConfig.from_dict(record.header["match_config"])
    state = se.new_match(cfg, seed=record.header["seed"])

    actions_by_tick: dict[int, list[tuple[str, MacroAction]]] = {}
    for ev in record.events:
        if ev.get("kind") == "executed_action":
            actions_by_tick.setdefault(ev["t"], []).append(
                (ev["side"], MacroAction.from_id(ev["action_id"]))
            )
    hashes = [(ev["t"], ev["hash"]) for ev in record.events if ev.get("kind") == "state_hash"]
    if not hashes:
        return VerifyReport(ok=False, checkpoints=0, detail="record carries no state_hash checkpoints")
    last_tick = max(t for t, _ in hashes)
    hash_at = dict(hashes)

    checked = 0
    while state.tick < last_tick and state.outcome is None:
        for side, action in actions_by_tick.get(state.tick, []):
            se.apply_macro(state, side, action)
        se.tick(state)
        want = hash_at.get(state.tick)
        if want is not None:
            got = se.state_hash(state)
            checked += 1
            if got != want:
                return VerifyReport(
                    ok=False,
                    checkpoints=checked,
                    divergence_tick=state.tick,
                    expected=want,
                    actual=got,
                    detail="state hash mismatch",
                )
    if checked < len(hashes):
        return VerifyReport(
            ok=False,
            checkpoints=checked,
            divergence_tick=state.tick,
            detail=f"simulation ended before {len(hashes) - checked} checkpoint(s)",
        )
    return VerifyReport(ok=True, checkpoints=checked)
