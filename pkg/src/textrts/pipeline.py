"""Summarize-infer-act loop with observation and action queues.

One inference per K buffered frames: frames are condensed one at a time,
aggregated into a timestamped period summary, sent to the backend, and the
completion is parsed back into exactly K macro actions. The episode loop
keeps the action queue bounded by K and consumes one action per decision
opportunity.

Lockstep mode pauses the environment during inference and is fully
deterministic. Realtime mode ticks the environment on a wall clock while an
inference worker fills the action queue; under-run decision opportunities
execute NoOp. The NoOp fill is a convention of this artifact: how in-flight
inference latency should interact with game speed has no single right answer.
"""

from __future__ import annotations

import queue
import threading
import time
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from textrts.backends.http import InferenceError
from textrts.backends.prompts import ChatRequest, TEMPLATES, build_prompt
from textrts.extractor import ActionCatalog, ExtractResult, extract, load_catalog
from textrts.records import HASH_EVERY_TICKS, MatchRecord, RecordBuilder
from textrts.sim import engine as se
from textrts.sim.types import MacroAction, NOOP_ACTION, Observation, P1, Race
from textrts.textual import RenderedObservation, render_observation, render_time

SECTION_KEYS = (
    ("overview", "Game Overview", "Information Overview"),
    ("stage", "Current Game Stage", "Current Game"),
    ("our_situation", "Our Situation"),
    ("our_strategy", "Our Strategy", "Our Current Strategy"),
    ("enemy_strategy", "Enemy's Strategy"),
    ("key_info", "Key Information"),
    ("suggestions", "Suggestions"),
    ("decisions", "Decisions"),
)


@dataclass(frozen=True)
class FrameSummary:
    tick: int
    text: str


@dataclass(frozen=True)
class PeriodSummary:
    span: tuple[int, int]
    text: str


@dataclass(frozen=True)
class ReasoningOutput:
    raw_text: str
    sections: dict[str, str]
    decisions: list[str]


@dataclass(frozen=True)
class ChainConfig:
    k: int = 5
    summarize_mode: str = "RuleBased"  # RuleBased | ModelBased
    prompt_template: str = "full"  # full | simple
    decision_tick_stride: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("chain length must be >= 1")
        if self.decision_tick_stride < 1:
            raise ValueError("decision stride must be >= 1")
        if self.summarize_mode not in ("RuleBased", "ModelBased"):
            raise ValueError(f"unknown summarize mode: {self.summarize_mode}")
        if self.prompt_template not in TEMPLATES:
            raise ValueError(f"unknown prompt template: {self.prompt_template}")


def _is_zero_count(line: str) -> bool:
    return line.strip().endswith(": 0")


_SUMMARIZE_SYSTEM = (
    "You condense one frame of a strategy-game observation. Keep the six "
    "section headers, drop zero counts and unchanged lines, and answer with "
    "the condensed frame only."
)


@lru_cache(maxsize=1)
def summarizer_exemplars() -> tuple[tuple[str, str], ...]:
    """(observation, condensed frame) few-shot pairs for the model-backed
    condenser, from data/summarizer_examples.txt."""
    from textrts.datafiles import data_path

    text = Path(data_path("summarizer_examples.txt")).read_text(encoding="utf-8")
    pairs: list[tuple[str, str]] = []
    segments: list[list[str]] = []
    for line in text.splitlines():
        if line.startswith("#"):
            continue
        marker = line.strip()
        if marker in ("=== input", "=== output"):
            segments.append([])
        elif segments:
            segments[-1].append(line)
    for i in range(0, len(segments) - 1, 2):
        pairs.append((
            "\n".join(segments[i]).strip("\n"),
            "\n".join(segments[i + 1]).strip("\n"),
        ))
    return tuple(pairs)


def summarize_frame(
    obs: Observation,
    mode: str = "RuleBased",
    prev: RenderedObservation | None = None,
    backend=None,
    diagnostics: list[str] | None = None,
) -> FrameSummary:
    """Condense one observation. RuleBased drops zero-count entries and lines
    unchanged since `prev`, keeping every section header. ModelBased asks the
    backend; failed or oversized output degrades to RuleBased (noted in
    `diagnostics`)."""
    rendered = render_observation(obs)
    raw_text = rendered.as_text()
    if mode == "ModelBased" and backend is not None:
        shots: list[tuple[str, str]] = []
        for sample_in, sample_out in summarizer_exemplars():
            shots.append(("user", sample_in))
            shots.append(("assistant", sample_out))
        req = ChatRequest(messages=(("system", _SUMMARIZE_SYSTEM), *shots, ("user", raw_text)))
        try:
            out = backend.complete(req).strip()
        except InferenceError as exc:
            out = ""
            if diagnostics is not None:
                diagnostics.append(f"frame summarization failed ({exc}); fell back to rules")
        if out and len(out) <= len(raw_text) - len(f"Game time: {rendered.game_time}") + len(f"At {rendered.game_time}:"):
            return FrameSummary(tick=obs.tick, text=f"At {rendered.game_time}:\n{out}")
        if out and diagnostics is not None:
            diagnostics.append("frame summarization output oversized; fell back to rules")

    prev_lines: set[str] = set()
    if prev is not None:
        for _, lines in prev.sections:
            prev_lines.update(lines)
    parts = [f"At {rendered.game_time}:"]
    for title, lines in rendered.sections:
        parts.append(f"{title}:")
        for line in lines:
            if _is_zero_count(line):
                continue
            if line in prev_lines and title != "Resources":
                continue
            parts.append(f"  {line}")
    return FrameSummary(tick=obs.tick, text="\n".join(parts))


def summarize_period(frames: list[FrameSummary]) -> PeriodSummary:
    """Concatenate timestamped frames under a period header."""
    if not frames:
        raise ValueError("cannot summarize an empty frame list")
    ticks = [f.tick for f in frames]
    if any(b < a for a, b in zip(ticks, ticks[1:])):
        raise ValueError("frames must be chronologically ordered")
    header = f"Period {render_time(ticks[0])} - {render_time(ticks[-1])}"
    body = "\n".join(f.text for f in frames)
    return PeriodSummary(span=(ticks[0], ticks[-1]), text=f"{header}\n{body}")


def _find_section_spans(text: str) -> list[tuple[str, int, int]]:
    hits: list[tuple[int, int, str]] = []
    lowered = text.lower()
    for entry in SECTION_KEYS:
        key = entry[0]
        for title in entry[1:]:
            idx = lowered.find(title.lower())
            if idx != -1:
                hits.append((idx, idx + len(title), key))
                break
    hits.sort()
    spans = []
    for i, (start, body_start, key) in enumerate(hits):
        end = hits[i + 1][0] if i + 1 < len(hits) else len(text)
        spans.append((key, body_start, end))
    return spans


def parse_reasoning(raw: str) -> ReasoningOutput:
    """Split a completion into named sections without mutating it; decisions
    parse from the Decisions section when present, else from the whole text."""
    from textrts.extractor import parse_decisions

    sections: dict[str, str] = {}
    for key, start, end in _find_section_spans(raw):
        sections[key] = raw[start:end].strip(" :\n")
    decisions_text = sections.get("decisions") or raw
    return ReasoningOutput(raw_text=raw, sections=sections, decisions=parse_decisions(decisions_text))


def infer(period: PeriodSummary, cfg: ChainConfig, backend, catalog: ActionCatalog, race: Race) -> ReasoningOutput:
    """One CoT inference over a period summary. InferenceError propagates."""
    req = build_prompt(TEMPLATES[cfg.prompt_template], race, cfg.k, catalog, period.text)
    raw = backend.complete(req)
    return parse_reasoning(raw)


def _extract_from(out: ReasoningOutput, k: int, catalog: ActionCatalog) -> ExtractResult:
    return extract(out.sections.get("decisions") or out.raw_text, k, catalog)


@dataclass
class EpisodeResult:
    record: MatchRecord
    state: se.GameState
    inferences: int
    decision_opportunities: int
    reward: int | None
    aborted: bool = False


def run_episode(
    env: se.GameState,
    opponent,
    backend,
    cfg: ChainConfig,
    header: dict | None = None,
    mode: str = "lockstep",
    ticks_per_second: float = 10.0,
    on_queue_size=None,
) -> EpisodeResult:
    """Play one match from `env` until terminal.

    `opponent` is None or an object with `maybe_act(state, recorder)` invoked
    once per tick before the agent's decision. In lockstep mode an
    InferenceError aborts with a partial record; in realtime mode failures and
    latency surface as recovery-NoOp decisions.
    """
    if mode not in ("lockstep", "realtime"):
        raise ValueError(f"unknown mode: {mode}")
    state = env
    agent_race = state.players[P1].race
    catalog = load_catalog(agent_race)
    recorder = RecordBuilder(header or {"version": 1})
    k, stride = cfg.k, cfg.decision_tick_stride

    q_obs: deque[Observation] = deque()
    q_act: deque[tuple[MacroAction, dict]] = deque()
    first_obs = se.observe(state, P1)
    for _ in range(k):
        q_obs.append(first_obs)
    recorder.emit("observation", t=state.tick, side=P1, text=render_observation(first_obs).as_text())

    inferences = 0
    opportunities = 0
    aborted = False
    prev_rendered: RenderedObservation | None = None

    def _note_queue() -> None:
        assert len(q_act) <= k, "action queue exceeded chain length"
        if on_queue_size is not None:
            on_queue_size(len(q_act))

    def _drain_frames() -> list[FrameSummary]:
        """Summarize and log K frames off the observation queue."""
        nonlocal prev_rendered
        diagnostics: list[str] = []
        frames: list[FrameSummary] = []
        prev = prev_rendered
        for _ in range(k):
            obs = q_obs.popleft()
            fs = summarize_frame(obs, cfg.summarize_mode, prev=prev, backend=backend, diagnostics=diagnostics)
            frames.append(fs)
            prev = render_observation(obs)
            recorder.emit("frame_summary", t=obs.tick, text=fs.text)
        prev_rendered = prev
        for note in diagnostics:
            recorder.emit("degradation", t=state.tick, detail=note)
        return frames

    def _log_inference(idx: int, period: PeriodSummary, out: ReasoningOutput, ext: ExtractResult) -> None:
        recorder.emit("period_summary", t=state.tick, span=list(period.span), text=period.text)
        recorder.emit("completion", t=state.tick, index=idx, text=out.raw_text)
        recorder.emit(
            "extracted_actions",
            t=state.tick,
            index=idx,
            tokens=[a.token() for a in ext.actions],
            diagnostics=ext.diagnostics,
        )

    # Realtime plumbing: one worker thread handles summarize+infer+extract for
    # one batch at a time; queues are the only shared state.
    work_q: queue.Queue = queue.Queue()
    done_q: queue.Queue = queue.Queue()
    pending = 0
    worker: threading.Thread | None = None
    if mode == "realtime":

        def _worker():
            while True:
                item = work_q.get()
                if item is None:
                    return
                idx, frames = item
                try:
                    period = summarize_period(frames)
                    out = infer(period, cfg, backend, catalog, agent_race)
                    done_q.put((idx, period, out, _extract_from(out, k, catalog), None))
                except Exception as exc:  # noqa: BLE001 - surface on the sim thread
                    done_q.put((idx, None, None, None, exc))

        worker = threading.Thread(target=_worker, name="inference-worker", daemon=True)
        worker.start()

    def _pump_results() -> None:
        nonlocal inferences, pending
        while True:
            try:
                idx, period, out, ext, err = done_q.get_nowait()
            except queue.Empty:
                return
            pending -= 1
            if err is not None:
                recorder.emit("degradation", t=state.tick, detail=f"inference failed: {err}")
                continue
            _log_inference(idx, period, out, ext)
            dropped = 0
            for pos, action in enumerate(ext.actions):
                if len(q_act) < k:
                    q_act.append((action, {"inference": idx, "position": pos}))
                else:
                    dropped += 1
            if dropped:
                recorder.emit("degradation", t=state.tick, detail=f"queue full; dropped {dropped} late action(s)")
            inferences += 1
            _note_queue()

    tick_budget = 1.0 / max(ticks_per_second, 0.001)

    try:
        while state.outcome is None:
            loop_start = time.monotonic()
            if opponent is not None:
                opponent.maybe_act(state, recorder)

            if state.tick % stride == 0:
                opportunities += 1
                if mode == "lockstep":
                    if len(q_obs) >= k:
                        frames = _drain_frames()
                        period = summarize_period(frames)
                        try:
                            out = infer(period, cfg, backend, catalog, agent_race)
                        except InferenceError as exc:
                            recorder.emit(
                                "degradation",
                                t=state.tick,
                                detail=f"inference failed after {exc.attempts} attempt(s): {exc}",
                                period_text=period.text,
                            )
                            aborted = True
                            break
                        ext = _extract_from(out, k, catalog)
                        _log_inference(inferences, period, out, ext)
                        for pos, action in enumerate(ext.actions):
                            q_act.append((action, {"inference": inferences, "position": pos}))
                        inferences += 1
                        _note_queue()
                else:
                    _pump_results()
                    if len(q_obs) >= k and pending == 0:
                        work_q.put((inferences + pending, _drain_frames()))
                        pending += 1
                        _pump_results()

                if q_act:
                    action, source = q_act.popleft()
                else:
                    action, source = NOOP_ACTION, {"recovery": True}
                ev = se.apply_macro(state, P1, action)
                recorder.executed(P1, ev, source=source)
                _note_queue()

                obs = se.observe(state, P1)
                q_obs.append(obs)
                recorder.emit("observation", t=state.tick, side=P1, text=render_observation(obs).as_text())

            engine_events = se.tick(state)
            recorder.engine_events(engine_events)
            recorder.sample(state)
            if state.tick % HASH_EVERY_TICKS == 0 or state.outcome is not None:
                recorder.checkpoint(state)

            if mode == "realtime" and state.outcome is None:
                elapsed = time.monotonic() - loop_start
                if elapsed < tick_budget:
                    time.sleep(tick_budget - elapsed)
    finally:
        if worker is not None:
            work_q.put(None)
            worker.join(timeout=5.0)

    reward = se.outcome(state, P1)
    if not aborted and reward is not None:
        recorder.emit("result", t=state.tick, side=P1, reward=reward)
    if aborted:
        recorder.emit("abort", t=state.tick, detail="inference failure in lockstep mode")
    return EpisodeResult(
        record=recorder.record,
        state=state,
        inferences=inferences,
        decision_opportunities=opportunities,
        reward=reward,
        aborted=aborted,
    )
