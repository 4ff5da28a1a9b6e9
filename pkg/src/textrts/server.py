"""Live-match service: a human seat against the built-in AI or the agent.

Endpoints:
  GET  /healthz              liveness probe
  POST /matches              create a match, 201 with {"id", "stream"}
  GET  /matches/{id}         status snapshot, 404 when unknown
  WS   /matches/{id}/stream  the wire protocol from data/wire_schema.json

Each match runs on its own simulation thread; WebSocket handlers exchange
plain dict messages with that thread through queues and never touch game
state. The human seat gets one decision opportunity every `stride` ticks,
paced by `speed` (ticks per second); a window with no queued action executes
NoOp and the match keeps ticking.

Seat rules: against the built-in AI the human plays p1 (the built-in script
only knows the p2 race); against the agent the human plays p2 and the agent
runs its summarize-infer-act chain on p1. With `reveal_reasoning` the agent's
latest analysis sections ride along on state messages.

An http-backed agent infers inline, so a slow endpoint stretches the wall
clock between windows rather than skipping them; the scripted agent is
instant. Finished matches persist their record next to harness output when a
record directory is configured.
"""

from __future__ import annotations

import asyncio
import json
import logging
import queue
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from textrts.backends.http import ENV_API_KEY, Endpoint, HttpBackend
from textrts.backends.prompts import TEMPLATES
from textrts.backends.scripted import ScriptedBackend, ScriptedPolicy
from textrts.extractor import load_catalog, normalize
from textrts.opponent import OpponentDriver, difficulty_params
from textrts.pipeline import (
    ChainConfig,
    infer,
    summarize_frame,
    summarize_period,
)
from textrts.records import HASH_EVERY_TICKS, RECORD_VERSION, RecordBuilder
from textrts.sim import engine as se
from textrts.sim.types import NOOP_ACTION, P1, P2, Race, other_player
from textrts.textual import render_observation, render_time

log = logging.getLogger(__name__)

OPPONENT_SEED_SALT = 0xD1F
PENDING_ACTION_CAP = 8


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class OpponentSpec:
    kind: str = "builtin"  # builtin | agent
    level: int = 3
    backend: str = "scripted"  # agent only: scripted | http
    prompt: str = "full"
    k: int = 5
    endpoint: str = ""
    model: str = "default"
    reveal_reasoning: bool = False


@dataclass(frozen=True)
class MatchSpec:
    opponent: OpponentSpec = OpponentSpec()
    side: str = P1
    speed: float = 10.0
    seed: int = 1
    map_name: str = "MERIDIAN"
    max_ticks: int = 21600
    stride: int = 5


def parse_match_spec(body: dict) -> MatchSpec:
    """Validate a POST /matches body; raises SpecError with the reason."""
    if not isinstance(body, dict):
        raise SpecError("body must be a JSON object")
    known = {"opponent", "side", "speed", "seed", "map", "max_ticks", "stride"}
    unknown = set(body) - known
    if unknown:
        raise SpecError(f"unknown field(s): {', '.join(sorted(unknown))}")

    raw_opp = body.get("opponent", {})
    if not isinstance(raw_opp, dict):
        raise SpecError("opponent must be an object")
    opp_known = {"kind", "level", "backend", "prompt", "k", "endpoint", "model", "reveal_reasoning"}
    opp_unknown = set(raw_opp) - opp_known
    if opp_unknown:
        raise SpecError(f"unknown opponent field(s): {', '.join(sorted(opp_unknown))}")
    opp = OpponentSpec(**{k: raw_opp[k] for k in opp_known if k in raw_opp})

    if opp.kind not in ("builtin", "agent"):
        raise SpecError(f"unknown opponent kind {opp.kind!r}")
    if opp.kind == "builtin" and not 1 <= opp.level <= 10:
        raise SpecError("builtin level must be 1..10")
    if opp.kind == "agent":
        if opp.backend not in ("scripted", "http"):
            raise SpecError(f"unknown agent backend {opp.backend!r}")
        if opp.prompt not in TEMPLATES:
            raise SpecError(f"unknown prompt template {opp.prompt!r}")
        if opp.k < 1:
            raise SpecError("k must be >= 1")

    default_side = P1 if opp.kind == "builtin" else P2
    spec = MatchSpec(
        opponent=opp,
        side=body.get("side", default_side),
        speed=float(body.get("speed", 10.0)),
        seed=int(body.get("seed", 1)),
        map_name=body.get("map", "MERIDIAN"),
        max_ticks=int(body.get("max_ticks", 21600)),
        stride=int(body.get("stride", 5)),
    )
    if spec.side not in (P1, P2):
        raise SpecError(f"side must be {P1!r} or {P2!r}")
    if opp.kind == "builtin" and spec.side != P1:
        raise SpecError("the built-in opponent plays the p2 seat; pick side p1")
    if opp.kind == "agent" and spec.side != P2:
        raise SpecError("the agent plays the p1 seat; pick side p2")
    if spec.speed <= 0:
        raise SpecError("speed must be positive ticks per second")
    if spec.map_name not in se.default_maps():
        raise SpecError(f"unknown map {spec.map_name!r}")
    if spec.max_ticks < 1:
        raise SpecError("max_ticks must be >= 1")
    if spec.stride < 1:
        raise SpecError("stride must be >= 1")
    return spec


def _agent_backend(opp: OpponentSpec):
    if opp.backend == "scripted":
        return ScriptedBackend(ScriptedPolicy(k=opp.k, profile=opp.prompt))
    import os

    if opp.endpoint:
        endpoint = Endpoint(base_url=opp.endpoint, api_key=os.environ.get(ENV_API_KEY, ""), model=opp.model)
    else:
        endpoint = Endpoint.from_env()
    return HttpBackend(endpoint)


class MatchSession:
    """One live match: simulation thread plus subscriber fan-out.

    The thread owns all game state and the record buffer. Everything else
    (socket handlers, status endpoint) sees only immutable snapshots and
    queue messages.
    """

    def __init__(self, match_id: str, spec: MatchSpec, record_dir: Path | None = None):
        self.id = match_id
        self.spec = spec
        self.record_dir = record_dir
        self.inbox: queue.Queue = queue.Queue(maxsize=64)
        self._subs: list[queue.Queue] = []
        self._lock = threading.Lock()
        self._history: list[dict] = []  # last state + result, replayed to late subscribers
        self.status = "running"
        self.tick = 0
        self.reward: int | None = None
        self.thread = threading.Thread(target=self._run, name=f"match-{match_id}", daemon=True)

    # -- subscriber plumbing ------------------------------------------------

    def subscribe(self) -> queue.Queue:
        sub: queue.Queue = queue.Queue(maxsize=256)
        with self._lock:
            for msg in self._history:
                sub.put(msg)
            if self.status == "finished":
                sub.put(None)
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: queue.Queue) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)

    def _broadcast(self, msg: dict | None, remember: bool = False) -> None:
        with self._lock:
            if remember and msg is not None:
                # keep exactly one state snapshot plus any result
                self._history = [m for m in self._history if m.get("type") != "state"]
                self._history.append(msg)
                self._history.sort(key=lambda m: m.get("type") != "state")
            for sub in self._subs:
                try:
                    sub.put_nowait(msg)
                except queue.Full:
                    log.warning("match %s: dropping message for a slow subscriber", self.id)

    def reply(self, sub: queue.Queue, message: str) -> None:
        try:
            sub.put_nowait({"type": "error", "message": message})
        except queue.Full:
            pass

    # -- simulation thread --------------------------------------------------

    def start(self) -> None:
        self.thread.start()

    def _header(self, mc: se.MatchConfig) -> dict:
        opp = self.spec.opponent
        return {
            "version": RECORD_VERSION,
            "seed": self.spec.seed,
            "map": self.spec.map_name,
            "k": opp.k,
            "prompt": opp.prompt,
            "difficulty": opp.level if opp.kind == "builtin" else 0,
            "mode": "serve",
            "side": self.spec.side,
            "opponent_kind": opp.kind,
            "match_config": mc.to_dict(),
        }

    def _state_message(self, state: se.GameState, last_action: dict | None, reasoning: dict | None) -> dict:
        obs = se.observe(state, self.spec.side)
        rendered = render_observation(obs)
        msg: dict = {
            "type": "state",
            "tick": state.tick,
            "time": render_time(state.tick),
            "paused": self.status == "paused",
            "observation": {title: list(lines) for title, lines in rendered.sections},
            "legal": [a.token() for a in se.legal_actions(state, self.spec.side)],
        }
        if last_action is not None:
            msg["last_action"] = last_action
        if reasoning is not None:
            msg["reasoning"] = reasoning
        return msg

    def _run(self) -> None:
        spec = self.spec
        human = spec.side
        agent_side = other_player(human)
        mc = se.MatchConfig(map_name=spec.map_name, max_ticks=spec.max_ticks)
        state = se.new_match(mc, seed=spec.seed)
        recorder = RecordBuilder(self._header(mc))
        catalog = load_catalog(state.players[human].race)

        opp = spec.opponent
        builtin = None
        agent = None
        if opp.kind == "builtin":
            params = difficulty_params(opp.level)
            state.players[P2].income_permille = (
                params.income_permille * 3 // 2 if params.cheat_money else params.income_permille
            )
            builtin = OpponentDriver(params, seed=spec.seed ^ OPPONENT_SEED_SALT)
        else:
            agent = _AgentSeat(
                side=agent_side,
                backend=_agent_backend(opp),
                chain=ChainConfig(k=opp.k, prompt_template=opp.prompt, decision_tick_stride=spec.stride),
            )

        pending: deque = deque()
        last_action: dict | None = None
        tick_budget = 1.0 / spec.speed

        self._broadcast(self._state_message(state, None, None), remember=True)

        while state.outcome is None:
            loop_start = time.monotonic()
            self._drain_inbox(state, catalog, pending)
            if self.status == "paused":
                time.sleep(0.02)
                continue

            if builtin is not None:
                builtin.maybe_act(state, recorder)
            if agent is not None:
                agent.step(state, recorder)

            if state.tick % spec.stride == 0:
                action = pending.popleft() if pending else NOOP_ACTION
                ev = se.apply_macro(state, human, action)
                recorder.executed(human, ev, source={"human": True})
                last_action = {"token": ev.action.token(), "ok": ev.ok}
                if not ev.ok:
                    last_action["reason"] = ev.reason
                reasoning = agent.reasoning if agent is not None and opp.reveal_reasoning else None
                self._broadcast(self._state_message(state, last_action, reasoning), remember=True)

            engine_events = se.tick(state)
            self.tick = state.tick
            recorder.engine_events(engine_events)
            recorder.sample(state, side=human)
            if state.tick % HASH_EVERY_TICKS == 0 or state.outcome is not None:
                recorder.checkpoint(state)

            elapsed = time.monotonic() - loop_start
            if state.outcome is None and elapsed < tick_budget:
                time.sleep(tick_budget - elapsed)

        self.reward = se.outcome(state, human)
        recorder.emit("result", t=state.tick, side=human, reward=self.reward)
        with self._lock:
            self.status = "finished"
        self._broadcast({"type": "result", "reward": self.reward}, remember=True)
        self._broadcast(None)
        if self.record_dir is not None:
            self.record_dir.mkdir(parents=True, exist_ok=True)
            recorder.record.write_jsonl(str(self.record_dir / f"match_{self.id}.jsonl"))

    def _drain_inbox(self, state: se.GameState, catalog, pending: deque) -> None:
        while True:
            try:
                sub, msg = self.inbox.get_nowait()
            except queue.Empty:
                return
            mtype = msg.get("type")
            if mtype == "pause":
                with self._lock:
                    if self.status == "running":
                        self.status = "paused"
                self._broadcast(self._state_message(state, None, None), remember=True)
            elif mtype == "resume":
                with self._lock:
                    if self.status == "paused":
                        self.status = "running"
                self._broadcast(self._state_message(state, None, None), remember=True)
            elif mtype == "action":
                token = msg.get("token")
                if not isinstance(token, str):
                    self.reply(sub, "action message needs a string token")
                    continue
                entry = catalog.lookup_exact(normalize(token))
                if entry is None:
                    self.reply(sub, f"unknown action token: {token}")
                elif len(pending) >= PENDING_ACTION_CAP:
                    self.reply(sub, "action queue full; wait for a decision window")
                else:
                    pending.append(entry.action)
            else:
                self.reply(sub, f"unknown message type: {mtype!r}")


class _AgentSeat:
    """The summarize-infer-act chain driving the non-human seat."""

    def __init__(self, side: str, backend, chain: ChainConfig):
        self.side = side
        self.backend = backend
        self.chain = chain
        self.q_obs: deque = deque()
        self.q_act: deque = deque()
        self.reasoning: dict | None = None
        self._prev_rendered = None
        self._inferences = 0
        self._primed = False

    def step(self, state: se.GameState, recorder: RecordBuilder) -> None:
        from textrts.extractor import extract

        cfg = self.chain
        if not self._primed:
            first = se.observe(state, self.side)
            for _ in range(cfg.k):
                self.q_obs.append(first)
            self._primed = True
        if state.tick % cfg.decision_tick_stride != 0:
            return

        race = state.players[self.side].race
        catalog = load_catalog(race)
        if len(self.q_obs) >= cfg.k:
            frames = []
            prev = self._prev_rendered
            for _ in range(cfg.k):
                obs = self.q_obs.popleft()
                fs = summarize_frame(obs, cfg.summarize_mode, prev=prev)
                frames.append(fs)
                prev = render_observation(obs)
                recorder.emit("frame_summary", t=obs.tick, text=fs.text)
            self._prev_rendered = prev
            period = summarize_period(frames)
            try:
                out = infer(period, cfg, self.backend, catalog, race)
            except Exception as exc:  # noqa: BLE001 - a live match must keep ticking
                recorder.emit("degradation", t=state.tick, detail=f"inference failed: {exc}")
                out = None
            if out is not None:
                ext = extract(out.sections.get("decisions") or out.raw_text, cfg.k, catalog)
                recorder.emit("period_summary", t=state.tick, span=list(period.span), text=period.text)
                recorder.emit("completion", t=state.tick, index=self._inferences, text=out.raw_text)
                recorder.emit(
                    "extracted_actions",
                    t=state.tick,
                    index=self._inferences,
                    tokens=[a.token() for a in ext.actions],
                    diagnostics=ext.diagnostics,
                )
                self._inferences += 1
                for action in ext.actions:
                    if len(self.q_act) < cfg.k:
                        self.q_act.append(action)
                self.reasoning = {k: v for k, v in out.sections.items() if k != "decisions"} or None

        action = self.q_act.popleft() if self.q_act else NOOP_ACTION
        ev = se.apply_macro(state, self.side, action)
        recorder.executed(self.side, ev, source={"agent": True})
        obs = se.observe(state, self.side)
        self.q_obs.append(obs)
        recorder.emit("observation", t=state.tick, side=self.side, text=render_observation(obs).as_text())


def create_app(record_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="textrts match service")
    sessions: dict[str, MatchSession] = {}
    rec_dir = Path(record_dir) if record_dir else None

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    @app.post("/matches", status_code=201)
    async def create_match(body: dict):
        try:
            spec = parse_match_spec(body)
        except (SpecError, TypeError, ValueError) as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        match_id = uuid.uuid4().hex[:12]
        session = MatchSession(match_id, spec, record_dir=rec_dir)
        sessions[match_id] = session
        session.start()
        return {"id": match_id, "stream": f"/matches/{match_id}/stream"}

    @app.get("/matches/{match_id}")
    def match_status(match_id: str):
        session = sessions.get(match_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": f"no match {match_id}"})
        return {
            "id": session.id,
            "status": session.status,
            "tick": session.tick,
            "side": session.spec.side,
            "reward": session.reward,
            "stream": f"/matches/{session.id}/stream",
        }

    @app.websocket("/matches/{match_id}/stream")
    async def stream(ws: WebSocket, match_id: str):
        session = sessions.get(match_id)
        if session is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        sub = session.subscribe()

        async def sender():
            while True:
                try:
                    msg = await asyncio.to_thread(sub.get, True, 0.5)
                except queue.Empty:
                    continue
                if msg is None:
                    break
                await ws.send_text(json.dumps(msg))

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except ValueError:
                    session.reply(sub, "message is not valid JSON")
                    continue
                if not isinstance(msg, dict):
                    session.reply(sub, "message must be a JSON object")
                    continue
                try:
                    session.inbox.put_nowait((sub, msg))
                except queue.Full:
                    session.reply(sub, "server busy; message dropped")
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            session.unsubscribe(sub)

    return app


def serve(host: str = "127.0.0.1", port: int = 8000, record_dir: str | None = None) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(record_dir=record_dir), host=host, port=port, log_level="info")
