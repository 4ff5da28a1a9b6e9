"""Match service tests: spec validation, wire-schema conformance, action
round trips, pause/resume, agent seat, record persistence."""

from __future__ import annotations

import json
import time
from pathlib import Path

import jsonschema
import pytest
from fastapi.testclient import TestClient

from textrts.datafiles import data_path
from textrts.records import read_jsonl, replay_verify
from textrts.server import PENDING_ACTION_CAP, create_app

WIRE = json.loads(Path(data_path("wire_schema.json")).read_text(encoding="utf-8"))


def validator(definition: str) -> jsonschema.Draft7Validator:
    return jsonschema.Draft7Validator(
        {"$ref": f"#/definitions/{definition}", "definitions": WIRE["definitions"]}
    )


SERVER_MSG = validator("serverMessage")
CLIENT_MSG = validator("clientMessage")


@pytest.fixture()
def client():
    with TestClient(create_app()) as c:
        yield c


def fast_spec(**overrides) -> dict:
    spec = {
        "opponent": {"kind": "builtin", "level": 1},
        "speed": 1000.0,
        "seed": 3,
        "max_ticks": 40,
    }
    spec.update(overrides)
    return spec


def wait_finished(client: TestClient, match_id: str, budget: float = 10.0) -> dict:
    deadline = time.monotonic() + budget
    while time.monotonic() < deadline:
        body = client.get(f"/matches/{match_id}").json()
        if body["status"] == "finished":
            return body
        time.sleep(0.02)
    raise AssertionError("match did not finish in time")


def send(ws, message: dict) -> None:
    CLIENT_MSG.validate(message)
    ws.send_text(json.dumps(message))


def recv(ws) -> dict:
    msg = json.loads(ws.receive_text())
    SERVER_MSG.validate(msg)
    return msg


def recv_until(ws, pred, budget: int = 400) -> dict:
    for _ in range(budget):
        msg = recv(ws)
        if pred(msg):
            return msg
    raise AssertionError("expected message never arrived")


# ------------------------------------------------------------- http layer

def test_healthz(client):
    assert client.get("/healthz").json() == {"ok": True}


@pytest.mark.parametrize(
    "body,detail",
    [
        ({"warp": 1}, "unknown field(s): warp"),
        ({"opponent": {"kind": "alien"}}, "unknown opponent kind 'alien'"),
        ({"opponent": {"kind": "builtin", "fast": True}}, "unknown opponent field(s): fast"),
        ({"opponent": {"kind": "builtin", "level": 11}}, "builtin level must be 1..10"),
        ({"opponent": {"kind": "builtin"}, "side": "p2"}, "pick side p1"),
        ({"opponent": {"kind": "agent"}, "side": "p1"}, "pick side p2"),
        ({"opponent": {"kind": "agent", "backend": "quantum"}}, "unknown agent backend 'quantum'"),
        ({"side": "p3"}, "side must be"),
        ({"speed": 0}, "speed must be positive"),
        ({"map": "ATLANTIS"}, "unknown map 'ATLANTIS'"),
        ({"max_ticks": 0}, "max_ticks must be >= 1"),
        ({"stride": 0}, "stride must be >= 1"),
    ],
)
def test_create_match_rejects_bad_specs(client, body, detail):
    resp = client.post("/matches", json=body)
    assert resp.status_code == 400
    assert detail in resp.json()["error"]


def test_unknown_match_is_404(client):
    resp = client.get("/matches/nope")
    assert resp.status_code == 404
    assert "no match nope" in resp.json()["error"]


def test_create_and_status_round_trip(client):
    resp = client.post("/matches", json=fast_spec())
    assert resp.status_code == 201
    created = resp.json()
    validator("matchCreated").validate(created)
    assert created["stream"] == f"/matches/{created['id']}/stream"

    status = wait_finished(client, created["id"])
    validator("matchStatus").validate(status)
    assert status["side"] == "p1"
    assert status["reward"] in (-1, 0, 1)


# -------------------------------------------------------------- websocket

def test_stream_rejects_unknown_match(client):
    from starlette.websockets import WebSocketDisconnect

    with pytest.raises(WebSocketDisconnect) as info:
        with client.websocket_connect("/matches/ghost/stream"):
            pass
    assert info.value.code == 4404


def test_state_messages_carry_sections_and_legal_tokens(client):
    match_id = client.post("/matches", json=fast_spec(max_ticks=30)).json()["id"]
    with client.websocket_connect(f"/matches/{match_id}/stream") as ws:
        state = recv_until(ws, lambda m: m["type"] == "state")
        sections = state["observation"]
        assert set(sections) == {"Resources", "Units", "Buildings", "In-Process", "Enemy Status", "Research"}
        assert any(line.startswith("Minerals: ") for line in sections["Resources"])
        assert "NOOP" in state["legal"]
        assert "TRAIN PROBE" in state["legal"]
        result = recv_until(ws, lambda m: m["type"] == "result")
        assert result["reward"] in (-1, 0, 1)


def test_missed_windows_execute_noop(client):
    match_id = client.post("/matches", json=fast_spec(max_ticks=20)).json()["id"]
    with client.websocket_connect(f"/matches/{match_id}/stream") as ws:
        acted = recv_until(ws, lambda m: m["type"] == "state" and "last_action" in m)
        assert acted["last_action"] == {"token": "NOOP", "ok": True}


def test_action_round_trip_lands_in_process(client):
    spec = fast_spec(speed=200.0, max_ticks=400)
    match_id = client.post("/matches", json=spec).json()["id"]
    with client.websocket_connect(f"/matches/{match_id}/stream") as ws:
        recv_until(ws, lambda m: m["type"] == "state")
        send(ws, {"type": "action", "token": "Build Pylon"})
        executed = recv_until(
            ws, lambda m: m["type"] == "state" and m.get("last_action", {}).get("token") == "BUILD PYLON"
        )
        assert executed["last_action"]["ok"] is True
        assert any(l.startswith("Pylon: ") and l.endswith("s remaining") for l in executed["observation"]["In-Process"])


def test_rejected_action_reports_reason(client):
    spec = fast_spec(speed=200.0, max_ticks=400)
    match_id = client.post("/matches", json=spec).json()["id"]
    with client.websocket_connect(f"/matches/{match_id}/stream") as ws:
        recv_until(ws, lambda m: m["type"] == "state")
        # a fresh Protoss base has no gateway, so a stalker cannot be trained
        send(ws, {"type": "action", "token": "TRAIN STALKER"})
        executed = recv_until(
            ws, lambda m: m["type"] == "state" and m.get("last_action", {}).get("token") == "TRAIN STALKER"
        )
        assert executed["last_action"]["ok"] is False
        assert executed["last_action"]["reason"] == "missing_prerequisite"


def test_unknown_token_and_message_type_errors(client):
    match_id = client.post("/matches", json=fast_spec(speed=100.0, max_ticks=600)).json()["id"]
    with client.websocket_connect(f"/matches/{match_id}/stream") as ws:
        send(ws, {"type": "action", "token": "BUILD WONDER"})
        err = recv_until(ws, lambda m: m["type"] == "error")
        assert err["message"] == "unknown action token: BUILD WONDER"

        ws.send_text(json.dumps({"type": "dance"}))
        err = recv_until(ws, lambda m: m["type"] == "error")
        assert err["message"] == "unknown message type: 'dance'"

        ws.send_text("not json at all")
        err = recv_until(ws, lambda m: m["type"] == "error")
        assert err["message"] == "message is not valid JSON"

        ws.send_text("[1, 2]")
        err = recv_until(ws, lambda m: m["type"] == "error")
        assert err["message"] == "message must be a JSON object"


def test_action_queue_capacity_bounded(client):
    # paused match: nothing drains, so the pending queue fills to its cap
    match_id = client.post("/matches", json=fast_spec(speed=100.0, max_ticks=600)).json()["id"]
    with client.websocket_connect(f"/matches/{match_id}/stream") as ws:
        recv_until(ws, lambda m: m["type"] == "state")
        send(ws, {"type": "pause"})
        recv_until(ws, lambda m: m["type"] == "state" and m.get("paused") is True)
        for _ in range(PENDING_ACTION_CAP + 2):
            send(ws, {"type": "action", "token": "TRAIN PROBE"})
        err = recv_until(ws, lambda m: m["type"] == "error")
        assert err["message"] == "action queue full; wait for a decision window"


def test_pause_freezes_ticks_and_resume_continues(client):
    match_id = client.post("/matches", json=fast_spec(speed=100.0, max_ticks=2000)).json()["id"]
    with client.websocket_connect(f"/matches/{match_id}/stream") as ws:
        recv_until(ws, lambda m: m["type"] == "state")
        send(ws, {"type": "pause"})
        recv_until(ws, lambda m: m["type"] == "state" and m.get("paused") is True)

        assert client.get(f"/matches/{match_id}").json()["status"] == "paused"
        tick_a = client.get(f"/matches/{match_id}").json()["tick"]
        time.sleep(0.15)
        tick_b = client.get(f"/matches/{match_id}").json()["tick"]
        assert tick_a == tick_b

        send(ws, {"type": "resume"})
        recv_until(ws, lambda m: m["type"] == "state" and m.get("paused") is False)
        deadline = time.monotonic() + 5.0
        while client.get(f"/matches/{match_id}").json()["tick"] <= tick_b:
            assert time.monotonic() < deadline, "ticks never advanced after resume"
            time.sleep(0.02)


# ------------------------------------------------------------- agent seat

def test_agent_match_reveals_reasoning(client):
    spec = {
        "opponent": {"kind": "agent", "backend": "scripted", "reveal_reasoning": True},
        "speed": 1000.0,
        "seed": 5,
        "max_ticks": 60,
    }
    resp = client.post("/matches", json=spec)
    assert resp.status_code == 201
    match_id = resp.json()["id"]
    assert client.get(f"/matches/{match_id}").json()["side"] == "p2"

    with client.websocket_connect(f"/matches/{match_id}/stream") as ws:
        reasoned = recv_until(ws, lambda m: m["type"] == "state" and "reasoning" in m)
        reasoning = reasoned["reasoning"]
        assert "decisions" not in reasoning
        assert "overview" in reasoning
        assert all(isinstance(v, str) for v in reasoning.values())
        # the human seat is Zerg here
        assert "TRAIN DRONE" in reasoned["legal"]
        recv_until(ws, lambda m: m["type"] == "result")


# ---------------------------------------------------------------- records

def test_finished_match_persists_a_replayable_record(tmp_path):
    with TestClient(create_app(record_dir=str(tmp_path))) as client:
        match_id = client.post("/matches", json=fast_spec(max_ticks=120)).json()["id"]
        wait_finished(client, match_id)

    path = tmp_path / f"match_{match_id}.jsonl"
    deadline = time.monotonic() + 5.0
    while not path.exists():
        assert time.monotonic() < deadline, "record file never appeared"
        time.sleep(0.02)

    record = read_jsonl(str(path))
    assert record.header["opponent_kind"] == "builtin"
    assert record.header["side"] == "p1"
    kinds = {ev["kind"] for ev in record.events}
    assert {"executed_action", "sample", "state_hash", "result"} <= kinds
    outcome = replay_verify(record)
    assert outcome.ok, outcome.describe()


def test_late_subscriber_gets_current_state_replay(client):
    match_id = client.post("/matches", json=fast_spec(speed=100.0, max_ticks=2000)).json()["id"]
    time.sleep(0.3)  # let the match move past its opening state
    with client.websocket_connect(f"/matches/{match_id}/stream") as ws:
        state = recv(ws)
        assert state["type"] == "state"
        assert state["tick"] > 0
