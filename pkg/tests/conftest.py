"""Shared fixtures: data-file singletons, episode runners, record builders."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from textrts.backends.scripted import ScriptedBackend, ScriptedPolicy
from textrts.extractor import load_catalog
from textrts.harness import OPPONENT_SEED_SALT, ExperimentConfig, run_match
from textrts.opponent import OpponentDriver, difficulty_params
from textrts.pipeline import ChainConfig, run_episode
from textrts.records import MatchRecord
from textrts.sim import engine as se
from textrts.sim.types import Race

settings.register_profile(
    "suite",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def tree():
    return se.default_tree()


@pytest.fixture(scope="session")
def protoss_catalog():
    return load_catalog(Race.PROTOSS)


@pytest.fixture(scope="session")
def zerg_catalog():
    return load_catalog(Race.ZERG)


@pytest.fixture(scope="session")
def corpus():
    return json.loads((DATA_DIR / "decision_corpus.json").read_text(encoding="utf-8"))


def play_episode(
    seed: int = 7,
    difficulty: int = 1,
    max_ticks: int = 400,
    prompt: str = "full",
    k: int = 5,
    stride: int = 5,
    mode: str = "lockstep",
    summarize: str = "RuleBased",
    backend=None,
    on_queue_size=None,
    ticks_per_second: float = 1000.0,
):
    """One episode with the same wiring as the harness, plus the hooks the
    harness does not expose (queue-size callback, injected backend)."""
    params = difficulty_params(difficulty)
    income = params.income_permille * 3 // 2 if params.cheat_money else params.income_permille
    mc = se.MatchConfig(max_ticks=max_ticks, p2_income_permille=income)
    state = se.new_match(mc, seed=seed)
    opponent = OpponentDriver(params, seed=seed ^ OPPONENT_SEED_SALT)
    chain = ChainConfig(
        k=k, summarize_mode=summarize, prompt_template=prompt, decision_tick_stride=stride
    )
    if backend is None:
        backend = ScriptedBackend(ScriptedPolicy(k=k, profile=prompt))
    header = {"version": 1, "seed": seed, "match_config": mc.to_dict()}
    return run_episode(
        state,
        opponent,
        backend,
        chain,
        header=header,
        mode=mode,
        ticks_per_second=ticks_per_second,
        on_queue_size=on_queue_size,
    )


@pytest.fixture(scope="session")
def short_episode():
    """A deterministic 400-tick draw via the production harness path."""
    cfg = ExperimentConfig(seed=7, difficulty=1, max_ticks=400)
    return run_match(cfg, seed=7)


@pytest.fixture(scope="session")
def won_episode():
    """A full-length level-1 match the agent wins."""
    cfg = ExperimentConfig(seed=100, difficulty=1, max_ticks=3600)
    episode = run_match(cfg, seed=100)
    assert episode.reward == 1, "fixture assumes a level-1 win"
    return episode


def build_record(
    samples,
    completes=(),
    reward=None,
    match_id=None,
    seed=None,
    p1_race: str = "P",
    extra_events=(),
) -> MatchRecord:
    """Synthetic analytics record: samples are (t, su, sc, sm, sg) tuples,
    completes are (t, side, category, kind_id)."""
    mc = se.MatchConfig(p1_race=Race(p1_race)).to_dict()
    header: dict = {"version": 1, "match_config": mc}
    if match_id is not None:
        header["match_id"] = match_id
    if seed is not None:
        header["seed"] = seed
    events = [
        {"kind": "sample", "t": t, "su": su, "sc": sc, "sm": sm, "sg": sg}
        for t, su, sc, sm, sg in samples
    ]
    events.extend(
        {"kind": "complete", "t": t, "side": side, "category": category, "kind_id": kind_id}
        for t, side, category, kind_id in completes
    )
    events.extend(extra_events)
    if reward is not None:
        last = samples[-1][0] if samples else 0
        events.append({"kind": "result", "t": last, "side": "p1", "reward": reward})
    return MatchRecord(header=header, events=events)


@pytest.fixture
def make_record():
    return build_record
