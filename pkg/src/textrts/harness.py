"""Experiment runner: seeded match batches, record files, aggregate report.

A run with the scripted backend in lockstep mode is fully deterministic:
equal configs hash equal, and equal hashes mean byte-identical record files.
Nothing time-dependent enters the records (no timestamps, no paths), so the
output directory can differ between otherwise identical runs.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from textrts import metrics
from textrts.backends.http import ENV_API_KEY, Endpoint, HttpBackend
from textrts.backends.prompts import TEMPLATES
from textrts.backends.scripted import ScriptedBackend, ScriptedPolicy
from textrts.opponent import OpponentDriver, difficulty_params
from textrts.pipeline import ChainConfig, EpisodeResult, run_episode
from textrts.records import RECORD_VERSION, MatchRecord
from textrts.sim import engine as se

log = logging.getLogger(__name__)

# xor-folded into each match seed so the opponent draws from its own stream
OPPONENT_SEED_SALT = 0xD1F


@dataclass(frozen=True)
class ExperimentConfig:
    matches: int = 1
    seed: int = 42
    difficulty: int = 3
    map_name: str = "MERIDIAN"
    prompt: str = "full"  # full | simple
    k: int = 5
    stride: int = 5
    summarize: str = "RuleBased"  # RuleBased | ModelBased
    backend: str = "scripted"  # scripted | http
    endpoint: str = ""
    model: str = "default"
    mode: str = "lockstep"  # lockstep | realtime
    speed: float = 10.0  # realtime ticks per second
    max_ticks: int = 3600
    out_dir: str = "runs"

    def __post_init__(self):
        if self.matches < 1:
            raise ValueError("matches must be >= 1")
        if not 1 <= self.difficulty <= 10:
            raise ValueError("difficulty must be 1..10")
        if self.prompt not in TEMPLATES:
            raise ValueError(f"unknown prompt template: {self.prompt}")
        if self.backend not in ("scripted", "http"):
            raise ValueError(f"unknown backend: {self.backend}")
        if self.mode not in ("lockstep", "realtime"):
            raise ValueError(f"unknown mode: {self.mode}")
        if self.max_ticks < 1:
            raise ValueError("max_ticks must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        return cls(**d)

    def config_hash(self) -> str:
        """Hash of the semantic fields; where outputs land does not change
        what the experiment is, so out_dir stays out."""
        semantic = {k: v for k, v in self.to_dict().items() if k != "out_dir"}
        payload = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def build_backend(cfg: ExperimentConfig):
    if cfg.backend == "scripted":
        return ScriptedBackend(ScriptedPolicy(k=cfg.k, profile=cfg.prompt))
    if cfg.endpoint:
        # key stays in the environment; flags and config files never carry it
        endpoint = Endpoint(
            base_url=cfg.endpoint,
            api_key=os.environ.get(ENV_API_KEY, ""),
            model=cfg.model,
        )
    else:
        endpoint = Endpoint.from_env()
        if cfg.model != "default":
            endpoint = replace(endpoint, model=cfg.model)
    return HttpBackend(endpoint)


def match_config(cfg: ExperimentConfig) -> se.MatchConfig:
    params = difficulty_params(cfg.difficulty)
    income = params.income_permille
    if params.cheat_money:
        income = income * 3 // 2
    return se.MatchConfig(
        map_name=cfg.map_name,
        max_ticks=cfg.max_ticks,
        p2_income_permille=income,
    )


def record_header(cfg: ExperimentConfig, seed: int, mc: se.MatchConfig) -> dict:
    return {
        "version": RECORD_VERSION,
        "config_hash": cfg.config_hash(),
        "seed": seed,
        "map": cfg.map_name,
        "difficulty": cfg.difficulty,
        "k": cfg.k,
        "prompt": cfg.prompt,
        "backend": cfg.backend,
        "mode": cfg.mode,
        "match_config": mc.to_dict(),
    }


def run_match(cfg: ExperimentConfig, seed: int, backend=None) -> EpisodeResult:
    """One seeded episode under this experiment's settings."""
    params = difficulty_params(cfg.difficulty)
    mc = match_config(cfg)
    state = se.new_match(mc, seed=seed)
    opponent = OpponentDriver(params, seed=seed ^ OPPONENT_SEED_SALT)
    chain = ChainConfig(
        k=cfg.k,
        summarize_mode=cfg.summarize,
        prompt_template=cfg.prompt,
        decision_tick_stride=cfg.stride,
    )
    return run_episode(
        state,
        opponent,
        backend if backend is not None else build_backend(cfg),
        chain,
        header=record_header(cfg, seed, mc),
        mode=cfg.mode,
        ticks_per_second=cfg.speed,
    )


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    record_paths: list[Path] = field(default_factory=list)
    reports: list[metrics.MetricsReport] = field(default_factory=list)
    row: metrics.SummaryRow | None = None
    completed: bool = False
    aborted_seed: int | None = None

    @property
    def exit_code(self) -> int:
        return 0 if self.completed else 1


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Play seeds base..base+matches-1, writing match_{seed}.jsonl for each
    plus report.txt / report.jsonl.

    An aborted episode (backend failure in lockstep mode) still writes its
    partial record, then stops the run; exit_code reflects completion, not
    wins.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = ExperimentResult(config=cfg)

    records: list[MatchRecord] = []
    for i in range(cfg.matches):
        seed = cfg.seed + i
        # fresh backend per match: policy memory must not leak across seeds
        episode = run_match(cfg, seed)
        path = out / f"match_{seed}.jsonl"
        episode.record.write_jsonl(str(path))
        result.record_paths.append(path)
        if episode.aborted:
            log.error("match seed=%d aborted; partial record at %s", seed, path)
            result.aborted_seed = seed
            break
        records.append(episode.record)
        log.info("match seed=%d finished: reward=%s tick=%d", seed, episode.reward, episode.state.tick)

    result.completed = result.aborted_seed is None and len(records) == cfg.matches
    if records:
        result.reports = [metrics.compute(r) for r in records]
        result.row = metrics.aggregate(result.reports, label=f"{cfg.backend}:{cfg.prompt} L{cfg.difficulty}")
        _write_report(cfg, result, out)
    return result


def _write_report(cfg: ExperimentConfig, result: ExperimentResult, out: Path) -> None:
    table = metrics.render_table([result.row])
    head = f"config {cfg.config_hash()}  seeds {cfg.seed}..{cfg.seed + cfg.matches - 1}"
    (out / "report.txt").write_text(f"{head}\n{table}\n", encoding="utf-8")
    with (out / "report.jsonl").open("w", encoding="utf-8") as fh:
        row = {"kind": "summary", "config_hash": cfg.config_hash(), **result.row.to_dict()}
        fh.write(json.dumps(row, sort_keys=True) + "\n")
        for path, rep in zip(result.record_paths, result.reports):
            line = {
                "kind": "match",
                "config_hash": cfg.config_hash(),
                "record": path.name,
                **rep.to_dict(),
            }
            fh.write(json.dumps(line, sort_keys=True) + "\n")
