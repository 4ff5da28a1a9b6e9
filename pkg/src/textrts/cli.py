"""Command-line front end.

`--config FILE` loads a JSON object of ExperimentConfig fields and overrides
any flags given alongside it. Secrets never travel through flags or config
files: the http backend reads its API key from TEXTRTS_API_KEY (and, when no
endpoint is configured, its base URL from TEXTRTS_API_BASE).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from textrts import metrics as me
from textrts.harness import ExperimentConfig, run_experiment
from textrts.records import RecordParseError, read_jsonl, replay_verify


@click.group()
@click.version_option(package_name="textrts")
def main():
    """Text-interfaced macro RTS: experiments, analytics, live matches."""


def _config_from(flags: dict, config_path: str | None) -> ExperimentConfig:
    data = dict(flags)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
        if not isinstance(overrides, dict):
            raise click.ClickException(f"{config_path}: config must be a JSON object")
        data.update(overrides)
    try:
        return ExperimentConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise click.ClickException(str(exc))


def _read_records(paths: tuple[str, ...]):
    records = []
    for path in paths:
        try:
            records.append(read_jsonl(path))
        except RecordParseError as exc:
            raise click.ClickException(str(exc))
        except OSError as exc:
            raise click.ClickException(f"{path}: {exc}")
    return records


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON config file; its fields override the flags below.")
@click.option("--matches", type=int, default=1, show_default=True, help="Episodes to play.")
@click.option("--seed", type=int, default=42, show_default=True, help="Base seed; match i plays seed+i.")
@click.option("--difficulty", type=click.IntRange(1, 10), default=3, show_default=True)
@click.option("--map", "map_name", default="MERIDIAN", show_default=True)
@click.option("--prompt", type=click.Choice(["full", "simple"]), default="full", show_default=True)
@click.option("--k", type=int, default=5, show_default=True, help="Chain length: frames per inference.")
@click.option("--stride", type=int, default=5, show_default=True, help="Ticks between decision opportunities.")
@click.option("--summarize", type=click.Choice(["RuleBased", "ModelBased"]), default="RuleBased", show_default=True)
@click.option("--backend", type=click.Choice(["scripted", "http"]), default="scripted", show_default=True)
@click.option("--endpoint", default="", help="Chat-completions base URL for the http backend.")
@click.option("--model", default="default", show_default=True)
@click.option("--mode", type=click.Choice(["lockstep", "realtime"]), default="lockstep", show_default=True)
@click.option("--speed", type=float, default=10.0, show_default=True, help="Realtime ticks per second.")
@click.option("--max-ticks", type=int, default=3600, show_default=True, help="Draw ceiling.")
@click.option("--out-dir", default="runs", show_default=True)
def run(config_path, **flags):
    """Play a seeded batch of matches and write records plus a report."""
    cfg = _config_from(flags, config_path)
    result = run_experiment(cfg)
    click.echo(f"config {cfg.config_hash()}")
    for path in result.record_paths:
        click.echo(f"record {path}")
    if result.row is not None:
        click.echo(me.render_table([result.row]))
    if result.aborted_seed is not None:
        click.echo(f"aborted at seed {result.aborted_seed}; partial record kept", err=True)
    sys.exit(result.exit_code)


@main.command("metrics")
@click.argument("records", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--label", default="agent", show_default=True, help="Row label in the report table.")
@click.option("--as-json", is_flag=True, help="Emit line-delimited JSON instead of the table.")
def metrics_cmd(records, label, as_json):
    """Compute per-match figures and their aggregate from record files."""
    parsed = _read_records(records)
    try:
        reports = [me.compute(r) for r in parsed]
    except ValueError as exc:
        raise click.ClickException(str(exc))
    row = me.aggregate(reports, label=label)
    if as_json:
        for path, rep in zip(records, reports):
            click.echo(json.dumps({"kind": "match", "record": str(path), **rep.to_dict()}, sort_keys=True))
        click.echo(json.dumps({"kind": "summary", **row.to_dict()}, sort_keys=True))
    else:
        click.echo(me.render_table([row]))


@main.command()
@click.argument("records", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--as-json", is_flag=True, help="Emit {label: [record files]} as JSON.")
def partition(records, as_json):
    """Cut the won matches into four apu-ranked buckets."""
    parsed = _read_records(records)
    by_record = dict(zip(map(str, records), parsed))
    buckets = me.partition_by_apu(parsed)
    named = {
        label: [path for path, rec in by_record.items() if rec in bucket]
        for label, bucket in buckets.items()
    }
    if as_json:
        click.echo(json.dumps(named, indent=2))
    else:
        for label, paths in named.items():
            click.echo(f"{label}: {len(paths)}")
            for path in paths:
                click.echo(f"  {path}")


@main.command("export-pairs")
@click.argument("records", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--filter", "which", type=click.Choice(me.PAIR_FILTERS), default="all", show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="Write pairs here instead of stdout.")
def export_pairs(records, which, out_path):
    """Export (input, output) fine-tune pairs as line-delimited JSON."""
    parsed = _read_records(records)
    pairs = me.export_finetune_pairs(parsed, which)
    lines = [json.dumps(pair, sort_keys=True) for pair in pairs]
    if out_path:
        Path(out_path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        click.echo(f"wrote {len(pairs)} pair(s) to {out_path}")
    else:
        for line in lines:
            click.echo(line)


@main.command("replay-verify")
@click.argument("records", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
def replay_verify_cmd(records):
    """Re-simulate records and check every state-hash checkpoint."""
    failures = 0
    for path in records:
        try:
            record = read_jsonl(path)
        except RecordParseError as exc:
            click.echo(f"{path}: {exc}")
            failures += 1
            continue
        report = replay_verify(record)
        click.echo(f"{path}: {report.describe()}")
        if not report.ok:
            failures += 1
    sys.exit(1 if failures else 0)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--record-dir", default=None, help="Persist finished match records here.")
def serve(host, port, record_dir):
    """Host live human-vs-agent matches over HTTP and WebSocket."""
    from textrts.server import serve as serve_app

    serve_app(host=host, port=port, record_dir=record_dir)


if __name__ == "__main__":
    main()
