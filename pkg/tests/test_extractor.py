"""Decision parsing, catalog matching, and fixed-arity extraction."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from textrts.datafiles import DataFileError
from textrts.extractor import (
    ActionCatalog,
    extract,
    load_catalog,
    match_one,
    normalize,
    parse_decisions,
)
from textrts.sim.types import ActionKind, MacroAction, NOOP_ACTION, Race


# ------------------------------------------------------------- normalize


def test_normalize_case_punctuation_spaces():
    assert normalize("  Build   Pylon! ") == "BUILD PYLON"
    assert normalize("<TRAIN PROBE>") == "TRAIN PROBE"
    assert normalize("chrono-boost: nexus") == "CHRONO BOOST NEXUS"
    assert normalize("") == ""


@given(st.text(max_size=40))
def test_normalize_idempotent(text):
    once = normalize(text)
    assert normalize(once) == once


# -------------------------------------------------------- parse_decisions


def test_parse_inline_single_line_block():
    text = "Decisions:0: <BUILD PHOTONCANNON> 1: <BUILD SHIELDBATTERY>"
    assert parse_decisions(text) == ["BUILD PHOTONCANNON", "BUILD SHIELDBATTERY"]


def test_parse_multiline_block_in_order():
    text = "0: <TRAIN PHOENIX>\n1: <TRAIN VOIDRAY>\n2: <BUILD STARGATE>\n3: <TRAIN STALKER>\n4: <TRAIN COLOSSUS>"
    assert parse_decisions(text) == [
        "TRAIN PHOENIX",
        "TRAIN VOIDRAY",
        "BUILD STARGATE",
        "TRAIN STALKER",
        "TRAIN COLOSSUS",
    ]


def test_parse_orders_by_index_not_position():
    text = "2: <BUILD GATEWAY>\n0: <TRAIN PROBE>\n1: <BUILD PYLON>"
    assert parse_decisions(text) == ["TRAIN PROBE", "BUILD PYLON", "BUILD GATEWAY"]


def test_parse_duplicate_index_keeps_first():
    text = "0: <TRAIN PROBE>\n0: <BUILD PYLON>"
    assert parse_decisions(text) == ["TRAIN PROBE"]


def test_parse_tolerates_bullets_and_missing_brackets():
    text = "- 0: TRAIN PROBE\n* 1: [BUILD PYLON]\n  2:   BUILD   GATEWAY  "
    assert parse_decisions(text) == ["TRAIN PROBE", "BUILD PYLON", "BUILD GATEWAY"]


def test_parse_skips_clock_strings():
    # "13:28" matches the index pattern but its candidate starts with a digit
    text = "At 13:28 the wave hit.\n0: <RETREAT HOME>"
    assert parse_decisions(text) == ["RETREAT HOME"]


def test_parse_prose_without_tokens_is_empty():
    assert parse_decisions("No structured content here.") == []
    assert parse_decisions("") == []


# --------------------------------------------------------------- catalog


def test_catalog_loads_for_both_races(protoss_catalog, zerg_catalog):
    assert len(protoss_catalog) > 0
    assert len(zerg_catalog) > 0
    assert protoss_catalog.race is Race.PROTOSS
    assert zerg_catalog.race is Race.ZERG


def test_catalog_rejects_duplicate_norms():
    entries = [
        ("TRAIN PROBE", MacroAction(ActionKind.TRAIN, "PROBE")),
        ("train  probe", MacroAction(ActionKind.TRAIN, "PROBE")),
    ]
    with pytest.raises(DataFileError, match="duplicate"):
        ActionCatalog(Race.PROTOSS, entries)


def test_canonical_token_roundtrip(protoss_catalog):
    for action in protoss_catalog.actions():
        token = protoss_catalog.canonical_token(action)
        hit = protoss_catalog.lookup_exact(normalize(token))
        assert hit is not None and hit.action == action


def test_canonical_tokens_unique_per_action(protoss_catalog):
    tokens = protoss_catalog.canonical_tokens()
    assert len(tokens) == len(protoss_catalog.actions())
    assert len(set(tokens)) == len(tokens)


def test_catalog_contains_named_paper_style_tokens(protoss_catalog):
    for token in ("CHRONOBOOST NEXUS", "SCOUTING PROBE", "RESEARCH PSISTORMTECH"):
        assert protoss_catalog.lookup_exact(normalize(token)) is not None, token


def test_unknown_race_rows_rejected(tmp_path):
    p = tmp_path / "catalog.txt"
    p.write_text("Z train:DRONE TRAIN DRONE\n", encoding="utf-8")
    with pytest.raises(DataFileError, match="no catalog entries"):
        load_catalog(Race.PROTOSS, str(p))


# -------------------------------------------------------------- match_one


def test_match_exact(protoss_catalog):
    m = match_one("CHRONOBOOST NEXUS", protoss_catalog)
    assert m.method == "Exact"
    assert m.score == 1.0
    assert m.action == MacroAction(ActionKind.CHRONO, "NEXUS")


def test_match_exact_ignores_case_and_brackets(protoss_catalog):
    m = match_one("<expand to new resource location>", protoss_catalog)
    assert m.method == "Exact"
    assert m.action == MacroAction(ActionKind.EXPAND)


def test_match_similarity_recovers_typo(protoss_catalog):
    m = match_one("BULD PYLON", protoss_catalog)
    assert m.method == "Similarity"
    assert m.action == MacroAction(ActionKind.BUILD, "PYLON")
    assert 0.6 <= m.score < 1.0


def test_match_failure_goes_noop(protoss_catalog):
    m = match_one("BUILD DEATHSTAR", protoss_catalog)
    assert m.method == "Failed"
    assert m.action == NOOP_ACTION
    assert m.score < 0.6


def test_match_threshold_is_configurable(protoss_catalog):
    line = "BUILD DEATHSTAR"
    default = match_one(line, protoss_catalog)
    permissive = match_one(line, protoss_catalog, threshold=0.05)
    assert default.method == "Failed"
    assert permissive.method == "Similarity"


def test_match_tie_breaks_by_catalog_order():
    entries = [
        ("ALPHA ONE", MacroAction(ActionKind.TRAIN, "A")),
        ("ALPHA TWO", MacroAction(ActionKind.TRAIN, "B")),
    ]
    catalog = ActionCatalog(Race.PROTOSS, entries)
    # equidistant from both entries: first catalog entry must win
    m = match_one("ALPHA", catalog, threshold=0.1)
    assert m.action == MacroAction(ActionKind.TRAIN, "A")


# ---------------------------------------------------------------- extract


def test_extract_exact_arity_padding(protoss_catalog):
    res = extract("0: <TRAIN PROBE>\n1: <BUILD PYLON>", 5, protoss_catalog)
    assert len(res.actions) == 5
    assert res.actions[0] == MacroAction(ActionKind.TRAIN, "PROBE")
    assert res.actions[1] == MacroAction(ActionKind.BUILD, "PYLON")
    assert res.actions[2:] == [NOOP_ACTION] * 3
    assert sum("padded" in d for d in res.diagnostics) == 3


def test_extract_truncates_beyond_k(protoss_catalog):
    lines = "\n".join(f"{i}: <TRAIN PROBE>" for i in range(7))
    res = extract(lines, 5, protoss_catalog)
    assert len(res.actions) == 5
    assert any("truncated 2" in d for d in res.diagnostics)


def test_extract_failed_lines_become_noop_with_diagnostic(protoss_catalog):
    res = extract("0: <SUMMON DRAGON>", 3, protoss_catalog)
    assert res.actions[0] == NOOP_ACTION
    assert any("unmatched" in d for d in res.diagnostics)


def test_extract_rejects_nonpositive_k(protoss_catalog):
    with pytest.raises(ValueError):
        extract("0: <TRAIN PROBE>", 0, protoss_catalog)


def test_extract_idempotent_over_serialization(protoss_catalog):
    """Extracting from the serialization of an extracted list recovers it."""
    text = "0: <TRAIN PROBE>\n1: <BUILD PYLON>\n2: <CHRONOBOOST NEXUS>\n3: <SCOUTING PROBE>\n4: <TRAIN ZEALOT>"
    first = extract(text, 5, protoss_catalog)
    rendered = "\n".join(f"{i}: <{a.token()}>" for i, a in enumerate(first.actions))
    second = extract(rendered, 5, protoss_catalog)
    assert second.actions == first.actions


@given(st.integers(min_value=1, max_value=8))
def test_extract_arity_always_k(protoss_catalog, k):
    res = extract("0: <TRAIN PROBE>\n1: <gibberish 123>", k, protoss_catalog)
    assert len(res.actions) == k


# --------------------------------------------------------------- corpus


def test_corpus_blocks_extract_exactly(corpus, protoss_catalog):
    for block in corpus["blocks"]:
        lines = parse_decisions(block["text"])
        assert len(lines) == len(block["expected"]), block["name"]
        for line, want in zip(lines, block["expected"]):
            m = match_one(line, protoss_catalog)
            assert m.method == "Exact", (block["name"], line)
            assert m.action.action_id() == want, (block["name"], line)


def test_corpus_size_floor(corpus):
    blocks = corpus["blocks"]
    assert len(blocks) >= 5
    assert sum(len(b["expected"]) for b in blocks) >= 25
