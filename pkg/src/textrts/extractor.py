"""Decision-line extraction: regex scan plus catalog similarity matching.

Turns free-form reasoning text into a fixed-arity list of MacroActions. The
matcher is deliberately forgiving: model output drifts in case, spacing, and
bracketing, and an unrecognized line must degrade to NoOp, never crash.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from textrts._kernels import levenshtein
from textrts.datafiles import DataFileError, data_path, load_rows
from textrts.sim.types import MacroAction, NOOP_ACTION, Race

SIMILARITY_THRESHOLD = 0.6
JACCARD_WEIGHT = 0.5  # remainder goes to edit-distance similarity


@dataclass(frozen=True)
class CatalogEntry:
    token: str
    norm: str
    action: MacroAction


class ActionCatalog:
    """Ordered token -> MacroAction table for one race.

    First entry for an action id is its canonical token; later entries are
    accepted aliases. Order is the similarity tie-break.
    """

    def __init__(self, race: Race, entries: list[tuple[str, MacroAction]]):
        self.race = race
        self.entries: list[CatalogEntry] = []
        self._by_norm: dict[str, int] = {}
        self._canonical: dict[str, str] = {}
        for token, action in entries:
            norm = normalize(token)
            if norm in self._by_norm:
                raise DataFileError(f"duplicate catalog token: {token}")
            self._by_norm[norm] = len(self.entries)
            self.entries.append(CatalogEntry(token=token, norm=norm, action=action))
            self._canonical.setdefault(action.action_id(), token)

    def __len__(self) -> int:
        return len(self.entries)

    def lookup_exact(self, norm: str) -> CatalogEntry | None:
        idx = self._by_norm.get(norm)
        return self.entries[idx] if idx is not None else None

    def canonical_token(self, action: MacroAction) -> str:
        token = self._canonical.get(action.action_id())
        if token is None:
            raise KeyError(f"action not in catalog: {action.action_id()}")
        return token

    def canonical_tokens(self) -> list[str]:
        seen: set[str] = set()
        out: list[str] = []
        for entry in self.entries:
            aid = entry.action.action_id()
            if aid not in seen:
                seen.add(aid)
                out.append(entry.token)
        return out

    def actions(self) -> list[MacroAction]:
        seen: set[str] = set()
        out: list[MacroAction] = []
        for entry in self.entries:
            aid = entry.action.action_id()
            if aid not in seen:
                seen.add(aid)
                out.append(entry.action)
        return out


def load_catalog(race: Race, path: str | None = None) -> ActionCatalog:
    entries: list[tuple[str, MacroAction]] = []
    for lineno, cols in load_rows(path or data_path("catalog.txt")):
        if len(cols) < 3:
            raise DataFileError(f"catalog line {lineno}: expected race, action id, token")
        if cols[0] != race.value:
            continue
        action = MacroAction.from_id(cols[1])
        entries.append((" ".join(cols[2:]), action))
    if not entries:
        raise DataFileError(f"no catalog entries for race {race.value}")
    return ActionCatalog(race, entries)


@dataclass(frozen=True)
class MatchResult:
    action: MacroAction
    method: str  # Exact | Similarity | Failed
    score: float
    source_line: str


_NON_TOKEN_CHARS = re.compile(r"[^A-Z0-9 ]+")
_SPACES = re.compile(r"\s+")


def normalize(text: str) -> str:
    up = text.upper()
    up = _NON_TOKEN_CHARS.sub(" ", up)
    return _SPACES.sub(" ", up).strip()


# `index :` anchors; the token runs to the next anchor, bracket, or line end.
_INDEX_RE = re.compile(r"(\d{1,2})\s*:")


def parse_decisions(text: str) -> list[str]:
    """Scan for `index : <TOKENS>` decision lines.

    Tolerates list bullets, extra whitespace, and dropped angle brackets.
    Ordered by index then by position; duplicate indices keep the first
    occurrence. Candidates that do not start with a letter are skipped, which
    filters out clock strings like "13:28".
    """
    anchors = list(_INDEX_RE.finditer(text))
    found: dict[int, tuple[int, str]] = {}
    for pos, m in enumerate(anchors):
        start = m.end()
        end = anchors[pos + 1].start() if pos + 1 < len(anchors) else len(text)
        newline = text.find("\n", start, end)
        if newline != -1:
            end = newline
        candidate = text[start:end]
        bracketed = re.search(r"<\s*([^<>]*?)\s*>", candidate)
        if bracketed:
            token = bracketed.group(1)
        else:
            token = candidate.strip().strip("<>[]•*-").strip()
        token = _SPACES.sub(" ", token).strip()
        if not token or not token[0].isalpha():
            continue
        index = int(m.group(1))
        if index not in found:
            found[index] = (pos, token)
    ordered = sorted(found.items(), key=lambda kv: (kv[0], kv[1][0]))
    return [token for _, (_, token) in ordered]


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 1.0
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def match_one(
    line: str,
    catalog: ActionCatalog,
    threshold: float = SIMILARITY_THRESHOLD,
    jaccard_weight: float = JACCARD_WEIGHT,
) -> MatchResult:
    """Exact match on normalized text, else best blended-similarity entry at
    or above the threshold (catalog order breaks ties), else Failed/NoOp."""
    norm = normalize(line)
    exact = catalog.lookup_exact(norm)
    if exact is not None:
        return MatchResult(action=exact.action, method="Exact", score=1.0, source_line=line)

    tokens = set(norm.split())
    best_idx = -1
    best_score = 0.0
    for idx, entry in enumerate(catalog.entries):
        jac = _jaccard(tokens, set(entry.norm.split()))
        longest = max(len(norm), len(entry.norm))
        edit_sim = 1.0 - levenshtein(norm, entry.norm) / longest if longest else 1.0
        score = jaccard_weight * jac + (1.0 - jaccard_weight) * edit_sim
        if score > best_score:
            best_score = score
            best_idx = idx
    if best_idx >= 0 and best_score >= threshold:
        return MatchResult(
            action=catalog.entries[best_idx].action,
            method="Similarity",
            score=best_score,
            source_line=line,
        )
    return MatchResult(action=NOOP_ACTION, method="Failed", score=best_score, source_line=line)


@dataclass(frozen=True)
class ExtractResult:
    actions: list[MacroAction]
    matches: list[MatchResult]
    diagnostics: list[str]


def extract(
    text: str,
    k: int,
    catalog: ActionCatalog,
    threshold: float = SIMILARITY_THRESHOLD,
    jaccard_weight: float = JACCARD_WEIGHT,
) -> ExtractResult:
    """Exactly k actions from reasoning text: parsed lines matched in order,
    NoOp-padded when short, truncated when long."""
    if k < 1:
        raise ValueError("k must be >= 1")
    lines = parse_decisions(text)
    diagnostics: list[str] = []
    if len(lines) > k:
        diagnostics.append(f"truncated {len(lines) - k} extra decision lines")
        lines = lines[:k]
    matches = [match_one(line, catalog, threshold, jaccard_weight) for line in lines]
    actions = [m.action for m in matches]
    for m in matches:
        if m.method == "Failed":
            diagnostics.append(f"unmatched decision line: {m.source_line!r}")
    while len(actions) < k:
        diagnostics.append(f"padded slot {len(actions)} with NOOP")
        actions.append(NOOP_ACTION)
    return ExtractResult(actions=actions, matches=matches, diagnostics=diagnostics)
