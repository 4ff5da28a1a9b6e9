"""Deterministic scripted policy speaking the reasoning-output grammar.

Offline stand-in for a language model: reads period summaries, walks a
build-order rule table, and emits an analysis whose Decisions section lists
exactly K catalog tokens. Output is a pure function of the input texts seen
so far - no clock, no RNG.

Period summaries drop lines that did not change between frames, so current
text alone understates what exists. The policy therefore accumulates the
last seen count per entity across calls, the way a model would carry context
forward, and decides against that memory.

The `full` profile plays the complete rule set. The `simple` profile mirrors
the leaner prompt: it never researches, never expands, and fields a
gateway-only army with a fixed attack target, which keeps it measurably
weaker at higher difficulties.
"""

from __future__ import annotations

import re

from textrts.backends.prompts import ChatRequest
from textrts.sim.types import Race

_COUNT_LINE = re.compile(r"^\s*([A-Za-z][A-Za-z' ]*): (\d+)\s*$")
_ENEMY_LINE = re.compile(r"^\s*([A-Za-z][A-Za-z' ]*): (\d+) at ([A-Za-z' ]+?)(?: \(last seen \d+s ago\))?\s*$")

_ZERG_ARMY = ("Zergling", "Roach", "Hydralisk", "Mutalisk", "Corruptor", "Brood Lord", "Ultralisk", "Queen")
_ZERG_BUILDINGS = (
    "Hatchery", "Spawning Pool", "Extractor", "Roach Warren", "Hydralisk Den",
    "Lair", "Spire", "Evolution Chamber", "Spore Crawler", "Ultralisk Cavern",
)
# Buildings only ever stand at bases, so the blind sweep skips the center.
_TARGETS = (
    ("ATTACK ENEMY MAIN", "Enemy Main"),
    ("ATTACK ENEMY NATURAL", "Enemy Natural"),
    ("ATTACK ENEMY THIRD", "Enemy Third"),
)
_HOME_REGIONS = ("Main Base", "Natural Expansion", "Third Base")
# An enemy force in the middle of the map is already marching on us.
_THREAT_REGIONS = _HOME_REGIONS + ("Center Crossing", "Center Basin")


def _last_int(text: str, pattern: str, default: int = 0) -> int:
    found = re.findall(pattern, text)
    return int(found[-1]) if found else default


def _in_process(text: str, name: str) -> bool:
    return re.search(rf"{re.escape(name)}: \d+s remaining", text) is not None


class ScriptedPolicy:
    """Build-order rule table with emergency-defense overrides and memory."""

    def __init__(
        self,
        k: int = 5,
        race: Race = Race.PROTOSS,
        profile: str = "full",
        attack_supply: int = 26,
    ):
        if profile not in ("full", "simple"):
            raise ValueError(f"unknown profile: {profile}")
        self.k = k
        self.race = race
        self.profile = profile
        self.attack_supply = attack_supply
        self.calls = 0
        # Last seen "Name: N" count per display name, across all calls.
        self.known: dict[str, int] = {}
        self.research_seen: set[str] = set()
        self.threat_seen = False
        self.last_attack_call = -10
        # attack token -> call number when enemy buildings were last sighted there
        self.enemy_sites: dict[str, int] = {}
        self.home_threat_call = -99
        self.enemy_strength = 0  # supply estimate from the latest army sighting
        self.strength_call = -99
        self.enemy_peak = 0  # high-water mark of that estimate, never decays
        self.away = False  # army was last ordered out rather than home
        self.pushing = False  # the current outing aims at the main, not a raid
        self.last_target = ""
        self.target_streak = 0
        self.push_idx = 0  # current stop in the base sweep

    # ------------------------------------------------------------- memory

    def _observe(self, text: str) -> None:
        for line in text.splitlines():
            m = _COUNT_LINE.match(line)
            if m:
                self.known[m.group(1)] = int(m.group(2))
                continue
            if ": complete" in line:
                self.research_seen.add(line.strip().removesuffix(": complete"))
                continue
            m = _ENEMY_LINE.match(line)
            if not m:
                continue
            name, count, region = m.group(1), int(m.group(2)), m.group(3)
            if name in _ZERG_ARMY or name == "Roach Warren":
                self.threat_seen = True
            if name in _ZERG_BUILDINGS:
                for token, display in _TARGETS:
                    if region == display:
                        self.enemy_sites[token] = self.calls
            if name in _ZERG_ARMY and count >= 3 and region in _THREAT_REGIONS:
                self.home_threat_call = self.calls

    # ------------------------------------------------------------- protoss

    def _note_target(self, target: str) -> int:
        """Track how long the same target has been ordered in a row."""
        if target == self.last_target:
            self.target_streak += 1
        else:
            self.last_target = target
            self.target_streak = 1
        return self.target_streak

    def _push_target(self) -> str:
        """Sweep the enemy bases starting at the main. Dwell on one stop
        long enough to raze it, then move on; once no enemy army is left
        the sweep speeds up to outpace rebuilt townhalls."""
        dwell = 3 if self.enemy_strength == 0 else 8
        if self.target_streak >= dwell and self.last_target == _TARGETS[self.push_idx][0]:
            self.push_idx = (self.push_idx + 1) % len(_TARGETS)
        target = _TARGETS[self.push_idx][0]
        self._note_target(target)
        return target

    def _raid_target(self) -> str:
        """Hit an expansion, never the main: raids farm the enemy economy
        while its standing army sits at home."""
        raids = _TARGETS[1:]
        fresh = [tok for tok, _ in raids if self.calls - self.enemy_sites.get(tok, -99) <= 6]
        target = fresh[0] if fresh else raids[(self.calls // 6) % len(raids)][0]
        if target == self.last_target and self.target_streak >= 8:
            other = [tok for tok, _ in raids if tok != target]
            target = other[0]
        self._note_target(target)
        return target

    def _protoss_decisions(self, text: str) -> list[str]:
        k = self.k
        full = self.profile == "full"
        decisions: list[str] = []

        def want(token: str, allow_dup: bool = False) -> None:
            if len(decisions) < k and (allow_dup or token not in decisions):
                decisions.append(token)

        minerals = _last_int(text, r"Minerals: (\d+)", self.known.get("Minerals", 0))
        gas = _last_int(text, r"Gas: (\d+)", self.known.get("Gas", 0))
        supply = re.findall(r"Supply: (\d+)/(\d+)", text)
        used, cap = (int(supply[-1][0]), int(supply[-1][1])) if supply else (12, 15)
        workers = _last_int(text, r"Workers: (\d+)", 12)
        army = _last_int(text, r"Army supply: (\d+)")
        boost = _last_int(text, r"Boost charges: (\d+)")

        n = self.known
        nexus = max(1, n.get("Nexus", 1))
        gateways = n.get("Gateway", 0)
        assimilators = n.get("Assimilator", 0)
        cyber = n.get("Cybernetics Core", 0)
        forge = n.get("Forge", 0)
        twilight = n.get("Twilight Council", 0)
        archives = n.get("Templar Archives", 0)
        batteries = n.get("Shield Battery", 0)
        cannons = n.get("Photon Cannon", 0)
        done = self.research_seen

        # Army orders come first: one decision slot steers the whole army,
        # and burying it under macro wants loses games that are already won.
        #
        # Doctrine for the full profile, shaped by how fights resolve here:
        # pooled engagements strongly favor the bigger force, and a dead
        # supply grid deletes whatever it no longer feeds. So the army
        # fights where it is strongest - at home, over the static defense
        # and the worker line. Expansions get raided while the enemy army
        # is still small or right after its wave broke on us; the main only
        # gets pushed with a decisive edge or during that same window.
        # The same force shows up once per frame and once per region as it
        # moves, so summing every line overcounts wildly. Keep the max count
        # per (unit, region) and read the strongest single region as the
        # enemy ball: it fights as one blob, so that is what a push meets.
        seen: dict[tuple[str, str], int] = {}
        for line in text.splitlines():
            m = _ENEMY_LINE.match(line)
            if m and m.group(1) in _ZERG_ARMY:
                key = (m.group(1), m.group(3))
                seen[key] = max(seen.get(key, 0), int(m.group(2)))
        per_region: dict[str, int] = {}
        for (_, region), count in seen.items():
            per_region[region] = per_region.get(region, 0) + count
        enemy_army = max(per_region.values(), default=0)
        if enemy_army:
            self.enemy_strength = 2 * enemy_army
            self.strength_call = self.calls
            self.enemy_peak = max(self.enemy_peak, self.enemy_strength)
        elif self.calls - self.strength_call >= 12 and self.enemy_strength:
            # No army sighted for a while: the estimate is stale, decay it.
            self.enemy_strength //= 2
            self.strength_call = self.calls
        since_home_threat = self.calls - self.home_threat_call
        counter_window = self.home_threat_call >= 0 and 3 <= since_home_threat <= 12
        # Completed combat tech multiplies what each point of supply is
        # worth in the pooled exchange, so compare quality-adjusted numbers.
        quality = 100
        if "Protoss Ground Weapons Level 1" in done:
            quality += 20
        if "Protoss Ground Armor Level 1" in done:
            quality += 20
        if "Psi Storm Tech" in done:
            quality += 30
        if "Charge" in done:
            quality += 15
        if "Blink" in done:
            quality += 15
        effective = army * quality // 100
        push_gate = 40 if counter_window else max(60, self.enemy_strength + 10)
        # Raids are safe while the enemy has never launched a wave (early
        # game) and inside the post-wave window; after that the army stays
        # home between pushes so a wave cannot catch the bases naked.
        raid_ok = (
            self.enemy_peak < 30
            or (self.home_threat_call < 0 and self.calls < 32)
            or counter_window
        )
        # A push with a decisive quality edge does not turn around because
        # a remnant wavelet wandered toward home; the statics handle it.
        confident = self.pushing and effective >= 2 * self.enemy_strength
        defending = full and since_home_threat <= 2 and army >= 4 and not confident
        if defending:
            want("RETREAT HOME")
            self.away = self.pushing = False
        elif full:
            if self.pushing and effective >= self.attack_supply:
                # Hysteresis: a launched push presses on until shattered.
                want(self._push_target())
            elif effective >= push_gate:
                self.push_idx = 0
                want(self._push_target())
                self.away = self.pushing = True
            elif raid_ok and army >= self.attack_supply:
                want(self._raid_target())
                self.away, self.pushing = True, False
            elif self.away:
                want("RETREAT HOME")
                self.away = self.pushing = False
        elif army >= self.attack_supply and self.calls - self.last_attack_call >= 6:
            before = len(decisions)
            want("ATTACK ENEMY MAIN")
            if len(decisions) > before:
                self.last_attack_call = self.calls

        # Emergency defense outranks the macro chain (prereqs permitting).
        # Enough turrets to matter against the biggest force sighted so far.
        if self.threat_seen:
            defense = min(8, 2 + 2 * (self.enemy_peak // 30))
            # A big sighted force justifies stacking build sites in parallel.
            rush = self.enemy_peak >= 60
            if full and cyber >= 1 and forge == 0 and self.enemy_peak >= 30 and not _in_process(text, "Forge"):
                want("BUILD FORGE")
            if cyber >= 1 and batteries < defense and (rush or not _in_process(text, "Shield Battery")):
                want("BUILD SHIELDBATTERY")
                if rush and batteries < defense - 1:
                    want("BUILD SHIELDBATTERY", allow_dup=True)
            if forge >= 1 and cannons < defense and (rush or not _in_process(text, "Photon Cannon")):
                want("BUILD PHOTONCANNON")

        headroom = cap - used
        if cap < 200 and headroom < min(8 + 2 * gateways, 16) and not _in_process(text, "Pylon"):
            want("BUILD PYLON")
        if cap < 200 and headroom < 3:
            want("BUILD PYLON", allow_dup=True)

        if self.calls == 2 or (full and self.calls % 12 == 2):
            want("SCOUTING PROBE")

        worker_target = min(16 * nexus + 3 * assimilators, 56)
        deficit = worker_target - workers
        if deficit > 0:
            want("TRAIN PROBE", allow_dup=True)
        if deficit >= 6:
            want("TRAIN PROBE", allow_dup=True)

        # One macro-chain step per inference keeps spending realistic.
        if gateways == 0 and not _in_process(text, "Gateway"):
            want("BUILD GATEWAY")
        elif full:
            researching = "s remaining" in text.split("Research:", 1)[-1]
            if assimilators < 1 and not _in_process(text, "Assimilator"):
                want("BUILD ASSIMILATOR")
            elif cyber == 0 and not _in_process(text, "Cybernetics Core"):
                want("BUILD CYBERNETICSCORE")
            elif assimilators < 2 and not _in_process(text, "Assimilator"):
                want("BUILD ASSIMILATOR")
            elif cyber >= 1 and "Warpgate Research" not in done and not researching:
                want("RESEARCH WARPGATERESEARCH")
            elif nexus < 2 and (minerals > 450 or workers >= 22):
                want("EXPAND TO NEW RESOURCE LOCATION")
            elif forge == 0 and not _in_process(text, "Forge"):
                want("BUILD FORGE")
            elif "Protoss Ground Weapons Level 1" not in done and not researching:
                want("RESEARCH PROTOSSGROUNDWEAPONSLEVEL1")
            elif twilight == 0 and not _in_process(text, "Twilight Council"):
                want("BUILD TWILIGHTCOUNCIL")
            elif "Protoss Ground Armor Level 1" not in done and not researching:
                want("RESEARCH PROTOSSGROUNDARMORLEVEL1")
            elif archives == 0 and not _in_process(text, "Templar Archives"):
                want("BUILD TEMPLARARCHIVES")
            elif "Psi Storm Tech" not in done and not researching:
                want("RESEARCH PSISTORMTECH")
            elif nexus < 3 and (minerals > 700 or workers >= 38):
                want("EXPAND TO NEW RESOURCE LOCATION")
            elif "Charge" not in done and gas >= 300 and not researching:
                want("RESEARCH CHARGE")
            elif "Blink" not in done and gas >= 400 and not researching:
                want("RESEARCH BLINK")
            elif assimilators < 2 * nexus and minerals > 300 and not _in_process(text, "Assimilator"):
                want("BUILD ASSIMILATOR")

        if cyber >= 1 and gateways < 3 and not _in_process(text, "Gateway"):
            want("BUILD GATEWAY")
        if gateways < (10 if full else 4) and minerals > 600:
            want("BUILD GATEWAY")

        if full and cyber >= 1:
            first, second = ("TRAIN STALKER", "TRAIN ZEALOT") if self.calls % 2 else ("TRAIN ZEALOT", "TRAIN STALKER")
            want(first, allow_dup=True)
            if archives >= 1 and gas >= 150:
                want("TRAIN HIGHTEMPLAR", allow_dup=True)
            want(second, allow_dup=True)
        else:
            want("TRAIN ZEALOT", allow_dup=True)

        if boost >= 1:
            if full and _in_process(text, "Warpgate Research"):
                want("CHRONOBOOST CYBERNETICSCORE")
            elif _in_process(text, "Probe"):
                want("CHRONOBOOST NEXUS")
            elif _in_process(text, "Zealot") or _in_process(text, "Stalker"):
                want("CHRONOBOOST GATEWAY")

        while len(decisions) < k:
            if deficit > 0:
                decisions.append("TRAIN PROBE")
            elif gateways >= 1:
                decisions.append("TRAIN ZEALOT")
            else:
                decisions.append("NOOP")
        return decisions[:k]

    # ---------------------------------------------------------------- zerg

    def _zerg_decisions(self, text: str) -> list[str]:
        k = self.k
        decisions: list[str] = []

        def want(token: str, allow_dup: bool = False) -> None:
            if len(decisions) < k and (allow_dup or token not in decisions):
                decisions.append(token)

        supply = re.findall(r"Supply: (\d+)/(\d+)", text)
        used, cap = (int(supply[-1][0]), int(supply[-1][1])) if supply else (12, 14)
        workers = _last_int(text, r"Workers: (\d+)", 12)
        army = _last_int(text, r"Army supply: (\d+)")
        larvae = _last_int(text, r"Larvae: (\d+)")
        inject = _last_int(text, r"Inject charges: (\d+)")
        minerals = _last_int(text, r"Minerals: (\d+)")
        hatcheries = max(1, self.known.get("Hatchery", 1))
        pool = self.known.get("Spawning Pool", 0)

        if inject >= 1 and larvae < 2:
            want("INJECTLARVA")
        if cap < 200 and cap - used < 6 and not _in_process(text, "Overlord"):
            want("TRAIN OVERLORD")
        if workers < 16 * hatcheries:
            want("TRAIN DRONE", allow_dup=True)
        if pool == 0 and not _in_process(text, "Spawning Pool"):
            want("BUILD SPAWNINGPOOL")
        if hatcheries < 2 and minerals > 350:
            want("EXPAND TO NEW RESOURCE LOCATION")
        if pool >= 1:
            want("TRAIN ZERGLING", allow_dup=True)
        if army >= self.attack_supply and self.calls - self.last_attack_call >= 6:
            before = len(decisions)
            want("ATTACK ENEMY MAIN")
            if len(decisions) > before:
                self.last_attack_call = self.calls
        while len(decisions) < k:
            decisions.append("TRAIN DRONE" if larvae > 0 else "NOOP")
        return decisions[:k]

    # ------------------------------------------------------------- output

    def complete(self, user_text: str) -> str:
        self.calls += 1
        self._observe(user_text)
        times = re.findall(r"At (\d+):(\d+)", user_text)
        seconds = int(times[-1][0]) * 60 + int(times[-1][1]) if times else 0
        stage = "early game" if seconds < 240 else ("mid-game" if seconds < 600 else "late game")
        minerals = _last_int(user_text, r"Minerals: (\d+)")
        army = _last_int(user_text, r"Army supply: (\d+)")

        if self.race is Race.PROTOSS:
            decisions = self._protoss_decisions(user_text)
        else:
            decisions = self._zerg_decisions(user_text)

        enemy_line = (
            "The enemy is committing to ground forces; static defense is warranted."
            if self.threat_seen
            else "Little enemy information; keep scouting."
        )
        strategy = (
            "Press the attack with our standing army."
            if army >= self.attack_supply
            else "Develop economy and production before committing the army."
        )
        decision_lines = "\n".join(f"{i}: <{tok}>" for i, tok in enumerate(decisions))
        return (
            f"1. Game Overview: We hold {minerals} minerals with army supply {army}.\n"
            f"2. Current Game Stage: It is the {stage}.\n"
            f"3. Our Situation: Production and economy are tracked in the period summary above.\n"
            f"4. Our Strategy: {strategy}\n"
            f"5. Enemy's Strategy: {enemy_line}\n"
            f"6. Key Information: Inference {self.calls} at {seconds // 60:02d}:{seconds % 60:02d}.\n"
            f"7. Suggestions: Follow the build order; adapt defense to sightings.\n"
            f"Decisions:\n{decision_lines}"
        )


def complete_scripted(policy: ScriptedPolicy, user_text: str) -> str:
    return policy.complete(user_text)


class ScriptedBackend:
    """Backend adapter: feeds the request's user message to a ScriptedPolicy."""

    def __init__(self, policy: ScriptedPolicy):
        self.policy = policy

    def complete(self, req: ChatRequest) -> str:
        return self.policy.complete(req.user_text())
