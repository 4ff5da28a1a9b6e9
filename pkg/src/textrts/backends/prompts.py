"""System-prompt templates and chat request construction.

Two templates ship: `simple` asks only for a five-part analysis; `full` adds
the situation breakdown, race notes, suggestions, and the decision request.
The filled system message always carries the chain length and the complete
action dictionary so the model can only name real actions.
"""

from __future__ import annotations

from dataclasses import dataclass

from textrts.extractor import ActionCatalog
from textrts.sim.types import Race

DEFAULT_TEMPERATURE = 0.1
DEFAULT_MAX_TOKENS = 1024
DEFAULT_TIMEOUT = 30.0
DEFAULT_RETRIES = 3


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[tuple[str, str], ...]
    model: str = "default"
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    timeout: float = DEFAULT_TIMEOUT
    retries: int = DEFAULT_RETRIES

    def system_text(self) -> str:
        return self.messages[0][1]

    def user_text(self) -> str:
        return self.messages[-1][1]


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str


RACE_NOTES = {
    Race.PROTOSS: "For Protoss, keep an eye on Nexus's energy to Chrono Boost important structures.",
    Race.ZERG: (
        "For Zerg, pay attention to whether there are enough larvae. "
        "If not, we should consider adding the INJECTLARVA command to the queue."
    ),
}

_SIMPLE_BODY = """You are an AI trained in analyzing and summarizing real-time strategy games. You understand the nuances and strategies of the {race} race.
Based on the summaries of multiple rounds in a game, we want you to analyze the game progression in a structured way. Your analysis should include the following aspects:
1. Information Overview: Provide a brief overview of the current situation based on all the rounds.
2. Current Game Stage: Determine the stage of the game based on the information of all rounds. Is it the early game, mid-game, or late game?
3. Our Current Strategy: From the information of all rounds, infer what our strategy might be.
4. Enemy's Strategy: Infer what the enemy's strategy might be, based on the information available.
5. Key Information: Highlight the most important aspects from all rounds that have significantly influenced the game.

The action dictionary for {race} is:
{catalog}
Conclude with exactly {k} decisions from the action dictionary, each on its own line formatted as `index: <ACTION>`."""

_FULL_BODY = """You are an AI trained in analyzing and summarizing real-time strategy games. You understand the nuances and strategies of the {race} race.
Based on the summaries of multiple rounds in a game, we want you to analyze the game progression in a structured way. Your analysis should include the following aspects:
1. Game Overview: Provide a brief overview of the current situation based on all the rounds.
2. Current Game Stage: Determine the stage of the game based on the information of all rounds. Is it the early game, mid-game, or late game?
3. Our Situation: Describe our current status in terms of:
   a. Units and Buildings: Analyze the state of our units and buildings.
   b. Economy: Evaluate our economic condition, including resource collection and usage.
   c. Technology: Describe the status of our technological research and what technologies we have unlocked so far. Analyze our technology tree, indicating the available and potential upgrades or units.
4. Our Strategy: Infer our potential strategy based on our current situation and the information of all rounds.
5. Enemy's Strategy: Infer the enemy's potential strategy, based on the available information.
6. Key Information: Highlight the most important aspects from all rounds that have significantly influenced the game.
7. Race note: {race_notes}
8. Based on the game situation and strategies used by both sides, provide specific suggestions for the following areas:
   a. Our Strategy: Propose adjustments to our current strategy to counter the enemy's moves and capitalize on our strengths.
   b. Units and Buildings: Offer ways to enhance our unit composition and improve our building layout, suited to the current stage of the game.
   c. Economy: Recommend better practices for resource gathering and usage, in line with our strategic needs.
   d. Technology: Suggest focused research paths to gain technological advantages, considering our current research status and technology tree.
9. Lastly, consider the current situation and the suggestions provided, make {k} actionable and specific decisions from the action dictionary below. This dictionary comprises four categories of actions: unit production, building construction, technology research, and other actions. Remember to align these decisions with the current stage of the game, and avoid proposing actions that are not currently feasible.

The action dictionary for {race} is:
{catalog}
Emit the decisions as a final `Decisions:` section, each on its own line formatted as `index: <ACTION>`."""

TEMPLATES = {
    "simple": PromptTemplate(id="simple", body=_SIMPLE_BODY),
    "full": PromptTemplate(id="full", body=_FULL_BODY),
}


def build_prompt(
    template: PromptTemplate,
    race: Race,
    k: int,
    catalog: ActionCatalog,
    period_text: str,
    model: str = "default",
) -> ChatRequest:
    """System message = filled template (race, K, full catalog, race notes);
    user message = the period summary. Pure, never mutates inputs."""
    if not period_text:
        raise ValueError("period summary must be non-empty")
    system = template.body.format(
        race=race.display,
        k=k,
        catalog="\n".join(catalog.canonical_tokens()),
        race_notes=RACE_NOTES[race],
    )
    return ChatRequest(messages=(("system", system), ("user", period_text)), model=model)
