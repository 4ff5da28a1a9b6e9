"""Completion backends and prompt construction."""

from textrts.backends.http import Endpoint, HttpBackend, InferenceError, complete_http
from textrts.backends.prompts import (
    ChatRequest,
    PromptTemplate,
    RACE_NOTES,
    TEMPLATES,
    build_prompt,
)
from textrts.backends.scripted import ScriptedBackend, ScriptedPolicy, complete_scripted

__all__ = [
    "ChatRequest",
    "Endpoint",
    "HttpBackend",
    "InferenceError",
    "PromptTemplate",
    "RACE_NOTES",
    "ScriptedBackend",
    "ScriptedPolicy",
    "TEMPLATES",
    "build_prompt",
    "complete_http",
    "complete_scripted",
]
