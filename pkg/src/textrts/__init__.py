"""textrts: a text-interfaced macro RTS for language-model agents.

Deterministic integer simulation, textual observations, a summarize-infer-act
pipeline with queue-based cadence, scripted and HTTP model backends, a
difficulty ladder of built-in opponents, match records with replay
verification, metrics, and a web-facing match server.
"""

__version__ = "0.1.0"
