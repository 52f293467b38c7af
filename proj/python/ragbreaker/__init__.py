"""Poisoning red-team harness for a retrieval-augmented assistant.

Thin re-export of the native module. Structured results are plain dicts in
the same shape the HTTP service returns.
"""

from ._ragbreaker import (
    RagbreakerError,
    Session,
    bertscore,
    cosine,
    craft_poison_document,
    embed_text,
    make_adversarial_query,
    percent_drop,
    percent_drop_exact,
    run_trial_suite,
    tokenize,
)

__all__ = [
    "RagbreakerError",
    "Session",
    "bertscore",
    "cosine",
    "craft_poison_document",
    "embed_text",
    "make_adversarial_query",
    "percent_drop",
    "percent_drop_exact",
    "run_trial_suite",
    "tokenize",
]

__version__ = "0.1.0"
