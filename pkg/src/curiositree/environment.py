"""The true environment: executes actions and grades final predictions.

Two modes share one interface. Tabular mode draws responses from the world's
likelihood rows for the hidden ground-truth disease and grades predictions by
normalized label (plus synonyms). Live mode asks an oracle model that knows
the ground truth, and grades through the prediction oracle's terminal markers.
The ground truth never flows through any policy-visible code path; only
env_step and judge_prediction read it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .backends.client import BackendProfile, chat_complete
from .backends.prompts import (
    FAILURE_MARKER,
    SUCCESS_MARKER,
    render_prompt,
    retrieval_outcome_text,
)
from .backends.retrieval import Corpus, retrieve
from .core import Action, ActionClass, Attachment, History, Label, Outcome
from .errors import JudgeError
from .tabular import TabularWorld, tabular_simulate


@dataclass
class EnvHandle:
    """One trial's environment: mode, hidden ground truth, and the trial generator."""

    ground_truth: Label
    rng: random.Random
    world: TabularWorld | None = None
    profile: BackendProfile | None = None
    corpus: Corpus | None = None
    retrieval_p: int = 1
    excerpt_chars: int = 1200

    def __post_init__(self) -> None:
        if (self.world is None) == (self.profile is None):
            raise ValueError("exactly one of world (tabular) or profile (live) is required")

    @property
    def mode(self) -> str:
        return "tabular" if self.world is not None else "live"


def env_step(env: EnvHandle, history: History, action: Action) -> Outcome:
    """Execute the action against the true environment and return its outcome.

    Reasoning has no response and consumes no randomness. Retrieval returns the
    text of the attached document(s); for p > 1 the top-p excerpt blocks are
    joined. Questions and lab tests are answered from the ground-truth disease.
    """
    if action.cls is ActionClass.REASONING:
        return Outcome(None)
    if action.cls is ActionClass.RETRIEVAL:
        if action.attachment is not None and env.retrieval_p == 1:
            return Outcome(retrieval_outcome_text(action.attachment))
        if env.corpus is None:
            raise ValueError(f"retrieval action {action.payload!r} without a corpus")
        hits = retrieve(env.corpus, action.payload, env.retrieval_p, env.excerpt_chars)
        blocks = [retrieval_outcome_text(Attachment(doc.id, excerpt)) for doc, excerpt in hits]
        return Outcome("\n\n".join(blocks))
    if env.mode == "tabular":
        return Outcome(tabular_simulate(env.world, env.ground_truth, action.payload, env.rng))
    kind = "question" if action.cls is ActionClass.QUESTION else "experiment"
    turns = render_prompt(
        "env_oracle",
        action_type=kind,
        ground_truth=env.ground_truth.text,
        question=action.payload,
    )
    return Outcome(chat_complete(env.profile, turns))


def judge_prediction(prediction: Label, env: EnvHandle) -> bool:
    """Grade a final prediction against the hidden ground truth.

    Tabular mode compares normalized labels, accepting any synonym the world
    file declares for the ground truth. Live mode consults the prediction
    oracle and requires one of its terminal markers; anything else is a
    JudgeError (the caller records a failed trial with a diagnostic).
    """
    if env.mode == "tabular":
        gt_key = env.ground_truth.key
        if prediction.key == gt_key:
            return True
        return prediction.key in env.world.synonyms.get(gt_key, frozenset())
    turns = render_prompt(
        "env_oracle",
        action_type="pred",
        ground_truth=env.ground_truth.text,
        question=f"Is it '{prediction.text}'?",
    )
    verdict = chat_complete(env.profile, turns)
    if SUCCESS_MARKER in verdict:
        return True
    if FAILURE_MARKER in verdict:
        return False
    raise JudgeError(f"prediction oracle returned neither marker: {verdict!r}")
