"""Domain types and cost/budget arithmetic shared by every other module.

Labels compare by a normalized key (lowercase, punctuation stripped, whitespace
collapsed) so that surface variants of the same diagnosis are interchangeable
everywhere: distributions, consistency masks, and prediction judging.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from .errors import AllZeroScores

# Raw scores whose maximum falls below this are considered degenerate.
SCORE_FLOOR = 1e-12
# Probability vectors must sum to 1 within this tolerance.
PROB_TOL = 1e-9

_STRIP = re.compile(r"[^a-z0-9\s]")
_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Canonical comparison form: lowercase, punctuation stripped, spaces collapsed."""
    return _WS.sub(" ", _STRIP.sub("", text.lower())).strip()


@dataclass(frozen=True, eq=False)
class Label:
    """A diagnosis (or candidate) name; equality and hashing use the normalized key."""

    text: str

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValueError("label text must be nonempty")

    @cached_property
    def key(self) -> str:
        return normalize_text(self.text)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Label) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:  # keep transcripts readable
        return f"Label({self.text!r})"


class ActionClass(enum.Enum):
    REASONING = "reasoning"
    RETRIEVAL = "retrieval"
    QUESTION = "question"
    LAB_TEST = "labtest"


# Canonical iteration order for sampling and reporting.
CLASS_ORDER = (
    ActionClass.REASONING,
    ActionClass.RETRIEVAL,
    ActionClass.QUESTION,
    ActionClass.LAB_TEST,
)

DEFAULT_COSTS = {
    ActionClass.REASONING: 1.0,
    ActionClass.RETRIEVAL: 1.0,
    ActionClass.QUESTION: 2.0,
    ActionClass.LAB_TEST: 3.0,
}


@dataclass(frozen=True)
class Attachment:
    """Resolved document pinned to a retrieval action."""

    doc_id: str
    excerpt: str


@dataclass(frozen=True)
class Action:
    """One executable information-gathering action with its configured cost."""

    cls: ActionClass
    payload: str
    cost: float
    attachment: Attachment | None = None

    def __post_init__(self) -> None:
        if not self.payload or not self.payload.strip():
            raise ValueError("action payload must be nonempty")
        if self.cost < 0:
            raise ValueError("action cost must be nonnegative")


@dataclass(frozen=True)
class Outcome:
    """Environment response to an action; reasoning actions have none."""

    text: str | None = None

    @property
    def present(self) -> bool:
        return self.text is not None


@dataclass(frozen=True)
class Step:
    action: Action
    outcome: Outcome


class History:
    """Append-only sequence of (action, outcome) steps for one trial."""

    def __init__(self, steps: Iterable[Step] = ()) -> None:
        self._steps: list[Step] = list(steps)

    def append(self, action: Action, outcome: Outcome) -> None:
        self._steps.append(Step(action, outcome))

    @property
    def steps(self) -> tuple[Step, ...]:
        return tuple(self._steps)

    def __len__(self) -> int:
        return len(self._steps)

    def __iter__(self) -> Iterator[Step]:
        return iter(self._steps)

    def __bool__(self) -> bool:
        return bool(self._steps)


def normalize_scores(raw: Sequence[float]) -> list[float]:
    """Scale nonnegative raw scores to a probability vector.

    Raises AllZeroScores when every entry sits below SCORE_FLOOR, so callers can
    retry the upstream elicitation instead of dividing by ~0.
    """
    if len(raw) == 0:
        raise ValueError("cannot normalize an empty score vector")
    if any(s < 0 for s in raw):
        raise ValueError("raw scores must be nonnegative")
    if max(raw) < SCORE_FLOOR:
        raise AllZeroScores(f"all {len(raw)} scores below {SCORE_FLOOR}")
    total = sum(raw)
    return [s / total for s in raw]


@dataclass(frozen=True)
class CandidateDistribution:
    """Top-k predictive distribution: entries sorted by descending probability.

    Ties keep arrival order (stable sort). Labels are distinct under
    normalization and probabilities sum to 1 within PROB_TOL.
    """

    entries: tuple[tuple[Label, float], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("distribution needs at least one entry")
        keys = {label.key for label, _ in self.entries}
        if len(keys) != len(self.entries):
            raise ValueError("candidate labels must be distinct under normalization")
        probs = [p for _, p in self.entries]
        if any(p < 0 or p > 1 + PROB_TOL for p in probs):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(sum(probs) - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {sum(probs)}, expected 1")
        if any(probs[i] < probs[i + 1] for i in range(len(probs) - 1)):
            raise ValueError("entries must be sorted by descending probability")

    @classmethod
    def from_scores(cls, pairs: Sequence[tuple[Label, float]]) -> "CandidateDistribution":
        """Normalize raw scores and sort descending (stable on ties)."""
        probs = normalize_scores([s for _, s in pairs])
        entries = sorted(zip((l for l, _ in pairs), probs), key=lambda e: -e[1])
        return cls(tuple(entries))

    @property
    def k(self) -> int:
        return len(self.entries)

    def labels(self) -> tuple[Label, ...]:
        return tuple(label for label, _ in self.entries)

    def probs(self) -> tuple[float, ...]:
        return tuple(p for _, p in self.entries)

    def top(self) -> tuple[Label, float]:
        return self.entries[0]


@dataclass(frozen=True)
class ConsistencyMask:
    """Boolean survival mask aligned with a candidate distribution's entries."""

    bits: tuple[bool, ...]

    def __post_init__(self) -> None:
        if not self.bits:
            raise ValueError("mask needs at least one bit")

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def true_count(self) -> int:
        return sum(self.bits)


@dataclass(frozen=True)
class TrialConfig:
    """Knobs governing one trial; defaults follow the evaluated setting."""

    budget: float = 20.0
    tau: float = 0.8
    lam: float = 0.1
    k: int = 5
    per_class_candidates: int = 5
    mc_samples: int = 1
    costs: dict[ActionClass, float] = field(default_factory=lambda: dict(DEFAULT_COSTS))
    allowed_classes: frozenset[ActionClass] = frozenset(CLASS_ORDER)
    retry_limit: int = 3

    def __post_init__(self) -> None:
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if not 0 <= self.tau <= 1:
            raise ValueError("tau must lie in [0, 1]")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.k < 1 or self.per_class_candidates < 1 or self.mc_samples < 1:
            raise ValueError("k, per_class_candidates and mc_samples must be >= 1")
        if self.retry_limit < 1:
            raise ValueError("retry_limit must be >= 1")
        missing = [c for c in CLASS_ORDER if c not in self.costs]
        if missing:
            raise ValueError(f"costs missing for {[c.value for c in missing]}")
        if any(self.costs[c] < 0 for c in CLASS_ORDER):
            raise ValueError("costs must be nonnegative")
        if not self.allowed_classes:
            raise ValueError("at least one action class must be allowed")


class TrialOutcome(enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    ABSTAIN = "abstain"


@dataclass(frozen=True)
class TrialResult:
    """Terminal state of one trial."""

    outcome: TrialOutcome
    prediction: Label | None
    spent: float
    steps: int
    abstain_reason: str | None = None
    note: str | None = None

    def __post_init__(self) -> None:
        if self.outcome is TrialOutcome.ABSTAIN and self.prediction is not None:
            raise ValueError("abstaining trials carry no prediction")
        if self.outcome is not TrialOutcome.ABSTAIN and self.prediction is None:
            raise ValueError("decided trials must carry a prediction")
        if self.spent < 0 or self.steps < 0:
            raise ValueError("spent and steps must be nonnegative")


def cumulative_cost(history: History) -> float:
    """Total cost of all actions taken so far."""
    return sum(step.action.cost for step in history)


def affordable(action: Action, spent: float, budget: float) -> bool:
    """True iff taking the action keeps total spend within budget (boundary inclusive)."""
    return spent + action.cost <= budget
