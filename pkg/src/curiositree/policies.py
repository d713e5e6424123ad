"""Step policies: how one loop iteration turns state into a decision.

All policies share the same skeleton, taken in order: (1) elicit the top-k
predictive distribution fresh from the backend, (2) stop and predict if the
top candidate clears the confidence threshold, (3) sample affordable candidate
actions for every allowed class, abstaining if none remain, (4) pick one
candidate by the policy's scoring rule. Only step 4 differs between the
information-gain policy, the uniform-random baseline, and the self-evaluation
baseline; the unimodal baselines are the information-gain rule restricted to a
single action class.

Backends are duck-typed and must provide: predict_distribution(history, k),
sample_actions(history, cls, k_prime, rng), simulate_response(history, action,
locked_label), judge_consistency(action, response, labels),
score_actions(history, actions), and an `executor` attribute (None for
sequential estimation).
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

from .core import (
    CLASS_ORDER,
    Action,
    ActionClass,
    CandidateDistribution,
    History,
    Label,
    TrialConfig,
    affordable,
)
from .errors import BackendError
from .heuristics import ScoredCandidate, estimate_eig, select_action, selective_predict, utility_score

log = logging.getLogger(__name__)

POLICY_NAMES = ("curiositree", "random", "self_eval")

ABSTAIN_NO_AFFORDABLE = "no_affordable_action"
ABSTAIN_BACKEND = "backend_failure"
ABSTAIN_REASONS = (ABSTAIN_NO_AFFORDABLE, "budget_exhausted", ABSTAIN_BACKEND)


@dataclass(frozen=True)
class PolicyKind:
    """Scoring rule plus the action classes it may draw from."""

    name: str
    allowed: frozenset[ActionClass] = frozenset(CLASS_ORDER)
    label: str = ""

    def __post_init__(self) -> None:
        if self.name not in POLICY_NAMES:
            raise ValueError(f"policy name must be one of {POLICY_NAMES}")
        if not self.allowed:
            raise ValueError("policy needs at least one allowed class")
        if not self.label:
            object.__setattr__(self, "label", self.name)


def parse_policy(spec: str) -> PolicyKind:
    """Map a CLI policy name to its kind.

    unimodal:<class> applies the information-gain rule with a single-class
    whitelist.
    """
    spec = spec.strip().lower()
    if spec == "curiositree":
        return PolicyKind("curiositree")
    if spec == "random":
        return PolicyKind("random")
    if spec in ("self-eval", "self_eval"):
        return PolicyKind("self_eval", label="self-eval")
    if spec.startswith("unimodal:"):
        token = spec.split(":", 1)[1]
        try:
            cls = ActionClass(token)
        except ValueError:
            raise ValueError(f"unknown action class {token!r} in policy {spec!r}") from None
        return PolicyKind("curiositree", frozenset({cls}), label=f"unimodal:{cls.value}")
    raise ValueError(f"unknown policy {spec!r}")


ALL_POLICY_SPECS = (
    "curiositree",
    "random",
    "self-eval",
    "unimodal:reasoning",
    "unimodal:retrieval",
    "unimodal:question",
    "unimodal:labtest",
)


@dataclass(frozen=True)
class StepDecision:
    """Predict, act, or abstain, with the evidence that led there."""

    kind: str  # "predict" | "act" | "abstain"
    distribution: CandidateDistribution | None = None
    label: Label | None = None
    action: Action | None = None
    candidates: tuple[ScoredCandidate, ...] = field(default=())
    reason: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("predict", "act", "abstain"):
            raise ValueError(f"unknown decision kind {self.kind!r}")
        if self.kind == "predict" and self.label is None:
            raise ValueError("predict decisions need a label")
        if self.kind == "act" and self.action is None:
            raise ValueError("act decisions need an action")
        if self.kind == "abstain" and self.reason not in ABSTAIN_REASONS:
            raise ValueError(f"abstain reason must be one of {ABSTAIN_REASONS}")


def sample_candidates(
    history: History,
    spent: float,
    config: TrialConfig,
    backend,
    rng: random.Random,
) -> list[Action]:
    """Draw up to per_class_candidates actions per allowed class, pruned to budget.

    A class whose sampling fails after retries contributes nothing (logged);
    candidates the remaining budget cannot cover are discarded.
    """
    candidates: list[Action] = []
    for cls in CLASS_ORDER:
        if cls not in config.allowed_classes:
            continue
        try:
            batch = backend.sample_actions(history, cls, config.per_class_candidates, rng)
        except BackendError as exc:
            log.warning("sampling %s candidates failed: %s", cls.value, exc)
            continue
        candidates.extend(a for a in batch if affordable(a, spent, config.budget))
    return candidates


def _score_curiositree(
    candidates: list[Action],
    history: History,
    dist: CandidateDistribution,
    config: TrialConfig,
    backend,
) -> list[ScoredCandidate]:
    scored = []
    for i, action in enumerate(candidates):
        try:
            eig = estimate_eig(
                action,
                history,
                dist,
                backend.simulate_response,
                backend.judge_consistency,
                config.mc_samples,
                backend.executor,
            )
        except BackendError as exc:
            log.warning("dropping candidate %r from scoring: %s", action.payload, exc)
            continue
        scored.append(ScoredCandidate(action, eig, utility_score(eig, action, config.lam), i))
    return scored


def policy_step(
    kind: PolicyKind,
    history: History,
    spent: float,
    config: TrialConfig,
    backend,
    rng: random.Random,
) -> StepDecision:
    """Run one iteration of the shared decision skeleton for the given policy."""
    try:
        dist = backend.predict_distribution(history, config.k)
    except BackendError as exc:
        log.warning("predictive distribution failed: %s", exc)
        return StepDecision("abstain", reason=ABSTAIN_BACKEND)

    label = selective_predict(dist, config.tau)
    if label is not None:
        return StepDecision("predict", dist, label=label)

    candidates = sample_candidates(history, spent, config, backend, rng)
    if not candidates:
        return StepDecision("abstain", dist, reason=ABSTAIN_NO_AFFORDABLE)

    if kind.name == "random":
        action = rng.choice(candidates)
        return StepDecision("act", dist, action=action)

    if kind.name == "self_eval":
        try:
            scores = backend.score_actions(history, candidates)
        except BackendError as exc:
            log.warning("self-evaluation scoring failed: %s", exc)
            return StepDecision("abstain", dist, reason=ABSTAIN_BACKEND)
        scored = [
            ScoredCandidate(a, s, s, i) for i, (a, s) in enumerate(zip(candidates, scores))
        ]
        return StepDecision("act", dist, action=select_action(scored), candidates=tuple(scored))

    scored = _score_curiositree(candidates, history, dist, config, backend)
    if not scored:
        return StepDecision("abstain", dist, reason=ABSTAIN_BACKEND)
    return StepDecision("act", dist, action=select_action(scored), candidates=tuple(scored))
