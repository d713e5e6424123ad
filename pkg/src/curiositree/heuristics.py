"""Scoring mathematics for action selection.

The policy values an action by how much it is expected to shrink uncertainty
over the candidate diagnoses: expected information gain, the prior entropy
minus the expected posterior entropy (natural log throughout, so values are in
nats). A full posterior is unavailable at test time, so the gain is estimated
with a consistency surrogate: simulate the response while conditioning the
simulator on each candidate in turn (prior locking), ask a judge which
candidates remain consistent with the simulated response, and score the draw
as -log(surviving fraction). Averaging over locked candidates (and Monte Carlo
draws) yields the estimate. Reasoning and retrieval actions produce no
environment response; they get a single judgment with the response absent.

Action utility trades the estimate against cost (eig - lambda * cost); the
selective-prediction rule stops the trial once the top candidate's probability
clears the confidence threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Callable, Sequence

from .core import Action, ActionClass, CandidateDistribution, ConsistencyMask, History, Label
from .errors import NoAffordableAction

# simulate(history, action, locked_label) -> response text (None never returned here)
Simulator = Callable[[History, Action, Label], str]
# judge(action, response_or_None, candidate_labels) -> mask over the candidates
Judge = Callable[[Action, "str | None", Sequence[Label]], ConsistencyMask]

_RESPONSELESS = (ActionClass.REASONING, ActionClass.RETRIEVAL)


def shannon_entropy(dist: CandidateDistribution) -> float:
    """Entropy of the candidate distribution in nats; 0 log 0 taken as 0."""
    return -sum(p * math.log(p) for _, p in dist.entries if p > 0.0)


def surrogate_eig(mask: ConsistencyMask) -> float:
    """-log of the surviving fraction; 0 when nothing survives (judge degenerate).

    All-true masks score 0 (nothing ruled out), all-false score 0 by convention,
    and a lone survivor scores the maximum log(k).
    """
    alive = mask.true_count
    if alive == 0:
        return 0.0
    return -math.log(alive / len(mask))


def estimate_eig(
    action: Action,
    history: History,
    dist: CandidateDistribution,
    simulate: Simulator,
    judge: Judge,
    mc_samples: int = 1,
    executor: Executor | None = None,
) -> float:
    """Prior-locked estimate of the action's expected information gain.

    Question/lab-test actions: for each candidate label (locked as the
    simulator's ground truth) draw mc_samples responses, judge each against the
    full candidate list, and average the surrogate scores. Reasoning/retrieval
    actions get one responseless judgment. When an executor is supplied the
    simulate+judge pairs run concurrently; results are aggregated by candidate
    index so the estimate is independent of completion order. Backend failures
    propagate to the caller, which drops the action from scoring.
    """
    labels = dist.labels()
    if action.cls in _RESPONSELESS:
        return surrogate_eig(judge(action, None, labels))

    def one_draw(locked: Label) -> float:
        response = simulate(history, action, locked)
        return surrogate_eig(judge(action, response, labels))

    locked_labels = [label for label in labels for _ in range(mc_samples)]
    if executor is None:
        values = [one_draw(locked) for locked in locked_labels]
    else:
        futures = [executor.submit(one_draw, locked) for locked in locked_labels]
        values = [f.result() for f in futures]
    return sum(values) / len(values)


def utility_score(eig: float, action: Action, lam: float) -> float:
    """Information gain discounted by the budgeted cost of obtaining it."""
    return eig - lam * action.cost


@dataclass(frozen=True)
class ScoredCandidate:
    """A candidate action with its gain estimate and utility.

    For the self-evaluation baseline, score holds the model-assigned score and
    utility equals it (no cost discount is applied there).
    """

    action: Action
    score: float
    utility: float
    sample_index: int


def select_action(candidates: Sequence[ScoredCandidate]) -> Action:
    """Argmax utility; ties broken by lower cost, then lower sample index."""
    if not candidates:
        raise NoAffordableAction("no candidates to select from")
    best = min(candidates, key=lambda c: (-c.utility, c.action.cost, c.sample_index))
    return best.action


def selective_predict(dist: CandidateDistribution, tau: float) -> Label | None:
    """Return the top label once its probability clears tau, else None."""
    label, prob = dist.top()
    return label if prob >= tau else None
