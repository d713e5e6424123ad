"""Budgeted information acquisition with selective prediction.

A zero-shot policy that, at each step, either commits to a diagnosis (once the
top candidate's probability clears a confidence threshold) or picks the next
information-gathering action by trading estimated expected information gain
against action cost, within a hard budget. Ships with an analytic tabular
environment for exact, reproducible evaluation against random, self-evaluation,
and single-class baselines, plus a live backend speaking the standard
chat-completions wire protocol.
"""

__version__ = "0.1.0"

from .core import (
    Action,
    ActionClass,
    Attachment,
    CandidateDistribution,
    ConsistencyMask,
    History,
    Label,
    Outcome,
    TrialConfig,
    TrialOutcome,
    TrialResult,
    affordable,
    cumulative_cost,
    normalize_scores,
)
from .heuristics import (
    ScoredCandidate,
    estimate_eig,
    select_action,
    selective_predict,
    shannon_entropy,
    surrogate_eig,
    utility_score,
)
from .policies import PolicyKind, StepDecision, parse_policy, policy_step, sample_candidates
from .tabular import (
    Posterior,
    TabularWorld,
    bayes_update,
    exact_eig,
    load_world,
    tabular_consistency,
    tabular_simulate,
)

__all__ = [
    "__version__",
    "Action",
    "ActionClass",
    "Attachment",
    "CandidateDistribution",
    "ConsistencyMask",
    "History",
    "Label",
    "Outcome",
    "TrialConfig",
    "TrialOutcome",
    "TrialResult",
    "affordable",
    "cumulative_cost",
    "normalize_scores",
    "ScoredCandidate",
    "estimate_eig",
    "select_action",
    "selective_predict",
    "shannon_entropy",
    "surrogate_eig",
    "utility_score",
    "PolicyKind",
    "StepDecision",
    "parse_policy",
    "policy_step",
    "sample_candidates",
    "Posterior",
    "TabularWorld",
    "bayes_update",
    "exact_eig",
    "load_world",
    "tabular_consistency",
    "tabular_simulate",
]
