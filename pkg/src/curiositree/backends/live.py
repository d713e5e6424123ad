"""Policy backend that elicits everything from a chat-completions model.

Sampling-flavored calls (action generation, simulator responses) run at the
sampling temperature; prediction, judging and scoring run at the scoring
temperature. Each constrained output is parsed tolerantly and re-elicited up
to the retry limit before the call is declared failed.
"""

from __future__ import annotations

import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Callable, Sequence

from ..core import (
    Action,
    ActionClass,
    Attachment,
    CandidateDistribution,
    ConsistencyMask,
    History,
    Label,
)
from ..errors import AllZeroScores, BackendError, EmptyQuery, ParseError
from .client import BackendProfile, ChatTurn, chat_complete
from .parsing import parse_bool_list, parse_float_list, parse_string_list, parse_tuple_list
from .prompts import CLASS_TOKENS, rag_action_text, render_prompt, retrieval_outcome_text
from .retrieval import Corpus, retrieve

log = logging.getLogger(__name__)

_SAMPLING_KINDS = {
    ActionClass.REASONING: "sample_reasoning",
    ActionClass.RETRIEVAL: "sample_queries",
    ActionClass.QUESTION: "sample_questions",
    ActionClass.LAB_TEST: "sample_experiments",
}


class LivePolicyBackend:
    def __init__(
        self,
        profile: BackendProfile,
        costs: dict[ActionClass, float],
        retry_limit: int = 3,
        temperature_sample: float = 0.7,
        temperature_score: float = 0.0,
        corpus: Corpus | None = None,
        retrieval_p: int = 1,
        excerpt_chars: int = 1200,
        max_concurrency: int = 1,
    ) -> None:
        self.sample_profile = replace(profile, temperature=temperature_sample)
        self.score_profile = replace(profile, temperature=temperature_score)
        self.costs = costs
        self.retry_limit = retry_limit
        self.corpus = corpus
        self.retrieval_p = retrieval_p
        self.excerpt_chars = excerpt_chars
        self.executor = (
            ThreadPoolExecutor(max_workers=max_concurrency) if max_concurrency > 1 else None
        )

    def close(self) -> None:
        if self.executor is not None:
            self.executor.shutdown(wait=True)

    def _elicit(self, profile: BackendProfile, turns: Sequence[ChatTurn], parse: Callable):
        """Call the model and parse, re-eliciting on grammar violations."""
        last: Exception | None = None
        for _ in range(self.retry_limit):
            text = chat_complete(profile, turns)
            try:
                return parse(text)
            except (ParseError, AllZeroScores) as exc:
                last = exc
        raise BackendError(f"unparseable output after {self.retry_limit} attempts: {last}")

    def predict_distribution(self, history: History, k: int) -> CandidateDistribution:
        turns = render_prompt("prediction", history=history, k=k)

        def parse(text: str) -> CandidateDistribution:
            return CandidateDistribution.from_scores(parse_tuple_list(text, k))

        return self._elicit(self.score_profile, turns, parse)

    def sample_actions(
        self, history: History, cls: ActionClass, k_prime: int, rng: random.Random
    ) -> list[Action]:
        if cls is ActionClass.RETRIEVAL and self.corpus is None:
            log.warning("retrieval sampling skipped: no corpus configured")
            return []
        turns = render_prompt(_SAMPLING_KINDS[cls], history=history, k_prime=k_prime)
        payloads = self._elicit(
            self.sample_profile, turns, lambda text: parse_string_list(text, k_prime)
        )
        actions = []
        for payload in payloads:
            attachment = None
            if cls is ActionClass.RETRIEVAL:
                try:
                    hits = retrieve(self.corpus, payload, 1, self.excerpt_chars)
                except EmptyQuery:
                    log.warning("dropping retrieval candidate with empty query %r", payload)
                    continue
                if not hits:
                    continue
                doc, excerpt = hits[0]
                attachment = Attachment(doc.id, excerpt)
            actions.append(Action(cls, payload, self.costs[cls], attachment))
        return actions

    def simulate_response(self, history: History, action: Action, locked: Label) -> str:
        if action.cls is ActionClass.QUESTION:
            turns = render_prompt("sim_question", question=action.payload, locked_label=locked.text)
        else:
            turns = render_prompt("sim_experiment", test=action.payload, locked_label=locked.text)
        return chat_complete(self.sample_profile, turns)

    def judge_consistency(
        self, action: Action, response: str | None, labels: Sequence[Label]
    ) -> ConsistencyMask:
        token = CLASS_TOKENS[action.cls]
        if action.cls is ActionClass.RETRIEVAL:
            if action.attachment is None:
                raise BackendError(f"retrieval action {action.payload!r} was never resolved")
            rendered_action = (action.payload, action.attachment.doc_id, action.attachment.excerpt)
        else:
            rendered_action = action.payload
        turns = render_prompt(
            "assignment",
            action_type=token,
            action=rendered_action,
            response=response,
            candidates=[label.text for label in labels],
        )
        bits = self._elicit(
            self.score_profile, turns, lambda text: parse_bool_list(text, len(labels))
        )
        return ConsistencyMask(bits)

    def score_actions(self, history: History, actions: Sequence[Action]) -> list[float]:
        texts = []
        for action in actions:
            if action.cls is ActionClass.RETRIEVAL and action.attachment is not None:
                texts.append(
                    rag_action_text(
                        action.payload, retrieval_outcome_text(action.attachment)
                    )
                )
            else:
                texts.append(action.payload)
        turns = render_prompt(
            "self_eval",
            actions=texts,
            action_types=[CLASS_TOKENS[a.cls] for a in actions],
            costs={CLASS_TOKENS[c]: cost for c, cost in self.costs.items()},
        )
        return self._elicit(
            self.score_profile, turns, lambda text: parse_float_list(text, len(actions))
        )
