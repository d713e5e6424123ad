"""Analytic worlds: exact Bayes updates and exact expected information gain.

A tabular world is a finite disease set with priors plus a pool of queries,
each mapping every disease to a distribution over a finite response alphabet.
Everything the live stack estimates with prompts is computable in closed form
here, which makes the world both the deterministic backend for tests and the
oracle that the surrogate estimator is checked against.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .backends.retrieval import Corpus, retrieve
from .core import (
    Action,
    ActionClass,
    Attachment,
    CandidateDistribution,
    ConsistencyMask,
    History,
    Label,
    normalize_text,
)
from .errors import EmptyQuery, ImpossibleResponse, UnknownIdentifier, WorldFormatError
from .heuristics import surrogate_eig

ROW_SUM_TOL = 1e-6


@dataclass(frozen=True)
class Query:
    """One world action: a response alphabet and per-disease likelihood rows."""

    id: str
    cls: ActionClass
    responses: tuple[str, ...]
    likelihoods: dict[str, tuple[float, ...]]  # normalized disease key -> row

    def row(self, disease_key: str) -> tuple[float, ...]:
        try:
            return self.likelihoods[disease_key]
        except KeyError:
            raise UnknownIdentifier(f"query {self.id!r} has no row for {disease_key!r}") from None


@dataclass(frozen=True)
class TabularWorld:
    diseases: tuple[tuple[Label, float], ...]  # (label, prior), priors sum to 1
    queries: dict[str, Query]
    synonyms: dict[str, frozenset[str]] = field(default_factory=dict)  # gt key -> alias keys

    def labels(self) -> tuple[Label, ...]:
        return tuple(label for label, _ in self.diseases)

    def index_of(self, label: Label) -> int:
        key = label.key
        for i, (known, _) in enumerate(self.diseases):
            if known.key == key:
                return i
        raise UnknownIdentifier(f"unknown disease {label.text!r}")

    def has_disease(self, label: Label) -> bool:
        key = label.key
        return any(known.key == key for known, _ in self.diseases)

    def query(self, query_id: str) -> Query:
        try:
            return self.queries[query_id]
        except KeyError:
            raise UnknownIdentifier(f"unknown query {query_id!r}") from None

    def queries_of_class(self, cls: ActionClass) -> list[Query]:
        return [q for q in self.queries.values() if q.cls is cls]

    def prior(self) -> "Posterior":
        return Posterior(tuple(p for _, p in self.diseases))


@dataclass(frozen=True)
class Posterior:
    """Probability vector aligned with the world's disease order."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.probs:
            raise ValueError("posterior needs at least one entry")
        if any(p < 0 for p in self.probs):
            raise ValueError("posterior probabilities must be nonnegative")
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise ValueError(f"posterior sums to {sum(self.probs)}, expected 1")

    def entropy(self) -> float:
        return -sum(p * math.log(p) for p in self.probs if p > 0.0)

    def top_k(self, world: TabularWorld, k: int) -> CandidateDistribution:
        """Truncate to the k most probable diseases and renormalize.

        Ties keep world order. Zero-mass diseases are excluded even when fewer
        than k remain: an elicited guess list never names candidates the
        evidence has already ruled out, and prior-locking on them would make
        settled queries look informative again.
        """
        alive = [(label, p) for label, p in zip(world.labels(), self.probs) if p > 0.0]
        alive.sort(key=lambda e: -e[1])
        pairs = alive[:k]
        total = sum(p for _, p in pairs)
        entries = tuple((label, p / total) for label, p in pairs)
        return CandidateDistribution(entries)


def bayes_update(post: Posterior, world: TabularWorld, query_id: str, response: str) -> Posterior:
    """Exact posterior after observing the response to the query."""
    query = world.query(query_id)
    try:
        ri = query.responses.index(response)
    except ValueError:
        raise ImpossibleResponse(
            f"response {response!r} not in alphabet of query {query_id!r}"
        ) from None
    weights = [
        p * query.row(label.key)[ri] for (label, _), p in zip(world.diseases, post.probs)
    ]
    total = sum(weights)
    if total <= 0.0:
        raise ImpossibleResponse(
            f"response {response!r} to query {query_id!r} has zero marginal probability"
        )
    return Posterior(tuple(w / total for w in weights))


def response_marginals(post: Posterior, world: TabularWorld, query_id: str) -> list[float]:
    """Marginal probability of each response under the posterior."""
    query = world.query(query_id)
    rows = [query.row(label.key) for label, _ in world.diseases]
    return [
        sum(p * row[ri] for p, row in zip(post.probs, rows))
        for ri in range(len(query.responses))
    ]


def exact_eig(post: Posterior, world: TabularWorld, query_id: str) -> float:
    """Exact expected information gain of the query by full enumeration.

    H(post) - sum_r P(r) H(post | r), skipping responses with zero marginal
    probability. Nonnegative up to float rounding.
    """
    query = world.query(query_id)
    acc = 0.0
    for ri, response in enumerate(query.responses):
        marginal = response_marginals(post, world, query_id)[ri]
        if marginal <= 0.0:
            continue
        acc += marginal * bayes_update(post, world, query_id, response).entropy()
    return post.entropy() - acc


def tabular_simulate(
    world: TabularWorld, disease: Label, query_id: str, rng: random.Random
) -> str:
    """Draw one response for the query conditioned on the disease.

    Exactly one uniform variate is consumed per call, including for
    deterministic rows, so replay never depends on row shape.
    """
    query = world.query(query_id)
    if not query.responses:
        raise UnknownIdentifier(f"query {query_id!r} has no response alphabet to sample")
    if not world.has_disease(disease):
        raise UnknownIdentifier(f"unknown disease {disease.text!r}")
    row = query.row(disease.key)
    u = rng.random()
    acc = 0.0
    last_positive = None
    for response, p in zip(query.responses, row):
        if p <= 0.0:
            continue
        last_positive = response
        acc += p
        if u < acc:
            return response
    if last_positive is None:
        raise ImpossibleResponse(f"query {query_id!r} row for {disease.key!r} is all zero")
    return last_positive  # u landed in rounding slack past the final bucket


def tabular_consistency(
    world: TabularWorld,
    candidates: Sequence[Label],
    query_id: str,
    response: str | None,
) -> ConsistencyMask:
    """Judge which candidates a response fails to rule out.

    Absent responses (reasoning/retrieval) rule nothing out. Candidates not in
    the world are never ruled out either: the table has no evidence against
    them.
    """
    if not candidates:
        raise ValueError("need at least one candidate to judge")
    if response is None:
        return ConsistencyMask(tuple(True for _ in candidates))
    query = world.query(query_id)
    try:
        ri = query.responses.index(response)
    except ValueError:
        raise UnknownIdentifier(
            f"response {response!r} not in alphabet of query {query_id!r}"
        ) from None
    bits = []
    for candidate in candidates:
        if not world.has_disease(candidate):
            bits.append(True)
        else:
            bits.append(query.row(candidate.key)[ri] > 0.0)
    return ConsistencyMask(tuple(bits))


def expected_surrogate_eig(
    dist: CandidateDistribution, world: TabularWorld, query_id: str
) -> float:
    """Exact expectation of the prior-locked consistency surrogate.

    Enumerates every (locked candidate, response) pair instead of Monte Carlo
    sampling, so it equals the limit of the sampled estimate. Locked candidates
    must be world diseases.
    """
    query = world.query(query_id)
    labels = dist.labels()
    total = 0.0
    for label in labels:
        row = query.row(label.key)
        for ri, response in enumerate(query.responses):
            p = row[ri]
            if p <= 0.0:
                continue
            total += p * surrogate_eig(tabular_consistency(world, labels, query_id, response))
    return total / len(labels)


def is_deterministic_partition(world: TabularWorld, query_id: str) -> bool:
    """True when every disease emits exactly one response with certainty."""
    query = world.query(query_id)
    for label, _ in world.diseases:
        row = query.row(label.key)
        if not any(p == 1.0 for p in row):
            return False
    return True


def posterior_from_history(world: TabularWorld, history: History) -> Posterior:
    """Replay recorded question/lab-test responses through exact Bayes updates.

    Reasoning and retrieval steps carry no likelihood model and leave the
    posterior unchanged, as do actions outside the world's query table.
    """
    post = world.prior()
    for step in history:
        if step.action.cls in (ActionClass.QUESTION, ActionClass.LAB_TEST):
            if step.outcome.present and step.action.payload in world.queries:
                post = bayes_update(post, world, step.action.payload, step.outcome.text)
    return post


# --- world file loading ---------------------------------------------------

_SIMULATED_CLASSES = (ActionClass.QUESTION, ActionClass.LAB_TEST)


def _parse_class(raw: str, where: str) -> ActionClass:
    try:
        return ActionClass(raw)
    except ValueError:
        valid = [c.value for c in ActionClass]
        raise WorldFormatError(f"{where}: class {raw!r} not one of {valid}") from None


def world_from_dict(data: dict) -> TabularWorld:
    """Validate and build a world; renormalizes priors and rows within tolerance."""
    if not isinstance(data, dict):
        raise WorldFormatError("world file must hold a JSON object")
    raw_diseases = data.get("diseases")
    if not raw_diseases:
        raise WorldFormatError("world needs a nonempty 'diseases' array")

    diseases: list[tuple[Label, float]] = []
    seen_keys: set[str] = set()
    for i, entry in enumerate(raw_diseases):
        try:
            label = Label(entry["label"])
            prior = float(entry["prior"])
        except (KeyError, TypeError, ValueError) as exc:
            raise WorldFormatError(f"diseases[{i}]: {exc}") from None
        if prior < 0:
            raise WorldFormatError(f"diseases[{i}]: prior must be nonnegative")
        if label.key in seen_keys:
            raise WorldFormatError(f"diseases[{i}]: duplicate label {label.text!r}")
        seen_keys.add(label.key)
        diseases.append((label, prior))
    prior_total = sum(p for _, p in diseases)
    if abs(prior_total - 1.0) > ROW_SUM_TOL:
        raise WorldFormatError(f"priors sum to {prior_total}, expected 1 within {ROW_SUM_TOL}")
    diseases = [(label, p / prior_total) for label, p in diseases]

    queries: dict[str, Query] = {}
    for i, entry in enumerate(data.get("queries", [])):
        where = f"queries[{i}]"
        try:
            qid = entry["id"]
            cls = _parse_class(entry["class"], where)
        except (KeyError, TypeError) as exc:
            raise WorldFormatError(f"{where}: {exc}") from None
        if not isinstance(qid, str) or not qid.strip():
            raise WorldFormatError(f"{where}: id must be a nonempty string")
        if qid in queries:
            raise WorldFormatError(f"{where}: duplicate query id {qid!r}")
        responses = tuple(entry.get("responses", ()))
        raw_rows = entry.get("likelihoods", {})
        if cls in _SIMULATED_CLASSES:
            if not responses:
                raise WorldFormatError(f"{where}: {cls.value} query needs a response alphabet")
            if len(set(responses)) != len(responses):
                raise WorldFormatError(f"{where}: duplicate response tokens")
            rows: dict[str, tuple[float, ...]] = {}
            by_key = {label.key: label for label, _ in diseases}
            raw_keys = {normalize_text(name): name for name in raw_rows}
            for key, label in by_key.items():
                if key not in raw_keys:
                    raise WorldFormatError(f"{where}: missing likelihood row for {label.text!r}")
                row = [float(v) for v in raw_rows[raw_keys[key]]]
                if len(row) != len(responses):
                    raise WorldFormatError(
                        f"{where}: row for {label.text!r} has {len(row)} entries, "
                        f"expected {len(responses)}"
                    )
                if any(v < 0 for v in row):
                    raise WorldFormatError(f"{where}: negative likelihood for {label.text!r}")
                total = sum(row)
                if abs(total - 1.0) > ROW_SUM_TOL:
                    raise WorldFormatError(
                        f"{where}: row for {label.text!r} sums to {total}, "
                        f"expected 1 within {ROW_SUM_TOL}"
                    )
                rows[key] = tuple(v / total for v in row)
            queries[qid] = Query(qid, cls, responses, rows)
        else:
            # reasoning/retrieval entries declare pool membership only
            queries[qid] = Query(qid, cls, responses, {})

    synonyms: dict[str, frozenset[str]] = {}
    for name, aliases in data.get("synonyms", {}).items():
        key = normalize_text(name)
        if key not in seen_keys:
            raise WorldFormatError(f"synonyms: {name!r} is not a world disease")
        synonyms[key] = frozenset(normalize_text(a) for a in aliases)

    return TabularWorld(tuple(diseases), queries, synonyms)


def load_world(path: str) -> TabularWorld:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise WorldFormatError(f"cannot read world file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise WorldFormatError(f"world file {path} is not valid JSON: {exc}") from exc
    return world_from_dict(data)


# --- deterministic policy backend ------------------------------------------


class TabularPolicyBackend:
    """Analytic stand-ins for the prediction, sampling, simulation and judging
    oracles, backed by one world and the trial's generator.

    The self-evaluation score source is a keyed hash of (class, payload) mapped
    to [0, 1): deterministic and reproducible, mimicking an opaque in-context
    scorer without consuming trial randomness.
    """

    executor = None  # simulate+judge fan-out stays sequential: draws share the trial rng

    def __init__(
        self,
        world: TabularWorld,
        costs: dict[ActionClass, float],
        rng: random.Random,
        corpus: Corpus | None = None,
        retrieval_p: int = 1,
        excerpt_chars: int = 1200,
    ) -> None:
        self.world = world
        self.costs = costs
        self.rng = rng
        self.corpus = corpus
        self.retrieval_p = retrieval_p
        self.excerpt_chars = excerpt_chars

    def predict_distribution(self, history: History, k: int) -> CandidateDistribution:
        post = posterior_from_history(self.world, history)
        return post.top_k(self.world, k)

    def sample_actions(
        self, history: History, cls: ActionClass, k_prime: int, rng: random.Random
    ) -> list[Action]:
        pool = self.world.queries_of_class(cls)
        if not pool:
            return []
        if cls is ActionClass.RETRIEVAL and self.corpus is None:
            return []
        picks = rng.sample(pool, min(k_prime, len(pool)))
        actions = []
        for query in picks:
            attachment = None
            if cls is ActionClass.RETRIEVAL:
                try:
                    hits = retrieve(self.corpus, query.id, 1, self.excerpt_chars)
                except EmptyQuery:
                    continue
                if not hits:
                    continue
                doc, excerpt = hits[0]
                attachment = Attachment(doc.id, excerpt)
            actions.append(Action(cls, query.id, self.costs[cls], attachment))
        return actions

    def simulate_response(self, history: History, action: Action, locked: Label) -> str:
        return tabular_simulate(self.world, locked, action.payload, self.rng)

    def judge_consistency(
        self, action: Action, response: str | None, labels: Sequence[Label]
    ) -> ConsistencyMask:
        if response is None:
            return ConsistencyMask(tuple(True for _ in labels))
        return tabular_consistency(self.world, labels, action.payload, response)

    def score_actions(self, history: History, actions: Sequence[Action]) -> list[float]:
        return [self._hash_score(a) for a in actions]

    @staticmethod
    def _hash_score(action: Action) -> float:
        seed = f"{action.cls.value}|{action.payload}".encode("utf-8")
        digest = hashlib.blake2b(seed, digest_size=8).digest()
        return int.from_bytes(digest, "big") / 2**64
