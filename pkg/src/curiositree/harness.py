"""Trial execution, batch orchestration, metrics, and artifact writing.

A batch runs n independent trials per policy with consecutive seeds. Each
trial owns a single random.Random(seed) shared, in fixed sequential order, by
the ground-truth draw, candidate sampling, prior-locked simulation, and
environment responses, so tabular runs are bit-reproducible: same config and
seeds, same artifact bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import random
import statistics
from dataclasses import asdict, dataclass, field, replace

from .backends.client import BackendProfile
from .backends.live import LivePolicyBackend
from .backends.retrieval import Corpus, load_corpus
from .core import (
    CLASS_ORDER,
    ActionClass,
    History,
    Label,
    TrialConfig,
    TrialOutcome,
    TrialResult,
)
from .environment import EnvHandle, env_step, judge_prediction
from .errors import BackendError, JudgeError
from .policies import ABSTAIN_BACKEND, PolicyKind, policy_step
from .tabular import TabularPolicyBackend, TabularWorld, load_world

log = logging.getLogger(__name__)

# Guard against configs with zero-cost classes that can never terminate.
MAX_TRIAL_ITERATIONS = 10_000


@dataclass(frozen=True)
class TrialRecord:
    """Everything observable about one finished trial."""

    trial_id: str
    policy: str
    seed: int
    ground_truth: str
    rows: tuple[dict, ...]
    result: TrialResult


def _candidate_rows(decision) -> list[dict]:
    return [
        {
            "class": c.action.cls.value,
            "action": c.action.payload,
            "score": c.score,
            "utility": c.utility,
            "index": c.sample_index,
        }
        for c in decision.candidates
    ]


def _top_k_rows(decision) -> list[list]:
    if decision.distribution is None:
        return []
    return [[label.text, prob] for label, prob in decision.distribution.entries]


def run_trial(
    config: TrialConfig,
    kind: PolicyKind,
    env: EnvHandle,
    backend,
    seed: int,
) -> TrialRecord:
    """Run one trial to termination and record every step."""
    history = History()
    spent = 0.0
    rows: list[dict] = []
    t = 0
    result: TrialResult | None = None

    for _ in range(MAX_TRIAL_ITERATIONS):
        decision = policy_step(kind, history, spent, config, backend, env.rng)

        if decision.kind == "predict":
            note = None
            try:
                correct = judge_prediction(decision.label, env)
            except JudgeError as exc:
                correct = False
                note = str(exc)
            outcome = TrialOutcome.SUCCESS if correct else TrialOutcome.FAILURE
            rows.append(
                {
                    "t": t,
                    "event": "predict",
                    "label": decision.label.text,
                    "correct": correct,
                    "cumulative_cost": spent,
                    "top_k": _top_k_rows(decision),
                }
            )
            result = TrialResult(outcome, decision.label, spent, t, note=note)
            break

        if decision.kind == "abstain":
            rows.append(
                {
                    "t": t,
                    "event": "abstain",
                    "reason": decision.reason,
                    "cumulative_cost": spent,
                    "top_k": _top_k_rows(decision),
                }
            )
            result = TrialResult(
                TrialOutcome.ABSTAIN, None, spent, t, abstain_reason=decision.reason
            )
            break

        action = decision.action
        try:
            outcome = env_step(env, history, action)
        except BackendError as exc:
            log.warning("environment step failed: %s", exc)
            rows.append(
                {
                    "t": t,
                    "event": "abstain",
                    "reason": ABSTAIN_BACKEND,
                    "cumulative_cost": spent,
                    "top_k": _top_k_rows(decision),
                }
            )
            result = TrialResult(
                TrialOutcome.ABSTAIN, None, spent, t, abstain_reason=ABSTAIN_BACKEND
            )
            break
        history.append(action, outcome)
        spent += action.cost
        rows.append(
            {
                "t": t,
                "event": "act",
                "action_class": action.cls.value,
                "action": action.payload,
                "doc_id": action.attachment.doc_id if action.attachment else None,
                "outcome": outcome.text,
                "cost": action.cost,
                "cumulative_cost": spent,
                "top_k": _top_k_rows(decision),
                "candidates": _candidate_rows(decision),
            }
        )
        t += 1
    if result is None:
        raise RuntimeError(
            f"trial exceeded {MAX_TRIAL_ITERATIONS} iterations; "
            "check for zero-cost action classes"
        )

    trial_id = f"{kind.label.replace(':', '-')}-{seed:08d}"
    return TrialRecord(trial_id, kind.label, seed, env.ground_truth.text, tuple(rows), result)


def draw_ground_truth(world: TabularWorld, rng: random.Random) -> Label:
    """Sample a disease from the world prior; consumes exactly one variate."""
    u = rng.random()
    acc = 0.0
    for label, prior in world.diseases:
        acc += prior
        if u < acc:
            return label
    return world.diseases[-1][0]


# --- run configuration -------------------------------------------------------


@dataclass(frozen=True)
class RetrievalSettings:
    corpus_path: str | None = None
    p: int = 1
    excerpt_chars: int = 1200


@dataclass(frozen=True)
class BackendSettings:
    base_url: str
    model: str
    temperature_sample: float = 0.7
    temperature_score: float = 0.0
    max_tokens: int = 512
    timeout_secs: float = 60.0
    max_attempts: int = 3
    backoff_secs: float = 0.5
    api_key_env: str = "OPENAI_API_KEY"
    max_concurrency: int = 1

    def profile(self) -> BackendProfile:
        return BackendProfile(
            base_url=self.base_url,
            model=self.model,
            temperature=self.temperature_score,
            max_tokens=self.max_tokens,
            timeout=self.timeout_secs,
            max_attempts=self.max_attempts,
            backoff_base=self.backoff_secs,
            api_key_env=self.api_key_env,
        )


@dataclass(frozen=True)
class RunConfig:
    trial: TrialConfig = field(default_factory=TrialConfig)
    retrieval: RetrievalSettings = field(default_factory=RetrievalSettings)
    backend: BackendSettings | None = None
    raw: dict = field(default_factory=dict)  # as loaded, echoed into the manifest


_TRIAL_KEYS = {
    "budget",
    "tau",
    "lambda",
    "k",
    "per_class_candidates",
    "mc_samples",
    "costs",
    "retry_limit",
}
_TOP_KEYS = _TRIAL_KEYS | {"retrieval", "backend"}


def run_config_from_dict(data: dict) -> RunConfig:
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key in ("budget", "tau", "k", "per_class_candidates", "mc_samples", "retry_limit"):
        if key in data:
            kwargs[key] = data[key]
    if "lambda" in data:
        kwargs["lam"] = data["lambda"]
    if "costs" in data:
        costs = dict(TrialConfig().costs)
        for name, value in data["costs"].items():
            try:
                costs[ActionClass(name)] = float(value)
            except ValueError:
                raise ValueError(f"unknown cost key {name!r}") from None
        kwargs["costs"] = costs
    trial = TrialConfig(**kwargs)

    retrieval = RetrievalSettings(**data.get("retrieval", {}))
    backend = None
    if "backend" in data:
        backend = BackendSettings(**data["backend"])
    return RunConfig(trial=trial, retrieval=retrieval, backend=backend, raw=dict(data))


def load_run_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path, "r", encoding="utf-8") as fh:
        return run_config_from_dict(json.load(fh))


@dataclass
class EnvSpec:
    """Parsed --env argument plus the loaded resources it points at."""

    mode: str  # "tabular" | "live"
    world_path: str | None = None
    world: TabularWorld | None = None
    corpus: Corpus | None = None


def parse_env_spec(spec: str, config: RunConfig) -> EnvSpec:
    corpus = None
    if config.retrieval.corpus_path:
        corpus = load_corpus(config.retrieval.corpus_path)
    if spec.startswith("tabular:"):
        path = spec.split(":", 1)[1]
        return EnvSpec("tabular", world_path=path, world=load_world(path), corpus=corpus)
    if spec == "live":
        if config.backend is None:
            raise ValueError("live mode requires a backend block in the config")
        return EnvSpec("live", corpus=corpus)
    raise ValueError(f"env spec must be 'tabular:<world-file>' or 'live', got {spec!r}")


# --- batch execution ---------------------------------------------------------


def run_batch(
    config: RunConfig,
    kinds: list[PolicyKind],
    envspec: EnvSpec,
    trials: int,
    base_seed: int,
    ground_truth: str | None = None,
) -> list[TrialRecord]:
    """Run `trials` seeded trials for each policy; seeds base..base+trials-1.

    Trials are independent: each gets a fresh generator, environment handle,
    and (tabular) backend, so records depend only on (policy, seed, config).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if envspec.mode == "live" and ground_truth is None:
        raise ValueError("live mode needs a ground truth label")

    live_backend = None
    if envspec.mode == "live":
        settings = config.backend
        live_backend = LivePolicyBackend(
            settings.profile(),
            config.trial.costs,
            retry_limit=config.trial.retry_limit,
            temperature_sample=settings.temperature_sample,
            temperature_score=settings.temperature_score,
            corpus=envspec.corpus,
            retrieval_p=config.retrieval.p,
            excerpt_chars=config.retrieval.excerpt_chars,
            max_concurrency=settings.max_concurrency,
        )

    records: list[TrialRecord] = []
    try:
        for kind in kinds:
            # the policy's class whitelist becomes the trial's allowed set
            trial_config = replace(config.trial, allowed_classes=kind.allowed)
            for i in range(trials):
                seed = base_seed + i
                rng = random.Random(seed)
                if envspec.mode == "tabular":
                    gt = (
                        Label(ground_truth)
                        if ground_truth is not None
                        else draw_ground_truth(envspec.world, rng)
                    )
                    env = EnvHandle(
                        gt,
                        rng,
                        world=envspec.world,
                        corpus=envspec.corpus,
                        retrieval_p=config.retrieval.p,
                        excerpt_chars=config.retrieval.excerpt_chars,
                    )
                    backend = TabularPolicyBackend(
                        envspec.world,
                        trial_config.costs,
                        rng,
                        corpus=envspec.corpus,
                        retrieval_p=config.retrieval.p,
                        excerpt_chars=config.retrieval.excerpt_chars,
                    )
                else:
                    env = EnvHandle(
                        Label(ground_truth),
                        rng,
                        profile=config.backend.profile(),
                        corpus=envspec.corpus,
                        retrieval_p=config.retrieval.p,
                        excerpt_chars=config.retrieval.excerpt_chars,
                    )
                    backend = live_backend
                records.append(run_trial(trial_config, kind, env, backend, seed))
    finally:
        if live_backend is not None:
            live_backend.close()
    return records


# --- metrics -----------------------------------------------------------------


@dataclass(frozen=True)
class CostStats:
    count: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    mean: float

    @classmethod
    def from_values(cls, values: list[float]) -> "CostStats":
        if not values:
            raise ValueError("no values to summarize")
        if len(values) == 1:
            v = values[0]
            return cls(1, v, v, v, v, v, v)
        q1, median, q3 = statistics.quantiles(values, n=4, method="inclusive")
        return cls(
            len(values), min(values), q1, median, q3, max(values), statistics.fmean(values)
        )


@dataclass(frozen=True)
class Summary:
    """Per-policy aggregate over a batch."""

    policy: str
    n: int
    successes: int
    failures: int
    abstentions: int
    predictions: int
    total_success_rate: float
    coverage: float
    selective_success_rate: float | None
    success_cost: CostStats | None
    nonsuccess_cost: CostStats | None
    action_counts: dict[str, int]


def compute_metrics(records: list[TrialRecord]) -> list[Summary]:
    """One Summary per policy, in first-appearance order.

    total_success_rate = successes/n, coverage = predictions/n, and
    selective_success_rate = successes/predictions (absent when the policy
    never predicted), so TSR = coverage * SSR as exact rationals.
    """
    by_policy: dict[str, list[TrialRecord]] = {}
    for record in records:
        by_policy.setdefault(record.policy, []).append(record)

    summaries = []
    for policy, group in by_policy.items():
        n = len(group)
        successes = sum(1 for r in group if r.result.outcome is TrialOutcome.SUCCESS)
        failures = sum(1 for r in group if r.result.outcome is TrialOutcome.FAILURE)
        abstentions = n - successes - failures
        predictions = successes + failures
        success_spent = [r.result.spent for r in group if r.result.outcome is TrialOutcome.SUCCESS]
        nonsuccess_spent = [
            r.result.spent for r in group if r.result.outcome is not TrialOutcome.SUCCESS
        ]
        counts = {cls.value: 0 for cls in CLASS_ORDER}
        for record in group:
            for row in record.rows:
                if row.get("event") == "act":
                    counts[row["action_class"]] += 1
        summaries.append(
            Summary(
                policy=policy,
                n=n,
                successes=successes,
                failures=failures,
                abstentions=abstentions,
                predictions=predictions,
                total_success_rate=successes / n,
                coverage=predictions / n,
                selective_success_rate=successes / predictions if predictions else None,
                success_cost=CostStats.from_values(success_spent) if success_spent else None,
                nonsuccess_cost=(
                    CostStats.from_values(nonsuccess_spent) if nonsuccess_spent else None
                ),
                action_counts=counts,
            )
        )
    return summaries


# --- artifacts ---------------------------------------------------------------


def _cost_columns(prefix: str, stats: CostStats | None) -> dict[str, object]:
    fields = ("minimum", "q1", "median", "q3", "maximum", "mean")
    if stats is None:
        return {f"{prefix}_{name}": "" for name in fields}
    return {f"{prefix}_{name}": getattr(stats, name) for name in fields}


def write_artifacts(
    outdir: str,
    records: list[TrialRecord],
    summaries: list[Summary],
    manifest: dict,
) -> None:
    """Write transcripts, the three CSVs, and the run manifest under outdir."""
    transcripts = os.path.join(outdir, "transcripts")
    try:
        os.makedirs(transcripts, exist_ok=True)
    except (OSError, FileExistsError) as exc:
        raise OSError(f"cannot create output directory {outdir!r}: {exc}") from exc

    try:
        for record in records:
            path = os.path.join(transcripts, f"{record.trial_id}.jsonl")
            with open(path, "w", encoding="utf-8") as fh:
                for row in record.rows:
                    fh.write(json.dumps(row, ensure_ascii=False) + "\n")
                fh.write(
                    json.dumps(
                        {
                            "event": "result",
                            "trial_id": record.trial_id,
                            "policy": record.policy,
                            "seed": record.seed,
                            "ground_truth": record.ground_truth,
                            "outcome": record.result.outcome.value,
                            "prediction": (
                                record.result.prediction.text
                                if record.result.prediction
                                else None
                            ),
                            "spent": record.result.spent,
                            "steps": record.result.steps,
                            "abstain_reason": record.result.abstain_reason,
                            "note": record.result.note,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )

        summary_path = os.path.join(outdir, "summary.csv")
        with open(summary_path, "w", encoding="utf-8", newline="") as fh:
            rows = []
            for s in summaries:
                row: dict[str, object] = {
                    "policy": s.policy,
                    "trials": s.n,
                    "successes": s.successes,
                    "failures": s.failures,
                    "abstentions": s.abstentions,
                    "predictions": s.predictions,
                    "total_success_rate": s.total_success_rate,
                    "coverage": s.coverage,
                    "selective_success_rate": (
                        "" if s.selective_success_rate is None else s.selective_success_rate
                    ),
                }
                row.update(_cost_columns("success_cost", s.success_cost))
                row.update(_cost_columns("nonsuccess_cost", s.nonsuccess_cost))
                for cls in CLASS_ORDER:
                    row[f"actions_{cls.value}"] = s.action_counts[cls.value]
                rows.append(row)
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()) if rows else ["policy"])
            writer.writeheader()
            writer.writerows(rows)

        with open(os.path.join(outdir, "costs.csv"), "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trial_id", "policy", "seed", "outcome", "spent", "steps"])
            for record in records:
                writer.writerow(
                    [
                        record.trial_id,
                        record.policy,
                        record.seed,
                        record.result.outcome.value,
                        record.result.spent,
                        record.result.steps,
                    ]
                )

        with open(os.path.join(outdir, "actions.csv"), "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["policy", "action_class", "count"])
            for s in summaries:
                for cls in CLASS_ORDER:
                    writer.writerow([s.policy, cls.value, s.action_counts[cls.value]])

        with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, ensure_ascii=False, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write artifacts under {outdir!r}: {exc}") from exc


def build_manifest(
    config: RunConfig,
    kinds: list[PolicyKind],
    envspec: EnvSpec,
    trials: int,
    base_seed: int,
    ground_truth: str | None,
) -> dict:
    """Everything needed to reproduce the run; credentials never appear here."""
    from . import __version__

    manifest = {
        "package_version": __version__,
        "policies": [k.label for k in kinds],
        "env": envspec.mode,
        "trials_per_policy": trials,
        "seed_base": base_seed,
        "seeds": [base_seed + i for i in range(trials)],
        "ground_truth_override": ground_truth,
        "config": config_manifest_dict(config),
    }
    if envspec.world_path:
        manifest["world_path"] = envspec.world_path
        with open(envspec.world_path, "rb") as fh:
            manifest["world_sha256"] = hashlib.sha256(fh.read()).hexdigest()
    return manifest


def config_manifest_dict(config: RunConfig) -> dict:
    """Resolved configuration as plain JSON; the API key env name is included,
    the credential itself never is."""
    trial = config.trial
    out = {
        "budget": trial.budget,
        "tau": trial.tau,
        "lambda": trial.lam,
        "k": trial.k,
        "per_class_candidates": trial.per_class_candidates,
        "mc_samples": trial.mc_samples,
        "costs": {cls.value: trial.costs[cls] for cls in CLASS_ORDER},
        "retry_limit": trial.retry_limit,
        "retrieval": asdict(config.retrieval),
    }
    if config.backend is not None:
        out["backend"] = asdict(config.backend)
    return out
