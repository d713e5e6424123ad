import random

import pytest

from curiositree.backends.client import BackendProfile
from curiositree.backends.retrieval import Corpus, Document
from curiositree.core import Action, ActionClass, Attachment, History, Label
from curiositree.environment import EnvHandle, env_step, judge_prediction
from curiositree.errors import JudgeError


def tabular_env(world, gt="ailment a", seed=0, **kwargs):
    return EnvHandle(Label(gt), random.Random(seed), world=world, **kwargs)


def live_env(gt="lupus", **kwargs):
    profile = BackendProfile("http://127.0.0.1:1/v1", "m", backoff_base=0.0)
    return EnvHandle(Label(gt), random.Random(0), profile=profile, **kwargs)


class FakeChat:
    def __init__(self, reply):
        self.reply = reply
        self.calls = []

    def __call__(self, profile, turns):
        self.calls.append((profile, turns))
        return self.reply


class TestEnvHandle:
    def test_exactly_one_backing(self, two_disease):
        with pytest.raises(ValueError):
            EnvHandle(Label("x"), random.Random(0))
        with pytest.raises(ValueError):
            EnvHandle(
                Label("x"),
                random.Random(0),
                world=two_disease,
                profile=BackendProfile("http://h", "m"),
            )

    def test_mode(self, two_disease):
        assert tabular_env(two_disease).mode == "tabular"
        assert live_env().mode == "live"


class TestEnvStepTabular:
    def test_reasoning_has_no_outcome_and_consumes_no_randomness(self, two_disease):
        env = tabular_env(two_disease, seed=5)
        state = env.rng.getstate()
        out = env_step(env, History(), Action(ActionClass.REASONING, "ponder", 1.0))
        assert out.present is False
        assert env.rng.getstate() == state

    def test_question_answered_from_ground_truth(self, two_disease):
        env = tabular_env(two_disease, gt="ailment a")
        out = env_step(env, History(), Action(ActionClass.QUESTION, "split", 2.0))
        assert out.text == "yes"
        env_b = tabular_env(two_disease, gt="ailment b")
        assert env_step(env_b, History(), Action(ActionClass.QUESTION, "split", 2.0)).text == "no"

    def test_question_consumes_exactly_one_draw(self, two_disease):
        env = tabular_env(two_disease, seed=123)
        env_step(env, History(), Action(ActionClass.QUESTION, "split", 2.0))
        reference = random.Random(123)
        reference.random()
        assert env.rng.random() == reference.random()

    def test_retrieval_uses_resolved_attachment(self, two_disease):
        env = tabular_env(two_disease)
        att = Attachment("doc-9", "An excerpt about rashes.")
        action = Action(ActionClass.RETRIEVAL, "rash overview", 1.0, att)
        out = env_step(env, History(), action)
        assert out.text == "Retrieval: [doc-9] An excerpt about rashes."

    def test_retrieval_without_attachment_or_corpus_fails(self, two_disease):
        env = tabular_env(two_disease)
        with pytest.raises(ValueError, match="without a corpus"):
            env_step(env, History(), Action(ActionClass.RETRIEVAL, "rash overview", 1.0))

    def test_retrieval_top_p_joins_blocks(self, two_disease):
        corpus = Corpus(
            [
                Document("d1", "One", "rash overview part one"),
                Document("d2", "Two", "rash overview part two"),
            ]
        )
        env = tabular_env(two_disease, corpus=corpus, retrieval_p=2)
        att = Attachment("d1", "rash overview part one")
        out = env_step(env, History(), Action(ActionClass.RETRIEVAL, "rash overview", 1.0, att))
        blocks = out.text.split("\n\n")
        assert len(blocks) == 2
        assert all(b.startswith("Retrieval: [") for b in blocks)


class TestEnvStepLive:
    def test_question_routes_to_oracle(self, monkeypatch):
        fake = FakeChat("The patient responds, yes, constantly.")
        monkeypatch.setattr("curiositree.environment.chat_complete", fake)
        env = live_env(gt="tuberculosis")
        out = env_step(env, History(), Action(ActionClass.QUESTION, "Do you cough?", 2.0))
        assert out.text == "The patient responds, yes, constantly."
        _, turns = fake.calls[0]
        assert turns[0].role == "system"
        assert "tuberculosis" in turns[0].content
        assert turns[1].content == "Do you cough?"

    def test_experiment_uses_experiment_template(self, monkeypatch):
        fake = FakeChat("The test yields, elevated markers.")
        monkeypatch.setattr("curiositree.environment.chat_complete", fake)
        env = live_env()
        out = env_step(env, History(), Action(ActionClass.LAB_TEST, "order a cbc", 3.0))
        assert out.text == "The test yields, elevated markers."
        _, turns = fake.calls[0]
        assert "The test yields," in turns[0].content
        assert "lab tests" in turns[0].content
        assert turns[1].content == "order a cbc"


class TestJudgePrediction:
    def test_exact_and_normalized_match(self, two_disease):
        env = tabular_env(two_disease, gt="ailment a")
        assert judge_prediction(Label("ailment a"), env)
        assert judge_prediction(Label("  Ailment A!"), env)
        assert not judge_prediction(Label("ailment b"), env)

    def test_synonyms_accepted(self, uniform4):
        env = EnvHandle(Label("alpha syndrome"), random.Random(0), world=uniform4)
        assert judge_prediction(Label("alpha"), env)
        assert judge_prediction(Label("The Alpha Variant"), env)
        assert not judge_prediction(Label("beta"), env)

    def test_synonyms_do_not_leak_across_diseases(self, uniform4):
        env = EnvHandle(Label("beta syndrome"), random.Random(0), world=uniform4)
        assert not judge_prediction(Label("alpha"), env)

    def test_live_success_marker(self, monkeypatch):
        fake = FakeChat("[END -- success]")
        monkeypatch.setattr("curiositree.environment.chat_complete", fake)
        assert judge_prediction(Label("lupus"), live_env(gt="lupus"))
        _, turns = fake.calls[0]
        assert turns[1].content == "Is it 'lupus'?"

    def test_live_failure_marker(self, monkeypatch):
        monkeypatch.setattr(
            "curiositree.environment.chat_complete", FakeChat("[END -- failure]")
        )
        assert not judge_prediction(Label("gout"), live_env(gt="lupus"))

    def test_live_missing_marker_raises(self, monkeypatch):
        monkeypatch.setattr(
            "curiositree.environment.chat_complete", FakeChat("I think that is correct!")
        )
        with pytest.raises(JudgeError, match="neither marker"):
            judge_prediction(Label("gout"), live_env(gt="lupus"))
