"""Shared fixture worlds.

Worlds are built through world_from_dict so every test also exercises the
loader's validation path. The uniform-4 world is the workhorse: its queries
cover a balanced split (ln 2), a one-vs-rest split, an uninformative constant,
a pure-noise coin, and a fully identifying assay.
"""

import os

import pytest

from curiositree.tabular import TabularWorld, world_from_dict

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
GOLDEN_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden")

CLINIC20_PATH = os.path.join(DATA_DIR, "clinic20.json")
CORPUS_PATH = os.path.join(DATA_DIR, "clinic_corpus.jsonl")

UNIFORM4_NAMES = ["alpha syndrome", "beta syndrome", "gamma syndrome", "delta syndrome"]


def build_uniform4() -> dict:
    def rows(mapping):
        return {name: mapping[name] for name in UNIFORM4_NAMES}

    return {
        "diseases": [{"label": name, "prior": 0.25} for name in UNIFORM4_NAMES],
        "queries": [
            {
                "id": "balanced split",
                "class": "question",
                "responses": ["left", "right"],
                "likelihoods": rows(
                    {
                        "alpha syndrome": [1.0, 0.0],
                        "beta syndrome": [1.0, 0.0],
                        "gamma syndrome": [0.0, 1.0],
                        "delta syndrome": [0.0, 1.0],
                    }
                ),
            },
            {
                "id": "one vs rest",
                "class": "question",
                "responses": ["hit", "miss"],
                "likelihoods": rows(
                    {
                        "alpha syndrome": [1.0, 0.0],
                        "beta syndrome": [0.0, 1.0],
                        "gamma syndrome": [0.0, 1.0],
                        "delta syndrome": [0.0, 1.0],
                    }
                ),
            },
            {
                "id": "flat single",
                "class": "question",
                "responses": ["same"],
                "likelihoods": rows({name: [1.0] for name in UNIFORM4_NAMES}),
            },
            {
                "id": "noisy coin",
                "class": "question",
                "responses": ["heads", "tails"],
                "likelihoods": rows({name: [0.5, 0.5] for name in UNIFORM4_NAMES}),
            },
            {
                "id": "definitive assay",
                "class": "labtest",
                "responses": ["m0", "m1", "m2", "m3"],
                "likelihoods": rows(
                    {
                        "alpha syndrome": [1.0, 0.0, 0.0, 0.0],
                        "beta syndrome": [0.0, 1.0, 0.0, 0.0],
                        "gamma syndrome": [0.0, 0.0, 1.0, 0.0],
                        "delta syndrome": [0.0, 0.0, 0.0, 1.0],
                    }
                ),
            },
            {"id": "ponder the timeline", "class": "reasoning"},
            {"id": "alpha syndrome overview", "class": "retrieval"},
        ],
        "synonyms": {"alpha syndrome": ["alpha", "the alpha variant"]},
    }


@pytest.fixture
def uniform4() -> TabularWorld:
    return world_from_dict(build_uniform4())


def build_two_disease() -> dict:
    return {
        "diseases": [
            {"label": "ailment a", "prior": 0.5},
            {"label": "ailment b", "prior": 0.5},
        ],
        "queries": [
            {
                "id": "split",
                "class": "question",
                "responses": ["yes", "no"],
                "likelihoods": {"ailment a": [1.0, 0.0], "ailment b": [0.0, 1.0]},
            }
        ],
    }


@pytest.fixture
def two_disease() -> TabularWorld:
    return world_from_dict(build_two_disease())


def partition_world(groups: list[list[int]]) -> TabularWorld:
    """k uniform diseases and one deterministic question whose response is the
    index of the group containing the disease."""
    k = sum(len(g) for g in groups)
    names = [f"disease {i}" for i in range(k)]
    responses = [f"group {g}" for g in range(len(groups))]
    group_of = {}
    for gi, members in enumerate(groups):
        for member in members:
            group_of[member] = gi
    likelihoods = {
        names[i]: [1.0 if group_of[i] == gi else 0.0 for gi in range(len(groups))]
        for i in range(k)
    }
    return world_from_dict(
        {
            "diseases": [{"label": name, "prior": 1.0 / k} for name in names],
            "queries": [
                {
                    "id": "part",
                    "class": "question",
                    "responses": responses,
                    "likelihoods": likelihoods,
                }
            ],
        }
    )
