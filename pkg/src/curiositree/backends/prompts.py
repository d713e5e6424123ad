"""Prompt templates for the live backend.

Every template is rendered by string concatenation in the exact published
wording, including irregular spacing; golden-file tests pin each rendering
byte-for-byte, so edit with care. The context block is prepended wherever the
agent elicits its predictive distribution or samples actions.
"""

from __future__ import annotations

from typing import Sequence

from ..core import ActionClass, Attachment, History
from ..errors import TemplateError
from .client import ChatTurn

# Template-facing tokens for the four action classes.
CLASS_TOKENS = {
    ActionClass.REASONING: "reasoning",
    ActionClass.RETRIEVAL: "RAG",
    ActionClass.QUESTION: "question",
    ActionClass.LAB_TEST: "experiment",
}

SUCCESS_MARKER = "[END -- success]"
FAILURE_MARKER = "[END -- failure]"

_CONTEXT_EMPTY = (
    "You are a clinician seeing a patient. You are attempting to elicit their primary "
    "diagnosis (specific disease name). You do not yet know any information about the patient."
)
_CONTEXT_HEADER = (
    "You are a clinician seeing a patient. You are attempting to elicit their primary "
    "diagnosis (specific disease name). You have currently undertaken the following "
    "assessments, and obtained the following outcomes."
)


def retrieval_outcome_text(attachment: Attachment) -> str:
    """Environment-side text recorded for a resolved retrieval action."""
    return "Retrieval: [" + attachment.doc_id + "] " + attachment.excerpt


def rag_action_text(query: str, outcome_text: str) -> str:
    """The history-facing string for a retrieval turn: query plus what it fetched."""
    return "Search Query: " + query + "\n\n" + outcome_text


def _format_cost(cost: float) -> str:
    # integral costs render without a trailing ".0"
    if float(cost) == int(cost):
        return str(int(cost))
    return str(cost)


def _context_turns(history: History) -> list[ChatTurn]:
    if not history:
        return [ChatTurn("system", _CONTEXT_EMPTY)]
    turns = [ChatTurn("system", _CONTEXT_HEADER)]
    for step in history:
        action, outcome = step.action, step.outcome
        if action.cls is ActionClass.QUESTION:
            if not outcome.present:
                raise TemplateError(f"question {action.payload!r} has no recorded response")
            content = (
                "You asked the patient, " + action.payload + "? \n\nThe patient responded, "
                + outcome.text + "."
            )
        elif action.cls is ActionClass.LAB_TEST:
            if not outcome.present:
                raise TemplateError(f"test {action.payload!r} has no recorded result")
            content = (
                "You ordered the test, " + action.payload + ". \n\nThe result indicated, "
                + outcome.text + "."
            )
        elif action.cls is ActionClass.RETRIEVAL:
            if not outcome.present:
                raise TemplateError(f"retrieval {action.payload!r} has no recorded text")
            content = (
                "You performed a Wikipedia search, consisting of the following search query "
                "and document retrieval. \n\n" + rag_action_text(action.payload, outcome.text)
            )
        else:
            content = "You reasoned to yourself that, '" + action.payload + "'."
        turns.append(ChatTurn("assistant", content))
    return turns


def _prediction_turns(history: History, k: int) -> list[ChatTurn]:
    content = (
        "Based on your current knowledge, provide " + str(k) + " of your best guesses of the "
        "patient's diagnosis. Format your output as a list of tuples, (x_i, s_i), where x_i is "
        "a string representing a guess, and s_i is a number BETWEEN 0 AND 1 representing the "
        "probability that x_i is the patient's true diagnosis. YOU MUST PROVIDE YOUR BEST "
        "GUESSES; THESE GUESSES MUST BE UNIQUE DIAGNOSES. EVEN IF YOU DO NOT HAVE ENOUGH INFO, "
        "PROVIDE GUESSES. YOU MUST PROVIDE GUESSES UNDER ALL CIRCUMSTANCES. Provide NO OTHER "
        "OUTPUT WHATSOEVER."
    )
    return _context_turns(history) + [ChatTurn("system", content)]


_SAMPLING_TEMPLATES = {
    "sample_reasoning": (
        "Generate ",
        " independent logical reasoning statements that may help determine the patient's "
        "diagnosis. NO RESPONSE WILL BE PROVIDED TO THESE; THEY ARE FOR YOUR CONSIDERATION AND "
        "CONTEMPLATION ONLY. They are NOT to be questions. START EACH CHAIN WITH 'We know "
        "that,' and write one sentence summarizing what we know of the patient; then provide "
        "logical deduction from there. Format your output as a comma-separated list, "
        "SURROUNDING EACH REASONING CHAIN WITH PARENTHESES. Each reasoning chain should be a "
        "complete and coherent thought process. Provide NO OTHER OUTPUT.",
    ),
    "sample_queries": (
        "You are permitted to generate information retrieval queries to help a clinician "
        "determine a patient's diagnosis. Ponder ",
        " Wikipedia search queries that could retrieve information relevant to diagnosing "
        "this patient. Format your output as a comma-separated list, surrounding each query "
        "with parentheses. EACH OUTPUT MUST BE A SINGLE QUERY. Provide NO OTHER OUTPUT.",
    ),
    "sample_questions": (
        "You are permitted to ask the patient a question -- the patient will respond to the "
        "question truthfully to the best of their knowledge. Ponder ",
        " different independent questions to ask. ENSURE THAT QUESTIONS ARE A MIX OF YES/NO, "
        "MULTIPLE-CHOICE, AND OPEN-ENDED QUESTIONS. Format your output as a comma-separated "
        "list, surrounding each action with parentheses. EACH OUTPUT MUST BE A SINGLE "
        "QUESTION. Provide NO OTHER OUTPUT.",
    ),
    "sample_experiments": (
        "You can run a laboratory test on the patient. Write a DETAILED REQUISITION for an "
        "assessment or test that you would run on the patient. Consider ",
        " different tests to run. Format your output as a comma-separated list, surrounding "
        "each action with parentheses. EACH OUTPUT MUST BE A COMPLETE TEST REQUISITION. "
        "Provide NO OTHER OUTPUT.",
    ),
}


def _sampling_turns(kind: str, history: History, k_prime: int) -> list[ChatTurn]:
    before, after = _SAMPLING_TEMPLATES[kind]
    return _context_turns(history) + [ChatTurn("system", before + str(k_prime) + after)]


def _sim_question_turns(question: str, locked_label: str) -> list[ChatTurn]:
    content = (
        "You are an oracle providing information to clinicians about their patients. The "
        "current patient has the disease " + locked_label + ". If the 'user' (clinician) asks "
        "a question, you are to respond 'The patient responds,' and then respond to the "
        "question as a patient would, recognizing that the patient has no knowledge of "
        "specialized clinical terminology, ICD-10 codes, etc. In general, be as succinct and "
        "direct as possible."
    )
    return [ChatTurn("system", content), ChatTurn("user", question)]


def _sim_experiment_turns(test: str, locked_label: str) -> list[ChatTurn]:
    content = (
        "You are an oracle providing information to clinicians about their patients. The "
        "current patient has the disease " + locked_label + ". The 'user' (clinician) will "
        "order a lab test; you are to respond 'The result indicates,' and then provide a "
        "laboratory test result consistent with the patient's underlying diagnosis. In "
        "general, be as succinct and direct as possible."
    )
    return [ChatTurn("system", content), ChatTurn("user", test)]


def _assignment_turns(
    action_type: str,
    action: "str | tuple[str, str, str]",
    response: str | None,
    candidates: Sequence[str],
) -> list[ChatTurn]:
    if action_type not in ("question", "reasoning", "RAG", "experiment"):
        raise TemplateError(f"unknown assignment action_type {action_type!r}")
    listing = ", ".join(candidates)
    if action_type == "question":
        if response is None:
            raise TemplateError("question assignment needs a response")
        content = (
            "Given the question, '" + action + "', and the response, '" + response + "', "
            "determine which of the following diagnoses remain LOGICALLY CONSISTENT with the "
            "response; a response that is not relevant to a certain diagnosis does NOT "
            "NECESSARILY mean that the diagnosis is incompatible with the retrieval. Format "
            "your output as a comma-separated list of booleans, surrounding each boolean with "
            "parentheses, e.g., (b_1),(b_2), .... If b_i is TRUE, this indicates that "
            "candidate i MAY BE LOGICALLY CONSISTENT with the response to the question. "
            "Produce NO OUTPUT OTHER THAN THE LIST OF BOOLEANS. The candidates are: ["
            + listing + "]."
        )
    elif action_type == "reasoning":
        content = (
            "Given the reasoning chain, '" + action + "', determine which of the following "
            "diagnoses remain logically consistent with the reasoning. Format your output as "
            "a comma-separated list of booleans, surrounding each boolean with parentheses, "
            "e.g., (b_1),(b_2), .... If b_i is TRUE, this indicates that candidate i MAY BE "
            "LOGICALLY CONSISTENT with the rationale. Be selective; ONLY MARK candidate i as "
            "False if it is TRULY LOGICALLY INCONSISTENT; if the reasoning is merely "
            "off-topic you must mark it as True. Produce NO OUTPUT OTHER THAN THE LIST OF "
            "BOOLEANS. The candidates are: [" + listing + "]."
        )
    elif action_type == "RAG":
        if not isinstance(action, tuple) or len(action) != 3:
            raise TemplateError("RAG assignment action must be a (query, doc id, text) tuple")
        content = (
            "Given the information retrieval request, '" + action[0] + "', and retrieved "
            "information '" + str((action[1], action[2])) + "', determine which of the "
            "following diagnoses remain logically consistent with the retrieved information. "
            "Format your output as a comma-separated list of booleans, surrounding each "
            "boolean with parentheses, e.g., (b_1),(b_2), .... If b_i is TRUE, this indicates "
            "that candidate i MAY BE LOGICALLY CONSISTENT with the retrieved information. Be "
            "selective; ONLY MARK candidate i as False if the retrieved information CONTAINS "
            "RATIONALE THAT RENDERS IT INCONSISTENT; if the retrieved information is merely "
            "off-topic you must mark it as True. Produce NO OUTPUT OTHER THAN THE LIST OF "
            "BOOLEANS. The candidates are: [" + listing + "]."
        )
    else:
        if response is None:
            raise TemplateError("experiment assignment needs a response")
        content = (
            "Given the experiment, '" + action + "', and the outcome, '" + response + "', "
            "determine which of the following diagnoses remains LOGICALLY CONSISTENT with the "
            "outcome of the experiment; an experiment that is not relevant to a certain "
            "diagnosis does NOT NECESSARILY mean that the diagnosis is incompatible with the "
            "experiment. Format your output as a comma-separated list of booleans, "
            "surrounding each boolean with parentheses, e.g., (b_1),(b_2), .... If b_i is "
            "TRUE, this indicates that candidate i MAY BE LOGICALLY CONSISTENT with the "
            "outcome of the experiment. Produce NO OUTPUT OTHER THAN THE LIST OF BOOLEANS. "
            "The candidates are: [" + listing + "]."
        )
    return [ChatTurn("system", content)]


def _self_eval_turns(
    actions: Sequence[str], action_types: Sequence[str], costs: dict[str, float]
) -> list[ChatTurn]:
    if len(actions) != len(action_types):
        raise TemplateError("actions and action_types must have equal length")
    if not actions:
        raise TemplateError("self_eval needs at least one action")
    lines = []
    for i, (a, a_type) in enumerate(zip(actions, action_types)):
        try:
            cost = _format_cost(costs[a_type])
        except KeyError:
            raise TemplateError(f"no cost for action type {a_type!r}") from None
        if a_type == "question":
            lines.append("(" + str(i) + "): Ask the patient, '" + a + "' (Cost: " + cost + ")")
        elif a_type == "experiment":
            lines.append(
                "(" + str(i) + "): Order the laboratory test, '" + a + "' (Cost: " + cost + ")"
            )
        elif a_type == "RAG":
            lines.append(
                "(" + str(i) + "): Perform a Wikipedia search, consisting of the following "
                "query and document retrieval. \n\n" + a + " (Cost: " + cost + ")"
            )
        elif a_type == "reasoning":
            lines.append(
                "(" + str(i) + "): Reason to yourself that, '" + a + "' (Cost: " + cost + ")"
            )
        else:
            raise TemplateError(f"unknown action type {a_type!r}")
    all_actions_text = "\n".join(lines)
    content = (
        "You have the opportunity to undertake ONE of the following " + str(len(actions))
        + " assessments to determine the patient's diagnosis. Assign each a numeric score "
        "BETWEEN 0 AND 1 where a high score corresponds to a better (more informative) action "
        "in the current context, relative to its cost.\n\n" + all_actions_text
        + "\n\n Format your output as a comma-separated list of scores, (s_1), ..., (s_"
        + str(len(actions)) + "), surrounding each score with parentheses. s_i is the score "
        "assigned to the ith action. Provide NO OTHER OUTPUT."
    )
    return [ChatTurn("system", content)]


def _env_oracle_turns(action_type: str, ground_truth: str, question: str) -> list[ChatTurn]:
    if action_type == "question":
        # the doubled space after "patients." is part of the published template
        content = (
            "You are an oracle providing information to clinicians about their patients.  The "
            "current patient has the disease " + ground_truth + ". The clinician will ask "
            "questions to ascertain the diagnosis; DO NOT EXPLICITLY MENTION '" + ground_truth
            + "' IN ANY ANSWER. Provide truthful answers with as little detail and as tersely "
            "as possible. \n\n Respond to the clinician with 'The patient responds,' followed "
            "by a response as a patient would, who lacks clinical terminology knowledge and "
            "may have some but not all symptoms of the disease. \n\n If the question is "
            "unrelated to the patient or diagnosis, respond with 'I don't know'."
        )
    elif action_type == "experiment":
        content = (
            "You are an oracle providing information to clinicians about their patients. The "
            "current patient has the disease " + ground_truth + ". The clinician will order "
            "lab tests to ascertain diagnosis; DO NOT EXPLICITLY MENTION '" + ground_truth
            + "' IN ANY ANSWER.\n\n For a test requisition given by the clinician, respond "
            "with 'The test yields,' followed by plausible test results consistent with the "
            "disease (not necessarily canonical). Do not interpret results; only provide "
            "specific biomarker/test values succinctly. \n\n If the request is unrelated to "
            "the patient or diagnosis, respond with 'I don't know'."
        )
    elif action_type == "pred":
        content = (
            "You are an oracle grading predictions with ground truth [" + ground_truth + "]. "
            "The user will ask: \"Is it 'X'?\" If 'X' exactly matches " + ground_truth + ", "
            "respond '" + SUCCESS_MARKER + "'. Otherwise, respond '" + FAILURE_MARKER + "'. "
            "NEVER provide any other output."
        )
    else:
        raise TemplateError(f"unknown oracle action_type {action_type!r}")
    return [ChatTurn("system", content), ChatTurn("user", question)]


_RENDERERS = {
    "context": lambda p: _context_turns(p["history"]),
    "prediction": lambda p: _prediction_turns(p["history"], p["k"]),
    "sample_reasoning": lambda p: _sampling_turns("sample_reasoning", p["history"], p["k_prime"]),
    "sample_queries": lambda p: _sampling_turns("sample_queries", p["history"], p["k_prime"]),
    "sample_questions": lambda p: _sampling_turns("sample_questions", p["history"], p["k_prime"]),
    "sample_experiments": lambda p: _sampling_turns(
        "sample_experiments", p["history"], p["k_prime"]
    ),
    "sim_question": lambda p: _sim_question_turns(p["question"], p["locked_label"]),
    "sim_experiment": lambda p: _sim_experiment_turns(p["test"], p["locked_label"]),
    "assignment": lambda p: _assignment_turns(
        p["action_type"], p["action"], p.get("response"), p["candidates"]
    ),
    "self_eval": lambda p: _self_eval_turns(p["actions"], p["action_types"], p["costs"]),
    "env_oracle": lambda p: _env_oracle_turns(
        p["action_type"], p["ground_truth"], p["question"]
    ),
}


def render_prompt(kind: str, **params) -> list[ChatTurn]:
    """Render one of the named templates into chat turns.

    Pure: identical inputs yield identical turns. Unknown kinds and missing or
    invalid parameters raise TemplateError.
    """
    try:
        renderer = _RENDERERS[kind]
    except KeyError:
        raise TemplateError(f"unknown prompt kind {kind!r}") from None
    try:
        return renderer(params)
    except TemplateError:
        raise
    except (KeyError, TypeError, AttributeError) as exc:
        raise TemplateError(f"bad parameters for prompt kind {kind!r}: {exc}") from exc
