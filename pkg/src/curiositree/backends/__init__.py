"""Live-mode plumbing: prompt rendering, tolerant parsing, the chat-completions
wire client, and tf-idf document retrieval."""

from .client import BackendProfile, ChatTurn, chat_complete
from .parsing import (
    parse_bool_list,
    parse_float_list,
    parse_string_list,
    parse_tuple_list,
    serialize_tuple_list,
)
from .prompts import render_prompt
from .retrieval import Corpus, Document, load_corpus, retrieve

__all__ = [
    "BackendProfile",
    "ChatTurn",
    "chat_complete",
    "parse_bool_list",
    "parse_float_list",
    "parse_string_list",
    "parse_tuple_list",
    "serialize_tuple_list",
    "render_prompt",
    "Corpus",
    "Document",
    "load_corpus",
    "retrieve",
]
