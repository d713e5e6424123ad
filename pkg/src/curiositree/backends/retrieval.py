"""Minimal tf-idf document retrieval over a JSONL corpus.

Tokens are lowercased alphanumeric words. Term weight is raw count times
ln(N / df); similarity is the cosine between query and document vectors. Ties
(including all-zero similarity) break by ascending document id so rankings are
deterministic.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass

from ..errors import EmptyQuery, WorldFormatError

_TOKEN = re.compile(r"[a-z0-9]+")

DEFAULT_EXCERPT_CHARS = 1200


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    text: str


class Corpus:
    """Documents plus the precomputed tf-idf index."""

    def __init__(self, documents: list[Document]) -> None:
        ids = [d.id for d in documents]
        if len(set(ids)) != len(ids):
            raise WorldFormatError("corpus document ids must be unique")
        self.documents = list(documents)
        self._df: Counter[str] = Counter()
        doc_counts = []
        for doc in self.documents:
            counts = Counter(tokenize(doc.text))
            doc_counts.append(counts)
            for term in counts:
                self._df[term] += 1
        n = len(self.documents)
        self._idf = {t: math.log(n / df) for t, df in self._df.items()}
        self._weights: list[dict[str, float]] = []
        self._norms: list[float] = []
        for counts in doc_counts:
            weights = {t: c * self._idf[t] for t, c in counts.items()}
            self._weights.append(weights)
            self._norms.append(math.sqrt(sum(w * w for w in weights.values())))

    def __len__(self) -> int:
        return len(self.documents)

    def idf(self, term: str) -> float | None:
        return self._idf.get(term)

    def similarity(self, query_weights: dict[str, float], query_norm: float, i: int) -> float:
        if query_norm == 0.0 or self._norms[i] == 0.0:
            return 0.0
        doc_weights = self._weights[i]
        dot = sum(w * doc_weights.get(t, 0.0) for t, w in query_weights.items())
        return dot / (query_norm * self._norms[i])


def load_corpus(path: str) -> Corpus:
    documents = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                    documents.append(Document(row["id"], row["title"], row["text"]))
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise WorldFormatError(f"{path}:{lineno}: bad corpus row: {exc}") from None
    except OSError as exc:
        raise WorldFormatError(f"cannot read corpus {path}: {exc}") from exc
    if not documents:
        raise WorldFormatError(f"corpus {path} holds no documents")
    return Corpus(documents)


def make_excerpt(text: str, limit: int) -> str:
    """Truncate at a word boundary within limit characters."""
    if len(text) <= limit:
        return text
    cut = text.rfind(" ", 0, limit + 1)
    if cut <= 0:
        return text[:limit]
    return text[:cut]


def retrieve(
    corpus: Corpus, query: str, p: int = 1, excerpt_chars: int = DEFAULT_EXCERPT_CHARS
) -> list[tuple[Document, str]]:
    """Top-p documents by tf-idf cosine similarity with their excerpts.

    Raises EmptyQuery when the query yields no indexable tokens. Terms absent
    from the corpus vocabulary are ignored; if nothing overlaps, ranking falls
    back to ascending document id with zero scores.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    terms = tokenize(query)
    if not terms:
        raise EmptyQuery(f"query {query!r} has no indexable tokens")
    counts = Counter(terms)
    query_weights = {}
    for term, count in counts.items():
        idf = corpus.idf(term)
        if idf is not None:
            query_weights[term] = count * idf
    query_norm = math.sqrt(sum(w * w for w in query_weights.values()))
    scored = [
        (corpus.similarity(query_weights, query_norm, i), doc)
        for i, doc in enumerate(corpus.documents)
    ]
    scored.sort(key=lambda e: (-e[0], e[1].id))
    return [(doc, make_excerpt(doc.text, excerpt_chars)) for _, doc in scored[:p]]
