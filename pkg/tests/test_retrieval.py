import json
import math

import pytest

from curiositree.backends.retrieval import (
    Corpus,
    Document,
    load_corpus,
    make_excerpt,
    retrieve,
    tokenize,
)
from curiositree.errors import EmptyQuery, WorldFormatError


class TestTokenize:
    def test_lowercase_alnum_runs(self):
        assert tokenize("Hello, World! 42x") == ["hello", "world", "42x"]

    def test_punctuation_splits(self):
        assert tokenize("tick-borne (infection)") == ["tick", "borne", "infection"]

    def test_empty(self):
        assert tokenize("...") == []


def fruit_corpus():
    return Corpus(
        [
            Document("d1", "One", "apple banana apple"),
            Document("d2", "Two", "banana cherry"),
            Document("d3", "Three", "cherry cherry durian cherry"),
        ]
    )


def hand_similarity(query_counts, doc_counts, all_doc_counts):
    """Independent tf-idf cosine: weight = tf * ln(N/df)."""
    n = len(all_doc_counts)
    df = {}
    for counts in all_doc_counts:
        for term in counts:
            df[term] = df.get(term, 0) + 1
    idf = {t: math.log(n / d) for t, d in df.items()}
    qw = {t: c * idf[t] for t, c in query_counts.items() if t in idf}
    dw = {t: c * idf[t] for t, c in doc_counts.items()}
    qn = math.sqrt(sum(w * w for w in qw.values()))
    dn = math.sqrt(sum(w * w for w in dw.values()))
    if qn == 0 or dn == 0:
        return 0.0
    return sum(w * dw.get(t, 0.0) for t, w in qw.items()) / (qn * dn)


class TestRetrieve:
    def test_ranking_matches_hand_oracle(self):
        corpus = fruit_corpus()
        all_counts = [
            {"apple": 2, "banana": 1},
            {"banana": 1, "cherry": 1},
            {"cherry": 3, "durian": 1},
        ]
        hits = retrieve(corpus, "banana cherry", p=3)
        assert [doc.id for doc, _ in hits] == ["d2", "d3", "d1"]
        # verify the exact-match doc scores cosine 1.0 against the oracle
        sims = {
            doc_id: hand_similarity({"banana": 1, "cherry": 1}, counts, all_counts)
            for doc_id, counts in zip(["d1", "d2", "d3"], all_counts)
        }
        assert math.isclose(sims["d2"], 1.0, abs_tol=1e-12)
        assert sims["d2"] > sims["d3"] > sims["d1"] > 0.0

    def test_repeated_query_terms_weight_tf(self):
        corpus = fruit_corpus()
        # "apple apple cherry" pulls d1 above d3: apple idf (ln 3) dominates
        hits = retrieve(corpus, "apple apple cherry", p=2)
        assert [doc.id for doc, _ in hits] == ["d1", "d3"]

    def test_unseen_terms_fall_back_to_id_order(self):
        corpus = fruit_corpus()
        hits = retrieve(corpus, "zebra xylophone", p=3)
        assert [doc.id for doc, _ in hits] == ["d1", "d2", "d3"]

    def test_ties_break_by_ascending_id(self):
        corpus = Corpus(
            [
                Document("doc-b", "B", "same words here"),
                Document("doc-a", "A", "same words here"),
            ]
        )
        hits = retrieve(corpus, "same words", p=2)
        assert [doc.id for doc, _ in hits] == ["doc-a", "doc-b"]

    def test_terms_in_every_doc_carry_zero_weight(self):
        corpus = Corpus(
            [
                Document("a", "A", "shared apple"),
                Document("b", "B", "shared banana"),
            ]
        )
        # "shared" has idf ln(2/2) = 0, so it cannot rank either doc
        hits = retrieve(corpus, "shared", p=2)
        assert [doc.id for doc, _ in hits] == ["a", "b"]

    def test_p_bounds(self):
        corpus = fruit_corpus()
        assert len(retrieve(corpus, "banana", p=99)) == 3
        with pytest.raises(ValueError):
            retrieve(corpus, "banana", p=0)

    def test_empty_query_raises(self):
        with pytest.raises(EmptyQuery):
            retrieve(fruit_corpus(), "!!! ...", p=1)

    def test_excerpt_limit_applied(self):
        corpus = Corpus([Document("d", "D", "word " * 500)])
        hits = retrieve(corpus, "word", p=1, excerpt_chars=50)
        assert len(hits[0][1]) <= 50


class TestMakeExcerpt:
    def test_short_text_unchanged(self):
        assert make_excerpt("short", 100) == "short"

    def test_cuts_at_word_boundary(self):
        assert make_excerpt("aaa bbb ccc", 7) == "aaa bbb"
        assert make_excerpt("aaa bbb ccc", 6) == "aaa"

    def test_no_boundary_hard_cut(self):
        assert make_excerpt("abcdefgh", 4) == "abcd"


class TestCorpus:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(WorldFormatError, match="unique"):
            Corpus([Document("d", "A", "x"), Document("d", "B", "y")])

    def test_len(self):
        assert len(fruit_corpus()) == 3


class TestLoadCorpus:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        rows = [
            {"id": "a", "title": "A", "text": "alpha text"},
            {"id": "b", "title": "B", "text": "beta text"},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n\n")
        corpus = load_corpus(str(path))
        assert len(corpus) == 2
        assert corpus.documents[0].title == "A"

    def test_bad_row_reports_line(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"id": "a", "title": "A", "text": "x"}\n{"id": "b"}\n')
        with pytest.raises(WorldFormatError, match=r"corpus\.jsonl:2"):
            load_corpus(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(WorldFormatError, match="cannot read"):
            load_corpus(str(tmp_path / "absent.jsonl"))

    def test_empty_corpus_rejected(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text("\n")
        with pytest.raises(WorldFormatError, match="no documents"):
            load_corpus(str(path))

    def test_clinic_corpus_loads(self):
        from conftest import CORPUS_PATH

        corpus = load_corpus(CORPUS_PATH)
        assert len(corpus) == 10
        hits = retrieve(corpus, "travel related infections", p=1)
        assert hits[0][0].id == "doc-travel"
