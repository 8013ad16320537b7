"""Paper/journal vectors and embedding-space distances against precision oracles."""

import json
import math

import mpmath as mp
import numpy as np
import pytest

from knowspan.corpus import PacsCode, parse_corpus
from knowspan.embedding import EmbeddingMatrix, MissingCodeError
from knowspan.geometry import (
    article_distance,
    article_distance_log,
    journal_distance,
    journal_vector,
    paper_vector,
)

mp.mp.dps = 40


def mp_cosine_distance(u, v):
    """Oracle: cosine distance at 40 significant digits."""
    u = [mp.mpf(x) for x in u]
    v = [mp.mpf(x) for x in v]
    dot = mp.fsum(a * b for a, b in zip(u, v))
    nu = mp.sqrt(mp.fsum(a * a for a in u))
    nv = mp.sqrt(mp.fsum(b * b for b in v))
    return float(1 - dot / (nu * nv))


def mean_oracle(rows):
    """Oracle: per-coordinate exactly-rounded mean via math.fsum."""
    m = len(rows)
    return np.array([math.fsum(row[i] for row in rows) / m for i in range(len(rows[0]))])


def build_embedding(code_texts, dim=6, seed=0):
    rng = np.random.default_rng(seed)
    keys = tuple(PacsCode.from_text(t) for t in code_texts)
    vectors = {key: rng.normal(size=dim) for key in keys}
    return EmbeddingMatrix(dim=dim, vocabulary=keys, vectors=vectors)


def build_corpus(papers):
    lines = [
        json.dumps(
            {
                "id": pid,
                "year": year,
                "journal": journal,
                "pacs_codes": code_texts,
                "author_count": 1,
                "n_pages": 4,
                "title_length": 5,
                "references": [],
            }
        )
        for pid, year, journal, code_texts in papers
    ]
    corpus, _ = parse_corpus(lines)
    return corpus


CODE_POOL = [f"{d}{d}.{d}0.A{chr(97 + d)}" for d in range(8)]


# ---------------------------------------------------------------- paper vector

def test_paper_vector_is_code_mean():
    emb = build_embedding(CODE_POOL)
    corpus = build_corpus([("P", 2000, "J", CODE_POOL[:4])])
    paper = corpus.papers["P"]
    got = paper_vector(paper, emb)
    expected = mean_oracle([emb[c] for c in paper.pacs_codes])
    assert got.paper_id == "P"
    np.testing.assert_allclose(got.vector, expected, rtol=1e-12)


def test_paper_vector_single_code_is_the_code_vector():
    emb = build_embedding(CODE_POOL)
    corpus = build_corpus([("P", 2000, "J", [CODE_POOL[0]])])
    got = paper_vector(corpus.papers["P"], emb)
    np.testing.assert_array_equal(got.vector, emb[corpus.papers["P"].pacs_codes[0]])


def test_paper_vector_missing_code_names_it():
    emb = build_embedding(CODE_POOL[:2])
    corpus = build_corpus([("P", 2000, "J", [CODE_POOL[0], CODE_POOL[5]])])
    with pytest.raises(MissingCodeError, match="55.50.Af"):
        paper_vector(corpus.papers["P"], emb)


# ---------------------------------------------------------------- journal vector

def test_journal_vector_is_member_mean():
    emb = build_embedding(CODE_POOL)
    corpus = build_corpus(
        [
            ("P1", 2000, "J", CODE_POOL[:3]),
            ("P2", 2000, "J", CODE_POOL[3:6]),
            ("P3", 2000, "K", CODE_POOL[6:8]),  # other journal, excluded
            ("P4", 2001, "J", CODE_POOL[:2]),  # other year, excluded
        ]
    )
    cell = journal_vector("J", 2000, corpus, emb)
    members = [paper_vector(corpus.papers[p], emb).vector for p in ("P1", "P2")]
    np.testing.assert_allclose(cell.vector, mean_oracle(members), rtol=1e-12)
    assert cell.n_members == 2


def test_journal_vector_empty_cell_is_error():
    emb = build_embedding(CODE_POOL)
    corpus = build_corpus([("P1", 2000, "J", CODE_POOL[:2])])
    with pytest.raises(ValueError, match="no papers"):
        journal_vector("J", 1999, corpus, emb)


# ---------------------------------------------------------------- journal distance

def test_journal_distance_sole_member_is_zero():
    emb = build_embedding(CODE_POOL)
    corpus = build_corpus([("P1", 2000, "J", CODE_POOL[:3])])
    assert journal_distance(corpus.papers["P1"], corpus, emb) == pytest.approx(
        0.0, abs=1e-12
    )


def test_journal_distance_excluding_self_drops_own_contribution():
    emb = build_embedding(CODE_POOL)
    corpus = build_corpus(
        [
            ("P1", 2000, "J", CODE_POOL[:3]),
            ("P2", 2000, "J", CODE_POOL[3:6]),
        ]
    )
    paper = corpus.papers["P1"]
    other = paper_vector(corpus.papers["P2"], emb).vector
    own = paper_vector(paper, emb).vector
    expected = mp_cosine_distance(own, other)
    got = journal_distance(paper, corpus, emb, exclude_self=True)
    assert got == pytest.approx(expected, rel=1e-10)
    # and including self pulls the cell mean toward the paper
    assert got > journal_distance(paper, corpus, emb)


def test_journal_distance_exclude_self_single_member_is_error():
    emb = build_embedding(CODE_POOL)
    corpus = build_corpus([("P1", 2000, "J", CODE_POOL[:2])])
    with pytest.raises(ValueError, match="single-member"):
        journal_distance(corpus.papers["P1"], corpus, emb, exclude_self=True)


# ---------------------------------------------------------------- article distance

def test_article_distance_single_code_is_zero():
    emb = build_embedding(CODE_POOL)
    corpus = build_corpus([("P", 2000, "J", [CODE_POOL[0]])])
    assert article_distance(corpus.papers["P"], emb) == 0.0


def test_article_distance_identical_vectors_is_zero():
    keys = tuple(PacsCode.from_text(t) for t in CODE_POOL[:2])
    same = np.array([0.3, -1.2, 0.8])
    emb = EmbeddingMatrix(
        dim=3, vocabulary=keys, vectors={k: same.copy() for k in keys}
    )
    corpus = build_corpus([("P", 2000, "J", CODE_POOL[:2])])
    assert article_distance(corpus.papers["P"], emb) == pytest.approx(0.0, abs=1e-12)


def test_article_distance_orthogonal_pair_is_one():
    keys = tuple(PacsCode.from_text(t) for t in CODE_POOL[:2])
    emb = EmbeddingMatrix(
        dim=2,
        vocabulary=keys,
        vectors={keys[0]: np.array([1.0, 0.0]), keys[1]: np.array([0.0, 1.0])},
    )
    corpus = build_corpus([("P", 2000, "J", CODE_POOL[:2])])
    assert article_distance(corpus.papers["P"], emb) == pytest.approx(1.0, abs=1e-15)


def test_article_distance_matches_high_precision_oracle():
    emb = build_embedding(CODE_POOL, dim=12, seed=3)
    corpus = build_corpus([("P", 2000, "J", CODE_POOL[:5])])
    paper = corpus.papers["P"]
    vectors = [emb[c] for c in paper.pacs_codes]
    m = len(vectors)
    pairwise = [
        mp_cosine_distance(vectors[i], vectors[j])
        for i in range(m)
        for j in range(i + 1, m)
    ]
    expected = math.fsum(pairwise) / len(pairwise)
    assert article_distance(paper, emb) == pytest.approx(expected, rel=1e-12)


def test_article_distance_is_permutation_invariant():
    emb = build_embedding(CODE_POOL, dim=10, seed=6)
    ordered = build_corpus([("P", 2000, "J", CODE_POOL[:4])])
    shuffled = build_corpus([("P", 2000, "J", list(reversed(CODE_POOL[:4])))])
    assert article_distance(ordered.papers["P"], emb) == pytest.approx(
        article_distance(shuffled.papers["P"], emb), rel=1e-12
    )


def test_article_distance_log_transform():
    emb = build_embedding(CODE_POOL, dim=8, seed=2)
    corpus = build_corpus([("P", 2000, "J", CODE_POOL[:4])])
    paper = corpus.papers["P"]
    assert article_distance_log(paper, emb) == pytest.approx(
        math.log1p(article_distance(paper, emb)), rel=1e-15
    )


# ---------------------------------------------------------------- scale invariance

def test_distances_are_scale_invariant():
    emb = build_embedding(CODE_POOL, dim=8, seed=5)
    scaled = EmbeddingMatrix(
        dim=8,
        vocabulary=emb.vocabulary,
        vectors={k: 7.5 * v for k, v in emb.vectors.items()},
    )
    corpus = build_corpus(
        [
            ("P1", 2000, "J", CODE_POOL[:4]),
            ("P2", 2000, "J", CODE_POOL[2:7]),
        ]
    )
    paper = corpus.papers["P1"]
    assert article_distance(paper, emb) == pytest.approx(
        article_distance(paper, scaled), rel=1e-12
    )
    assert journal_distance(paper, corpus, emb) == pytest.approx(
        journal_distance(paper, corpus, scaled), rel=1e-9, abs=1e-12
    )
