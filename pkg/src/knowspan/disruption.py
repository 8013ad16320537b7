"""Disruption scores from the citation graph, plus corpus-wide percentiles.

For a focal paper, qualifying papers are those published in or after the
focal year.  With F = qualifying citers of the focal paper and R = qualifying
citers of at least one of its references (the focal paper itself never
counts), the default "disjoint" counts are

    n_i = |F - R|    cite the focal paper only
    n_j = |F & R|    cite the focal paper and a reference
    n_k = |R - F|    cite a reference but not the focal paper

and the score is (n_i - n_j) / (n_i + n_j + n_k).  The "overlapping" variant
instead takes n_i = |F|, leaving n_j double-counted in both numerator terms.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy.stats import rankdata

from .corpus import CitationGraph, Corpus, Paper

VARIANTS = ("disjoint", "overlapping")


@dataclass(frozen=True)
class DisruptionCounts:
    n_i: int
    n_j: int
    n_k: int

    @property
    def total(self) -> int:
        return self.n_i + self.n_j + self.n_k


@dataclass(frozen=True)
class DisruptionScore:
    d: float | None
    percentile: float | None


def disruption_counts(
    focal: Paper, graph: CitationGraph, variant: str = "disjoint"
) -> DisruptionCounts:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    citers = graph.cited_by.get(focal.id, frozenset())
    ref_citers: set[str] = set()
    for ref in graph.cites.get(focal.id, frozenset()):
        for candidate in graph.cited_by.get(ref, frozenset()):
            if candidate != focal.id and graph.years[candidate] >= focal.year:
                ref_citers.add(candidate)
    n_j = len(citers & ref_citers)
    n_k = len(ref_citers - citers)
    n_i = len(citers) if variant == "overlapping" else len(citers) - n_j
    return DisruptionCounts(n_i=n_i, n_j=n_j, n_k=n_k)


def d_score(counts: DisruptionCounts) -> float:
    """(n_i - n_j) / (n_i + n_j + n_k); undefined when all counts are zero."""
    if counts.total == 0:
        raise ValueError("d-score is undefined when n_i + n_j + n_k == 0")
    return (counts.n_i - counts.n_j) / counts.total


def percentile_ranks(scores: list[float]) -> list[float]:
    """Midrank percentiles 100 * (rank - 0.5) / N; ties share one value."""
    if not scores:
        raise ValueError("cannot rank an empty score list")
    n = len(scores)
    ranks = rankdata(scores, method="average")
    return [float(100.0 * (rank - 0.5) / n) for rank in ranks]


def score_corpus(
    corpus: Corpus, graph: CitationGraph, variant: str = "disjoint"
) -> dict[str, tuple[DisruptionCounts, DisruptionScore]]:
    """Counts and scores for every paper; percentiles over the defined pool.

    Papers whose counts are all zero get ``DisruptionScore(None, None)`` and
    are excluded from the percentile pool.
    """
    counts = {
        pid: disruption_counts(paper, graph, variant)
        for pid, paper in corpus.papers.items()
    }
    defined = [(pid, d_score(c)) for pid, c in counts.items() if c.total > 0]
    percentiles = percentile_ranks([d for _, d in defined]) if defined else []
    pct_by_id = {pid: pct for (pid, _), pct in zip(defined, percentiles)}
    d_by_id = dict(defined)
    return {
        pid: (
            counts[pid],
            DisruptionScore(d=d_by_id.get(pid), percentile=pct_by_id.get(pid)),
        )
        for pid in corpus.papers
    }
