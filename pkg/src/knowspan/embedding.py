"""Skip-gram embeddings with negative sampling over per-paper code co-occurrence.

Each paper is one document whose window spans every code on it, so a paper
with m codes contributes all m*(m-1) ordered (center, context) pairs.  The
loss for one pair with negatives n_1..n_K is

    L = -log sigmoid(u_o . v_c) - sum_k log sigmoid(-u_{n_k} . v_c)

where v are input-side vectors (the ones exported) and u are output-side
vectors.  Training is plain sequential SGD: with a fixed seed and
deterministic=True two runs produce bit-identical matrices.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np
from scipy.special import expit

from .corpus import Corpus, PacsCode


class MissingCodeError(KeyError):
    """Lookup of a code absent from the trained vocabulary."""

    def __init__(self, code: PacsCode):
        super().__init__(code.raw)
        self.code = code

    def __str__(self) -> str:
        return f"code {self.code.raw!r} is not in the embedding vocabulary"


@dataclass
class TrainingConfig:
    dim: int = 50
    negatives_per_positive: int = 5
    epochs: int = 5
    initial_learning_rate: float = 0.025
    final_learning_rate: float = 1e-4
    noise_exponent: float = 0.75
    seed: int = 0
    deterministic: bool = True

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError("dim must be at least 2")
        if self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be at least 1")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not (0.0 < self.final_learning_rate <= self.initial_learning_rate):
            raise ValueError("need 0 < final_learning_rate <= initial_learning_rate")
        if self.noise_exponent < 0:
            raise ValueError("noise_exponent must be nonnegative")


@dataclass
class EmbeddingMatrix:
    """Trained input-side vectors keyed by code.

    ``vocabulary`` preserves training order (descending frequency, ties by
    code text).  ``frequencies`` counts slot occurrences in the training pair
    stream; matrices restored from disk carry an empty frequency map.
    """

    dim: int
    vocabulary: tuple[PacsCode, ...]
    vectors: dict[PacsCode, np.ndarray]
    frequencies: dict[PacsCode, int] = field(default_factory=dict)
    loss_by_epoch: tuple[float, ...] = ()

    def __contains__(self, code: PacsCode) -> bool:
        return code in self.vectors

    def __getitem__(self, code: PacsCode) -> np.ndarray:
        try:
            return self.vectors[code]
        except KeyError:
            raise MissingCodeError(code) from None


def build_training_pairs(corpus: Corpus) -> Iterator[tuple[PacsCode, PacsCode]]:
    """All ordered co-occurrence pairs: m*(m-1) per paper with m codes."""
    for paper in corpus.papers.values():
        codes = paper.pacs_codes
        if len(codes) < 2:
            continue
        for center in codes:
            for context in codes:
                if context != center:
                    yield center, context


def pair_loss(
    center_vec: np.ndarray, context_vec: np.ndarray, negative_vecs: np.ndarray
) -> float:
    """Negative-sampling loss for one (center, context, negatives) triple."""
    s_pos = float(context_vec @ center_vec)
    s_neg = np.asarray(negative_vecs) @ center_vec
    return float(np.logaddexp(0.0, -s_pos) + np.logaddexp(0.0, s_neg).sum())


def pair_gradients(
    center_vec: np.ndarray, context_vec: np.ndarray, negative_vecs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of pair_loss w.r.t. center, context, and negatives."""
    negative_vecs = np.asarray(negative_vecs)
    p_pos = expit(float(context_vec @ center_vec))
    p_neg = expit(negative_vecs @ center_vec)
    g_context = (p_pos - 1.0) * center_vec
    g_negatives = p_neg[:, None] * center_vec[None, :]
    g_center = (p_pos - 1.0) * context_vec + p_neg @ negative_vecs
    return g_center, g_context, g_negatives


def _sgd_step(
    w_in: np.ndarray, w_out: np.ndarray, center: int, targets: np.ndarray, lr: float
) -> float:
    """One in-place SGD update; ``targets[0]`` is the positive context.

    Returns the loss at the pre-update parameters.  Duplicate negative draws
    are accumulated, not overwritten.
    """
    v = w_in[center]
    u = w_out[targets]  # fancy indexing copies, so u stays at pre-update values
    scores = u @ v
    loss = float(np.logaddexp(0.0, scores).sum() - scores[0])
    err = expit(scores)
    err[0] -= 1.0
    err *= lr
    grad_center = err @ u
    np.add.at(w_out, targets, -err[:, None] * v[None, :])
    w_in[center] = v - grad_center
    return loss


def train_embeddings(
    pairs: Iterable[tuple[PacsCode, PacsCode]], config: TrainingConfig | None = None
) -> EmbeddingMatrix:
    """Train input/output vector tables by SGD over the given pair stream.

    Negatives are drawn from a noise distribution proportional to slot
    frequency raised to ``noise_exponent``; a draw equal to the positive
    context is dropped rather than resampled.  The learning rate decays
    linearly from the initial to the final value over all scheduled updates.
    """
    config = config or TrainingConfig()
    pair_list = list(pairs)
    if not pair_list:
        raise ValueError("no training pairs: no paper carries two or more codes")
    counts: Counter[PacsCode] = Counter()
    for center, context in pair_list:
        counts[center] += 1
        counts[context] += 1
    if len(counts) < 2:
        raise ValueError("vocabulary must contain at least two codes")

    vocab = tuple(sorted(counts, key=lambda code: (-counts[code], code.raw)))
    index = {code: i for i, code in enumerate(vocab)}
    n_vocab = len(vocab)
    dim = config.dim

    seed = config.seed if config.deterministic else None
    rng = np.random.default_rng(seed)
    bound = 0.5 / dim
    w_in = rng.uniform(-bound, bound, size=(n_vocab, dim))
    w_out = rng.uniform(-bound, bound, size=(n_vocab, dim))

    noise = np.array([counts[c] for c in vocab], dtype=np.float64) ** config.noise_exponent
    noise_cdf = np.cumsum(noise)
    noise_cdf /= noise_cdf[-1]

    n_pairs = len(pair_list)
    centers = np.fromiter((index[c] for c, _ in pair_list), dtype=np.int64, count=n_pairs)
    contexts = np.fromiter((index[o] for _, o in pair_list), dtype=np.int64, count=n_pairs)

    k = config.negatives_per_positive
    lr_hi = config.initial_learning_rate
    lr_lo = config.final_learning_rate
    total_updates = config.epochs * n_pairs
    step = 0
    losses = []
    for _ in range(config.epochs):
        acc = 0.0
        for i in range(n_pairs):
            lr = max(lr_lo, lr_hi + (lr_lo - lr_hi) * (step / total_updates))
            step += 1
            context = contexts[i]
            draws = np.searchsorted(noise_cdf, rng.random(k))
            draws = draws[draws != context]
            targets = np.concatenate(([context], draws))
            acc += _sgd_step(w_in, w_out, centers[i], targets, lr)
        losses.append(acc / n_pairs)

    vectors = {code: w_in[i].copy() for code, i in index.items()}
    return EmbeddingMatrix(
        dim=dim,
        vocabulary=vocab,
        vectors=vectors,
        frequencies=dict(counts),
        loss_by_epoch=tuple(losses),
    )


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), in [0, 2]; zero-norm input is an error, not a default."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    norm_u = float(np.linalg.norm(u))
    norm_v = float(np.linalg.norm(v))
    if norm_u == 0.0 or norm_v == 0.0:
        raise ValueError("cosine distance is undefined for zero-norm vectors")
    d = 1.0 - float(u @ v) / (norm_u * norm_v)
    return min(2.0, max(0.0, d))


def save_embeddings(matrix: EmbeddingMatrix, path: str) -> None:
    """Plain-text export: ``dim=<M> vocab=<V>`` header, then one code per line.

    Floats are written with shortest round-trip precision, so save/load is
    exact and re-saving an unchanged matrix is byte-identical.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"dim={matrix.dim} vocab={len(matrix.vocabulary)}\n")
        for code in matrix.vocabulary:
            vec = matrix.vectors[code]
            fh.write(code.raw + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def load_embeddings(path: str) -> EmbeddingMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        try:
            dim = int(header[0].removeprefix("dim="))
            n_vocab = int(header[1].removeprefix("vocab="))
        except (IndexError, ValueError):
            raise ValueError(f"malformed embedding header in {path!r}") from None
        vocab: list[PacsCode] = []
        vectors: dict[PacsCode, np.ndarray] = {}
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            code = PacsCode.from_text(parts[0])
            values = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            if values.shape != (dim,):
                raise ValueError(f"vector for {code.raw!r} does not have dim={dim}")
            vocab.append(code)
            vectors[code] = values
    if len(vocab) != n_vocab:
        raise ValueError(f"expected {n_vocab} vocabulary rows, found {len(vocab)}")
    return EmbeddingMatrix(dim=dim, vocabulary=tuple(vocab), vectors=vectors)
