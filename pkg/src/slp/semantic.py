"""Vector representations of patterns: embedding averages, BOW, SVD.

Pattern vectors are built by averaging pretrained word embeddings of the
content words on the dependency path (stop-words and out-of-vocabulary
words are skipped).  BOW vectors are averaged one-hots over a vocabulary
built from the full pattern set; the SVD representation projects those
into a low-rank space fitted on the same set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

EMBEDDING = "embedding"
BOW = "bow"
SVD = "svd"
REPRESENTATIONS = (EMBEDDING, BOW, SVD)

DEFAULT_SVD_RANK = 100


class EmbeddingFormatError(ValueError):
    """Vector file line with the wrong dimensionality or layout."""


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        text = resources.files("slp.data").joinpath("stopwords.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


@dataclass
class EmbeddingTable:
    dimension: int
    vectors: dict[str, np.ndarray]
    stopwords: frozenset[str]
    case_fold: bool = True

    def lookup(self, word: str) -> np.ndarray | None:
        return self.vectors.get(word.lower() if self.case_fold else word)

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(
    path: str | Path,
    stopwords_path: str | Path | None = None,
    case_fold: bool = True,
) -> EmbeddingTable:
    """Load a text vector file: one token per line followed by d reals.

    The dimension is inferred from the first line; any later line with a
    different count raises with its line number.  Under case folding the
    first occurrence of a folded token wins.
    """
    stopwords = load_stopwords(stopwords_path)
    vectors: dict[str, np.ndarray] = {}
    dimension: int | None = None
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split(" ")
            token = parts[0]
            values = parts[1:]
            if dimension is None:
                if len(values) == 0:
                    raise EmbeddingFormatError(f"line {lineno}: no vector components")
                dimension = len(values)
            elif len(values) != dimension:
                raise EmbeddingFormatError(
                    f"line {lineno}: expected {dimension} components, got {len(values)}"
                )
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(f"line {lineno}: non-numeric vector component") from None
            key = token.lower() if case_fold else token
            if key not in vectors:
                vectors[key] = vec
    if dimension is None:
        raise EmbeddingFormatError("empty embedding file")
    return EmbeddingTable(dimension=dimension, vectors=vectors, stopwords=stopwords, case_fold=case_fold)


@dataclass
class PatternVector:
    vector: np.ndarray
    contributing_words: list[str] = field(default_factory=list)
    empty_flag: bool = False


def compose_sdp(sdp_words: list[str], table: EmbeddingTable) -> PatternVector:
    """Average the embeddings of non-stopword, in-vocabulary path words."""
    contributing: list[str] = []
    acc = np.zeros(table.dimension, dtype=np.float64)
    for word in sdp_words:
        if word.lower() in table.stopwords:
            continue
        vec = table.lookup(word)
        if vec is None:
            continue
        acc += vec
        contributing.append(word)
    if not contributing:
        return PatternVector(vector=np.zeros(table.dimension), empty_flag=True)
    return PatternVector(vector=acc / len(contributing), contributing_words=contributing)


def cosine(a: PatternVector | np.ndarray, b: PatternVector | np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm."""
    va = a.vector if isinstance(a, PatternVector) else np.asarray(a, dtype=np.float64)
    vb = b.vector if isinstance(b, PatternVector) else np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


def build_vocabulary(word_lists: list[list[str]]) -> dict[str, int]:
    """Stable word -> column index map over the full pattern set."""
    vocab: dict[str, int] = {}
    for words in word_lists:
        for word in words:
            if word not in vocab:
                vocab[word] = len(vocab)
    return vocab


def bow_vector(sdp_words: list[str], vocabulary: dict[str, int]) -> PatternVector:
    """Average of one-hot vectors: counts over the vocabulary divided by
    the total word count."""
    vec = np.zeros(len(vocabulary), dtype=np.float64)
    for word in sdp_words:
        idx = vocabulary.get(word)
        if idx is not None:
            vec[idx] += 1.0
    if not sdp_words:
        return PatternVector(vector=vec, empty_flag=True)
    return PatternVector(vector=vec / len(sdp_words), contributing_words=list(sdp_words))


@dataclass
class SvdModel:
    """Rank-r truncated SVD of a patterns x vocabulary matrix."""

    rank: int
    singular_values: np.ndarray  # (r,)
    components: np.ndarray       # (r, vocab) rows of V^T
    row_vectors: np.ndarray      # (patterns, r) = U_r * S_r

    def transform(self, x: np.ndarray) -> np.ndarray:
        """Project a vocabulary-space vector (or matrix) into the reduced
        space; reusable for patterns unseen at fit time."""
        return np.asarray(x, dtype=np.float64) @ self.components.T


def svd_reduce(pattern_matrix: np.ndarray, rank: int) -> SvdModel:
    """Best rank-r factorization of the pattern matrix (exact SVD)."""
    matrix = np.asarray(pattern_matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError("pattern matrix must be 2-dimensional")
    max_rank = min(matrix.shape)
    if rank < 1 or rank > max_rank:
        raise ValueError(f"rank must be in [1, {max_rank}], got {rank}")
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    return SvdModel(
        rank=rank,
        singular_values=s[:rank].copy(),
        components=vt[:rank].copy(),
        row_vectors=u[:, :rank] * s[:rank],
    )
