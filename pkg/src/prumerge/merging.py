"""Token supplement: enrich each kept token by merging similar tokens.

For every selected token, the k most key-similar tokens (the center
included) form a cluster, and the center is replaced by the class-
attention-weighted average of the cluster's embeddings. Weights are
normalized within each cluster by default so the merged embedding keeps
the scale of its members; an unnormalized mode is available for
comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SimilarityMatrix, TokenSet, key_similarity
from .selection import SelectionResult, attention_values

__all__ = ["Cluster", "MergeResult", "knn_members", "merge_cluster", "token_supplement"]


@dataclass(frozen=True)
class Cluster:
    """A kept token, its k nearest neighbors by key similarity, and the
    normalized attention weights used to merge them."""

    center: int
    members: tuple[int, ...]
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(int(i) for i in self.members))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        if self.center not in self.members:
            raise ValueError("cluster center must be a member")
        if len(set(self.members)) != len(self.members):
            raise ValueError("cluster members must be distinct")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-6:
            raise ValueError("cluster weights must be a distribution")


@dataclass(frozen=True)
class MergeResult:
    """Refined token embeddings with per-center cluster diagnostics."""

    tokens: np.ndarray  # (m, d) float32
    clusters: tuple[Cluster, ...]


def knn_members(center: int, similarity: SimilarityMatrix, k: int) -> tuple[int, ...]:
    """Indices of the k tokens most similar to the center, ranked by
    descending similarity, ties broken by lower index.

    The center participates; with typical keys its self-similarity is
    maximal, so it ranks first.
    """
    n = similarity.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    if not 0 <= center < n:
        raise ValueError(f"center {center} out of range [0, {n})")
    order = np.argsort(-similarity.s[center], kind="stable")
    return tuple(int(i) for i in order[:k])


def merge_cluster(members, attention, Y: np.ndarray, normalize: bool = True) -> np.ndarray:
    """Attention-weighted average of the member embeddings.

    Weights are the class-attention values at the member indices,
    normalized to sum to 1 (uniform fallback when they sum to zero).
    With ``normalize=False`` the raw attention values are used directly.
    """
    members = list(members)
    if not members:
        raise ValueError("empty cluster")
    if len(set(members)) != len(members):
        raise ValueError("duplicate cluster member")
    if normalize and len(members) == 1:
        # bit-exact pruning path
        return np.asarray(Y[members[0]])
    w = attention_values(attention)[members]
    if normalize:
        total = w.sum()
        w = np.full(len(members), 1.0 / len(members)) if total == 0 else w / total
    rows = np.asarray(Y, dtype=np.float64)[members]
    merged = w @ rows
    return merged.astype(Y.dtype) if hasattr(Y, "dtype") else merged


def cluster_weights(members, attention) -> np.ndarray:
    """Normalized attention weights over cluster members (uniform when
    all member attentions are zero)."""
    w = attention_values(attention)[list(members)]
    total = w.sum()
    if total == 0:
        return np.full(len(members), 1.0 / len(members))
    return w / total


def token_supplement(
    selection: SelectionResult,
    tokens: TokenSet,
    attention,
    k: int,
    normalize: bool = True,
) -> MergeResult:
    """Merge each selected token with its k most key-similar tokens.

    Clusters are built independently per center and may overlap. With
    k = 1 the output is exactly the original embeddings at the selected
    indices (pure pruning).
    """
    if not 1 <= k <= tokens.n:
        raise ValueError(f"k must be in [1, {tokens.n}]")
    sim = key_similarity(tokens)
    refined = np.empty((selection.m, tokens.d), dtype=tokens.Y.dtype)
    clusters = []
    for row, center in enumerate(selection.indices):
        members = knn_members(center, sim, k)
        if center not in members:
            # degenerate keys can rank k other tokens above the center's
            # self-similarity; keep the center at the cost of the weakest
            members = members[:-1] + (center,)
        clusters.append(Cluster(center, members, cluster_weights(members, attention)))
        refined[row] = merge_cluster(members, attention, tokens.Y, normalize=normalize)
    return MergeResult(refined, tuple(clusters))
