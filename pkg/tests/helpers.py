"""Independent oracles and corpus builders shared across the test suite.

The voice-leading oracles deliberately use different algorithm families
than the production code (star-union enumeration and a covered-subset DP
versus the production rotation-pair staircase), so agreement is evidence,
not tautology. The naive model oracle evaluates one softmax per event with
no transposition grouping.
"""

from __future__ import annotations

import copy
import itertools
import math
from functools import lru_cache

import numpy as np

from chordmodel.corpus import CorpusFile, Piece, collapse, preprocess_corpus
from chordmodel.model import EnergyModel, sample_sequence
from chordmodel.pcset import pc_distance


def make_corpus(pieces_chords, ids=None) -> CorpusFile:
    """CorpusFile from a list of chord-tuple sequences (bass-less)."""
    pieces = tuple(
        Piece(
            id=ids[k] if ids else f"piece-{k:04d}",
            events=tuple((tuple(sorted(c)), None) for c in chords),
        )
        for k, chords in enumerate(pieces_chords)
    )
    return CorpusFile(pieces=pieces, meta=None)


def sampled_corpus(space, weights, n_pieces, length, seed) -> CorpusFile:
    """Corpus drawn from the model itself; the standard synthetic oracle."""
    model = EnergyModel(space, weights=np.asarray(weights, dtype=float))
    rng = np.random.default_rng(seed)
    chords = [
        [tuple(c) for c in sample_sequence(model, length, rng)]
        for _ in range(n_pieces)
    ]
    return make_corpus(chords)


def collapsed(space, corpus: CorpusFile):
    return collapse(preprocess_corpus(corpus), space.alphabet)


# ---------------------------------------------------------------------------
# voice-leading oracles


def cost_matrix(x, y) -> np.ndarray:
    return np.array([[pc_distance(a, b) for b in y] for a in x], dtype=float)


@lru_cache(maxsize=None)
def _star_union_masks(m: int, n: int) -> np.ndarray:
    """All unions of left- and right-stars as (combo, m, n) booleans.

    Minimal edge covers decompose into stars, and every union of stars is
    reachable as {(i, f(i))} union {(g(j), j)} for maps f: rows -> cols and
    g: cols -> rows; enumerating both maps therefore covers every minimal
    cover.
    """
    f_maps = list(itertools.product(range(n), repeat=m))
    g_maps = list(itertools.product(range(m), repeat=n))
    masks = np.zeros((len(f_maps) * len(g_maps), m, n), dtype=bool)
    rows = np.arange(m)
    cols = np.arange(n)
    k = 0
    for f in f_maps:
        for g in g_maps:
            masks[k, rows, list(f)] = True
            masks[k, list(g), cols] = True
            k += 1
    return masks


def edge_cover_star_union(costs: np.ndarray) -> np.ndarray:
    """Exhaustive minimum edge cover for a batch of (P, m, n) cost tensors."""
    costs = np.asarray(costs, dtype=float)
    if costs.ndim == 2:
        costs = costs[None]
    _, m, n = costs.shape
    masks = _star_union_masks(m, n)
    totals = np.einsum("pmn,cmn->pc", costs, masks)
    return totals.min(axis=1)


def edge_cover_subset_dp(costs: np.ndarray) -> float:
    """Minimum edge cover by DP over the subset of covered columns.

    Row i picks a non-empty leaf set (its star); columns still uncovered at
    the end attach to their cheapest row.
    """
    costs = np.asarray(costs, dtype=float)
    m, n = costs.shape
    full = 1 << n
    subset_cost = np.zeros((m, full))
    for t in range(1, full):
        low = t & -t
        j = low.bit_length() - 1
        subset_cost[:, t] = subset_cost[:, t ^ low] + costs[:, j]
    dp = np.full(full, math.inf)
    dp[0] = 0.0
    for i in range(m):
        ndp = np.full(full, math.inf)
        for s in np.flatnonzero(np.isfinite(dp)):
            cand = dp[s] + subset_cost[i, 1:]
            targets = s | np.arange(1, full)
            np.minimum.at(ndp, targets, cand)
        dp = ndp
    colmin = costs.min(axis=0)
    best = math.inf
    for s in range(full):
        if not math.isfinite(dp[s]):
            continue
        extra = sum(colmin[j] for j in range(n) if not s >> j & 1)
        best = min(best, dp[s] + extra)
    return float(best)


def voice_leading_oracle(x, y) -> float:
    """Reference minimal voice-leading distance between two pitch-class sets."""
    return edge_cover_subset_dp(cost_matrix(x, y))


# ---------------------------------------------------------------------------
# model oracle


def naive_cost_gradient(corpus: CorpusFile, space, weights):
    """Event-by-event cost and gradient with no transposition grouping."""
    weights = np.asarray(weights, dtype=float)
    al = space.alphabet
    cost = 0.0
    grad = np.zeros(space.n_features)
    for piece in corpus.pieces:
        prev = None
        for chord in piece.chords:
            cid = al.id_of(chord)
            if prev is None:
                feats = space.start_features
            else:
                feats = space.transition_rows(al.id_of(prev))
            scores = feats @ weights
            mx = scores.max()
            expd = np.exp(scores - mx)
            z = expd.sum()
            cost += math.log(z) + mx - scores[cid]
            grad += (expd / z) @ feats - feats[cid]
            prev = chord
    return cost, grad


# ---------------------------------------------------------------------------
# duplicated-feature harness


def duplicate_feature(space, index: int, name: str):
    """A FeatureSpace clone with feature `index` copied as an extra column."""
    dup = copy.copy(space)
    dup.rep_features = np.concatenate(
        [space.rep_features, space.rep_features[:, :, index : index + 1]], axis=2
    )
    dup.start_features = np.concatenate(
        [space.start_features, space.start_features[:, index : index + 1]], axis=1
    )
    dup.feature_names = tuple(space.feature_names) + (name,)
    return dup
