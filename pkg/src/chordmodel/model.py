"""Energy-based generative model of chord sequences.

A sequence probability factorizes into a chain of conditionals. Each
conditional is a softmax over the 4,095-chord alphabet: the probability of
continuation x after context ctx is exp(-E(ctx, x)) / Z(ctx), where the
energy E is the negated weighted sum of active transition features and Z
sums exp(-E) over the alphabet.

Cost (total negative log-likelihood, nats) and its analytic gradient
(expected minus observed feature sums) are evaluated once per collapsed
transposition class and multiplied by counts, which keeps every evaluation
bounded by the number of distinct classes (at most 352 softmaxes) no matter
how large the corpus is. Accumulation follows a fixed order with exact
summation so repeated runs are bit-identical.

Fitting minimizes the cost with BFGS from w = 0 (optionally ridge-penalized);
the reported cross entropy is the per-event data term only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .corpus import CollapsedCorpus, aggregate_counts
from .features import FEATURE_NAMES, N_FEATURES, FeatureSpace
from .pcset import PcSet, as_pcset

GRADIENT_TOL = 1e-6
MAX_ITERATIONS = 500


def full_mask(n_features: int = N_FEATURES) -> np.ndarray:
    return np.ones(n_features, dtype=bool)


def mask_from_names(names) -> np.ndarray:
    mask = np.zeros(N_FEATURES, dtype=bool)
    for name in names:
        if name not in FEATURE_NAMES:
            raise ValueError(
                f"unknown feature {name!r}; expected one of {FEATURE_NAMES}"
            )
        mask[FEATURE_NAMES.index(name)] = True
    return mask


@dataclass
class EnergyModel:
    """Feature weights plus the caches needed to evaluate them."""

    space: FeatureSpace
    weights: np.ndarray = None
    feature_mask: np.ndarray = None

    def __post_init__(self) -> None:
        n = self.space.n_features
        if self.weights is None:
            self.weights = np.zeros(n)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.feature_mask is None:
            self.feature_mask = full_mask(n)
        self.feature_mask = np.asarray(self.feature_mask, dtype=bool)
        if self.weights.shape != (n,):
            raise ValueError(f"expected {n} weights")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")

    @property
    def effective_weights(self) -> np.ndarray:
        """Weights with masked-out features pinned to exactly 0."""
        return np.where(self.feature_mask, self.weights, 0.0)


def energy(ctx: PcSet | None, x: PcSet, model: EnergyModel) -> float:
    """Negated weighted feature sum for one transition."""
    space = model.space
    al = space.alphabet
    j = al.id_of(as_pcset(x))
    if ctx is None:
        features = space.start_features[j]
    else:
        features = space.transition_rows(al.id_of(as_pcset(ctx)))[j]
    return -float(features @ model.effective_weights)


def _score_rows(model: EnergyModel, ctx_id: int | None) -> np.ndarray:
    """Negated energies (feature scores) for all continuations of a context."""
    space = model.space
    if ctx_id is None:
        rows = space.start_features
    else:
        rows = space.transition_rows(ctx_id)
    return rows @ model.effective_weights


def conditional_distribution(ctx: PcSet | None, model: EnergyModel) -> np.ndarray:
    """Softmax of negated energies over the alphabet, in chord-id order."""
    scores = _score_rows(
        model, None if ctx is None else model.space.alphabet.id_of(as_pcset(ctx))
    )
    shifted = scores - scores.max()
    expd = np.exp(shifted)
    return expd / expd.sum()


def _class_blocks(model: EnergyModel, start: dict, trans: dict):
    """Deterministically ordered (features, ids, counts) blocks per class.

    The start-symbol context forms its own block; transition classes follow
    in sorted row order with their continuation ids relative to the class
    representative.
    """
    space = model.space
    if start:
        ids = np.array(sorted(start), dtype=np.int64)
        counts = np.array([start[i] for i in ids], dtype=float)
        yield space.start_features, ids, counts
    by_row: dict[int, list[tuple[int, int]]] = {}
    for (row, rel), count in trans.items():
        by_row.setdefault(row, []).append((rel, count))
    for row in sorted(by_row):
        pairs = sorted(by_row[row])
        ids = np.array([rel for rel, _ in pairs], dtype=np.int64)
        counts = np.array([c for _, c in pairs], dtype=float)
        yield space.rep_features[row], ids, counts


def _cost_gradient(
    model: EnergyModel, start: dict, trans: dict, ridge: float = 0.0
) -> tuple[float, np.ndarray]:
    """Total cost in nats and its gradient with respect to all 4 weights."""
    w = model.effective_weights
    cost_terms: list[float] = []
    grad = np.zeros(model.space.n_features)
    for features, ids, counts in _class_blocks(model, start, trans):
        scores = features @ w
        log_z = float(logsumexp(scores))
        n = counts.sum()
        cost_terms.append(n * log_z - float(counts @ scores[ids]))
        probs = np.exp(scores - log_z)
        grad += n * (probs @ features) - counts @ features[ids]
    cost = math.fsum(cost_terms)
    if ridge > 0.0:
        cost += 0.5 * ridge * float(w @ w)
        grad = grad + ridge * w
    grad = np.where(model.feature_mask, grad, 0.0)
    return cost, grad


def corpus_cost(corpus: CollapsedCorpus, model: EnergyModel,
                ridge: float = 0.0) -> float:
    """Negative log-likelihood of the corpus in nats (plus any ridge term)."""
    return _cost_gradient(model, corpus.start, corpus.trans, ridge)[0]


def corpus_gradient(corpus: CollapsedCorpus, model: EnergyModel,
                    ridge: float = 0.0) -> np.ndarray:
    """Gradient of corpus_cost: expected minus observed feature sums."""
    return _cost_gradient(model, corpus.start, corpus.trans, ridge)[1]


@dataclass(frozen=True)
class FitResult:
    """Outcome of one maximum-likelihood fit."""

    weights: np.ndarray
    cross_entropy: float
    converged: bool
    iterations: int
    gradient_norm: float
    n_events: int
    ridge: float
    feature_mask: np.ndarray = field(repr=False, default=None)

    def to_dict(self, feature_names=FEATURE_NAMES) -> dict:
        return {
            "weights": {
                name: float(w) for name, w in zip(feature_names, self.weights)
            },
            "feature_mask": [
                name for name, on in zip(feature_names, self.feature_mask) if on
            ],
            "cross_entropy_nats": self.cross_entropy,
            "converged": self.converged,
            "iterations": self.iterations,
            "gradient_max_norm": self.gradient_norm,
            "n_events": self.n_events,
            "ridge": self.ridge,
        }


def fit(
    corpus: CollapsedCorpus,
    space: FeatureSpace,
    feature_mask: np.ndarray | None = None,
    ridge: float = 0.0,
    w0: np.ndarray | None = None,
    multiplicities: np.ndarray | None = None,
) -> FitResult:
    """Minimize corpus cost over the active weights with BFGS.

    Starts from w = 0 unless w0 is given. multiplicities reweights whole
    pieces (the resampling hook); pieces with multiplicity 0 drop out.
    A run that stalls above the gradient tolerance is restarted once from
    its stall point, so the whole procedure stays deterministic. The
    returned cross entropy is the data term per event, in nats, excluding
    any ridge penalty.
    """
    mask = (full_mask(space.n_features) if feature_mask is None
            else np.asarray(feature_mask, bool))
    if multiplicities is None:
        start, trans = corpus.start, corpus.trans
        n_events = corpus.n_events
    else:
        start, trans = aggregate_counts(corpus.pieces, multiplicities)
        n_events = int(
            sum(m * p.n_events for m, p in zip(multiplicities, corpus.pieces))
        )
    if n_events == 0:
        raise ValueError("cannot fit on an empty corpus")

    model = EnergyModel(space, feature_mask=mask)
    if not mask.any():
        # no active features: every conditional is uniform over the alphabet
        return FitResult(
            weights=np.zeros(space.n_features),
            cross_entropy=math.log(len(space.alphabet)),
            converged=True,
            iterations=0,
            gradient_norm=0.0,
            n_events=n_events,
            ridge=ridge,
            feature_mask=mask,
        )

    active = np.flatnonzero(mask)

    def objective(w_active: np.ndarray) -> tuple[float, np.ndarray]:
        model.weights = np.zeros(space.n_features)
        model.weights[active] = w_active
        cost, grad = _cost_gradient(model, start, trans, ridge)
        return cost, grad[active]

    x0 = np.zeros(len(active))
    if w0 is not None:
        x0 = np.asarray(w0, dtype=float)[active]
    options = {"gtol": GRADIENT_TOL, "maxiter": MAX_ITERATIONS}
    result = minimize(objective, x0, jac=True, method="BFGS", options=options)
    iterations = int(result.nit)
    gradient_norm = float(np.max(np.abs(result.jac)))
    if not (result.success or gradient_norm <= GRADIENT_TOL):
        # BFGS can stall with a line-search precision loss just above the
        # tolerance; one restart with a fresh quasi-Newton state from the
        # stall point is deterministic and usually finishes the descent
        result = minimize(
            objective, result.x, jac=True, method="BFGS", options=options
        )
        iterations += int(result.nit)
        gradient_norm = float(np.max(np.abs(result.jac)))
    weights = np.zeros(space.n_features)
    weights[active] = result.x
    model.weights = weights
    data_cost = _cost_gradient(model, start, trans, 0.0)[0]
    return FitResult(
        weights=weights,
        cross_entropy=data_cost / n_events,
        converged=bool(result.success or gradient_norm <= GRADIENT_TOL),
        iterations=iterations,
        gradient_norm=gradient_norm,
        n_events=n_events,
        ridge=ridge,
        feature_mask=mask,
    )


def sample_sequence(
    model: EnergyModel, length: int, rng: np.random.Generator
) -> tuple[PcSet, ...]:
    """Ancestral sample of one chord sequence through the chain factorization."""
    if length < 1:
        raise ValueError("sequence length must be at least 1")
    al = model.space.alphabet
    chords: list[PcSet] = []
    ctx_id: int | None = None
    for _ in range(length):
        scores = _score_rows(model, ctx_id)
        shifted = scores - scores.max()
        probs = np.exp(shifted)
        probs /= probs.sum()
        ctx_id = int(rng.choice(len(al), p=probs))
        chords.append(al[ctx_id])
    return tuple(chords)
