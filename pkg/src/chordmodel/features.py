"""The four transition features and their standardization rules.

Features of a chord transition (prev -> cur):

- chord size: number of pitch classes in cur.
- harmonicity: peakiness (KL divergence from uniform, in bits) of the
  virtual pitch-class spectrum of cur, z-scored within its chord-size group.
- spectral distance: 1 minus cosine similarity of the spectra of prev and cur.
- voice-leading distance: minimal total wrapped motion from prev to cur.

All four are finally scaled by the population mean and SD over the set of
all 4,095 x 4,095 ordered chord pairs. When a chord has no predecessor the
sequential features are imputed with the population mean, hence standardize
to exactly 0.

FeatureSpace bundles every per-alphabet table (spectra, pairwise distance
matrices keyed by transposition class, harmonicity table, standardization
stats, standardized feature tensors) and is the unit of caching: everything
downstream (model fitting, importance, the command line) reads from it.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pcset import (
    N_PITCH_CLASSES,
    ChordAlphabet,
    PcSet,
    as_pcset,
    enumerate_alphabet,
)
from .spectrum import (
    SpectrumParams,
    Spectrum,
    alphabet_spectra,
    pcset_spectrum,
    read_spectrum_cache,
    spectral_distance,
    tone_similarity_profile,
    write_spectrum_cache,
)
from .voiceleading import voice_leading_distance, voice_leading_matrix

FEATURE_NAMES = (
    "chord_size",
    "harmonicity",
    "spectral_distance",
    "voice_leading_distance",
)
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class FeatureVector:
    """Standardized feature values for one chord transition."""

    chord_size: float
    harmonicity: float
    spectral_distance: float
    voice_leading_distance: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.chord_size,
                self.harmonicity,
                self.spectral_distance,
                self.voice_leading_distance,
            ]
        )


@dataclass(frozen=True)
class HarmonicityTable:
    """Raw and size-normalized harmonicity for every alphabet chord."""

    raw: np.ndarray
    normalized: np.ndarray


@dataclass(frozen=True)
class TransitionFeatureStats:
    """Population mean and SD of each raw feature over all ordered pairs."""

    mean: np.ndarray
    sd: np.ndarray

    def standardize(self, raw: np.ndarray) -> np.ndarray:
        return (np.asarray(raw, dtype=float) - self.mean) / self.sd


def min_voice_leading(x: PcSet, y: PcSet) -> float:
    """Exact minimal voice-leading distance (edge-cover minimum)."""
    return voice_leading_distance(x, y)


def virtual_pitch_spectrum(
    x: PcSet,
    params: SpectrumParams = SpectrumParams(),
    literal_q: bool = False,
) -> Spectrum:
    """Unit-mass profile of template-match strength across all 1,200 bins.

    Each bin p holds the spectral similarity (1 minus spectral distance)
    between the harmonic tone template at p and the spectrum of x, then the
    profile is normalized so its rectangle-rule integral is 1. Peaks mark
    virtual pitches. With literal_q the profile is built from the distance
    itself instead of the similarity (kept for comparison; it peaks at the
    worst template matches).
    """
    x = as_pcset(x)
    if not x:
        raise ValueError("virtual pitch spectrum needs a non-empty pitch-class set")
    sim = tone_similarity_profile(pcset_spectrum(x, params), params)
    q = (1.0 - sim) if literal_q else sim
    mass = q.sum() * params.bin_width
    if mass == 0.0:
        raise ValueError("virtual pitch profile has zero mass")
    return q / mass


def _kl_from_uniform(q_prime: np.ndarray, bin_width: float) -> float:
    """KL divergence in bits of a unit-mass profile from the uniform density."""
    q = np.asarray(q_prime, dtype=float)
    positive = q > 0.0
    vals = q[positive] * np.log2(N_PITCH_CLASSES * q[positive])
    return bin_width * float(np.sum(vals))


def harmonicity_raw(
    x: PcSet,
    params: SpectrumParams = SpectrumParams(),
    literal_q: bool = False,
) -> float:
    """Peakiness of the virtual pitch-class spectrum, in bits; >= 0."""
    return _kl_from_uniform(
        virtual_pitch_spectrum(x, params, literal_q), params.bin_width
    )


def build_harmonicity_table(
    alphabet: ChordAlphabet,
    params: SpectrumParams = SpectrumParams(),
    literal_q: bool = False,
) -> HarmonicityTable:
    """Raw harmonicity for all chords, z-scored within chord-size groups.

    Raw values are computed once per transposition class and broadcast over
    each orbit, so transposition invariance holds exactly. Z-scores use the
    population SD; zero-variance size groups (1 and 12 notes) map to 0.
    """
    rep_raw = np.array(
        [
            harmonicity_raw(alphabet[int(rep_id)], params, literal_q)
            for rep_id in alphabet.rep_ids
        ]
    )
    raw = rep_raw[alphabet.rep_row]
    normalized = np.zeros(len(alphabet))
    for size in range(1, N_PITCH_CLASSES + 1):
        group = alphabet.sizes == size
        values = raw[group]
        # sizes 1, 11 and 12 are single transposition orbits, hence constant;
        # comparing extremes avoids round-off posing as spread
        if np.ptp(values) > 0.0:
            normalized[group] = (values - values.mean()) / values.std()
    return HarmonicityTable(raw=raw, normalized=normalized)


def pair_population_moments(
    values: np.ndarray, orbit_sizes: np.ndarray
) -> tuple[float, float]:
    """Population mean and variance of a per-(class, chord) value matrix.

    values[r, c] is the feature value of the transition (representative of
    class r -> chord c). Weighting row r by its orbit size reproduces the
    moments over all ordered chord pairs exactly, because transposing a
    context permutes its continuation row rather than changing its values.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(orbit_sizes, dtype=float)
    n = w.sum() * v.shape[1]
    mean = float(w @ v.sum(axis=1)) / n
    second = float(w @ (v * v).sum(axis=1)) / n
    return mean, second - mean * mean


def build_transition_stats(
    alphabet: ChordAlphabet,
    table: HarmonicityTable,
    spectral_matrix: np.ndarray,
    vl_matrix: np.ndarray,
) -> TransitionFeatureStats:
    """Exact moments of the four raw features over all 4095^2 ordered pairs.

    Chord size and harmonicity depend only on the continuation, so their
    pair-population moments equal plain per-chord moments. The sequential
    features are aggregated from the per-class matrices with orbit weights.
    """
    sizes = alphabet.sizes.astype(float)
    mean = np.empty(N_FEATURES)
    var = np.empty(N_FEATURES)
    mean[0], var[0] = float(sizes.mean()), float(sizes.var())
    mean[1], var[1] = float(table.normalized.mean()), float(table.normalized.var())
    mean[2], var[2] = pair_population_moments(spectral_matrix, alphabet.rep_orbit_sizes)
    mean[3], var[3] = pair_population_moments(vl_matrix, alphabet.rep_orbit_sizes)
    if np.any(var <= 0.0):
        raise ValueError("degenerate feature population (zero variance)")
    return TransitionFeatureStats(mean=mean, sd=np.sqrt(var))


def transition_features(
    prev: PcSet | None,
    cur: PcSet,
    stats: TransitionFeatureStats,
    table: HarmonicityTable,
    alphabet: ChordAlphabet | None = None,
    params: SpectrumParams = SpectrumParams(),
) -> FeatureVector:
    """Standardized features of one transition, computed from first principles.

    This is the slow reference path (fresh spectra, fresh voice-leading
    solve); FeatureSpace provides the cached equivalent for bulk work.
    """
    alphabet = alphabet or enumerate_alphabet()
    cur = as_pcset(cur)
    raw = np.empty(N_FEATURES)
    raw[0] = len(cur)
    raw[1] = table.normalized[alphabet.id_of(cur)]
    if prev is None:
        raw[2] = stats.mean[2]
        raw[3] = stats.mean[3]
    else:
        prev = as_pcset(prev)
        raw[2] = spectral_distance(
            pcset_spectrum(prev, params), pcset_spectrum(cur, params)
        )
        raw[3] = voice_leading_distance(prev, cur)
    z = stats.standardize(raw)
    return FeatureVector(*[float(v) for v in z])


class FeatureSpace:
    """All per-alphabet feature tables, built once per parameter set.

    Key members:

    - spectral_matrix, vl_matrix: raw distances, shape (n_classes, 4095),
      row r = transition (class-r representative -> chord c). Distances for
      an arbitrary context X are row rep_row[X] indexed through the
      transposition permutation, see transition_rows.
    - table: HarmonicityTable; stats: TransitionFeatureStats.
    - rep_features: standardized features, shape (n_classes, 4095, 4).
    - start_features: standardized features of context-free events,
      shape (4095, 4); sequential components are exactly 0.
    """

    def __init__(
        self,
        params: SpectrumParams = SpectrumParams(),
        literal_q: bool = False,
        cache_dir: str | Path | None = None,
    ) -> None:
        self.params = params
        self.literal_q = literal_q
        self.alphabet = enumerate_alphabet()
        al = self.alphabet

        spectra = self._cached_spectra(cache_dir)
        rep_spectra = spectra[al.rep_ids]
        unit = spectra / np.linalg.norm(spectra, axis=1, keepdims=True)
        rep_unit = rep_spectra / np.linalg.norm(rep_spectra, axis=1, keepdims=True)
        self.spectral_matrix = np.clip(1.0 - rep_unit @ unit.T, 0.0, 1.0)
        self.vl_matrix = self._cached_vl_matrix(cache_dir)

        self.table = build_harmonicity_table(al, params, literal_q)
        self.stats = build_transition_stats(
            al, self.table, self.spectral_matrix, self.vl_matrix
        )

        mean, sd = self.stats.mean, self.stats.sd
        size_std = (al.sizes.astype(float) - mean[0]) / sd[0]
        harm_std = (self.table.normalized - mean[1]) / sd[1]
        self.rep_features = np.empty((al.n_classes, len(al), N_FEATURES))
        self.rep_features[:, :, 0] = size_std[None, :]
        self.rep_features[:, :, 1] = harm_std[None, :]
        self.rep_features[:, :, 2] = (self.spectral_matrix - mean[2]) / sd[2]
        self.rep_features[:, :, 3] = (self.vl_matrix - mean[3]) / sd[3]
        self.start_features = np.zeros((len(al), N_FEATURES))
        self.start_features[:, 0] = size_std
        self.start_features[:, 1] = harm_std
        self.feature_names = FEATURE_NAMES

    @property
    def n_features(self) -> int:
        return self.rep_features.shape[2]

    def key(self) -> str:
        """Hash identifying the parameterization of all cached tables."""
        payload = json.dumps(
            {
                "params": self.params.key(),
                "literal_q": self.literal_q,
                "alphabet": self.alphabet.ordering_hash(),
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("ascii")).hexdigest()[:16]

    def _cached_spectra(self, cache_dir: str | Path | None) -> np.ndarray:
        al = self.alphabet
        if cache_dir is None:
            return alphabet_spectra(al.chords, self.params)
        path = Path(cache_dir) / f"spectra-{self.params.key()}.bin"
        if path.exists():
            try:
                return read_spectrum_cache(path, self.params, al.ordering_hash())
            except ValueError:
                path.unlink()
        spectra = alphabet_spectra(al.chords, self.params)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_spectrum_cache(path, spectra, self.params, al.ordering_hash())
        return spectra

    def _cached_vl_matrix(self, cache_dir: str | Path | None) -> np.ndarray:
        al = self.alphabet
        if cache_dir is None:
            return voice_leading_matrix(al)
        path = Path(cache_dir) / f"voiceleading-{al.ordering_hash()}.npy"
        if path.exists():
            matrix = np.load(path)
            if matrix.shape == (al.n_classes, len(al)):
                return matrix
            path.unlink()
        matrix = voice_leading_matrix(al)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.save(path, matrix)
        return matrix

    def context_row_perm(self, context_id: int) -> tuple[int, np.ndarray]:
        """Class row and continuation permutation for an arbitrary context.

        Transition (X -> Y) has the same features as (X - t -> Y - t) where
        t is the shift taking X to its class representative, so the feature
        row of X is the representative's row indexed by the permutation that
        transposes continuations down by t.
        """
        al = self.alphabet
        shift = int(al.shift_of[context_id])
        row = int(al.rep_row[context_id])
        return row, al.perm[(-shift) % N_PITCH_CLASSES]

    def transition_rows(self, context_id: int) -> np.ndarray:
        """Standardized features of (context -> every chord), shape (4095, 4)."""
        row, perm = self.context_row_perm(context_id)
        return self.rep_features[row, perm]

    def raw_transition_values(
        self, context_id: int | None, continuation_id: int
    ) -> np.ndarray:
        """Raw (unstandardized) feature values of one transition."""
        al = self.alphabet
        out = np.empty(N_FEATURES)
        out[0] = float(al.sizes[continuation_id])
        out[1] = float(self.table.normalized[continuation_id])
        if context_id is None:
            out[2] = self.stats.mean[2]
            out[3] = self.stats.mean[3]
        else:
            row, perm = self.context_row_perm(context_id)
            out[2] = self.spectral_matrix[row, perm[continuation_id]]
            out[3] = self.vl_matrix[row, perm[continuation_id]]
        return out


_SPACES: dict[tuple, FeatureSpace] = {}


def get_feature_space(
    params: SpectrumParams = SpectrumParams(),
    literal_q: bool = False,
    cache_dir: str | Path | None = None,
) -> FeatureSpace:
    """Process-wide memoized FeatureSpace (construction costs ~30 s uncached)."""
    key = (params, literal_q)
    if key not in _SPACES:
        _SPACES[key] = FeatureSpace(params, literal_q, cache_dir)
    return _SPACES[key]
