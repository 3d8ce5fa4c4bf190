"""Appearance descriptors, pairwise scorers and pair-feature providers.

Scorers play the role of a pairwise appearance network: ``score(a, b)``
returns a similarity in [0, 1]. Providers return a fixed-length matching
feature for a pair, consumed by the LSTM association.
"""

from __future__ import annotations

import math
import zlib

import numpy as np

from .core import AppearanceDescriptor, DimensionMismatch, InvalidValue, UntaggedDescriptor

HIST_BINS = 8
HIST_DIM = 6 * HIST_BINS
PAIR_FEATURE_DIM = 150


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Hexcone RGB -> HSV for arrays with a trailing channel axis; H in [0, 1)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    chroma = v - rgb.min(axis=-1)
    s = np.divide(chroma, v, out=np.zeros_like(v), where=v > 0)
    safe = np.where(chroma > 0, chroma, 1.0)
    h = np.where(v == r, ((g - b) / safe) % 6.0,
                 np.where(v == g, (b - r) / safe + 2.0, (r - g) / safe + 4.0))
    h = np.where(chroma > 0, h / 6.0, 0.0) % 1.0
    return np.stack([h, s, v], axis=-1)


def extract_histogram(patch: np.ndarray) -> np.ndarray:
    """48-d HSV+RGB histogram (8 bins per channel), L2-normalized as a whole."""
    patch = np.asarray(patch, dtype=np.float64)
    channels = np.concatenate([rgb_to_hsv(patch), patch], axis=-1).reshape(-1, 6)
    bins = np.clip(np.floor(channels * HIST_BINS).astype(np.int64), 0, HIST_BINS - 1)
    hist = np.zeros(HIST_DIM)
    for ch in range(6):
        hist[ch * HIST_BINS:(ch + 1) * HIST_BINS] = np.bincount(bins[:, ch], minlength=HIST_BINS)
    norm = np.linalg.norm(hist)
    return hist / norm if norm > 0 else hist


def histogram_score(a: np.ndarray, b: np.ndarray) -> float:
    inner = float(np.dot(a, b))
    return math.sqrt(min(1.0, max(0.0, inner)))


def embedding_score(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"embedding dims differ: {a.shape} vs {b.shape}")
    diff = a - b
    return math.exp(-float(diff @ diff))


def oracle_score(a: AppearanceDescriptor, b: AppearanceDescriptor, same=0.9, diff=0.1) -> float:
    if a.tag is None or b.tag is None:
        raise UntaggedDescriptor("oracle scoring needs identity tags on both descriptors")
    return same if a.tag == b.tag else diff


def synthetic_pair_feature(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """150-d symmetric matching feature for two 48-d vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != (HIST_DIM,) or b.shape != (HIST_DIM,):
        raise DimensionMismatch(f"pair feature needs two {HIST_DIM}-d vectors, got {a.shape}, {b.shape}")
    diff = a - b
    absdiff = np.abs(diff)
    prod = a * b
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    cosine = float(prod.sum() / (na * nb)) if na > 0 and nb > 0 else 0.0
    stats = np.array([
        absdiff.sum(),
        math.sqrt(float(diff @ diff)),
        prod.sum(),
        np.sqrt(np.clip(prod, 0.0, None)).sum(),
        absdiff.max(),
        cosine,
    ])
    return np.concatenate([absdiff, prod, diff * diff, stats])


def linear_feature_update(f_prev, f_obs, match_likelihood: float, lambda_f: float) -> np.ndarray:
    if not 0.0 <= match_likelihood <= 1.0:
        raise InvalidValue(f"match likelihood must lie in [0, 1], got {match_likelihood}")
    if lambda_f < 1.0:
        raise InvalidValue(f"lambda_f must be >= 1, got {lambda_f}")
    w = match_likelihood / lambda_f
    return (1.0 - w) * np.asarray(f_prev, dtype=np.float64) + w * np.asarray(f_obs, dtype=np.float64)


def select_feature_update(f_prev, f_obs, match_likelihood: float, tau_a: float):
    return f_obs if match_likelihood > tau_a else f_prev


class PairScorer:
    """Pairwise appearance similarity in [0, 1]."""

    symmetric = True
    default_lambda_f = 2.0

    def prepare(self, desc: AppearanceDescriptor) -> AppearanceDescriptor:
        """Convert a raw descriptor into the form ``score`` consumes (called once per detection)."""
        return desc

    def score(self, a: AppearanceDescriptor, b: AppearanceDescriptor) -> float:
        raise NotImplementedError

    def score_batch(self, pairs) -> list[float]:
        return [self.score(a, b) for a, b in pairs]


def _vector_of(desc: AppearanceDescriptor) -> np.ndarray:
    if desc.vector is None:
        raise DimensionMismatch("descriptor carries no feature vector")
    return desc.vector


def _histogram_form(desc: AppearanceDescriptor) -> AppearanceDescriptor:
    if desc.patch is not None:
        return AppearanceDescriptor(vector=extract_histogram(desc.patch), tag=desc.tag)
    return desc


class HistogramScorer(PairScorer):
    default_lambda_f = 2.0

    def prepare(self, desc):
        return _histogram_form(desc)

    def score(self, a, b):
        return histogram_score(_vector_of(a), _vector_of(b))


class EmbeddingScorer(PairScorer):
    default_lambda_f = 4.0

    def score(self, a, b):
        return embedding_score(_vector_of(a), _vector_of(b))


class OracleScorer(PairScorer):
    """Identity-tag scorer for synthetic scenes.

    With ``noise > 0`` the score is perturbed by a value hashed from the
    pair's tags and vectors, so repeated calls stay reproducible.
    """

    default_lambda_f = 2.0

    def __init__(self, same=0.9, diff=0.1, noise=0.0, seed=0):
        self.same = same
        self.diff = diff
        self.noise = noise
        self.seed = seed

    def score(self, a, b):
        base = oracle_score(a, b, self.same, self.diff)
        if self.noise == 0:
            return base
        keys = sorted([_digest(a), _digest(b)])
        rng = np.random.default_rng([self.seed, *keys])
        return min(1.0, max(0.0, base + self.noise * rng.uniform(-1.0, 1.0)))


def _digest(desc: AppearanceDescriptor) -> int:
    payload = repr(desc.tag).encode()
    if desc.vector is not None:
        payload += desc.vector.tobytes()
    return zlib.crc32(payload)


class ConstantScorer(PairScorer):
    """Returns one value for every pair; 1.0 turns appearance off."""

    def __init__(self, value=1.0):
        self.value = value

    def score(self, a, b):
        return self.value


class PairFeatureProvider:
    dim = PAIR_FEATURE_DIM

    def prepare(self, desc: AppearanceDescriptor) -> AppearanceDescriptor:
        return desc

    def feature(self, a: AppearanceDescriptor, b: AppearanceDescriptor) -> np.ndarray:
        raise NotImplementedError

    def feature_batch(self, pairs) -> list[np.ndarray]:
        return [self.feature(a, b) for a, b in pairs]


class SyntheticPairFeature(PairFeatureProvider):
    """Matching features built from 48-d histograms or embeddings."""

    def prepare(self, desc):
        return _histogram_form(desc)

    def feature(self, a, b):
        return synthetic_pair_feature(_vector_of(a), _vector_of(b))


SCORERS = {
    "histogram": HistogramScorer,
    "embedding": EmbeddingScorer,
    "oracle": OracleScorer,
    "file": EmbeddingScorer,
}
