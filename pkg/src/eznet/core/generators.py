"""Seeded samplers for Erdős–Rényi, block-model, neighbourhood and Gaussian data.

Every sampler derives independent PCG64 streams from one seed through
`numpy.random.SeedSequence` children: one for community labels, one for degree
weights, one for edges (or Gaussian noise) and, for the neighbourhood model,
one for the ego's attachments. Identical seeds give identical output.
"""

from dataclasses import dataclass
import logging
from math import comb

import numpy as np

from eznet.core.errors import DomainError
from eznet.core.graph_io import DataMatrix, Graph
from eznet.core.models import DcbmParams, NeighborhoodParams, WeightDistribution

logger = logging.getLogger(__name__)

Seed = int | np.random.SeedSequence

LABEL_STREAM, WEIGHT_STREAM, EDGE_STREAM, EGO_STREAM = range(4)
CLIP_WARNING_FRACTION = 1e-3


def seed_sequence(seed: Seed, *spawn_key: int) -> np.random.SeedSequence:
    """SeedSequence for `seed`, descended along `spawn_key`.

    Children are built directly from (entropy, spawn_key) so repeated calls never
    depend on how many children were spawned before.
    """
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + spawn_key)
    if seed < 0 or seed >= 2**64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.SeedSequence(seed, spawn_key=spawn_key)


def stream(seed: Seed, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, index)))


def bernoulli_pair_indices(num_pairs: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Indices in [0, num_pairs) each kept independently with probability p.

    Gaps between kept indices are geometric, so the cost is proportional to the
    number of kept indices rather than to num_pairs.
    """
    if p <= 0 or num_pairs == 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1:
        return np.arange(num_pairs, dtype=np.int64)
    expected = num_pairs * p
    chunk = int(expected + 10 * np.sqrt(expected) + 16)
    pieces = []
    position = -1
    while True:
        indices = position + np.cumsum(rng.geometric(p, size=chunk), dtype=np.int64)
        pieces.append(indices[indices < num_pairs])
        if indices[-1] >= num_pairs:
            break
        position = int(indices[-1])
    return np.concatenate(pieces)


def decode_pair_indices(indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices k = j (j-1) / 2 + i to pairs (i, j) with i < j."""
    indices = np.asarray(indices, dtype=np.int64)
    j = np.floor((1 + np.sqrt(1 + 8 * indices.astype(np.float64))) / 2).astype(np.int64)
    j = np.where(j * (j - 1) // 2 > indices, j - 1, j)
    j = np.where((j + 1) * j // 2 <= indices, j + 1, j)
    i = indices - j * (j - 1) // 2
    return i, j


def sample_er(n: int, p: float, seed: Seed) -> Graph:
    """Erdős–Rényi graph: each of the C(n, 2) pairs is an edge with probability p."""
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}")
    if not 0 <= p <= 1:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    rng = stream(seed, EDGE_STREAM)
    i, j = decode_pair_indices(bernoulli_pair_indices(comb(n, 2), p, rng))
    return Graph(n, np.column_stack([i, j]))


@dataclass(frozen=True, eq=False)
class DcbmSample:
    """A block-model draw with its latent variables."""

    graph: Graph
    labels: np.ndarray
    """Community of each node, 0..k-1."""
    weights: np.ndarray
    """Degree weight of each node."""
    clipped: int = 0
    """Edges whose probability W_i W_j a (or b) exceeded 1 and was clipped."""


def _sample_dcbm(params: DcbmParams, seed: Seed) -> DcbmSample:
    labels = stream(seed, LABEL_STREAM).integers(params.k, size=params.n)
    weights = params.w_dist.sample(stream(seed, WEIGHT_STREAM), params.n)
    rng = stream(seed, EDGE_STREAM)

    # Thinning: draw candidates at the largest possible probability, then accept at theta / p_max.
    p_max = min(1.0, float(weights.max()) ** 2 * max(params.a, params.b))
    i, j = decode_pair_indices(bernoulli_pair_indices(comb(params.n, 2), p_max, rng))
    theta = weights[i] * weights[j] * np.where(labels[i] == labels[j], params.a, params.b)
    keep = rng.random(len(theta)) < np.minimum(theta, 1.0) / p_max if p_max > 0 else np.zeros(0, dtype=bool)
    clipped = int(np.count_nonzero(theta[keep] > 1))

    graph = Graph(params.n, np.column_stack([i[keep], j[keep]]))
    if clipped and clipped > CLIP_WARNING_FRACTION * graph.num_edges:
        logger.warning(
            "%s of %s edges had probability above 1 and were clipped; parameters lie outside the model's range",
            clipped,
            graph.num_edges,
        )
    return DcbmSample(graph, labels, weights, clipped)


def sample_dcbm(params: DcbmParams, seed: Seed) -> DcbmSample:
    """Degree-corrected block model draw.

    Labels are uniform on 0..k-1, weights i.i.d. from `params.w_dist`, and each
    pair is an edge with probability min(W_i W_j a, 1) within a community and
    min(W_i W_j b, 1) across.
    """
    return _sample_dcbm(params, seed)


def sample_sbm(n: int, k: int, a: float, b: float, seed: Seed) -> DcbmSample:
    return sample_dcbm(DcbmParams(n, k, a, b), seed)


def sample_config(n: int, a: float, w_dist: WeightDistribution, seed: Seed) -> DcbmSample:
    """Configuration model: a single community with P(A_ij = 1) = a W_i W_j."""
    return sample_dcbm(DcbmParams(n, 1, a, a, w_dist), seed)


@dataclass(frozen=True, eq=False)
class NeighborhoodSample:
    graph: Graph
    """Ambient graph shifted to nodes 1..n, plus the ego as node 0."""
    ambient: DcbmSample
    """The block-model draw on nodes 0..n-1 before the shift."""


def sample_neighborhood_model(params: NeighborhoodParams, seed: Seed) -> NeighborhoodSample:
    """Ego network model: a DCBM plus an ego attached to members of communities 0..r-1 with probability p."""
    ambient = _sample_dcbm(params.ambient, seed)
    eligible = np.flatnonzero(ambient.labels < params.r)
    attached = eligible[stream(seed, EGO_STREAM).random(len(eligible)) < params.p]
    ego_edges = np.column_stack([np.zeros(len(attached), dtype=np.int64), attached + 1])
    graph = Graph(params.n + 1, np.concatenate([ambient.graph.edges + 1, ego_edges]))
    logger.debug("Ego attached to %s of %s eligible nodes", len(attached), len(eligible))
    return NeighborhoodSample(graph, ambient)


def dcbm_correlation(params: DcbmParams, labels: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Correlation matrix with unit diagonal and off-diagonal W_j W_l a (same community) or W_j W_l b."""
    sigma = np.outer(weights, weights) * np.where(labels[:, None] == labels[None, :], params.a, params.b)
    np.fill_diagonal(sigma, 1.0)
    return sigma


@dataclass(frozen=True, eq=False)
class GaussianSample:
    data: DataMatrix
    labels: np.ndarray
    weights: np.ndarray
    sigma: np.ndarray
    """Realized covariance of each row."""


def sample_gaussian_dcbm(n_samples: int, params: DcbmParams, seed: Seed) -> GaussianSample:
    """Rows i.i.d. N(0, Sigma) where Sigma is the DCBM correlation over `params.n` variables.

    Raises:
        DomainError: If the realized Sigma is not positive definite.
    """
    if n_samples < 1:
        raise DomainError(f"n_samples must be positive, got {n_samples}")
    labels = stream(seed, LABEL_STREAM).integers(params.k, size=params.n)
    weights = params.w_dist.sample(stream(seed, WEIGHT_STREAM), params.n)
    sigma = dcbm_correlation(params, labels, weights)
    try:
        factor = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as e:
        raise DomainError(
            f"correlation matrix for {params.describe()} is not positive definite; use smaller a and b"
        ) from e
    noise = stream(seed, EDGE_STREAM).standard_normal((n_samples, params.n))
    return GaussianSample(DataMatrix(noise @ factor.T), labels, weights, sigma)
