"""Parameters of the block models and their population subgraph densities."""

from dataclasses import dataclass, field
import logging
import math
from typing import Literal

import numpy as np

from eznet.core.errors import DomainError

logger = logging.getLogger(__name__)

WeightKind = Literal["constant_one", "two_point", "scaled_lognormal"]

SECOND_MOMENT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class WeightDistribution:
    """Distribution of the degree weights W, normalized so that E W^2 = 1.

    Use the `constant_one`, `two_point` and `scaled_lognormal` constructors rather
    than filling fields directly.
    """

    kind: WeightKind = "constant_one"
    """Family of the weight distribution."""

    w_lo: float = 1.0
    """Low atom of the two-point family."""

    w_hi: float = 1.0
    """High atom of the two-point family."""

    prob_hi: float = 0.0
    """Probability of the high atom in the two-point family."""

    sigma: float = 0.0
    """Log-scale standard deviation of the lognormal family."""

    def __post_init__(self):
        if self.kind == "two_point":
            if not 0 <= self.prob_hi <= 1:
                raise DomainError(f"prob_hi must lie in [0, 1], got {self.prob_hi}")
            if self.w_lo < 0 or self.w_hi < 0:
                raise DomainError("weights must be non-negative")
            second = self.prob_hi * self.w_hi**2 + (1 - self.prob_hi) * self.w_lo**2
            if abs(second - 1) > SECOND_MOMENT_TOLERANCE:
                raise DomainError(f"two-point weights have E W^2 = {second!r}, expected 1")
        elif self.kind == "scaled_lognormal":
            if self.sigma < 0:
                raise DomainError(f"sigma must be non-negative, got {self.sigma}")
        elif self.kind != "constant_one":
            raise DomainError(f"unknown weight distribution {self.kind!r}")

    @classmethod
    def constant_one(cls) -> "WeightDistribution":
        return cls()

    @classmethod
    def two_point(cls, w_lo: float, prob_hi: float, w_hi: float | None = None) -> "WeightDistribution":
        """Two atoms w_lo and w_hi. If w_hi is omitted it is solved from E W^2 = 1."""
        if w_hi is None:
            if not 0 < prob_hi <= 1:
                raise DomainError(f"cannot solve w_hi with prob_hi={prob_hi}")
            remainder = 1 - (1 - prob_hi) * w_lo**2
            if remainder < 0:
                raise DomainError(f"w_lo={w_lo} too large for E W^2 = 1 at prob_hi={prob_hi}")
            w_hi = math.sqrt(remainder / prob_hi)
        return cls(kind="two_point", w_lo=w_lo, w_hi=w_hi, prob_hi=prob_hi)

    @classmethod
    def scaled_lognormal(cls, sigma: float) -> "WeightDistribution":
        """exp(sigma Z) divided by its analytic root second moment exp(sigma^2)."""
        return cls(kind="scaled_lognormal", sigma=sigma)

    def moment(self, order: int) -> float:
        """Analytic E W^order."""
        if self.kind == "constant_one":
            return 1.0
        if self.kind == "two_point":
            return self.prob_hi * self.w_hi**order + (1 - self.prob_hi) * self.w_lo**order
        return math.exp(order**2 * self.sigma**2 / 2 - order * self.sigma**2)

    @property
    def mean(self) -> float:
        return self.moment(1)

    @property
    def variance(self) -> float:
        return 1 - self.mean**2

    @property
    def max_weight(self) -> float:
        """Largest attainable weight; infinite for the lognormal family."""
        if self.kind == "constant_one":
            return 1.0
        if self.kind == "two_point":
            if self.prob_hi == 0:
                return self.w_lo
            if self.prob_hi == 1:
                return self.w_hi
            return max(self.w_lo, self.w_hi)
        return math.inf if self.sigma > 0 else 1.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "constant_one":
            return np.ones(size)
        if self.kind == "two_point":
            return np.where(rng.random(size) < self.prob_hi, self.w_hi, self.w_lo)
        return np.exp(self.sigma * rng.standard_normal(size) - self.sigma**2)

    def describe(self) -> str:
        if self.kind == "two_point":
            return f"two_point(w_lo={self.w_lo:g}, w_hi={self.w_hi:g}, prob_hi={self.prob_hi:g})"
        if self.kind == "scaled_lognormal":
            return f"scaled_lognormal(sigma={self.sigma:g})"
        return "constant_one"


def _check_unit_interval(name: str, value: float):
    if not 0 <= value <= 1:
        raise DomainError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class DcbmParams:
    """Degree-corrected block model: P(A_ij = 1) = W_i W_j a within communities, W_i W_j b across."""

    n: int
    """Number of nodes (or variables, for Gaussian data)."""

    k: int
    """Number of equally likely communities."""

    a: float
    """Within-community connectivity."""

    b: float
    """Between-community connectivity."""

    w_dist: WeightDistribution = field(default_factory=WeightDistribution.constant_one)
    """Degree weight distribution."""

    def __post_init__(self):
        if self.n < 3:
            raise DomainError(f"n must be at least 3, got {self.n}")
        if self.k < 1:
            raise DomainError(f"k must be at least 1, got {self.k}")
        _check_unit_interval("a", self.a)
        _check_unit_interval("b", self.b)

    def describe(self) -> str:
        return f"dcbm(n={self.n}, k={self.k}, a={self.a:g}, b={self.b:g}, w={self.w_dist.describe()})"


@dataclass(frozen=True)
class NeighborhoodParams:
    """DCBM on nodes 1..n with an ego node 0 attached with probability p to members of communities 1..r."""

    n: int
    k: int
    r: int
    """Number of communities the ego belongs to."""
    a: float
    b: float
    p: float
    """Probability that the ego attaches to a node of one of its own communities."""
    w_dist: WeightDistribution = field(default_factory=WeightDistribution.constant_one)

    def __post_init__(self):
        if self.n < 3 or self.k < 1:
            raise DomainError(f"need n >= 3 and k >= 1, got n={self.n}, k={self.k}")
        if not 1 <= self.r <= self.k:
            raise DomainError(f"r must lie in [1, k={self.k}], got {self.r}")
        if not 0 < self.p <= 1:
            raise DomainError(f"p must lie in (0, 1], got {self.p}")
        _check_unit_interval("a", self.a)
        _check_unit_interval("b", self.b)

    @property
    def ambient(self) -> DcbmParams:
        return DcbmParams(self.n, self.k, self.a, self.b, self.w_dist)

    @property
    def expected_size(self) -> float:
        """Expected neighbourhood size n r p / k."""
        return self.n * self.r * self.p / self.k

    def describe(self) -> str:
        return (
            f"neighborhood(n={self.n}, k={self.k}, r={self.r}, a={self.a:g}, b={self.b:g}, p={self.p:g}, "
            f"w={self.w_dist.describe()})"
        )


@dataclass(frozen=True)
class PopulationMoments:
    """Population edge, vee and triangle probabilities of a block model."""

    e: float
    v: float
    t: float

    @property
    def ez_characteristic(self) -> float:
        return self.t - (self.v / self.e) ** 3

    @property
    def sbm_gap(self) -> float:
        """T - E^3, the quantity the SBM test targets."""
        return self.t - self.e**3


def block_moments(k: int, a: float, b: float, mean_weight: float = 1.0) -> PopulationMoments:
    """E, V, T for k equally likely communities and weights with E W^2 = 1.

    E = (E W)^2 (a + (k-1) b) / k, V = (E W)^2 ((a + (k-1) b) / k)^2 and
    T = (a^3 + 3 (k-1) a b^2 + (k-1)(k-2) b^3) / k^2.
    """
    mixed = (a + (k - 1) * b) / k
    return PopulationMoments(
        e=mean_weight**2 * mixed,
        v=mean_weight**2 * mixed**2,
        t=(a**3 + 3 * (k - 1) * a * b**2 + (k - 1) * (k - 2) * b**3) / k**2,
    )


def population_moments(params: DcbmParams | NeighborhoodParams) -> PopulationMoments:
    """Population moments; for a neighbourhood model the r ego communities play the role of k."""
    k = params.r if isinstance(params, NeighborhoodParams) else params.k
    return block_moments(k, params.a, params.b, params.w_dist.mean)


def snr_dcbm(params: DcbmParams) -> float:
    """n (a-b)^2 / (k^{4/3} (a+b)); the DCBM test is powerful when this is large."""
    if params.a == params.b:
        return 0.0
    return params.n * (params.a - params.b) ** 2 / (params.k ** (4 / 3) * (params.a + params.b))


def snr_neighborhood(params: NeighborhoodParams) -> float:
    if params.a == params.b:
        return 0.0
    return params.expected_size * (params.a - params.b) ** 2 / (params.r ** (4 / 3) * (params.a + params.b))


def snr_gaussian(n: int, k: int, a: float, b: float) -> float:
    """sqrt(n) |a-b|^3 / (k^2 |a|)."""
    if a == b:
        return 0.0
    if a == 0:
        return math.inf
    return math.sqrt(n) * abs(a - b) ** 3 / (k**2 * abs(a))
