"""EZ test for community structure in the correlation matrix of Gaussian data.

Each observation X_i yields unbiased estimates of the population edge, vee and
triangle moments through Wick's formula. The per-row symmetric sums are
evaluated from power sums s_k = sum_j X_ij^k, so every row costs O(p).
"""

from dataclasses import dataclass
from itertools import combinations
import logging
import math

import numpy as np

from eznet.core.errors import DomainError
from eznet.core.graph_io import DataMatrix
from eznet.core.hypothesis import Alternative, TestResult, normal_p_value

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GaussianMoments:
    """Per-row and averaged Wick estimates of E, V and T."""

    e_hat: float
    v_hat: float
    t_hat: float
    per_sample: np.ndarray
    """Array of shape (n, 3) with columns E_i, V_i, T_i."""
    n: int
    """Number of rows (samples)."""
    p: int
    """Number of columns (variables)."""

    @classmethod
    def from_per_sample(cls, per_sample: np.ndarray, p: int) -> "GaussianMoments":
        per_sample = np.asarray(per_sample, dtype=np.float64)
        if not np.all(np.isfinite(per_sample)):
            raise DomainError("non-finite per-sample moment estimates")
        e_hat, v_hat, t_hat = per_sample.mean(axis=0)
        return cls(float(e_hat), float(v_hat), float(t_hat), per_sample, per_sample.shape[0], p)


@dataclass(frozen=True, eq=False)
class GaussianVariance:
    sigma2_hat: float
    """Sample variance of q_values with divisor n - 1."""
    q_values: np.ndarray


def _check_shape(data: DataMatrix):
    if data.cols < 3:
        raise DomainError(f"Gaussian EZ statistics need at least 3 variables, got {data.cols}")
    if data.rows < 2:
        raise DomainError(f"Gaussian EZ statistics need at least 2 samples, got {data.rows}")


def _per_row_estimates(pair_sum, sym_sum, square_pair_sum, square_triple_sum, p: int) -> np.ndarray:
    pairs = math.comb(p, 2)
    triples = math.comb(p, 3)
    e_i = pair_sum / pairs
    v_i = sym_sum / (6 * triples) - e_i / 2
    t_i = square_triple_sum / (8 * triples) - 3 * square_pair_sum / (8 * pairs) + 0.25
    return np.column_stack([e_i, v_i, t_i])


def gaussian_moments(data: DataMatrix) -> GaussianMoments:
    """Wick estimates of E, V and T for every row, via power sums.

    With s_k the k-th power sum of a row:
        sum_{j<l} x_j x_l = (s1^2 - s2) / 2
        sum_{j<l<m} x_j x_l x_m (x_j + x_l + x_m) = (s2 s1^2 - 2 s1 s3 + 2 s4 - s2^2) / 2
        sum_{j<l} x_j^2 x_l^2 = (s2^2 - s4) / 2
        sum_{j<l<m} x_j^2 x_l^2 x_m^2 = (s2^3 - 3 s2 s4 + 2 s6) / 6

    Raises:
        DomainError: With fewer than 3 columns or 2 rows.
    """
    _check_shape(data)
    x = data.values
    s1 = x.sum(axis=1)
    x2 = x * x
    s2 = x2.sum(axis=1)
    s3 = (x2 * x).sum(axis=1)
    s4 = (x2 * x2).sum(axis=1)
    s6 = (x2 * x2 * x2).sum(axis=1)
    per_sample = _per_row_estimates(
        pair_sum=(s1**2 - s2) / 2,
        sym_sum=(s2 * s1**2 - 2 * s1 * s3 + 2 * s4 - s2**2) / 2,
        square_pair_sum=(s2**2 - s4) / 2,
        square_triple_sum=(s2**3 - 3 * s2 * s4 + 2 * s6) / 6,
        p=data.cols,
    )
    return GaussianMoments.from_per_sample(per_sample, data.cols)


def gaussian_moments_oracle(data: DataMatrix) -> GaussianMoments:
    """Same estimates from literal pair and triple sums. O(n p^3)."""
    _check_shape(data)
    p = data.cols
    rows = []
    for x in data.values:
        pair_sum = sum(x[j] * x[l] for j, l in combinations(range(p), 2))
        square_pair_sum = sum(x[j] ** 2 * x[l] ** 2 for j, l in combinations(range(p), 2))
        sym_sum = 0.0
        square_triple_sum = 0.0
        for j, l, m in combinations(range(p), 3):
            sym_sum += x[j] ** 2 * x[l] * x[m] + x[l] ** 2 * x[j] * x[m] + x[m] ** 2 * x[j] * x[l]
            square_triple_sum += x[j] ** 2 * x[l] ** 2 * x[m] ** 2
        rows.append((pair_sum, sym_sum, square_pair_sum, square_triple_sum))
    sums = np.array(rows)
    per_sample = _per_row_estimates(sums[:, 0], sums[:, 1], sums[:, 2], sums[:, 3], p)
    return GaussianMoments.from_per_sample(per_sample, p)


def gaussian_variance(moments: GaussianMoments) -> GaussianVariance:
    """Delta-method variance estimate of T - (V/E)^3.

    Q_i = T_i - 3 (V^2/E^3) V_i + 3 (V^3/E^4) E_i with the averaged V and E.

    Raises:
        DomainError: If the averaged E is zero or fewer than 2 samples are present.
    """
    if moments.e_hat == 0:
        raise DomainError("Gaussian variance undefined when e_hat = 0")
    if moments.n < 2:
        raise DomainError(f"Gaussian variance needs at least 2 samples, got {moments.n}")
    e, v = moments.e_hat, moments.v_hat
    e_i, v_i, t_i = moments.per_sample.T
    q = t_i - 3 * (v**2 / e**3) * v_i + 3 * (v**3 / e**4) * e_i
    return GaussianVariance(sigma2_hat=float(np.var(q, ddof=1)), q_values=q)


def standardize_columns(data: DataMatrix) -> DataMatrix:
    """Center each column and scale it to unit sample variance."""
    values = data.values
    scale = values.std(axis=0, ddof=1)
    if np.any(scale == 0):
        column = data.columns[int(np.flatnonzero(scale == 0)[0])]
        raise DomainError(f"column {column!r} is constant and cannot be standardized")
    return DataMatrix((values - values.mean(axis=0)) / scale, data.columns)


def ez_test_gaussian(data: DataMatrix, standardize: bool = True, alternative: Alternative = "two-sided") -> TestResult:
    """Studentized EZ test sqrt(n) (T - (V/E)^3) / sigma on Gaussian rows.

    Args:
        data: Observations, one row per sample.
        standardize: Center and scale columns first. The model assumes unit
            variances, which real data rarely has.
        alternative: Sidedness of the normal p-value.

    Raises:
        DomainError: On too few rows or columns, e_hat = 0 or degenerate variance.
    """
    if standardize:
        _check_shape(data)
        data = standardize_columns(data)
    moments = gaussian_moments(data)
    variance = gaussian_variance(moments)
    if not variance.sigma2_hat > 0:
        raise DomainError("degenerate variance: all Q_i are equal")
    chi = moments.t_hat - (moments.v_hat / moments.e_hat) ** 3
    statistic = math.sqrt(moments.n) * chi / math.sqrt(variance.sigma2_hat)
    logger.debug("Gaussian EZ: n=%s p=%s chi=%.6g sigma2=%.6g", moments.n, moments.p, chi, variance.sigma2_hat)
    return TestResult(
        test_id="ez_gaussian",
        statistic=statistic,
        p_value=normal_p_value(statistic, alternative),
        null="normal",
        densities=moments,
        notes=("standardized columns" if standardize else "raw columns",),
        alternative=alternative,
    )


def theoretical_delta_gaussian(k: int, a: float, b: float, n: int) -> float:
    """Plug-in non-centrality sqrt(n) (k-1) (a-b)^3 / (k^3 sqrt(9/32 (a^2/k + (k-1) b^2/k)))."""
    if a == 0 and b == 0:
        raise DomainError("Gaussian non-centrality undefined for a = b = 0")
    spread = math.sqrt(9 / 32 * (a**2 / k + (k - 1) * b**2 / k))
    return math.sqrt(n) * (k - 1) * (a - b) ** 3 / (k**3 * spread)
