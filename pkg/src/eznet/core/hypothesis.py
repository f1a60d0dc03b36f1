"""Hypothesis tests for community structure in networks.

The EZ tests compare the triangle density with the value (V/E)^3 that a
degree-corrected block model without communities would produce; the SBM test
compares it with E^3; the Erdős–Rényi chi-squared test compares the two- and
three-edge triple frequencies with their binomial expectations.
"""

from dataclasses import dataclass, replace
import logging
import math
from typing import TYPE_CHECKING, Literal

import numpy as np
from scipy.special import erfc

from eznet.core.errors import DomainError
from eznet.core.graph_io import Graph, neighborhood_subgraph
from eznet.core.models import DcbmParams, NeighborhoodParams
from eznet.core.subgraph_stats import (
    SubgraphDensities,
    densities,
    ez_characteristic,
    frequencies_from_densities,
    three_node_frequencies,
)

if TYPE_CHECKING:
    from eznet.core.gaussian import GaussianMoments

logger = logging.getLogger(__name__)

TestId = Literal["ez_dcbm", "ez_sbm", "er_chi2", "ez_neighborhood", "ez_gaussian"]
NullDistribution = Literal["normal", "chi2_2"]
Alternative = Literal["two-sided", "greater", "less"]
Normalization = Literal["vst", "triangle", "vee"]

DENSE_P_HAT = 0.25
DENSE_REGIME_NOTE = "dense regime"
DEGENERATE_CHI2_FACTOR = 1e-4


@dataclass(frozen=True)
class TestResult:
    """Outcome of one hypothesis test on one input."""

    __test__ = False

    test_id: TestId
    statistic: float
    p_value: float
    null: NullDistribution
    """Asymptotic null law of the statistic: standard normal or chi-squared with 2 df."""
    densities: "SubgraphDensities | GaussianMoments"
    """Edge, vee and triangle estimates the statistic was built from."""
    notes: tuple[str, ...] = ()
    """Diagnostics, e.g. regime warnings."""
    alternative: Alternative = "two-sided"

    def reject(self, alpha: float) -> bool:
        """Level-alpha decision: reject the null when the p-value falls below alpha."""
        return self.p_value < alpha

    @property
    def direction(self) -> str:
        """assortative for excess triangles, disassortative for a deficit."""
        if self.null != "normal" or self.statistic == 0:
            return "none"
        return "assortative" if self.statistic > 0 else "disassortative"


def normal_sf(x: float) -> float:
    """Standard normal survival function 1 - Phi(x)."""
    if math.isnan(x):
        raise DomainError("normal_sf of NaN")
    return float(0.5 * erfc(x / math.sqrt(2)))


def chi2_2_sf(x: float) -> float:
    """Survival function of the chi-squared law with 2 degrees of freedom, exp(-x/2)."""
    if not x >= 0:
        raise DomainError(f"chi2_2_sf needs a non-negative argument, got {x}")
    return math.exp(-x / 2)


def normal_p_value(statistic: float, alternative: Alternative = "two-sided") -> float:
    if alternative == "two-sided":
        return min(1.0, 2 * normal_sf(abs(statistic)))
    if alternative == "greater":
        return normal_sf(statistic)
    if alternative == "less":
        return normal_sf(-statistic)
    raise DomainError(f"unknown alternative {alternative!r}")


def _regime_notes(d: SubgraphDensities) -> tuple[str, ...]:
    bound = d.n ** (-2 / 3)
    if d.e_hat > bound:
        logger.warning("Edge density %.4g exceeds n^(-2/3) = %.4g", d.e_hat, bound)
        return (f"{DENSE_REGIME_NOTE}: e_hat={d.e_hat:.6g} > n^(-2/3)={bound:.6g}; calibration not guaranteed",)
    return ()


def ez_statistic(d: SubgraphDensities, normalization: Normalization = "vst") -> float:
    """EZ statistic from densities under one of three asymptotically equivalent normalizations.

    Args:
        d: Subgraph densities with positive edge density.
        normalization: `vst` for 2 sqrt(C(n,3)) (sqrt(T) - (V/E)^{3/2}), which is
            defined even when T or V vanish; `triangle` and `vee` divide
            sqrt(C(n,3)) (T - (V/E)^3) by sqrt(T) or sqrt((V/E)^3).

    Raises:
        DomainError: On zero edge density or a zero ratio denominator.
    """
    chi = ez_characteristic(d)
    scale = math.sqrt(math.comb(d.n, 3))
    ratio = d.v_hat / d.e_hat
    if normalization == "vst":
        return 2 * scale * (math.sqrt(d.t_hat) - ratio**1.5)
    if normalization == "triangle":
        if d.t_hat == 0:
            raise DomainError("triangle normalization undefined when no triangles are present")
        return scale * chi / math.sqrt(d.t_hat)
    if normalization == "vee":
        if ratio == 0:
            raise DomainError("vee normalization undefined when no vees are present")
        return scale * chi / ratio**1.5
    raise DomainError(f"unknown normalization {normalization!r}")


def _ez_result(
    test_id: TestId, d: SubgraphDensities, normalization: Normalization, alternative: Alternative
) -> TestResult:
    statistic = ez_statistic(d, normalization)
    notes = _regime_notes(d)
    if normalization != "vst":
        notes += (f"normalization={normalization}",)
    return TestResult(
        test_id=test_id,
        statistic=statistic,
        p_value=normal_p_value(statistic, alternative),
        null="normal",
        densities=d,
        notes=notes,
        alternative=alternative,
    )


def ez_test_dcbm(
    graph: Graph, normalization: Normalization = "vst", alternative: Alternative = "two-sided"
) -> TestResult:
    """EZ test of the degree-corrected block model null (k = 1 or a = b).

    A positive statistic signals assortative structure, a negative one disassortative.

    Raises:
        DomainError: If n < 3 or the graph has no edges.
    """
    d = densities(graph)
    if d.e_hat == 0:
        raise DomainError("EZ test undefined on a graph without edges")
    return _ez_result("ez_dcbm", d, normalization, alternative)


def ez_test_sbm(graph: Graph, alternative: Alternative = "two-sided") -> TestResult:
    """Test of the stochastic block model null using 2 sqrt(C(n,3)) (sqrt(T) - E^{3/2})."""
    d = densities(graph)
    statistic = 2 * math.sqrt(math.comb(d.n, 3)) * (math.sqrt(d.t_hat) - d.e_hat**1.5)
    return TestResult(
        test_id="ez_sbm",
        statistic=statistic,
        p_value=normal_p_value(statistic, alternative),
        null="normal",
        densities=d,
        notes=_regime_notes(d),
        alternative=alternative,
    )


@dataclass(frozen=True)
class ErResiduals:
    """Differences between the binomial triple frequencies at p_hat and the observed ones. They sum to 0."""

    t0: float
    t1: float
    t2: float
    t3: float


def er_residuals(graph: Graph) -> ErResiduals:
    f = three_node_frequencies(graph)
    p = f.p_hat
    return ErResiduals(
        t0=(1 - p) ** 3 - f.f0,
        t1=3 * p * (1 - p) ** 2 - f.f1,
        t2=3 * p**2 * (1 - p) - f.f2,
        t3=p**3 - f.f3,
    )


def er_covariance(p: float) -> np.ndarray:
    """Asymptotic covariance of sqrt(C(n,3)) (T2, T3) under Erdős–Rényi(p)."""
    q = 1 - p
    var2 = 3 * p**2 * q**2 * (1 - 3 * p) ** 2 + 9 * p**3 * q**3
    var3 = p**3 * q**3 + 3 * p**4 * q**2
    cov = -6 * p**4 * q**2
    return np.array([[var2, cov], [cov, var3]])


def er_chi2_test(graph: Graph) -> TestResult:
    """Chi-squared test of the Erdős–Rényi null from the two- and three-edge triple residuals.

    Raises:
        DomainError: If p_hat is 0 or 1 or a variance term vanishes.
    """
    d = densities(graph)
    f = frequencies_from_densities(d)
    p = f.p_hat
    if not 0 < p < 1:
        raise DomainError(f"chi-squared test undefined for p_hat={p}")
    sigma = er_covariance(p)
    var2, var3 = sigma[0, 0], sigma[1, 1]
    if var2 <= 0 or var3 <= 0:
        raise DomainError(f"chi-squared variance underflow at p_hat={p}")
    t2 = 3 * p**2 * (1 - p) - f.f2
    t3 = p**3 - f.f3
    n = graph.n
    statistic = math.comb(n, 3) * (t2**2 / var2 + t3**2 / var3)

    notes = []
    if p > DENSE_P_HAT:
        notes.append(f"{DENSE_REGIME_NOTE}: p_hat={p:.6g} > {DENSE_P_HAT}; asymptotics assume p = o(1)")
    if (1 - 3 * p) ** 2 < DEGENERATE_CHI2_FACTOR:
        notes.append(f"(1 - 3 p_hat)^2 < {DEGENERATE_CHI2_FACTOR:g}; two-edge variance carried by one term")
    for note in notes:
        logger.warning(note)

    return TestResult(
        test_id="er_chi2",
        statistic=statistic,
        p_value=chi2_2_sf(statistic),
        null="chi2_2",
        densities=d,
        notes=tuple(notes),
    )


def ez_test_neighborhood(
    graph: Graph, ego: int, normalization: Normalization = "vst", alternative: Alternative = "two-sided"
) -> TestResult:
    """EZ test on the graph induced by the neighbours of `ego`.

    Raises:
        DomainError: If the neighbourhood has fewer than 3 nodes or no edges.
    """
    sub = neighborhood_subgraph(graph, ego)
    if sub.n < 3:
        raise DomainError(f"neighborhood too small: ego {ego} has {sub.n} neighbours")
    d = densities(sub)
    if d.e_hat == 0:
        raise DomainError(f"neighborhood of ego {ego} has no edges")
    result = _ez_result("ez_neighborhood", d, normalization, alternative)
    return replace(result, notes=result.notes + (f"m={sub.n}",))


def neighborhood_densities_oracle(graph: Graph, ego: int) -> SubgraphDensities:
    """Neighbourhood estimators written as literal sums over ego-adjacent pairs and triples."""
    adj = graph.adjacency.toarray()
    attached = adj[ego]
    m = int(attached.sum())
    if m < 3:
        raise DomainError(f"neighborhood too small: ego {ego} has {m} neighbours")
    others = [i for i in range(graph.n) if i != ego]
    edge_sum = vee_sum = triangle_sum = 0
    for x, i in enumerate(others):
        for y, j in enumerate(others[x + 1 :], start=x + 1):
            pair = int(attached[i] * attached[j])
            edge_sum += pair * int(adj[i, j])
            for l in others[y + 1 :]:
                weight = pair * int(attached[l])
                a_ij, a_jl, a_il = int(adj[i, j]), int(adj[j, l]), int(adj[i, l])
                vee_sum += weight * (a_ij * a_jl + a_ij * a_il + a_il * a_jl)
                triangle_sum += weight * a_ij * a_jl * a_il
    return SubgraphDensities.from_counts(m, edge_sum, vee_sum, triangle_sum)


def theoretical_delta_dcbm(params: DcbmParams) -> float:
    """Plug-in non-centrality ((k-1)(a-b)^3 / sqrt(6)) (n / (k (a + (k-1) b)))^{3/2}.

    A finite-n approximation, accurate when 1/n << a, b << n^(-2/3).
    """
    k, a, b = params.k, params.a, params.b
    denominator = k * (a + (k - 1) * b)
    if denominator <= 0:
        raise DomainError("non-centrality undefined when a + (k-1) b = 0")
    return (k - 1) * (a - b) ** 3 / math.sqrt(6) * (params.n / denominator) ** 1.5


def theoretical_delta_neighborhood(params: NeighborhoodParams) -> float:
    """Neighbourhood analogue of `theoretical_delta_dcbm` with r for k and E m = n r p / k for n."""
    r, a, b = params.r, params.a, params.b
    denominator = r * (a + (r - 1) * b)
    if denominator <= 0:
        raise DomainError("non-centrality undefined when a + (r-1) b = 0")
    return (r - 1) * (a - b) ** 3 / math.sqrt(6) * (params.expected_size / denominator) ** 1.5
