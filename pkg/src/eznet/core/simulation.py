"""Monte Carlo evaluation of the tests under seeded random models."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
from typing import Callable, Literal

import numpy as np
from scipy import stats

from eznet.core.errors import DomainError
from eznet.core.gaussian import ez_test_gaussian, theoretical_delta_gaussian
from eznet.core.generators import (
    Seed,
    sample_dcbm,
    sample_er,
    sample_gaussian_dcbm,
    sample_neighborhood_model,
    seed_sequence,
)
from eznet.core.graph_io import Graph
from eznet.core.hypothesis import (
    DENSE_REGIME_NOTE,
    TestResult,
    er_chi2_test,
    ez_test_dcbm,
    ez_test_neighborhood,
    ez_test_sbm,
    theoretical_delta_dcbm,
    theoretical_delta_neighborhood,
)
from eznet.core.models import DcbmParams, NeighborhoodParams, snr_dcbm, snr_gaussian, snr_neighborhood

logger = logging.getLogger(__name__)

TestName = Literal["ez-dcbm", "ez-sbm", "er-chi2", "ez-gaussian"]

PROGRESS_EVERY = 100


@dataclass(frozen=True)
class ErParams:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 3:
            raise DomainError(f"n must be at least 3, got {self.n}")
        if not 0 <= self.p <= 1:
            raise DomainError(f"p must lie in [0, 1], got {self.p}")

    def describe(self) -> str:
        return f"er(n={self.n}, p={self.p:g})"


@dataclass(frozen=True)
class GaussianParams:
    n_samples: int
    variables: DcbmParams
    """Block model over the variables; `variables.n` is the number of columns."""
    standardize: bool = False
    """Standardize generated columns before testing. Generated data already has unit variances."""

    def __post_init__(self):
        if self.n_samples < 2:
            raise DomainError(f"n_samples must be at least 2, got {self.n_samples}")

    def describe(self) -> str:
        v = self.variables
        return f"gaussian(n={self.n_samples}, p={v.n}, k={v.k}, a={v.a:g}, b={v.b:g}, w={v.w_dist.describe()})"


Model = ErParams | DcbmParams | NeighborhoodParams | GaussianParams


@dataclass(frozen=True, eq=False)
class SimulationReport:
    """Summary of a batch of seeded replicates of one test under one model."""

    model: str
    test: TestName
    replicates: int
    alpha: float
    rejection_rate: float
    """Fraction of successful replicates with p-value below alpha."""
    statistic_mean: float
    statistic_var: float
    """Sample variance with divisor replicates - 1 (0 for a single replicate)."""
    ks_statistic: float
    """Kolmogorov–Smirnov distance between the statistics and the null law."""
    ks_p_value: float
    theoretical_delta: float | None = None
    snr: float | None = None
    failures: int = 0
    """Replicates whose test raised a DomainError, excluded from the summaries."""
    dense_regime: int = 0
    """Successful replicates whose result carried a dense-regime note; their calibration is not guaranteed."""
    statistics: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "test": self.test,
            "replicates": self.replicates,
            "alpha": self.alpha,
            "rejection_rate": self.rejection_rate,
            "statistic_mean": self.statistic_mean,
            "statistic_var": self.statistic_var,
            "theoretical_delta": self.theoretical_delta,
            "snr": self.snr,
            "ks_statistic": self.ks_statistic,
            "ks_p_value": self.ks_p_value,
            "failures": self.failures,
            "dense_regime": self.dense_regime,
        }


GRAPH_TESTS: dict[str, Callable[[Graph], TestResult]] = {
    "ez-dcbm": ez_test_dcbm,
    "ez-sbm": ez_test_sbm,
    "er-chi2": er_chi2_test,
}


def replicate_function(model: Model, test: TestName) -> Callable[[Seed], TestResult]:
    """Sampler-plus-test closure for one replicate.

    Raises:
        DomainError: If the test does not apply to data drawn from the model.
    """
    if isinstance(model, GaussianParams):
        if test != "ez-gaussian":
            raise DomainError(f"test {test} does not apply to Gaussian data")
        return lambda seed: ez_test_gaussian(
            sample_gaussian_dcbm(model.n_samples, model.variables, seed).data, standardize=model.standardize
        )
    if test == "ez-gaussian":
        raise DomainError("ez-gaussian needs the gaussian model")
    if isinstance(model, NeighborhoodParams):
        if test == "ez-dcbm":
            return lambda seed: ez_test_neighborhood(sample_neighborhood_model(model, seed).graph, 0)
        raise DomainError(f"the neighborhood model supports only ez-dcbm, got {test}")
    graph_test = GRAPH_TESTS[test]
    if isinstance(model, ErParams):
        return lambda seed: graph_test(sample_er(model.n, model.p, seed))
    return lambda seed: graph_test(sample_dcbm(model, seed).graph)


def theory_for(model: Model, test: TestName) -> tuple[float | None, float | None]:
    """Plug-in non-centrality and signal-to-noise ratio, where closed forms exist."""
    if isinstance(model, GaussianParams):
        v = model.variables
        delta = None if v.a == v.b == 0 else theoretical_delta_gaussian(v.k, v.a, v.b, model.n_samples)
        return delta, snr_gaussian(model.n_samples, v.k, v.a, v.b)
    if test != "ez-dcbm":
        return None, None
    if isinstance(model, ErParams):
        return 0.0, 0.0
    if model.a == model.b == 0:
        return None, 0.0
    if isinstance(model, NeighborhoodParams):
        return theoretical_delta_neighborhood(model), snr_neighborhood(model)
    return theoretical_delta_dcbm(model), snr_dcbm(model)


def run_simulation(
    model: Model,
    test: TestName,
    replicates: int,
    alpha: float = 0.05,
    seed: int = 0,
    threads: int = 1,
) -> SimulationReport:
    """Run seeded replicates of `test` on draws from `model`.

    Replicate r draws from the seed sequence child (seed, r), so results do not
    depend on `threads`.

    Raises:
        DomainError: On invalid settings, before any sampling, or if every replicate failed.
    """
    if replicates < 1:
        raise DomainError(f"replicates must be positive, got {replicates}")
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if threads < 1:
        raise DomainError(f"threads must be positive, got {threads}")
    replicate = replicate_function(model, test)
    delta, snr = theory_for(model, test)

    def run_one(index: int) -> TestResult | None:
        try:
            return replicate(seed_sequence(seed, index))
        except DomainError as e:
            logger.debug("Replicate %s failed: %s", index, e)
            return None

    logger.info("Simulating %s replicates of %s under %s", replicates, test, model.describe())
    results = []
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for index, result in enumerate(pool.map(run_one, range(replicates)), start=1):
            results.append(result)
            if index % PROGRESS_EVERY == 0:
                logger.info("Finished %s/%s replicates", index, replicates)

    completed = [r for r in results if r is not None]
    failures = replicates - len(completed)
    if not completed:
        raise DomainError(f"all {replicates} replicates failed")
    if failures:
        logger.warning("%s of %s replicates failed and were excluded", failures, replicates)
    dense = sum(any(note.startswith(DENSE_REGIME_NOTE) for note in r.notes) for r in completed)
    if dense:
        logger.warning("%s of %s replicates fall in the dense regime; the null law may not hold", dense, len(completed))

    statistics = np.array([r.statistic for r in completed])
    null = completed[0].null
    ks = stats.kstest(statistics, "norm") if null == "normal" else stats.kstest(statistics, "chi2", args=(2,))
    return SimulationReport(
        model=model.describe(),
        test=test,
        replicates=replicates,
        alpha=alpha,
        rejection_rate=sum(r.reject(alpha) for r in completed) / len(completed),
        statistic_mean=float(statistics.mean()),
        statistic_var=float(statistics.var(ddof=1)) if len(statistics) > 1 else 0.0,
        ks_statistic=float(ks.statistic),
        ks_p_value=float(ks.pvalue),
        theoretical_delta=delta,
        snr=snr,
        failures=failures,
        dense_regime=dense,
        statistics=statistics,
    )
