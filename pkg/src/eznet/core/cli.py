"""Command-line interface for edge, vee and triangle based community structure tests."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import os
from pathlib import Path
import sys
from typing import Annotated, Callable, Literal, Sequence, TypeVar

import tyro

from eznet.core.errors import DomainError
from eznet.core.gaussian import ez_test_gaussian
from eznet.core.generators import sample_dcbm, sample_er, sample_gaussian_dcbm, sample_neighborhood_model
from eznet.core.graph_io import (
    CorrelationMethod,
    Graph,
    correlation_graph,
    read_data_matrix,
    read_edge_list,
    write_data_matrix,
    write_edge_list,
)
from eznet.core.hypothesis import (
    Alternative,
    Normalization,
    er_chi2_test,
    ez_test_dcbm,
    ez_test_neighborhood,
    ez_test_sbm,
)
from eznet.core.models import DcbmParams, NeighborhoodParams, WeightDistribution, WeightKind
from eznet.core.records import (
    STATS_COLUMNS,
    TEST_COLUMNS,
    BatchRecord,
    OutputFormat,
    emit,
    render,
    render_report,
)
from eznet.core.simulation import ErParams, GaussianParams, Model, TestName, run_simulation
from eznet.core.subgraph_stats import densities

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "EZNET_THREADS"
ModelName = Literal["er", "sbm", "dcbm", "config", "neighborhood", "gaussian"]

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    """Worker count from EZNET_THREADS; 1 when unset.

    Raises:
        DomainError: If the variable is set to anything but a positive integer.
    """
    value = os.environ.get(THREADS_ENV_VAR)
    if value is None or value.strip() == "":
        return 1
    try:
        threads = int(value)
    except ValueError as e:
        raise DomainError(f"{THREADS_ENV_VAR} must be a positive integer, got {value!r}") from e
    if threads < 1:
        raise DomainError(f"{THREADS_ENV_VAR} must be a positive integer, got {value!r}")
    return threads


def ordered_map(func: Callable[[T], R], items: Sequence[T], threads: int) -> list[R]:
    """Apply func to items on up to `threads` workers, keeping input order."""
    if threads == 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


@dataclass
class OutputConfig:
    """Shared configuration for result output."""

    format: OutputFormat = "csv"
    """Output format."""

    out: Path | None = None
    """Output file. Defaults to stdout."""

    overwrite: bool = False
    """Allow overwriting an existing output file."""


@dataclass
class WeightConfig:
    """Degree weight distribution W, normalized to E W^2 = 1."""

    weights: WeightKind = "constant_one"
    """Weight family."""

    w_lo: float = 0.5
    """Low atom of two_point weights."""

    w_hi: float | None = None
    """High atom of two_point weights. Solved from E W^2 = 1 when omitted."""

    prob_hi: float = 0.2
    """Probability of the high atom of two_point weights."""

    sigma: float = 0.5
    """Log-scale standard deviation of scaled_lognormal weights."""

    def build(self) -> WeightDistribution:
        if self.weights == "two_point":
            return WeightDistribution.two_point(self.w_lo, self.prob_hi, self.w_hi)
        if self.weights == "scaled_lognormal":
            return WeightDistribution.scaled_lognormal(self.sigma)
        return WeightDistribution.constant_one()


@dataclass
class ModelConfig:
    """Random model parameters. Fields a model does not use are ignored."""

    n: int = 500
    """Number of nodes; number of samples for the gaussian model."""

    k: int = 2
    """Number of communities."""

    a: float = 0.1
    """Within-community connectivity (or correlation)."""

    b: float = 0.02
    """Between-community connectivity (or correlation)."""

    p: float = 0.03
    """Edge probability for er; ego attachment probability for neighborhood."""

    r: int = 1
    """Number of communities the ego belongs to (neighborhood)."""

    variables: int = 100
    """Number of variables (gaussian)."""

    def build(self, model: ModelName, weights: WeightDistribution, standardize: bool = False) -> Model:
        if model == "er":
            return ErParams(self.n, self.p)
        if model == "sbm":
            return DcbmParams(self.n, self.k, self.a, self.b)
        if model == "dcbm":
            return DcbmParams(self.n, self.k, self.a, self.b, weights)
        if model == "config":
            return DcbmParams(self.n, 1, self.a, self.a, weights)
        if model == "neighborhood":
            return NeighborhoodParams(self.n, self.k, self.r, self.a, self.b, self.p, weights)
        return GaussianParams(self.n, DcbmParams(self.variables, self.k, self.a, self.b, weights), standardize)


def _exit_status(records: Sequence[BatchRecord]) -> int:
    failed = sum(r.failed for r in records)
    if failed:
        logger.warning("%s of %s inputs failed", failed, len(records))
        return 1
    return 0


def _load_graph(path: Path, index_base: Literal[0, 1], threshold: float | None, method: CorrelationMethod) -> Graph:
    if threshold is not None:
        return correlation_graph(read_data_matrix(path), threshold, method)
    graph, _ = read_edge_list(path, index_base=index_base)
    return graph


@dataclass
class Stats:
    """Compute edge, vee and triangle densities and the EZ characteristic of edge-list files.

    One record per file; no test is run.
    """

    inputs: Annotated[list[Path], tyro.conf.Positional]
    """Edge-list files."""

    index_base: Literal[0, 1] = 0
    """Smallest node id used in the files."""

    output: Annotated[OutputConfig, tyro.conf.OmitArgPrefixes] = field(default_factory=OutputConfig)
    """Settings for result output."""

    def record(self, path: Path) -> BatchRecord:
        try:
            graph, _ = read_edge_list(path, index_base=self.index_base)
            return BatchRecord.from_densities(str(path), densities(graph))
        except (DomainError, OSError) as e:
            logger.error("%s: %s", path, e)
            return BatchRecord.from_error(str(path), e)

    def run(self) -> int:
        """Compute and write one record per input."""
        logger.info("Computing subgraph densities for %s files.", len(self.inputs))
        records = ordered_map(self.record, self.inputs, thread_count())
        emit(render(records, self.output.format, STATS_COLUMNS), self.output.out, self.output.overwrite)
        return _exit_status(records)


@dataclass
class NeighborhoodOptions:
    """Selection of ego neighbourhoods."""

    min_size: int = 0
    """Skip egos with fewer neighbours. Neighbourhoods below 3 nodes are always skipped."""

    max_size: int | None = None
    """Skip egos with more neighbours."""

    def validate(self):
        if self.min_size < 0 or (self.max_size is not None and self.max_size < self.min_size):
            raise DomainError(f"need 0 <= min_size <= max_size, got {self.min_size} and {self.max_size}")

    def qualifies(self, size: int) -> bool:
        return size >= max(3, self.min_size) and (self.max_size is None or size <= self.max_size)


def neighborhood_records(
    graph: Graph,
    egos: Sequence[int],
    options: NeighborhoodOptions,
    id_prefix: str = "",
    normalization: Normalization = "vst",
    alternative: Alternative = "two-sided",
    alpha: float | None = None,
    id_offset: int = 0,
) -> tuple[list[BatchRecord], int]:
    """Run the neighbourhood test for every qualifying ego.

    Returns:
        Records in ego order and the number of egos skipped for size or for an edgeless neighbourhood.
    """
    records = []
    skipped = 0
    for ego in egos:
        graph_id = f"{id_prefix}{ego + id_offset}"
        if not 0 <= ego < graph.n:
            records.append(BatchRecord.from_error(graph_id, DomainError(f"ego {ego} not in graph"), "ez_neighborhood"))
            continue
        if not options.qualifies(int(graph.degrees[ego])):
            skipped += 1
            continue
        try:
            result = ez_test_neighborhood(graph, ego, normalization, alternative)
        except DomainError as e:
            logger.debug("Skipping ego %s: %s", ego, e)
            skipped += 1
            continue
        records.append(BatchRecord.from_result(graph_id, result, alpha))
    if skipped:
        logger.info("Skipped %s egos outside the size range or without neighbourhood edges", skipped)
    return records, skipped


def _test_columns(alpha: float | None) -> list[str]:
    return TEST_COLUMNS + (["reject"] if alpha is not None else []) + ["note"]


@dataclass
class Test:
    """Run a community structure test on each input.

    Inputs are edge lists, or data-matrix CSVs for ez-gaussian and whenever
    --threshold builds correlation graphs from them.
    """

    __test__ = False

    inputs: Annotated[list[Path], tyro.conf.Positional]
    """Input files."""

    test: TestName = "ez-dcbm"
    """Test to run."""

    alpha: float | None = None
    """Add a reject column for this significance level."""

    threshold: float | None = None
    """Treat inputs as data matrices and test the graph of column pairs with correlation above this value."""

    method: CorrelationMethod = "spearman"
    """Correlation used with --threshold."""

    standardize: bool = True
    """Standardize columns before the ez-gaussian test."""

    normalization: Normalization = "vst"
    """Normalization of the ez-dcbm statistic."""

    alternative: Alternative = "two-sided"
    """Sidedness of normal p-values."""

    ego_all: bool = False
    """Test the neighbourhood of every node instead of the whole graph (ez-dcbm only)."""

    neighborhoods: Annotated[NeighborhoodOptions, tyro.conf.OmitArgPrefixes] = field(
        default_factory=NeighborhoodOptions
    )
    """Ego neighbourhood size limits for --ego-all."""

    index_base: Literal[0, 1] = 0
    """Smallest node id used in edge-list inputs."""

    output: Annotated[OutputConfig, tyro.conf.OmitArgPrefixes] = field(default_factory=OutputConfig)
    """Settings for result output."""

    def run_graph_test(self, graph: Graph):
        if self.test == "ez-dcbm":
            return ez_test_dcbm(graph, self.normalization, self.alternative)
        if self.test == "ez-sbm":
            return ez_test_sbm(graph, self.alternative)
        return er_chi2_test(graph)

    def records(self, path: Path) -> tuple[list[BatchRecord], int]:
        graph_id = str(path)
        try:
            if self.test == "ez-gaussian":
                result = ez_test_gaussian(read_data_matrix(path), self.standardize, self.alternative)
                return [BatchRecord.from_result(graph_id, result, self.alpha)], 0
            graph = _load_graph(path, self.index_base, self.threshold, self.method)
            if self.ego_all:
                return neighborhood_records(
                    graph,
                    range(graph.n),
                    self.neighborhoods,
                    f"{graph_id}:",
                    self.normalization,
                    self.alternative,
                    self.alpha,
                    0 if self.threshold is not None else self.index_base,
                )
            return [BatchRecord.from_result(graph_id, self.run_graph_test(graph), self.alpha)], 0
        except (DomainError, OSError) as e:
            logger.error("%s: %s", path, e)
            return [BatchRecord.from_error(graph_id, e, self.test.replace("-", "_"))], 0

    def run(self) -> int:
        """Test every input and write the records."""
        if self.ego_all and self.test != "ez-dcbm":
            raise DomainError("--ego-all runs the neighbourhood EZ test and needs --test ez-dcbm")
        if self.threshold is not None and self.test == "ez-gaussian":
            raise DomainError("--threshold builds correlation graphs and does not apply to --test ez-gaussian")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        self.neighborhoods.validate()
        logger.info("Running %s on %s inputs.", self.test, len(self.inputs))
        batches = ordered_map(self.records, self.inputs, thread_count())
        records = [record for batch, _ in batches for record in batch]
        summary = {"skipped": sum(skipped for _, skipped in batches)} if self.ego_all else None
        text = render(records, self.output.format, _test_columns(self.alpha), summary)
        emit(text, self.output.out, self.output.overwrite)
        return _exit_status(records)


@dataclass
class Neighborhoods:
    """Run the EZ test on ego neighbourhoods of one graph.

    Each qualifying ego yields a record keyed by its node id. Skipped egos are
    counted in a trailing summary.
    """

    input: Annotated[Path, tyro.conf.Positional]
    """Edge-list file, or data-matrix CSV with --threshold."""

    ego: list[str] = field(default_factory=lambda: ["all"])
    """Ego node ids, or `all`."""

    neighborhoods: Annotated[NeighborhoodOptions, tyro.conf.OmitArgPrefixes] = field(
        default_factory=NeighborhoodOptions
    )
    """Neighbourhood size limits."""

    threshold: float | None = None
    """Treat the input as a data matrix and use its correlation graph."""

    method: CorrelationMethod = "spearman"
    """Correlation used with --threshold."""

    alpha: float | None = None
    """Add a reject column for this significance level."""

    normalization: Normalization = "vst"
    """Normalization of the statistic."""

    alternative: Alternative = "two-sided"
    """Sidedness of p-values."""

    index_base: Literal[0, 1] = 0
    """Smallest node id used in the edge list; ego ids use the same base."""

    output: Annotated[OutputConfig, tyro.conf.OmitArgPrefixes] = field(default_factory=OutputConfig)
    """Settings for result output."""

    def egos(self, graph: Graph) -> list[int]:
        if [e.lower() for e in self.ego] == ["all"]:
            return list(range(graph.n))
        try:
            return [int(e) - self.index_base for e in self.ego]
        except ValueError as e:
            raise DomainError(f"ego ids must be integers or 'all', got {self.ego}") from e

    def run(self) -> int:
        """Test the selected neighbourhoods and write the records."""
        self.neighborhoods.validate()
        graph = _load_graph(self.input, self.index_base, self.threshold, self.method)
        egos = self.egos(graph)
        logger.info("Testing neighbourhoods of %s egos in %s.", len(egos), self.input)
        records, skipped = neighborhood_records(
            graph, egos, self.neighborhoods, "", self.normalization, self.alternative, self.alpha, self.index_base
        )
        emit(
            render(records, self.output.format, _test_columns(self.alpha), {"skipped": skipped}),
            self.output.out,
            self.output.overwrite,
        )
        return _exit_status(records)


@dataclass
class Simulate:
    """Estimate rejection rate and null fit of a test by seeded Monte Carlo."""

    model: Annotated[ModelName, tyro.conf.Positional]
    """Random model to draw from."""

    test: TestName = "ez-dcbm"
    """Test to evaluate. The neighborhood model tests the ego's neighbourhood."""

    replicates: int = 1000
    """Number of independent draws."""

    alpha: float = 0.05
    """Significance level for the rejection rate."""

    seed: int = 0
    """Seed; replicate r uses the child stream (seed, r)."""

    standardize: bool = False
    """Standardize generated Gaussian columns before testing."""

    params: Annotated[ModelConfig, tyro.conf.OmitArgPrefixes] = field(default_factory=ModelConfig)
    """Model parameters."""

    weights: Annotated[WeightConfig, tyro.conf.OmitArgPrefixes] = field(default_factory=WeightConfig)
    """Degree weight distribution."""

    output: Annotated[OutputConfig, tyro.conf.OmitArgPrefixes] = field(default_factory=OutputConfig)
    """Settings for result output."""

    def run(self) -> int:
        """Run the simulation and write its report."""
        threads = thread_count()
        model = self.params.build(self.model, self.weights.build(), self.standardize)
        report = run_simulation(model, self.test, self.replicates, self.alpha, self.seed, threads)
        emit(render_report(report, self.output.format), self.output.out, self.output.overwrite)
        return 0


@dataclass
class Gen:
    """Generate a random graph as an edge list, or Gaussian data as CSV."""

    model: Annotated[ModelName, tyro.conf.Positional]
    """Random model to draw from."""

    out: Path
    """Output file."""

    seed: int = 0
    """Seed."""

    overwrite: bool = False
    """Allow overwriting an existing output file."""

    index_base: Literal[0, 1] = 0
    """Smallest node id written to the edge list."""

    params: Annotated[ModelConfig, tyro.conf.OmitArgPrefixes] = field(default_factory=ModelConfig)
    """Model parameters."""

    weights: Annotated[WeightConfig, tyro.conf.OmitArgPrefixes] = field(default_factory=WeightConfig)
    """Degree weight distribution."""

    def run(self) -> int:
        """Draw once and write the result."""
        model = self.params.build(self.model, self.weights.build())
        logger.info("Generating %s with seed %s.", model.describe(), self.seed)
        if isinstance(model, GaussianParams):
            sample = sample_gaussian_dcbm(model.n_samples, model.variables, self.seed)
            write_data_matrix(sample.data, self.out, self.overwrite)
            return 0
        if isinstance(model, ErParams):
            graph = sample_er(model.n, model.p, self.seed)
        elif isinstance(model, NeighborhoodParams):
            graph = sample_neighborhood_model(model, self.seed).graph
        else:
            sample = sample_dcbm(model, self.seed)
            if sample.clipped:
                logger.info("%s edge probabilities were clipped at 1", sample.clipped)
            graph = sample.graph
        write_edge_list(graph, self.out, self.overwrite, self.index_base)
        return 0


def main():
    """Main entry point for the CLI."""
    logging.basicConfig(level=logging.INFO, format="%(name)s : %(levelname)s : %(message)s")
    cli = tyro.cli(Stats | Test | Neighborhoods | Simulate | Gen)
    try:
        status = cli.run()
    except Exception as e:
        logger.error(e)
        raise e
    if status:
        sys.exit(status)


if __name__ == "__main__":
    main()
