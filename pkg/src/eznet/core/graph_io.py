"""Graphs and data matrices: construction, file I/O and derived graphs.

This module provides the immutable `Graph` container consumed by every network
test, the `DataMatrix` container consumed by the Gaussian test, readers and
writers for the plain-text edge-list and CSV formats, extraction of ego
neighbourhood graphs, and thresholded correlation graphs built from tabular data.
"""

from dataclasses import dataclass, field
from functools import cached_property
import io
import logging
import os
from pathlib import Path
import re
from typing import Iterable, Literal

import numpy as np
import pandas as pd
from scipy import sparse, stats

from eznet.core.errors import DomainError, EdgeListParseError

logger = logging.getLogger(__name__)

NODE_COUNT_HEADER = re.compile(r"^#\s*(?:n|nodes)\s*[:=]?\s*(\d+)\s*$", re.IGNORECASE)

CorrelationMethod = Literal["spearman", "pearson"]


def _normalize_edges(n: int, pairs) -> np.ndarray:
    edges = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise DomainError(f"edge endpoint outside node range 0..{n - 1}")
    if np.any(edges[:, 0] == edges[:, 1]):
        raise DomainError("self-loops are not allowed in a simple graph")
    edges = np.sort(edges, axis=1)
    edges = np.unique(edges, axis=0) if edges.size else np.empty((0, 2), dtype=np.int64)
    edges.setflags(write=False)
    return edges


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph on nodes 0..n-1.

    Attributes:
        n: Number of nodes, including isolated ones.
        edges: Array of shape (m, 2) holding each edge once as (i, j) with i < j,
            rows in lexicographic order. The array is read-only.
    """

    n: int
    edges: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))

    def __post_init__(self):
        if self.n < 0:
            raise DomainError(f"node count must be non-negative, got {self.n}")
        object.__setattr__(self, "edges", _normalize_edges(self.n, self.edges))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    __hash__ = None

    @classmethod
    def complete(cls, n: int) -> "Graph":
        """The complete graph K_n."""
        i, j = np.triu_indices(n, k=1)
        return cls(n, np.column_stack([i, j]))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)

    @cached_property
    def adjacency(self) -> sparse.csr_array:
        """Symmetric 0/1 adjacency matrix in CSR form with int64 entries."""
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        data = np.ones(len(rows), dtype=np.int64)
        return sparse.csr_array((data, (rows, cols)), shape=(self.n, self.n))

    def neighbors(self, node: int) -> np.ndarray:
        """Sorted neighbours of `node`."""
        if not 0 <= node < self.n:
            raise DomainError(f"node {node} out of range for graph with {self.n} nodes")
        adj = self.adjacency
        return np.sort(adj.indices[adj.indptr[node] : adj.indptr[node + 1]])

    def has_edge(self, i: int, j: int) -> bool:
        lo, hi = min(i, j), max(i, j)
        pos = np.searchsorted(self.edges[:, 0], lo, side="left")
        end = np.searchsorted(self.edges[:, 0], lo, side="right")
        return bool(np.any(self.edges[pos:end, 1] == hi))

    def to_edge_list_str(self, index_base: int = 0) -> str:
        """Serialize to the edge-list format with a node-count header.

        Args:
            index_base: 0 or 1, added to every node id on output.

        Returns:
            The edge list text, LF line endings.
        """
        lines = [f"# nodes: {self.n}"]
        lines.extend(f"{i + index_base} {j + index_base}" for i, j in self.edges.tolist())
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EdgeListStats:
    """Bookkeeping from parsing an edge list."""

    self_loops_dropped: int = 0
    """Lines whose two endpoints were the same node."""

    duplicates_collapsed: int = 0
    """Lines repeating an edge already seen, in either orientation."""


def parse_edge_list_with_stats(
    text: str | Iterable[str],
    index_base: Literal[0, 1] = 0,
    allow_comments: bool = True,
    num_nodes: int | None = None,
) -> tuple[Graph, EdgeListStats]:
    """Parse an edge list and report what was dropped along the way.

    Each non-comment line holds two integer node ids separated by whitespace.
    Lines starting with `#` are comments; a comment of the form `# nodes: N`
    fixes the node count. Otherwise n is one more than the largest id seen.

    Args:
        text: Whole file contents or an iterable of lines.
        index_base: Smallest node id used by the file, 0 or 1.
        allow_comments: If False, `#` lines are parse errors.
        num_nodes: Explicit node count, overriding both header and max-id rule.

    Returns:
        The parsed graph and an EdgeListStats record.

    Raises:
        EdgeListParseError: For malformed lines or ids negative after re-basing.
    """
    lines = text.splitlines() if isinstance(text, str) else text
    header_n = None
    pairs = []
    self_loops = 0
    for line_number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if not allow_comments:
                raise EdgeListParseError(line_number, "comments are not allowed")
            match = NODE_COUNT_HEADER.match(line)
            if match:
                header_n = int(match.group(1))
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise EdgeListParseError(line_number, f"expected two node ids, got {len(tokens)} tokens")
        try:
            i, j = (int(token) - index_base for token in tokens)
        except ValueError as e:
            raise EdgeListParseError(line_number, f"malformed node id in {line!r}") from e
        if i < 0 or j < 0:
            raise EdgeListParseError(line_number, f"negative node id after re-basing in {line!r}")
        if i == j:
            self_loops += 1
            continue
        pairs.append((min(i, j), max(i, j)))

    max_id = max((j for _, j in pairs), default=-1)
    n = num_nodes if num_nodes is not None else header_n if header_n is not None else max_id + 1
    if max_id >= n:
        raise DomainError(f"node id {max_id} does not fit in declared node count {n}")
    graph = Graph(n, pairs)
    edge_stats = EdgeListStats(self_loops_dropped=self_loops, duplicates_collapsed=len(pairs) - graph.num_edges)
    if self_loops:
        logger.warning("Dropped %s self-loop lines", self_loops)
    logger.debug("Parsed %s nodes, %s edges (%s duplicates)", n, graph.num_edges, edge_stats.duplicates_collapsed)
    return graph, edge_stats


def parse_edge_list(
    text: str | Iterable[str],
    index_base: Literal[0, 1] = 0,
    allow_comments: bool = True,
    num_nodes: int | None = None,
) -> Graph:
    """Parse an edge list into a Graph. See `parse_edge_list_with_stats`."""
    graph, _ = parse_edge_list_with_stats(text, index_base, allow_comments, num_nodes)
    return graph


def read_edge_list(path: str | os.PathLike[str], index_base: Literal[0, 1] = 0) -> tuple[Graph, EdgeListStats]:
    """Read and parse an edge-list file."""
    logger.debug("Reading edge list %s", path)
    with open(path, encoding="utf-8") as f:
        return parse_edge_list_with_stats(f, index_base=index_base)


def _check_overwrite(path: Path, is_overwrite: bool):
    if not is_overwrite and path.exists():
        raise OSError(f"File {path} already exists and cannot be overwritten")


def write_edge_list(graph: Graph, path: Path, is_overwrite: bool = True, index_base: int = 0) -> Path:
    """Write a graph in the edge-list format.

    Args:
        graph: Graph to serialize.
        path: Output file.
        is_overwrite: Allow overwriting an existing file.
        index_base: 0 or 1, added to node ids on output.

    Returns:
        The path written.
    """
    path = Path(path)
    _check_overwrite(path, is_overwrite)
    logger.debug("Writing edge list to %s", path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(graph.to_edge_list_str(index_base))
    return path


def neighborhood_subgraph(graph: Graph, ego: int) -> Graph:
    """Induced subgraph on the neighbours of `ego`, excluding the ego itself.

    Neighbours are relabelled 0..m-1 in ascending order of their original ids.
    """
    members = graph.neighbors(ego)
    in_members = np.zeros(graph.n, dtype=bool)
    in_members[members] = True
    keep = in_members[graph.edges[:, 0]] & in_members[graph.edges[:, 1]]
    relabeled = np.searchsorted(members, graph.edges[keep])
    return Graph(len(members), relabeled)


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """Real observations, one row per sample and one column per variable.

    Attributes:
        values: Finite float array of shape (rows, cols).
        columns: Column names; defaults to "x0".."x{cols-1}".
    """

    values: np.ndarray
    columns: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise DomainError(f"data matrix must be two-dimensional and non-empty, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("data matrix contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        columns = tuple(self.columns) or tuple(f"x{j}" for j in range(values.shape[1]))
        if len(columns) != values.shape[1]:
            raise DomainError(f"{len(columns)} column names for {values.shape[1]} columns")
        object.__setattr__(self, "columns", columns)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def to_csv_str(self) -> str:
        frame = pd.DataFrame(self.values, columns=list(self.columns))
        return frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")


def _has_header(first_line: str) -> bool:
    first_cell = first_line.split(",")[0].strip()
    try:
        float(first_cell)
    except ValueError:
        return True
    return False


def parse_data_matrix(text: str) -> DataMatrix:
    """Parse comma-separated observations; a non-numeric first cell marks a header row."""
    lines = text.splitlines()
    if not lines:
        raise DomainError("data matrix file is empty")
    header = 0 if _has_header(lines[0]) else None
    try:
        frame = pd.read_csv(io.StringIO(text), header=header, float_precision="round_trip")
        values = frame.to_numpy(dtype=np.float64)
    except ValueError as e:
        raise DomainError(f"data matrix is not numeric: {e}") from e
    columns = tuple(str(c) for c in frame.columns) if header is not None else ()
    return DataMatrix(values, columns)


def read_data_matrix(path: str | os.PathLike[str]) -> DataMatrix:
    """Read a data-matrix CSV file."""
    logger.debug("Reading data matrix %s", path)
    return parse_data_matrix(Path(path).read_text(encoding="utf-8"))


def write_data_matrix(data: DataMatrix, path: Path, is_overwrite: bool = True) -> Path:
    """Write a data matrix as CSV with a header row and 17 significant digits."""
    path = Path(path)
    _check_overwrite(path, is_overwrite)
    logger.debug("Writing data matrix to %s", path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(data.to_csv_str())
    return path


def correlation_matrix(data: DataMatrix, method: CorrelationMethod = "spearman") -> np.ndarray:
    """Column correlation matrix; Spearman ties get average ranks."""
    if data.rows < 3:
        raise DomainError(f"correlation graph needs at least 3 observations, got {data.rows}")
    spread = np.ptp(data.values, axis=0)
    constant = np.flatnonzero(spread == 0)
    if constant.size:
        raise DomainError(f"column {data.columns[constant[0]]!r} is constant; correlation undefined")
    if method == "spearman":
        values = stats.rankdata(data.values, axis=0)
    elif method == "pearson":
        values = data.values
    else:
        raise DomainError(f"unknown correlation method {method!r}")
    return np.atleast_2d(np.corrcoef(values, rowvar=False))


def correlation_graph(data: DataMatrix, threshold: float, method: CorrelationMethod = "spearman") -> Graph:
    """Graph on the columns with an edge wherever the correlation exceeds `threshold`."""
    if not -1 < threshold < 1:
        raise DomainError(f"threshold must lie in (-1, 1), got {threshold}")
    corr = correlation_matrix(data, method)
    i, j = np.triu_indices(data.cols, k=1)
    strong = corr[i, j] > threshold
    logger.debug("Correlation graph: %s of %s pairs above %s", int(strong.sum()), len(i), threshold)
    return Graph(data.cols, np.column_stack([i[strong], j[strong]]))
