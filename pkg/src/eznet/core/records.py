"""Batch result records and their CSV and JSON serializations.

See docs/output-schema.md for the column and field layout.
"""

from dataclasses import dataclass
import json
import logging
import math
from pathlib import Path
import sys
from typing import Literal, Sequence

import pandas as pd

from eznet.core.hypothesis import TestResult
from eznet.core.simulation import SimulationReport
from eznet.core.subgraph_stats import SubgraphDensities, ez_characteristic

logger = logging.getLogger(__name__)

OutputFormat = Literal["csv", "json"]

NA = "NA"
FLOAT_FORMAT = "%.17g"
STATS_COLUMNS = ["graph_id", "n", "edges", "e_hat", "v_hat", "t_hat", "ez_char"]
TEST_COLUMNS = STATS_COLUMNS + ["test", "statistic", "p_value"]
SIMULATION_COLUMNS = [
    "model",
    "test",
    "replicates",
    "alpha",
    "rejection_rate",
    "statistic_mean",
    "statistic_var",
    "theoretical_delta",
    "snr",
    "ks_statistic",
    "ks_p_value",
    "failures",
    "dense_regime",
]


@dataclass
class BatchRecord:
    """One output row: an input graph (or data matrix, or ego) and what was computed on it."""

    graph_id: str
    n: int | None = None
    edges: int | None = None
    e_hat: float | None = None
    v_hat: float | None = None
    t_hat: float | None = None
    ez_char: float | None = None
    test: str | None = None
    result: TestResult | None = None
    reject: bool | None = None
    note: str = ""

    @classmethod
    def from_densities(cls, graph_id: str, d: SubgraphDensities) -> "BatchRecord":
        """Densities and EZ characteristic; the characteristic is NA on edgeless graphs."""
        ez_char = ez_characteristic(d) if d.e_hat > 0 else None
        return cls(graph_id, d.n, d.edge_count, d.e_hat, d.v_hat, d.t_hat, ez_char)

    @classmethod
    def from_result(cls, graph_id: str, result: TestResult, alpha: float | None = None) -> "BatchRecord":
        d = result.densities
        ez_char = d.t_hat - (d.v_hat / d.e_hat) ** 3 if d.e_hat != 0 else None
        edges = d.edge_count if isinstance(d, SubgraphDensities) else None
        return cls(
            graph_id,
            d.n,
            edges,
            d.e_hat,
            d.v_hat,
            d.t_hat,
            ez_char,
            test=result.test_id,
            result=result,
            reject=result.reject(alpha) if alpha is not None else None,
            note="; ".join(result.notes),
        )

    @classmethod
    def from_error(cls, graph_id: str, error: Exception, test: str | None = None) -> "BatchRecord":
        return cls(graph_id, test=test, note=f"error: {error}")

    @property
    def failed(self) -> bool:
        return self.note.startswith("error:")

    @property
    def statistic(self) -> float | None:
        return self.result.statistic if self.result else None

    @property
    def p_value(self) -> float | None:
        return self.result.p_value if self.result else None

    def to_row(self) -> dict:
        return {
            "graph_id": self.graph_id,
            "n": self.n,
            "edges": self.edges,
            "e_hat": self.e_hat,
            "v_hat": self.v_hat,
            "t_hat": self.t_hat,
            "ez_char": self.ez_char,
            "test": self.test,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "reject": self.reject,
            "note": self.note,
        }

    def to_json_dict(self) -> dict:
        densities = None
        if self.e_hat is not None:
            densities = {"e_hat": self.e_hat, "v_hat": self.v_hat, "t_hat": self.t_hat}
        entry = {
            "graph_id": self.graph_id,
            "n": self.n,
            "edges": self.edges,
            "densities": densities,
            "ez_char": self.ez_char,
        }
        if self.test is not None:
            entry["test"] = self.test
            entry["result"] = None if self.result is None else result_to_dict(self.result)
            if self.reject is not None:
                entry["reject"] = self.reject
        entry["note"] = self.note or None
        return entry


def result_to_dict(result: TestResult) -> dict:
    return {
        "test_id": result.test_id,
        "statistic": _finite_or_none(result.statistic),
        "p_value": result.p_value,
        "null": result.null,
        "alternative": result.alternative,
        "direction": result.direction,
        "notes": list(result.notes),
    }


def _finite_or_none(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return value


def records_to_csv(
    records: Sequence[BatchRecord], columns: Sequence[str], summary: dict[str, object] | None = None
) -> str:
    """Fixed-column CSV with 17 significant digits, NA for undefined values, LF line endings.

    Summary entries become trailing `# key: value` comment lines.
    """
    frame = pd.DataFrame([r.to_row() for r in records], columns=list(columns))
    for column in ("n", "edges"):
        if column in frame:
            frame[column] = frame[column].astype("Int64")
    if "reject" in frame:
        frame["reject"] = frame["reject"].astype("boolean")
    text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep=NA, lineterminator="\n")
    for key, value in (summary or {}).items():
        text += f"# {key}: {value}\n"
    return text


def records_to_json(records: Sequence[BatchRecord], summary: dict[str, object] | None = None) -> str:
    document = {"records": [r.to_json_dict() for r in records], "summary": summary or {}}
    return json.dumps(document, indent=2, allow_nan=False) + "\n"


def render(
    records: Sequence[BatchRecord],
    output_format: OutputFormat,
    columns: Sequence[str],
    summary: dict[str, object] | None = None,
) -> str:
    if output_format == "json":
        return records_to_json(records, summary)
    return records_to_csv(records, columns, summary)


def emit(text: str, out: Path | None = None, overwrite: bool = False):
    """Write `text` to `out`, or to stdout when `out` is None.

    Raises:
        OSError: If `out` exists and overwriting is not allowed.
    """
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    out = Path(out)
    if out.exists():
        if not overwrite:
            raise OSError(f"{out} already exists and cannot be overwritten")
        logger.warning("Overwriting %s", out)
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.info("Wrote results to %s", out)


def render_report(report: SimulationReport, output_format: OutputFormat) -> str:
    """A simulation report as a JSON object or a single-row CSV."""
    if output_format == "json":
        return json.dumps(report.to_dict(), indent=2) + "\n"
    frame = pd.DataFrame([report.to_dict()], columns=SIMULATION_COLUMNS)
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep=NA, lineterminator="\n")
