"""Unit tests for CLI module"""

import json
import math

import pytest

from eznet.core import cli
from eznet.core.cli import (
    Gen,
    ModelConfig,
    Neighborhoods,
    OutputConfig,
    Simulate,
    Stats,
    Test,
    WeightConfig,
    thread_count,
)
from eznet.core.errors import DomainError
from eznet.core.graph_io import Graph, read_edge_list


def _csv_rows(path):
    """Data rows of a CSV output file, split on commas, without comment lines."""
    lines = path.read_text().splitlines()
    return [line.split(",") for line in lines[1:] if not line.startswith("#")]


def test_stats_run(shared_datadir, tmp_path):
    """Test Stats.run() on a triangle and an edgeless graph"""
    out = tmp_path / "stats.csv"
    stats = Stats(
        inputs=[shared_datadir / "k3.edges", shared_datadir / "empty4.edges"],
        output=OutputConfig(out=out),
    )
    assert stats.run() == 0

    lines = out.read_text().splitlines()
    assert lines[0] == "graph_id,n,edges,e_hat,v_hat,t_hat,ez_char"
    k3, empty = _csv_rows(out)
    assert k3[0].endswith("k3.edges")
    assert k3[1:] == ["3", "3", "1", "1", "1", "0"]
    assert empty[1:] == ["4", "0", "0", "0", "0", "NA"]


def test_stats_run_continues_after_failure(shared_datadir, tmp_path):
    """Test that a malformed input yields an NA row and exit status 1"""
    out = tmp_path / "stats.csv"
    stats = Stats(
        inputs=[shared_datadir / "k3.edges", shared_datadir / "malformed.edges", shared_datadir / "k4.edges"],
        output=OutputConfig(out=out),
    )
    assert stats.run() == 1

    rows = _csv_rows(out)
    assert len(rows) == 3
    assert rows[1][0].endswith("malformed.edges")
    assert rows[1][1:] == ["NA"] * 6
    assert rows[2][1:3] == ["4", "6"]


def test_stats_run_json(shared_datadir, capsys):
    """Test JSON output to stdout"""
    assert Stats(inputs=[shared_datadir / "k4.edges"], output=OutputConfig(format="json")).run() == 0
    document = json.loads(capsys.readouterr().out)
    (record,) = document["records"]
    assert record["n"] == 4
    assert record["edges"] == 6
    assert record["densities"] == {"e_hat": 1.0, "v_hat": 1.0, "t_hat": 1.0}


def test_stats_run_refuses_overwrite(shared_datadir, tmp_path):
    """Test that an existing output file is kept"""
    out = tmp_path / "stats.csv"
    out.write_text("keep")
    with pytest.raises(OSError):
        Stats(inputs=[shared_datadir / "k3.edges"], output=OutputConfig(out=out)).run()
    assert out.read_text() == "keep"
    assert Stats(inputs=[shared_datadir / "k3.edges"], output=OutputConfig(out=out, overwrite=True)).run() == 0


def test_test_run_ez_dcbm(shared_datadir, tmp_path):
    """Test the EZ test on a complete graph"""
    out = tmp_path / "test.csv"
    assert Test(inputs=[shared_datadir / "k4.edges"], output=OutputConfig(out=out)).run() == 0
    header = out.read_text().splitlines()[0]
    assert header == "graph_id,n,edges,e_hat,v_hat,t_hat,ez_char,test,statistic,p_value,note"
    (row,) = _csv_rows(out)
    assert row[7:10] == ["ez_dcbm", "0", "1"]


def test_test_run_er_chi2(tmp_path):
    """Test that the reported chi-squared p-value is exp(-s/2)"""
    graph_path = tmp_path / "er.edges"
    Gen(model="er", out=graph_path, seed=3, params=ModelConfig(n=80, p=0.1)).run()
    out = tmp_path / "test.json"
    test = Test(inputs=[graph_path], test="er-chi2", output=OutputConfig(format="json", out=out))
    assert test.run() == 0
    (record,) = json.loads(out.read_text())["records"]
    result = record["result"]
    assert result["null"] == "chi2_2"
    assert result["p_value"] == pytest.approx(math.exp(-result["statistic"] / 2))


def test_test_run_alpha_column(shared_datadir, tmp_path):
    """Test the reject column"""
    out = tmp_path / "test.csv"
    assert Test(inputs=[shared_datadir / "k4.edges"], alpha=0.05, output=OutputConfig(out=out)).run() == 0
    header = out.read_text().splitlines()[0].split(",")
    assert header[-2:] == ["reject", "note"]
    (row,) = _csv_rows(out)
    assert row[10] == "False"

    with pytest.raises(DomainError):
        Test(inputs=[shared_datadir / "k4.edges"], alpha=1.5).run()


def test_test_run_gaussian(tmp_path):
    """Test the Gaussian test on generated data"""
    data_path = tmp_path / "data.csv"
    gen = Gen(model="gaussian", out=data_path, seed=1, params=ModelConfig(n=300, variables=10, k=2, a=0.3, b=0.05))
    assert gen.run() == 0
    out = tmp_path / "test.json"
    test = Test(inputs=[data_path], test="ez-gaussian", output=OutputConfig(format="json", out=out))
    assert test.run() == 0
    (record,) = json.loads(out.read_text())["records"]
    assert record["n"] == 300
    assert record["edges"] is None
    assert record["result"]["test_id"] == "ez_gaussian"
    assert record["note"] == "standardized columns"


def test_test_run_threshold(shared_datadir, tmp_path):
    """Test a correlation graph built with --threshold"""
    out = tmp_path / "test.csv"
    test = Test(inputs=[shared_datadir / "columns.csv"], threshold=0.5, output=OutputConfig(out=out))
    assert test.run() == 0
    (row,) = _csv_rows(out)
    assert row[1:3] == ["4", "3"]


def test_test_run_ego_all(shared_datadir, tmp_path):
    """Test --ego-all on a graph whose first ego sees a complete neighbourhood"""
    out = tmp_path / "test.json"
    test = Test(inputs=[shared_datadir / "k5_ego.edges"], ego_all=True, output=OutputConfig(format="json", out=out))
    assert test.run() == 0
    document = json.loads(out.read_text())
    ids = [record["graph_id"].rsplit(":", 1)[1] for record in document["records"]]
    # Nodes 6..9 have fewer than three neighbours
    assert ids == ["0", "1", "2", "3", "4", "5"]
    assert document["summary"] == {"skipped": 4}
    assert document["records"][0]["result"]["p_value"] == 1.0

    with pytest.raises(DomainError):
        Test(inputs=[shared_datadir / "k5_ego.edges"], test="er-chi2", ego_all=True).run()


def test_test_run_rejects_threshold_for_gaussian(shared_datadir, mocker):
    """Test that --threshold with ez-gaussian fails before reading any input"""
    read = mocker.patch("eznet.core.cli.read_data_matrix")
    with pytest.raises(DomainError, match="--threshold"):
        Test(inputs=[shared_datadir / "columns.csv"], test="ez-gaussian", threshold=0.5).run()
    read.assert_not_called()


def test_test_run_failure_status(shared_datadir, tmp_path):
    """Test that a failing input is reported and sets the exit status"""
    out = tmp_path / "test.csv"
    test = Test(inputs=[shared_datadir / "empty4.edges", shared_datadir / "k4.edges"], output=OutputConfig(out=out))
    assert test.run() == 1
    failed, ok = _csv_rows(out)
    assert failed[7] == "ez_dcbm"
    assert failed[8:10] == ["NA", "NA"]
    assert failed[10].startswith("error:")
    assert ok[8:10] == ["0", "1"]


def test_neighborhoods_run_skips_edgeless(shared_datadir, tmp_path):
    """Test that an edgeless neighbourhood is skipped and counted"""
    out = tmp_path / "nbhd.csv"
    assert Neighborhoods(input=shared_datadir / "star.edges", ego=["0"], output=OutputConfig(out=out)).run() == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert lines[-1] == "# skipped: 1"


def test_neighborhoods_run_selected_ego(shared_datadir, tmp_path):
    """Test a single ego with a complete neighbourhood"""
    out = tmp_path / "nbhd.csv"
    nbhd = Neighborhoods(input=shared_datadir / "k5_ego.edges", ego=["0"], output=OutputConfig(out=out))
    assert nbhd.run() == 0
    (row,) = _csv_rows(out)
    assert row[0] == "0"
    assert row[1:3] == ["5", "10"]
    assert row[7:10] == ["ez_neighborhood", "0", "1"]


def test_neighborhoods_run_all_egos(shared_datadir, tmp_path):
    """Test every ego of a graph, with one-based ids"""
    one_based = tmp_path / "k5_ego_1.edges"
    graph, _ = read_edge_list(shared_datadir / "k5_ego.edges")
    one_based.write_text(graph.to_edge_list_str(index_base=1))
    out = tmp_path / "nbhd.json"
    nbhd = Neighborhoods(input=one_based, index_base=1, output=OutputConfig(format="json", out=out))
    assert nbhd.run() == 0
    document = json.loads(out.read_text())
    assert len(document["records"]) <= graph.n
    assert [record["graph_id"] for record in document["records"]] == ["1", "2", "3", "4", "5", "6"]


def test_neighborhoods_invalid_ego(shared_datadir):
    """Test non-integer ego ids and size limits"""
    with pytest.raises(DomainError):
        Neighborhoods(input=shared_datadir / "k4.edges", ego=["first"]).run()
    with pytest.raises(DomainError):
        Neighborhoods(input=shared_datadir / "k4.edges", neighborhoods=cli.NeighborhoodOptions(5, 4)).run()


def test_simulate_run(tmp_path, monkeypatch):
    """Test that simulation output depends only on the seed"""

    def simulate(out):
        return Simulate(
            model="er",
            replicates=20,
            seed=4,
            params=ModelConfig(n=60, p=0.1),
            output=OutputConfig(format="json", out=out),
        ).run()

    assert simulate(tmp_path / "a.json") == 0
    assert simulate(tmp_path / "b.json") == 0
    monkeypatch.setenv("EZNET_THREADS", "4")
    assert simulate(tmp_path / "c.json") == 0

    first = (tmp_path / "a.json").read_bytes()
    assert (tmp_path / "b.json").read_bytes() == first
    assert (tmp_path / "c.json").read_bytes() == first
    report = json.loads(first)
    assert report["replicates"] == 20
    assert report["model"] == "er(n=60, p=0.1)"
    assert report["theoretical_delta"] == 0.0


def test_simulate_run_weighted(tmp_path):
    """Test simulating the configuration model with two-point weights"""
    out = tmp_path / "config.csv"
    sim = Simulate(
        model="config",
        test="er-chi2",
        replicates=5,
        params=ModelConfig(n=100, a=0.05),
        weights=WeightConfig(weights="two_point"),
        output=OutputConfig(out=out),
    )
    assert sim.run() == 0
    assert "two_point(w_lo=0.5, w_hi=2, prob_hi=0.2)" in out.read_text()


def test_gen_run(tmp_path):
    """Test edge-list generation, re-reading and byte-identical reruns"""
    out = tmp_path / "g.edges"
    assert Gen(model="er", out=out, params=ModelConfig(n=5, p=1.0)).run() == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# nodes: 5"
    assert len(lines) == 11
    graph, _ = read_edge_list(out)
    assert graph == Graph.complete(5)

    first, second = tmp_path / "a.edges", tmp_path / "b.edges"
    for path in (first, second):
        Gen(model="dcbm", out=path, seed=7, params=ModelConfig(n=200), weights=WeightConfig(weights="two_point")).run()
    assert first.read_bytes() == second.read_bytes()

    with pytest.raises(OSError, match="cannot be overwritten"):
        Gen(model="er", out=out, params=ModelConfig(n=5, p=1.0)).run()


def test_gen_run_neighborhood(tmp_path):
    """Test that the neighbourhood model writes the ego as node 0"""
    out = tmp_path / "ego.edges"
    Gen(model="neighborhood", out=out, params=ModelConfig(n=100, k=2, a=0.1, b=0.02, p=1.0)).run()
    graph, _ = read_edge_list(out)
    assert graph.n == 101
    assert graph.degrees[0] > 0


def test_thread_count(monkeypatch):
    """Test EZNET_THREADS parsing"""
    monkeypatch.delenv("EZNET_THREADS", raising=False)
    assert thread_count() == 1
    monkeypatch.setenv("EZNET_THREADS", "3")
    assert thread_count() == 3
    for value in ("0", "-2", "many"):
        monkeypatch.setenv("EZNET_THREADS", value)
        with pytest.raises(DomainError):
            thread_count()


def test_main_exit_status(mocker):
    """Test that main() exits with the command's status"""
    command = mocker.Mock()
    command.run.return_value = 1
    mocker.patch("eznet.core.cli.tyro.cli", return_value=command)
    with pytest.raises(SystemExit) as excinfo:
        cli.main()
    assert excinfo.value.code == 1

    command.run.return_value = 0
    cli.main()


def test_main_reraises(mocker):
    """Test that main() logs and re-raises command errors"""
    command = mocker.Mock()
    command.run.side_effect = DomainError("bad input")
    mocker.patch("eznet.core.cli.tyro.cli", return_value=command)
    with pytest.raises(DomainError, match="bad input"):
        cli.main()
