import json

import pandas as pd
import pytest

from evacuation import SIMPLE, diurnal_profile
from models import ReportError, load_scenario
from report import emit_report, write_samples_csv
from scenarios import Table1Row, reproduce_table1
from simulator import SimReport, run_simulation


@pytest.fixture(scope="module")
def table_rows():
    return reproduce_table1(SIMPLE)


@pytest.fixture(scope="module")
def campus_report(scenario_dir):
    scenario = load_scenario(scenario_dir / "campus-night.json")
    return run_simulation(scenario, 10, 7)


def test_table_csv_is_stable(tmp_path, table_rows):
    first = emit_report(table_rows, "csv", tmp_path / "a.csv")
    second = emit_report(table_rows, "csv", tmp_path / "b.csv")
    text = first.read_text()
    assert text == second.read_text()
    lines = text.splitlines()
    assert len(lines) == 5
    assert lines[0].split(",")[:3] == ["name", "processors", "tv_receivers"]


def test_table_csv_values(tmp_path, table_rows):
    frame = pd.read_csv(emit_report(table_rows, "csv", tmp_path / "t.csv"))
    by_name = frame.set_index("name")
    assert by_name.loc["semi-national", "evacuation_ms"] == pytest.approx(175.0)
    assert by_name.loc["national", "processors"] == 100_000


def test_json_keeps_field_order(tmp_path, table_rows):
    path = emit_report(table_rows, "json", tmp_path / "t.json")
    docs = json.loads(path.read_text())
    assert len(docs) == 4
    assert list(docs[0]) == [
        "name", "processors", "tv_receivers", "network_latency_ms", "sm_response_ms",
        "evacuation_ms", "evacuation_low_ms", "evacuation_high_ms", "mode", "stable",
        "rho", "protection_probability", "handover_min_ms", "simulated_evacuation_ms",
    ]
    assert path.read_text().endswith("\n")


def test_unstable_rows_serialize_as_null(tmp_path, regional):
    (point,) = diurnal_profile(regional, hours=[20])
    docs = json.loads(emit_report([point], "json", tmp_path / "d.json").read_text())
    assert docs[0]["stable"] is False
    assert docs[0]["mean_evacuation_ms"] is None


def test_floats_are_rounded(tmp_path):
    row = Table1Row(name="x", processors=1, tv_receivers=10, network_latency_ms=1.23456789,
                    sm_response_ms=2.0, evacuation_ms=23.4567891, handover_min_ms=20.0)
    docs = json.loads(emit_report([row], "json", tmp_path / "r.json").read_text())
    assert docs[0]["network_latency_ms"] == 1.235
    assert docs[0]["evacuation_ms"] == 23.457


def test_rejects_empty_and_unknown_format(tmp_path, table_rows):
    with pytest.raises(ReportError):
        emit_report([], "csv", tmp_path / "x.csv")
    with pytest.raises(ReportError):
        emit_report(table_rows, "xml", tmp_path / "x.xml")
    with pytest.raises(ReportError):
        emit_report([object()], "json", tmp_path / "x.json")


def test_unwritable_path(tmp_path, table_rows):
    with pytest.raises(ReportError):
        emit_report(table_rows, "csv", tmp_path / "missing" / "x.csv")


def test_simulation_report_csv(tmp_path, campus_report):
    frame = pd.read_csv(emit_report(campus_report, "csv", tmp_path / "sim.csv"))
    assert len(frame) == 1
    assert frame.loc[0, "scenario"] == "campus-night"
    assert frame.loc[0, "jobs_processed"] == campus_report.jobs_processed


def test_simulation_report_json(tmp_path, campus_report):
    docs = json.loads(emit_report([campus_report], "json", tmp_path / "sim.json").read_text())
    assert docs[0]["config_digest"] == campus_report.config_digest
    assert "protection_curve" in docs[0]


def test_samples_csv(tmp_path, campus_report):
    assert campus_report.evac_samples.size > 0
    frame = pd.read_csv(write_samples_csv(campus_report, tmp_path / "s.csv"))
    assert list(frame.columns) == ["evacuation_ms"]
    assert len(frame) == campus_report.evac_samples.size


def test_samples_csv_needs_samples(tmp_path):
    empty = SimReport(scenario_name="x", seed=1, config_digest="0", duration_s=1.0)
    with pytest.raises(ReportError):
        write_samples_csv(empty, tmp_path / "s.csv")
