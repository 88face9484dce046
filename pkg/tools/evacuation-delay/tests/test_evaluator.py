import json

import pandas as pd
import pytest

import evaluator
from evaluator import EXIT_INVALID, EXIT_OK, EXIT_UNSTABLE, main


@pytest.fixture(autouse=True)
def quiet_logging(monkeypatch):
    monkeypatch.setattr(evaluator, "setup_logging", lambda: None)


def test_table1_simple(capsys):
    assert main(["table1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Average Channel Evacuation Time" in out
    assert "32 to 53" in out
    assert "2055" in out


def test_table1_check_marks_national(capsys):
    assert main(["table1", "--check", "--deadline", "300"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[FAIL] national" in out
    assert "[OK]   regional" in out


def test_table1_queueing_strict_is_unstable(capsys):
    assert main(["table1", "--mode", "queueing"]) == EXIT_OK
    assert main(["table1", "--mode", "queueing", "--strict"]) == EXIT_UNSTABLE
    assert "[WARN] regional" in capsys.readouterr().out


def test_table1_writes_report(tmp_path):
    out = tmp_path / "table.json"
    assert main(["table1", "--out", str(out), "--format", "json"]) == EXIT_OK
    docs = json.loads(out.read_text())
    assert [d["name"] for d in docs] == ["fully-distributed", "regional", "national", "semi-national"]


def test_compose_unstable_scenario():
    assert main(["compose", "--name", "regional", "--mode", "queueing"]) == EXIT_UNSTABLE


def test_compose_writes_cdf(tmp_path):
    out = tmp_path / "cdf.csv"
    code = main(["compose", "--name", "semi-national", "--mode", "simple",
                 "--column", "cumulative", "--out", str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert frame["cumulative"].iloc[-1] == pytest.approx(1.0)


def test_simulate_missing_scenario_file(tmp_path, capsys):
    assert main(["simulate", "--scenario", str(tmp_path / "missing.json")]) == EXIT_INVALID
    assert "[ERROR]" in capsys.readouterr().out


def test_simulate_example_file(tmp_path, scenario_dir):
    out = tmp_path / "run.json"
    samples = tmp_path / "samples.csv"
    code = main(["simulate", "--scenario", str(scenario_dir / "campus-night.json"),
                 "--duration", "5", "--seed", "3", "--out", str(out), "--format", "json",
                 "--samples", str(samples)])
    assert code == EXIT_OK
    (doc,) = json.loads(out.read_text())
    assert doc["scenario"] == "campus-night"
    assert doc["seed"] == 3
    assert samples.exists()


def test_sweep(capsys):
    assert main(["sweep", "--name", "semi-national", "--sizes", "1e6,4.5e7"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "unstable" in out


def test_sweep_rejects_bad_size():
    assert main(["sweep", "--sizes", "1e6,0"]) == EXIT_INVALID


def test_diurnal_strict():
    assert main(["diurnal", "--name", "semi-national", "--strict"]) == EXIT_OK
    assert main(["diurnal", "--name", "regional", "--strict"]) == EXIT_UNSTABLE


def test_unknown_builtin_name():
    assert main(["compose", "--name", "lunar"]) == EXIT_INVALID


def test_report_to_missing_directory(tmp_path):
    out = tmp_path / "nope" / "t.csv"
    assert main(["table1", "--out", str(out)]) == EXIT_INVALID


def test_config(capsys):
    assert main(["config"]) == EXIT_OK
    assert "REPORT_DECIMALS" in capsys.readouterr().out


def test_table1_scenario_file_with_simulation(tmp_path, scenario_dir, capsys):
    out = tmp_path / "table.json"
    code = main(["table1", "--scenario", str(scenario_dir / "campus-night.json"),
                 "--simulate", "5", "--seed", "3", "--out", str(out), "--format", "json"])
    assert code == EXIT_OK
    assert "campus-night" in capsys.readouterr().out
    (doc,) = json.loads(out.read_text())
    assert doc["name"] == "campus-night"
    assert doc["simulated_evacuation_ms"] is None or doc["simulated_evacuation_ms"] > 0


def test_table1_simulation_is_seeded(tmp_path, scenario_dir):
    docs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        main(["table1", "--scenario", str(scenario_dir / "campus-night.json"),
              "--simulate", "5", "--seed", "11", "--out", str(out), "--format", "json"])
        docs.append(json.loads(out.read_text()))
    assert docs[0] == docs[1]


def test_sweep_queueing_mode(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--name", "semi-national", "--sizes", "1e6,4.5e7",
                 "--mode", "queueing", "--out", str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame["mode"]) == ["queueing", "queueing"]
    assert frame.loc[0, "mean_evacuation_ms"] == pytest.approx(175.0, abs=0.01)
    assert pd.isna(frame.loc[1, "mean_evacuation_ms"])


def test_compose_writes_json(tmp_path):
    out = tmp_path / "density.json"
    code = main(["compose", "--name", "semi-national", "--mode", "simple",
                 "--out", str(out), "--format", "json"])
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    assert len(doc["time_ms"]) == len(doc["density"])
