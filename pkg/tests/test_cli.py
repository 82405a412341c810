import csv
import io
import json
import subprocess
import sys

import pytest

import reference_data
from pvsc.cli import RESULT_COLUMNS, SYNTHETIC_NOTE, main


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_version_prints_checksums(capsys):
    assert main(["--version"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["datasets"] == reference_data.CHECKSUMS


def test_console_entry_point_runs():
    out = subprocess.run([sys.executable, "-m", "pvsc", "--version"], capture_output=True, text=True, check=True)
    assert "version" in json.loads(out.stdout)


def test_no_command_is_usage_error(capsys):
    assert main([]) == 2


def test_optimize_national_p1(capsys):
    assert main(["optimize", "--region", "national", "--policy", "p1"]) == 0
    cap = capsys.readouterr()
    rows = _rows(cap.out)
    assert list(rows[0]) == list(RESULT_COLUMNS)
    r = rows[0]
    assert r["region"] == "National" and r["policy"] == "P1" and r["profiles"] == "synthetic"
    assert float(r["scr"]) == pytest.approx(100.0) and float(r["eir"]) == 0.0
    assert float(r["battery_kwh_per_hh"]) == 0.0
    assert SYNTHETIC_NOTE in cap.err


def test_json_lines_carries_caveat(capsys):
    assert main(["optimize", "--region", "galicia", "--format", "json-lines"]) == 0
    rec = json.loads(capsys.readouterr().out.splitlines()[0])
    assert rec["note"] == SYNTHETIC_NOTE and rec["policy"] == "P2"


def test_compare_policies_to_file(tmp_path, capsys):
    out = tmp_path / "cmp.csv"
    assert main(["compare-policies", "--region", "Madrid", "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert [r["policy"] for r in rows] == ["P1", "P2", "P3"]
    eac = [float(r["eac_eur"]) for r in rows]
    assert eac[0] >= eac[1] >= eac[2]


def test_unknown_region_exit_code(capsys):
    assert main(["optimize", "--region", "Atlantis"]) == 2
    assert "Atlantis" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["optimize", "--policy", "p9"],
    ["optimize", "--catalog", "/nonexistent.csv"],
    ["optimize", "--synthetic-cf", "0.9"],
    ["sweep", "--pv", "1:2"],
    ["sweep", "--workers", "0", "--pv", "600:700:100", "--battery", "100:120:20"],
    ["sweep", "--battery-chemistry", "Lead acid"],
    ["dispatch-dump", "--month", "13"],
    ["dispatch-dump", "--pv-kw", "-1"],
])
def test_input_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_bad_catalog_value_is_reported_with_line(tmp_path, capsys):
    path = tmp_path / "cat.csv"
    path.write_text("component,key,value\npv,panel_cost_eur_per_kw,abc\n")
    assert main(["optimize", "--catalog", str(path)]) == 2
    assert "cat.csv:2" in capsys.readouterr().err


def test_dispatch_dump_one_day(capsys):
    assert main(["dispatch-dump", "--month", "6", "--day", "weekday", "--pv-kw", "5", "--battery-kwh", "4"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 24
    assert {r["month"] for r in rows} == {"6"}
    assert any(float(r["soc"]) > 0 for r in rows)


def test_sweep_with_iso_lines(tmp_path, capsys):
    out, iso = tmp_path / "s.csv", tmp_path / "iso.csv"
    argv = ["sweep", "--policy", "p1", "--pv", "600:1000:200", "--battery", "50:200:75", "--out", str(out),
            "--iso-metric", "ssr", "--iso-levels", "30", "--iso-out", str(iso)]
    assert main(argv) == 0
    rows = _rows(out.read_text())
    assert len(rows) == 9
    assert {r["config_class"] for r in rows} <= {"pv", "pv+battery", "none"}
    assert iso.read_text().startswith("metric,level,line,vertex")


def test_outputs_are_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["compare-policies", "--region", "Murcia", "--seed", "3", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_overrides_change_results(tmp_path, capsys):
    cfg = tmp_path / "o.cfg"
    cfg.write_text("pv.panel_cost_eur_per_kw = 100\n")
    assert main(["optimize", "--policy", "p1", "--config", str(cfg)]) == 0
    cheap = float(_rows(capsys.readouterr().out)[0]["pv_kw"])
    assert main(["optimize", "--policy", "p1", "--pv-cost-eur-per-kw", "1400"]) == 0
    dear = float(_rows(capsys.readouterr().out)[0]["pv_kw"])
    assert main(["optimize", "--policy", "p1"]) == 0
    ref = float(_rows(capsys.readouterr().out)[0]["pv_kw"])
    assert cheap > ref > dear
    assert main(["optimize", "--policy", "p2", "--cap-tcu-only", "--discount-rate-fraction", "0.05"]) == 0


def test_measured_profiles_file(tmp_path, national, capsys):
    from pvsc import ingestion

    path = tmp_path / "prof.csv"
    ingestion.write_profiles_csv(national, path)
    assert main(["optimize", "--profiles", str(path)]) == 0
    cap = capsys.readouterr()
    assert _rows(cap.out)[0]["profiles"] == "measured"
    assert SYNTHETIC_NOTE not in cap.err
