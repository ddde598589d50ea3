import json

import pytest

from teleportsim.cli import main
from teleportsim.experiments import rows_from_csv


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_rate_single_photon(capsys):
    code, out, _ = run_cli(capsys, "rate", "--single-photon")
    assert code == 0
    payload = json.loads(out)
    assert payload["rate_hz"] == pytest.approx(84.0, abs=4.0)


def test_rate_default(capsys):
    code, out, _ = run_cli(capsys, "rate")
    payload = json.loads(out)
    assert code == 0
    assert payload["rate_hz"] == pytest.approx(6.0, abs=0.6)


def test_run_emits_branches(capsys):
    code, out, _ = run_cli(capsys, "run", "--state", "up_x")
    assert code == 0
    payload = json.loads(out)
    assert len(payload["branches"]) == 4
    assert 0.0 <= payload["fidelity"] <= 1.0
    assert payload["branches"][3]["feedback"] == ["x_pi"]


def test_run_with_custom_amplitudes(capsys):
    code, out, _ = run_cli(capsys, "run", "--alpha", "0.6,0", "--beta", "0,0.8")
    assert code == 0
    payload = json.loads(out)
    assert payload["input"]["beta"] == [0.0, 0.8]


def test_bench6_csv(tmp_path, capsys):
    out_path = tmp_path / "bench.csv"
    code, _, _ = run_cli(capsys, "bench6", "--format", "csv",
                         "--out", str(out_path))
    assert code == 0
    rows = rows_from_csv(out_path.read_text())
    assert len(rows) == 6
    assert {r.swept_value for r in rows} == {
        "up_z", "down_z", "up_x", "down_x", "up_y", "down_y"}


def test_bench6_json_has_density_matrices(capsys):
    code, out, _ = run_cli(capsys, "bench6", "--format", "json")
    payload = json.loads(out)
    assert code == 0
    assert set(payload["density_matrices"]) == {
        "up_z", "down_z", "up_x", "down_x", "up_y", "down_y"}
    assert 0.85 <= payload["average_fidelity"] <= 0.91


def test_sweep_delay_csv(tmp_path, capsys):
    out_path = tmp_path / "delay.csv"
    code, _, _ = run_cli(capsys, "sweep", "--param", "delay",
                         "--grid", "0,40", "--out", str(out_path))
    assert code == 0
    rows = rows_from_csv(out_path.read_text())
    assert rows[1].length_km == pytest.approx(8.0)


def test_sweep_shots_reproducible(capsys):
    args = ("sweep", "--param", "mean-photon", "--grid", "0.07",
            "--shots", "500", "--seed", "9", "--format", "json")
    _, out_a, _ = run_cli(capsys, *args)
    _, out_b, _ = run_cli(capsys, *args)
    assert out_a == out_b
    assert json.loads(out_a)["rows"][0]["stderr"] > 0.0


def test_fit_coupling(capsys):
    code, out, _ = run_cli(capsys, "fit-coupling")
    payload = json.loads(out)
    assert code == 0
    assert payload["fits"]["bob"]["kappa_in_fraction"] == pytest.approx(
        0.8835, abs=1e-3)
    assert payload["fits"]["alice"]["kappa_in_fraction"] == pytest.approx(
        0.8641, abs=1e-3)


def test_budget(capsys):
    code, out, _ = run_cli(capsys, "budget")
    payload = json.loads(out)
    assert code == 0
    assert [e["imperfection"] for e in payload["entries"]] == [
        "decoherence", "photon_source", "state_preparation"]


def test_missing_config_is_machine_readable_error(capsys):
    code, _, err = run_cli(capsys, "rate", "--config", "/nonexistent/path.cfg")
    assert code == 1
    assert "error" in json.loads(err)


def test_bad_grid_is_machine_readable_error(capsys):
    code, _, err = run_cli(capsys, "sweep", "--param", "mean-photon",
                           "--grid", "9.9")
    assert code == 1
    payload = json.loads(err)
    assert payload["error"]["type"] == "QuantumStateError"


def test_decoherence_law_flag(capsys):
    code, out, _ = run_cli(capsys, "run", "--state", "up_x",
                           "--decoherence-law", "gauss")
    assert code == 0
    gauss_fid = json.loads(out)["fidelity"]
    _, out2, _ = run_cli(capsys, "run", "--state", "up_x")
    assert gauss_fid > json.loads(out2)["fidelity"]  # gaussian decays less here
