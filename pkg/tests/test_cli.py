"""Command-line interface: every subcommand end to end."""

from __future__ import annotations

import csv
import json
import math
from io import StringIO
from pathlib import Path

import pytest
from conftest import TAU, near_singular_model, two_mode_converter

from modescatter import ElectromechParams, qubit_fidelity
from modescatter.cli import main
from modescatter.modelfile import save_model


@pytest.fixture()
def converter_path(tmp_path: Path) -> str:
    path = tmp_path / "converter.json"
    save_model(two_mode_converter(), path)
    return str(path)


@pytest.fixture()
def squeezer_path(tmp_path: Path) -> str:
    path = tmp_path / "squeezer.json"
    save_model(near_singular_model(), path)
    return str(path)


def _fom_lines(stdout: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in stdout.splitlines():
        if " = " in line:
            key, _, value = line.partition(" = ")
            out[key.strip()] = value.strip()
    return out


def test_spectra_csv_stdout(capsys: pytest.CaptureFixture[str]) -> None:
    code = main(
        [
            "spectra",
            "--builtin",
            "electromech",
            "--omega-min",
            "4.8e6",
            "--omega-max",
            "5.2e6",
            "--points",
            "21",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    rows = list(csv.reader(StringIO(captured.out)))
    assert rows[0] == [
        "omega_hz",
        "eta_up",
        "eta_dn",
        "N_up",
        "N_dn",
        "sumrule_resid",
        "symplectic_resid",
    ]
    assert len(rows) == 22
    first = rows[1]
    assert float(first[0]) == pytest.approx(4.8e6, rel=1e-12)
    assert 0.0 <= float(first[1]) <= 1.0
    # The mechanical exit band is centered at zero, so the lower-sideband
    # output is unphysical: NaN columns are written as empty cells.
    assert first[2] == ""
    assert first[4] == ""
    assert "peak eta_up" in captured.err
    assert "0 failed point(s)" in captured.err


def test_spectra_csv_file_with_failures(
    tmp_path: Path, squeezer_path: str, capsys: pytest.CaptureFixture[str]
) -> None:
    out = tmp_path / "grid.csv"
    code = main(
        [
            "spectra",
            "--model",
            squeezer_path,
            "--omega-min",
            "1e6",
            "--omega-max",
            "3e6",
            "--points",
            "3",
            "--out",
            str(out),
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 4
    assert rows[2][1] == ""  # the singular middle point is all-NaN
    sibling = tmp_path / "grid.errors.json"
    assert sibling.exists()
    failures = json.loads(sibling.read_text())
    assert len(failures) == 1
    assert failures[0]["omega_hz"] == pytest.approx(2.0e6, rel=1e-12)
    assert "near-singular" in failures[0]["message"]
    assert "1 failure(s)" in captured.err


def test_spectra_json_format(capsys: pytest.CaptureFixture[str]) -> None:
    code = main(
        [
            "spectra",
            "--builtin",
            "electromech",
            "--omega-min",
            "4.9e6",
            "--omega-max",
            "5.1e6",
            "--points",
            "5",
            "--format",
            "json",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    payload = json.loads(captured.out)
    assert payload["failures"] == []
    assert len(payload["omega_hz"]) == 5
    assert payload["eta_dn"][0] is None  # NaN sanitized to null


def test_fom_qubit_matches_library(capsys: pytest.CaptureFixture[str]) -> None:
    code = main(
        [
            "fom",
            "--builtin",
            "electromech",
            "--app",
            "qubit",
            "--omega-sig",
            "5e6",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    values = _fom_lines(captured.out)
    eta_plus = float(values["eta_plus"])
    n_plus = float(values["n_plus"])
    assert float(values["fidelity"]) == pytest.approx(
        qubit_fidelity(eta_plus, n_plus), rel=1e-12
    )
    assert eta_plus > 0.99


def test_fom_qubit_json_output(capsys: pytest.CaptureFixture[str]) -> None:
    code = main(
        [
            "fom",
            "--builtin",
            "electromech",
            "--app",
            "qubit",
            "--omega-sig",
            "5e6",
            "--json",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    payload = json.loads(captured.out)
    assert payload["app"] == "qubit"
    assert payload["omega_sig_hz"] == 5e6
    assert 0.0 <= payload["fidelity"] <= 1.0


def test_fom_heterodyne_on_model_file(
    converter_path: str, capsys: pytest.CaptureFixture[str]
) -> None:
    code = main(
        [
            "fom",
            "--model",
            converter_path,
            "--app",
            "heterodyne",
            "--omega-sig",
            "1e6",
            "--json",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    payload = json.loads(captured.out)
    assert payload["eta_up"] == pytest.approx(0.64, rel=1e-9)
    assert payload["eta_dn"] == 0.0
    assert payload["p_s"] <= payload["bound"] + 1e-9
    assert payload["t_lo_abs"] > 0.0


def test_fom_counting_cold_lines(capsys: pytest.CaptureFixture[str]) -> None:
    code = main(
        [
            "fom",
            "--builtin",
            "electromech",
            "--set",
            "t_wg=0",
            "--set",
            "t_m=0",
            "--app",
            "counting",
            "--omega-sig",
            "5e6",
            "--omega-min",
            "4e6",
            "--omega-max",
            "6e6",
            "--points",
            "8001",
            "--h-in",
            "delta:center_hz=5e6",
            "--h-out",
            "boxcar:duration_s=1e-4",
            "--window",
            "1e-4",
            "--json",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    payload = json.loads(captured.out)
    assert payload["capture"] == 1.0
    assert payload["eta_h"] == pytest.approx(payload["eta_plus"], rel=1e-12)
    assert 0.0 < payload["bandwidth_hz"] < 1.0e6
    assert payload["n_out_mean"] == pytest.approx(
        payload["eta_h"] + payload["dark_rate_per_s"] * 1e-4, rel=1e-9
    )


def test_fom_counting_requires_shapes(capsys: pytest.CaptureFixture[str]) -> None:
    code = main(
        [
            "fom",
            "--builtin",
            "electromech",
            "--app",
            "counting",
            "--omega-sig",
            "5e6",
        ]
    )
    captured = capsys.readouterr()
    assert code == 2
    assert "error:" in captured.err


def test_fom_entangle_reports_both_schemes(
    capsys: pytest.CaptureFixture[str],
) -> None:
    code = main(
        [
            "fom",
            "--builtin",
            "electromech",
            "--set",
            "t_wg=0",
            "--set",
            "t_m=0",
            "--app",
            "entangle",
            "--omega-sig",
            "5e6",
            "--omega-min",
            "4e6",
            "--omega-max",
            "6e6",
            "--points",
            "8001",
            "--window",
            "1e-5",
            "--json",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    payload = json.loads(captured.out)
    assert 0.0 <= payload["p_d"] < 1.0
    for scheme in ("one-click", "two-click"):
        entry = payload[scheme]
        assert 0.0 <= entry["fidelity"] <= 1.0
        assert 0.0 < entry["p_e"] <= 0.5
    assert payload["two-click"]["fidelity"] >= payload["one-click"]["fidelity"]


def test_counting_numerical_failure_exit_code(
    squeezer_path: str, capsys: pytest.CaptureFixture[str]
) -> None:
    # The grid contains the exactly singular frequency, so the sweep holds
    # NaN there and the counting quadrature refuses to integrate.
    code = main(
        [
            "fom",
            "--model",
            squeezer_path,
            "--app",
            "counting",
            "--omega-sig",
            "2.5e6",
            "--omega-min",
            "1e6",
            "--omega-max",
            "3e6",
            "--points",
            "3",
            "--h-in",
            "delta:center_hz=2.5e6",
            "--h-out",
            "boxcar:duration_s=1e-4",
            "--window",
            "1e-4",
        ]
    )
    captured = capsys.readouterr()
    assert code == 3
    assert "error:" in captured.err


def test_protocol_sim_table(capsys: pytest.CaptureFixture[str]) -> None:
    code = main(
        [
            "protocol-sim",
            "--scheme",
            "one-click",
            "--p-e",
            "0.1",
            "--p-d",
            "0.0",
            "--eta",
            "1.0",
            "--trials",
            "20000",
            "--seed",
            "7",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "fidelity" in captured.out
    assert "max |exact - enumerate| = " in captured.out
    gap_line = [
        line for line in captured.out.splitlines() if "max |exact" in line
    ][0]
    gap = float(gap_line.split("=")[1].split(";")[0])
    assert gap < 1e-12


def test_protocol_sim_no_heralds_is_numerical_error(
    capsys: pytest.CaptureFixture[str],
) -> None:
    # Zero efficiency and zero dark counts produce no heralds at all, so
    # the conditional quantities are undefined: numerical-failure exit.
    code = main(
        [
            "protocol-sim",
            "--scheme",
            "one-click",
            "--p-e",
            "0.5",
            "--p-d",
            "0.0",
            "--eta",
            "0.0",
            "--trials",
            "100",
        ]
    )
    captured = capsys.readouterr()
    assert code == 3
    assert "error:" in captured.err


def test_validate_builtin_ok(capsys: pytest.CaptureFixture[str]) -> None:
    code = main(["validate", "--builtin", "electromech"])
    captured = capsys.readouterr()
    assert code == 0
    assert "validate: OK" in captured.out
    assert "oracle: closed-form row max relative deviation" in captured.out
    assert "particle-hole" in captured.out


def test_validate_model_file_with_ensemble(
    converter_path: str, capsys: pytest.CaptureFixture[str]
) -> None:
    code = main(
        ["validate", "--model", converter_path, "--ensemble", "3", "--seed", "1"]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "ensemble(3):" in captured.out
    assert "validate: OK" in captured.out


def test_validate_rejects_invalid_model(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    bad = tmp_path / "bad.json"
    text = Path(tmp_path / "ok.json")
    save_model(two_mode_converter(), text)
    data = json.loads(text.read_text())
    data["ports"][0]["rate_hz"] = -1.0
    bad.write_text(json.dumps(data))
    code = main(["validate", "--model", str(bad)])
    captured = capsys.readouterr()
    assert code == 1
    assert "rate must be positive" in captured.err


def test_malformed_json_is_config_error(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    broken = tmp_path / "broken.json"
    broken.write_text('{"bands": [,]}')
    code = main(["validate", "--model", str(broken)])
    captured = capsys.readouterr()
    assert code == 2
    assert "invalid JSON" in captured.err


def test_model_source_must_be_unique(capsys: pytest.CaptureFixture[str]) -> None:
    code = main(
        [
            "validate",
            "--builtin",
            "electromech",
            "--model",
            "whatever.json",
        ]
    )
    captured = capsys.readouterr()
    assert code == 2
    assert "exactly one model source" in captured.err


def test_set_overrides_on_model_file(
    converter_path: str, capsys: pytest.CaptureFixture[str]
) -> None:
    code = main(
        [
            "validate",
            "--model",
            converter_path,
            "--set",
            "ports.sig.rate=8e6",
            "--set",
            "ports.sig.temperature=0.1",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "validate: OK" in captured.out


def test_set_rejects_malformed_pair(capsys: pytest.CaptureFixture[str]) -> None:
    code = main(
        ["validate", "--builtin", "electromech", "--set", "gamma_wg"]
    )
    captured = capsys.readouterr()
    assert code == 2
    assert "error:" in captured.err


def test_optimize_cli_recovers_matching(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    trace_path = tmp_path / "trace.json"
    code = main(
        [
            "optimize",
            "--builtin",
            "electromech",
            "--set",
            "gamma_wg=3e5",
            "--objective",
            "max-eta",
            "--var",
            "ports.wg.rate:1e3:1e6",
            "--omega-sig",
            "5e6",
            "--budget",
            "150",
            "--seed",
            "0",
            "--out",
            str(trace_path),
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    values = _fom_lines(captured.out)
    best = float(values["best ports.wg.rate"].split()[0])
    assert abs(best - 2.5e4) / 2.5e4 < 0.01
    trace = json.loads(trace_path.read_text())
    assert trace["objective"] == "max-eta"
    assert len(trace["trace"]) == trace["n_evals"] <= 150
    assert trace["best_value"] > 0.99


def test_optimize_var_parse_error(capsys: pytest.CaptureFixture[str]) -> None:
    code = main(
        [
            "optimize",
            "--builtin",
            "electromech",
            "--objective",
            "max-eta",
            "--var",
            "ports.wg.rate:1e3",
            "--omega-sig",
            "5e6",
        ]
    )
    captured = capsys.readouterr()
    assert code == 2
    assert "PATH:LOW:HIGH" in captured.err
