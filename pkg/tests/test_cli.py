import json
from decimal import Decimal

import pytest

from conftest import FIXTURES, check_csv, check_json, fci_energy
from hivqe import reporting
from hivqe.cli import main

H2 = str(FIXTURES / "h2_0.74.fcidump")
H4 = str(FIXTURES / "h4_1.50.fcidump")
H6 = str(FIXTURES / "h6_2.00.fcidump")


def test_run_fci_matches_golden(tmp_path):
    assert main(["run", "--input", H2, "--method", "fci", "--out", str(tmp_path)]) == 0
    summary = check_json(tmp_path / "summary.json", "summary")
    assert summary["energy_ha"] == pytest.approx(fci_energy("h2_0.74"), abs=1e-12)
    check_csv(tmp_path / "trace.csv", "energy_trace")


def test_run_hci_huge_epsilon_reports_one_determinant(tmp_path):
    assert main(["run", "--input", H4, "--method", "hci", "--epsilon", "1e6", "--out", str(tmp_path)]) == 0
    assert check_json(tmp_path / "summary.json", "summary")["n_dets"] == 1


def test_run_hivqe_rerun_is_byte_identical(tmp_path):
    args = ["run", "--input", H4, "--method", "hivqe", "--seed", "3", "--shots", "500", "--noise", "0.01"]
    assert main(args + ["--out", str(tmp_path / "a")]) in (0, 2)
    assert main(args + ["--out", str(tmp_path / "b")]) in (0, 2)
    for name in ("trace.csv", "diagnostics.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    check_csv(tmp_path / "a" / "trace.csv", "hivqe_trace")
    check_csv(tmp_path / "a" / "diagnostics.csv", "hivqe_diagnostics")
    check_json(tmp_path / "a" / "summary.json", "summary")


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"method": "hci", "input": H4, "hci": {"epsilon": 1e6}}))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert json.loads((tmp_path / "a" / "summary.json").read_text())["n_dets"] == 1
    assert main(["run", "--config", str(cfg), "--epsilon", "1e-6", "--out", str(tmp_path / "b")]) == 0
    assert json.loads((tmp_path / "b" / "summary.json").read_text())["n_dets"] > 1


def test_dump_hamiltonian(tmp_path):
    assert main(["run", "--input", H2, "--method", "fci", "--dump-hamiltonian", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "hamiltonian.txt").read_text().splitlines()
    assert lines and all(len(x.split()) == 3 for x in lines)


@pytest.mark.parametrize("argv", [
    ["run", "--input", "/nonexistent.fcidump", "--method", "fci"],
    ["run", "--method", "fci"],
])
def test_run_input_errors_exit_1(tmp_path, argv, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


def test_run_bad_fcidump_exits_1(tmp_path):
    bad = tmp_path / "bad.fcidump"
    bad.write_text("&FCI NORB=2 &END\n0.1 3 1 1 1\n")
    assert main(["run", "--input", str(bad), "--method", "fci", "--out", str(tmp_path)]) == 1


def test_pes_two_points(tmp_path):
    out = tmp_path / "pes"
    rc = main(["pes", "--method", "fci", "--point", f"1.00={FIXTURES / 'h6_1.00.fcidump'}",
               "--point", f"2.00={H6}", "--out", str(out)])
    assert rc == 0
    rows = check_csv(out / "pes.csv", "pes")
    assert [r["label"] for r in rows] == ["1.00", "2.00"]
    assert float(rows[0]["energy_ha"]) == pytest.approx(fci_energy("h6_1.00"), abs=1e-10)
    assert float(rows[1]["energy_ha"]) == pytest.approx(fci_energy("h6_2.00"), abs=1e-10)


def test_pes_failed_point_is_recorded(tmp_path):
    out = tmp_path / "pes"
    rc = main(["pes", "--method", "fci", "--point", f"0.74={H2}", "--point", "9.9=/missing.fcidump",
               "--out", str(out)])
    assert rc == 0
    rows = check_csv(out / "pes.csv", "pes")
    assert rows[1]["status"].startswith("error") and rows[1]["energy_ha"] == ""


def test_pes_all_failed_exits_1(tmp_path):
    rc = main(["pes", "--method", "fci", "--point", "1=/missing1", "--point", "2=/missing2",
               "--out", str(tmp_path)])
    assert rc == 1


@pytest.mark.parametrize("points", [["1.0=a", "1.00=b"], ["1.0=a"]])
def test_pes_input_errors(tmp_path, points):
    argv = ["pes", "--method", "fci", "--out", str(tmp_path)]
    for p in points:
        argv += ["--point", p]
    assert main(argv) == 1


def test_pes_scan_csv(tmp_path):
    scan = tmp_path / "scan.csv"
    scan.write_text(f"label,path\n2.00,{H6}\n0.74,{H2}\n")
    assert main(["pes", "--method", "fci", "--scan", str(scan), "--out", str(tmp_path / "o")]) == 0
    rows = check_csv(tmp_path / "o" / "pes.csv", "pes")
    assert [r["label"] for r in rows] == ["0.74", "2.00"]


def _pes(tmp_path, e_eq, e_ext):
    path = tmp_path / "pes.csv"
    reporting.write_pes(path, [
        reporting.PESRecord(Decimal("1.10"), e_eq, 100, "hci"),
        reporting.PESRecord(Decimal("3.00"), e_ext, 100, "hci"),
    ])
    return path


def test_dissociation_from_reported_energies(tmp_path, capsys):
    path = _pes(tmp_path, -109.281122, -108.961496)
    assert main(["dissociation", "--pes", str(path), "--eq", "1.10", "--ext", "3.00",
                 "--out", str(tmp_path / "d.json")]) == 0
    rep = check_json(tmp_path / "d.json", "dissociation")
    assert rep["e_diss_ha"] == pytest.approx(0.319626, abs=1e-9)
    assert rep["e_diss_ev"] == pytest.approx(8.70, abs=0.01)
    text = capsys.readouterr().out
    assert "0.319626 Ha" in text and "8.70 eV" in text


def test_dissociation_equal_and_sign(tmp_path):
    rep = reporting.dissociation(reporting.read_pes(_pes(tmp_path, -1.0, -1.0)), "1.10", "3.00")
    assert rep["e_diss_ev"] == 0.0
    rep = reporting.dissociation(reporting.read_pes(_pes(tmp_path, -1.0, -0.9)), "1.10", "3.00")
    assert rep["e_diss_ha"] > 0


def test_dissociation_missing_label(tmp_path):
    path = _pes(tmp_path, -1.0, -0.9)
    assert main(["dissociation", "--pes", str(path), "--eq", "1.10", "--ext", "2.50"]) == 1


def _summary(tmp_path, name, method, energy, n_dets, fingerprint="f" * 64):
    d = tmp_path / name
    d.mkdir()
    (d / "summary.json").write_text(json.dumps({
        "method": method, "energy_ha": energy, "n_dets": n_dets, "fingerprint": fingerprint,
    }))
    return str(d)


def test_compare_identical_runs(tmp_path):
    a = _summary(tmp_path, "a", "hci", -1.5, 40)
    b = _summary(tmp_path, "b", "hci", -1.5, 40)
    assert main(["compare", a, b, "--out", str(tmp_path / "cmp")]) == 0
    rows = check_csv(tmp_path / "cmp" / "compare.csv", "compare")
    assert all(float(r["delta_e_mha"]) == 0.0 and float(r["dets_ratio"]) == 1.0 for r in rows)


def test_compare_rendering_of_large_runs(tmp_path):
    rows = reporting.compare([
        ("casci", {"method": "fci", "energy_ha": -116.605609, "n_dets": 240_374_016, "fingerprint": "x"}),
        ("hci", {"method": "hci", "energy_ha": -116.604878, "n_dets": 56_665_658, "fingerprint": "x"}),
    ])
    text = reporting.render_compare(rows)
    line = text.splitlines()[2]
    assert "56,665,658" in line and "0.7310" in line


def test_compare_fingerprint_mismatch(tmp_path):
    a = _summary(tmp_path, "a", "hci", -1.5, 40)
    b = _summary(tmp_path, "b", "hci", -1.5, 40, fingerprint="0" * 64)
    assert main(["compare", a, b, "--out", str(tmp_path / "cmp")]) == 1


def test_compare_real_runs(tmp_path):
    for method in ("fci", "hci"):
        assert main(["run", "--input", H4, "--method", method, "--epsilon", "1e-3",
                     "--out", str(tmp_path / method)]) == 0
    assert main(["compare", str(tmp_path / "fci"), str(tmp_path / "hci"),
                 "--out", str(tmp_path / "cmp")]) == 0
    rows = check_csv(tmp_path / "cmp" / "compare.csv", "compare")
    assert rows[0]["method"] == "fci" and float(rows[0]["dets_ratio"]) == 1.0
    assert float(rows[1]["delta_e_mha"]) >= 0
