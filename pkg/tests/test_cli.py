from __future__ import annotations

import csv
import io
import json

import pytest

from magic_decay.cli import main


@pytest.fixture
def run(store, capsys):
    def invoke(*argv):
        code = main([*argv, "--basis-cache", str(store.cache_dir)])
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return invoke


def _rows(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def test_rom_of_ccz(run):
    code, out, _ = run("rom", "--state", "ccz")
    assert code == 0
    (row,) = _rows(out)
    assert float(row["value"]) == pytest.approx(23 / 9, abs=1e-6)
    assert "provenance" not in row


def test_rom_as_json(run):
    code, out, _ = run("rom", "--state", "ccz", "--noise", "dep:1.0", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["value"] == pytest.approx(1.0, abs=1e-7)
    assert payload["provenance"]["formulas"] == {"value": "lp"}


def test_threshold_of_stabilizer_state(run):
    code, out, _ = run("threshold", "--state", "plus", "-n", "2")
    assert code == 0
    (row,) = _rows(out)
    assert float(row["lambda_star"]) == 0.0


def test_sweep_large_cnz_without_lp(run):
    code, out, _ = run("sweep", "--family", "cnz", "--n", "20", "--points", "3")
    assert code == 0
    assert "# family=cnz" in out
    rows = _rows(out)
    assert [float(r["lambda"]) for r in rows] == [0.0, 0.5, 1.0]
    assert all(r["rom_exact"] == "" for r in rows)
    assert "basis_checksum" not in out


def test_sweep_over_several_sizes(run):
    code, out, _ = run("sweep", "--family", "3complete", "--n", "3..5", "--points", "2", "--lower-only")
    assert code == 0
    rows = _rows(out)
    assert sorted({r["n"] for r in rows}) == ["3", "4", "5"]


def test_wigner_negativity(run):
    code, out, _ = run("wigner", "--d", "3", "--cnz", "--n", "3", "--lam", "0,0.75")
    assert code == 0
    first, last = _rows(out)
    assert float(first["rom_lb"]) == pytest.approx(4.5555, abs=1e-3)
    assert float(last["sn"]) == pytest.approx(0.0, abs=1e-9)


def test_enumerate(run):
    code, out, _ = run("enumerate", "-n", "2")
    assert code == 0
    assert "60 states" in out
    assert "sha256:" in out


def test_verify_certificates(run):
    code, out, _ = run("verify-certificates", "--points", "5")
    assert code == 0
    assert "ok=True" in out


def test_local_magic_sample(run):
    code, out, _ = run("local-magic", "--sample", "cnz:10")
    assert code == 0
    (row,) = _rows(out)
    assert float(row["marginal_D"]) == pytest.approx(1 + 7 / 1024)


def test_output_file(run, tmp_path):
    target = tmp_path / "reports" / "rom.csv"
    code, out, _ = run("rom", "--state", "plus", "-n", "3", "--output", str(target))
    assert code == 0
    assert "Written to" in out
    (row,) = _rows(target.read_text(encoding="utf-8"))
    assert float(row["value"]) == 1.0


@pytest.mark.parametrize(
    "argv,code",
    [
        (("rom", "--state", "bogus:3"), "E_INPUT"),
        (("rom", "--state", "cnz:6"), "E_CAPACITY"),
        (("sweep", "--family", "ccz", "--start", "1.5"), "E_INPUT"),
        (("sweep", "--family", "cnz"), "E_INPUT"),
        (("wigner", "--d", "4", "--cnz"), "E_UNSUPPORTED"),
        (("threshold", "--state", "ccz", "--tol", "0"), "E_INPUT"),
    ],
)
def test_errors_are_reported_with_codes(run, argv, code):
    status, out, err = run(*argv)
    assert status == 2
    assert err.strip().splitlines()[-1].startswith(f"{code}:")


def test_threshold_json_carries_provenance(run, store):
    code, out, _ = run("threshold", "--state", "plus", "-n", "2", "--format", "json")
    assert code == 0
    (payload,) = json.loads(out)
    provenance = payload["provenance"]
    assert provenance["basis_checksum"] == store.get(2).checksum
    assert provenance["formulas"] == {"lambda_star": "bisection"}
    assert provenance["backend"] == "highs-ds+highs-ipm"


def test_wigner_upper_bound_records_m_d(run):
    code, out, _ = run("wigner", "--cnz", "--n", "3", "--lam", "0,0.5", "--m-d", "1.5")
    assert code == 0
    assert "# m_d=1.5" in out
    first, second = _rows(out)
    assert float(first["rom_ub"]) == pytest.approx(1 + 4 * 1.5 * 2**3)
    assert float(second["rom_ub"]) == pytest.approx(1 + 4 * 1.5 * (2 * (1 - 2 * 0.5 / 3)) ** 3)
    assert float(first["rom_lb"]) <= float(first["rom_ub"])

    code, out, _ = run("wigner", "--cnz", "--n", "3", "--m-d", "2", "--format", "json")
    assert code == 0
    (row,) = json.loads(out)
    assert row["provenance"]["m_d"] == 2.0
    assert row["provenance"]["formulas"] == {"rom_ub": "ub_qudit_cnz"}


def test_wigner_without_bound_leaves_it_empty(run):
    code, out, _ = run("wigner", "--cnz", "--n", "3")
    assert code == 0
    (row,) = _rows(out)
    assert row["rom_ub"] == ""
    assert "m_d" not in out


def test_capacity_of_a_clifford_gate(run):
    code, out, _ = run("capacity", "--gate", "cz", "--dephasing-scan")
    assert code == 0
    (row,) = _rows(out)
    assert float(row["value"]) == pytest.approx(1.0, abs=1e-7)
    assert int(row["inputs"]) == 60
    assert row["n"] == "2"
    assert float(row["vanishing_point"]) == 0.0


def test_capacity_with_noise_as_json(run):
    code, out, _ = run("capacity", "--gate", "cz", "--noise", "deph:0.5", "--format", "json")
    assert code == 0
    (payload,) = json.loads(out)
    assert payload["noise"] == "dephasing:0.5"
    assert payload["vanishing_point"] is None
    assert payload["value"] == pytest.approx(1.0, abs=1e-7)


@pytest.mark.slow
def test_dephased_ccz_capacity_scan(run):
    code, out, _ = run("capacity", "--gate", "ccz", "--dephasing-scan", "--tol", "1e-2")
    assert code == 0
    (row,) = _rows(out)
    assert float(row["vanishing_point"]) == pytest.approx(0.645, abs=0.02)
