from __future__ import annotations

import numpy as np
import pytest

from magic_decay.certificates import load_certificates
from magic_decay.errors import InputError
from magic_decay.families import ccz
from magic_decay.hypergraph import state_vector
from magic_decay.pauli import NoiseModel, PauliVector, apply_noise
from magic_decay.rom import verify_certificates


def test_table_shape():
    table = load_certificates()
    assert table.n == 3
    assert table.names == tuple(f"A{i}" for i in range(1, 10))
    assert table.dual.shape == (64, 9)


def test_trivial_witness_is_identity():
    witness = load_certificates().witness("A9")
    expected = np.zeros(64)
    expected[0] = 8.0
    assert np.allclose(witness.coeffs, expected)


def test_noiseless_ccz_is_certified_by_first_witness():
    rho = PauliVector.from_state_vector(state_vector(ccz()))
    alphas = load_certificates().alphas(rho)
    assert int(np.argmax(alphas)) == 0
    assert alphas[0] == pytest.approx(23 / 9, abs=5e-4)


def test_fully_depolarized_ccz_is_certified_by_identity():
    rho = apply_noise(PauliVector.from_state_vector(state_vector(ccz())), NoiseModel.depolarizing(1.0))
    assert max(load_certificates().alphas(rho)) == pytest.approx(1.0, abs=5e-4)


def test_table_reproduces_lp_on_grid(store):
    report = verify_certificates(grid=np.linspace(0.0, 1.0, 21), basis=store)
    assert report.ok
    assert len(report.rows) == 21
    assert max(report.feasibility.values()) <= 1.0 + 5e-4
    assert all(row.difference <= 5e-4 for row in report.rows)


def test_malformed_table_is_rejected(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("label,A1\n004,0.5\n", encoding="utf-8")
    with pytest.raises(InputError):
        load_certificates(bad)
    overlap = tmp_path / "overlap.csv"
    overlap.write_text("label,A1\n001,0.5\n100,0.5\n", encoding="utf-8")
    with pytest.raises(InputError):
        load_certificates(overlap)
