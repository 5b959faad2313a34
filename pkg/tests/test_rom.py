from __future__ import annotations

import importlib

import numpy as np
import pytest
from numpy.testing import assert_allclose

from magic_decay.errors import InputError, SolverError, UnsupportedError
from magic_decay.families import ccz, cnz, plus_state
from magic_decay.hypergraph import Hypergraph, four_qubit_scan_classes, state_vector
from magic_decay.pauli import (
    NoiseModel,
    PauliVector,
    apply_noise,
    closed_form_D_cnz,
    label_index,
    single_qubit_stabilizer,
)
from magic_decay.rom import (
    CompositeLpBackend,
    HighsBackend,
    RomResult,
    as_state,
    capacity_vanishing_point,
    diagonal_gate,
    magic_capacity_details,
    magic_capacity_diagonal,
    rom,
    rom_many,
    rom_noisy,
    threshold,
)
from magic_decay.stabilizer import StabilizerLabel, state_from_label

CCZ_ROM = 23 / 9

# one entry per S4 class of 4-qubit hypergraphs with edges of degree >= 3
FOUR_QUBIT_ROM = {
    frozenset({0b0111}): CCZ_ROM,
    frozenset({0b0111, 0b1011}): CCZ_ROM,
    frozenset({0b0111, 0b1011, 0b1101}): CCZ_ROM,
    frozenset({0b0111, 0b1011, 0b1101, 0b1110}): CCZ_ROM,
    frozenset({0b1111}): 3.5,
    frozenset({0b0111, 0b1111}): 3.5,
    frozenset({0b0111, 0b1011, 0b1111}): 3.5,
    frozenset({0b0111, 0b1011, 0b1101, 0b1111}): 3.5,
    frozenset({0b0111, 0b1011, 0b1101, 0b1110, 0b1111}): 3.5,
}


class _FailingBackend:
    name = "failing"

    def solve(self, matrix, target):
        raise SolverError("iteration limit", iterations=3, backend=self.name)


def test_ccz_rom_and_certificate(store):
    rho = as_state(ccz())
    result = rom(rho, store)
    assert result.value == pytest.approx(CCZ_ROM, abs=1e-6)
    assert result.duality_gap <= 1e-6
    assert result.reconstruction_error <= 1e-7
    assert rho.inner(result.witness) == pytest.approx(result.value, abs=1e-6)
    columns = store.get(3).column_matrix()
    assert np.max(np.abs(columns.T @ (result.witness.coeffs / 8))) <= 1 + 1e-7


def test_split_rebuilds_the_state(store):
    rho = as_state(ccz())
    result = rom(rho, store)
    a, sigma, tau = result.split()
    assert 2 * a + 1 == pytest.approx(result.value, abs=1e-7)
    assert sum(sigma.values()) == pytest.approx(1.0)
    assert sum(tau.values()) == pytest.approx(1.0)
    basis = store.get(3)
    rebuilt = sum((a + 1) * w * basis.state(i).coeffs for i, w in sigma.items())
    rebuilt = rebuilt - sum(a * w * basis.state(i).coeffs for i, w in tau.items())
    assert_allclose(rebuilt, rho.coeffs, atol=1e-7)


def test_stabilizer_inputs_have_unit_rom(store):
    member = rom(as_state(plus_state(3)), store)
    assert member.value == 1.0
    assert member.backend == "member"
    mixed = rom(PauliVector.maximally_mixed(2), store)
    assert mixed.value == pytest.approx(1.0, abs=1e-7)


def test_invalid_state_is_rejected(store):
    coeffs = np.zeros(16)
    coeffs[0] = 2.0
    with pytest.raises(InputError):
        rom(PauliVector(2, coeffs), store)


def test_full_depolarization_removes_magic(store):
    assert rom_noisy(ccz(), NoiseModel.depolarizing(1.0), store).value == pytest.approx(1.0, abs=1e-7)


def test_rom_profile_is_sandwiched_and_monotone(store):
    grid = np.linspace(0.0, 1.0, 11)
    states = [apply_noise(as_state(ccz()), NoiseModel.depolarizing(lam)) for lam in grid]
    values = [r.value for r in rom_many(states, store, threads=2)]
    assert all(b <= a + 1e-7 for a, b in zip(values, values[1:]))
    for lam, value in zip(grid, values):
        assert closed_form_D_cnz(3, lam) <= value + 1e-7
        assert value <= 1 + 4 * (1 - lam / 2) ** 3 + 1e-7


def test_rom_many_keeps_order(store):
    states = [as_state(ccz()), as_state(plus_state(3)), as_state(cnz(2).add_edges([(1,)]))]
    results = rom_many(states, store, threads=3)
    assert [r.n for r in results] == [3, 3, 2]
    assert results[0].value == pytest.approx(CCZ_ROM, abs=1e-6)
    assert results[1].value == 1.0


def test_composite_backend_falls_back(store):
    backend = CompositeLpBackend([_FailingBackend(), HighsBackend("highs-ipm")])
    result = rom(as_state(ccz()), store, backend=backend)
    assert result.value == pytest.approx(CCZ_ROM, abs=1e-6)
    assert result.backend == "highs-ipm"


def test_composite_backend_reports_total_iterations(store):
    backend = CompositeLpBackend([_FailingBackend(), _FailingBackend()])
    with pytest.raises(SolverError) as info:
        rom(as_state(ccz()), store, backend=backend)
    assert info.value.iterations == 6


def test_ccz_threshold_is_one_third(store):
    result = threshold(ccz(), "depolarizing", 0.0, 1e-4, store)
    assert result.lambda_star == pytest.approx(1 / 3, abs=1e-3)
    assert result.evaluations <= 25
    lo, hi = result.bracket
    assert hi - lo <= 1e-4


def test_threshold_of_stabilizer_state_is_zero(store):
    result = threshold(plus_state(2), basis=store)
    assert result.lambda_star == 0.0
    assert result.evaluations == 1


def test_threshold_shrinks_with_epsilon(store):
    strict = threshold(ccz(), epsilon=0.0, tol=1e-3, basis=store).lambda_star
    loose = threshold(ccz(), epsilon=0.5, tol=1e-3, basis=store).lambda_star
    assert loose < strict


def test_threshold_with_monotonicity_scan(store):
    result = threshold(ccz(), epsilon=0.0, tol=1e-3, basis=store, check_monotone=True, grid_points=9, threads=2)
    assert result.monotone
    assert result.lambda_star == pytest.approx(1 / 3, abs=2e-3)


def test_threshold_rejects_bad_arguments(store):
    with pytest.raises(InputError):
        threshold(ccz(), epsilon=-0.1, basis=store)
    with pytest.raises(InputError):
        threshold(ccz(), tol=0.0, basis=store)


def test_diagonal_gates():
    name, diag = diagonal_gate("ccz")
    assert name == "ccz"
    assert_allclose(diag, [1, 1, 1, 1, 1, 1, 1, -1])
    assert diagonal_gate("cnz:4")[1].size == 16
    _, from_matrix = diagonal_gate(np.diag([1, 1j]))
    assert_allclose(from_matrix, [1, 1j])
    with pytest.raises(UnsupportedError):
        diagonal_gate(np.array([[0, 1], [1, 0]]))
    with pytest.raises(InputError):
        diagonal_gate("swap")
    with pytest.raises(InputError):
        diagonal_gate(np.array([1.0, 2.0]))


def test_clifford_gate_has_unit_capacity(store):
    details = magic_capacity_details("cz", basis=store, threads=2)
    assert details.inputs == 60
    assert details.value == pytest.approx(1.0, abs=1e-7)


@pytest.mark.slow
def test_ccz_capacity_is_bounded(store):
    value = magic_capacity_diagonal("ccz", basis=store)
    assert CCZ_ROM - 1e-6 <= value < 5.0


@pytest.mark.slow
def test_dephased_ccz_capacity_vanishing_point(store):
    result = capacity_vanishing_point("ccz", noise="dephasing", basis=store, tol=1e-3)
    assert result.lambda_star == pytest.approx(0.645, abs=0.01)


@pytest.mark.slow
def test_four_qubit_classes(store):
    classes = four_qubit_scan_classes()
    assert {frozenset(h.edges) for h in classes} == set(FOUR_QUBIT_ROM)
    for h in classes:
        assert rom(as_state(h), store).value == pytest.approx(FOUR_QUBIT_ROM[frozenset(h.edges)], abs=1e-6)


@pytest.mark.slow
def test_four_qubit_scan_threshold_ordering(store):
    lambdas = {h.edges: threshold(h, tol=1e-3, basis=store).lambda_star for h in four_qubit_scan_classes()}
    complete3 = Hypergraph.from_edges(4, [(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)])
    assert lambdas[complete3.edges] == pytest.approx(max(lambdas.values()), abs=2e-3)


def test_state_from_hypergraph_is_pure():
    rho = as_state(cnz(3))
    assert rho.purity == pytest.approx(1.0)
    assert np.abs(rho.to_density()).sum() == pytest.approx(8.0)
    with pytest.raises(InputError):
        as_state(state_vector(ccz()))


def _t_state():
    return PauliVector.from_state_vector(np.array([1.0, np.exp(1j * np.pi / 4)]) / np.sqrt(2))


def _random_pure(rng, n):
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return PauliVector.from_state_vector(psi / np.linalg.norm(psi))


STABILIZER_FACTORS = {
    "zero": single_qubit_stabilizer("0"),
    "minus": single_qubit_stabilizer("-"),
    "plus_i": single_qubit_stabilizer("+i"),
    "bell": state_from_label(StabilizerLabel(2, basis=(0b11,))),
}


@pytest.mark.parametrize("factor", sorted(STABILIZER_FACTORS))
@pytest.mark.parametrize("lam", [0.0, 0.2])
def test_appending_a_stabilizer_factor_keeps_rom(store, factor, lam):
    magic = apply_noise(_t_state(), NoiseModel.depolarizing(lam))
    sigma = STABILIZER_FACTORS[factor]
    alone = rom(magic, store).value
    if lam == 0.0:
        assert alone == pytest.approx(np.sqrt(2), abs=1e-6)
    assert rom(magic.tensor(sigma), store).value == pytest.approx(alone, abs=1e-6)
    assert rom(sigma.tensor(magic), store).value == pytest.approx(alone, abs=1e-6)


def test_rom_is_convex(store, rng):
    for _ in range(4):
        first, second = _random_pure(rng, 2), _random_pure(rng, 2)
        p = float(rng.uniform(0.2, 0.8))
        mixed = PauliVector(2, p * first.coeffs + (1 - p) * second.coeffs)
        bound = p * rom(first, store).value + (1 - p) * rom(second, store).value
        assert rom(mixed, store).value <= bound + 1e-7


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("size", [2, 5])
def test_stabilizer_mixtures_have_unit_rom(store, rng, n, size):
    basis = store.get(n)
    chosen = rng.choice(len(basis), size=size, replace=False)
    weights = rng.dirichlet(np.ones(size))
    mixture = PauliVector(n, weights @ np.asarray(basis.vectors, dtype=np.float64)[chosen])
    assert rom(mixture, store).value == pytest.approx(1.0, abs=1e-7)


DUALITY_CASES = {
    "ccz": lambda rng: as_state(ccz()),
    "ccz_dep_0.15": lambda rng: apply_noise(as_state(ccz()), NoiseModel.depolarizing(0.15)),
    "ccz_deph_0.3": lambda rng: apply_noise(as_state(ccz()), NoiseModel.dephasing(0.3)),
    "t_state": lambda rng: _t_state(),
    "t_plus": lambda rng: _t_state().tensor(single_qubit_stabilizer("+")),
    "random_2q": lambda rng: _random_pure(rng, 2),
    "random_3q": lambda rng: _random_pure(rng, 3),
}


@pytest.mark.parametrize("case", sorted(DUALITY_CASES))
def test_primal_and_dual_values_agree(store, rng, case):
    rho = DUALITY_CASES[case](rng)
    result = rom(rho, store)
    assert abs(result.duality_gap) <= 1e-6
    assert rho.inner(result.witness) == pytest.approx(result.value, abs=1e-6)
    columns = store.get(rho.n).column_matrix()
    assert np.max(np.abs(columns.T @ (result.witness.coeffs / (1 << rho.n)))) <= 1 + 1e-7
    assert result.reconstruction_error <= 1e-7


def _bumpy_rom(rho, basis=None, *, backend=None):
    # |0> under depolarizing noise keeps Z with weight 1 - lam
    lam = 1.0 - rho.coeffs[label_index("Z")]
    value = 2.0 if lam < 0.1 else 3.0 if lam < 0.2 else 1.0
    return RomResult(rho.n, value, {}, None, value, 0.0, "stub")


def test_threshold_rescans_when_rom_rises_with_noise(store, monkeypatch):
    monkeypatch.setattr(importlib.import_module("magic_decay.rom"), "rom", _bumpy_rom)
    zero = single_qubit_stabilizer("0")
    result = threshold(zero, "depolarizing", tol=1e-3, basis=store, grid_points=9, threads=1)
    assert not result.monotone
    assert result.lambda_star == pytest.approx(0.2, abs=1e-3)
    assert result.evaluations > 9


def test_threshold_keeps_a_monotone_profile_without_rescan(store):
    result = threshold(ccz(), tol=1e-3, basis=store)
    assert result.monotone
    assert result.evaluations == 11
