from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from magic_decay.errors import CapacityError, InputError
from magic_decay.hypergraph import (
    Hypergraph,
    characteristic_distance,
    characteristic_eval,
    four_qubit_scan_classes,
    load_hypergraph,
    parse_hypergraph_text,
    partial_trace_decomposition,
    reduced_density,
    state_vector,
)
from magic_decay.pauli import PauliVector, mixture
from magic_decay.wigner import QuditHypergraph


def _restricted_coeffs(full: PauliVector, keep: tuple[int, ...]) -> np.ndarray:
    """Tr((P ⊗ I) ρ) for every Pauli P on the kept qubits, read off the full vector."""
    m = len(keep)
    out = np.zeros(4**m)
    for z in range(1 << m):
        for x in range(1 << m):
            big_z = sum(((z >> j) & 1) << (keep[j] - 1) for j in range(m))
            big_x = sum(((x >> j) & 1) << (keep[j] - 1) for j in range(m))
            out[(z << m) + x] = full.coeffs[(big_z << full.n) + big_x]
    return out


def test_multiplicities_reduce_mod_two():
    h = Hypergraph.from_edges(3, [(1, 2), (2, 1), (1, 2, 3)])
    assert h.edge_vertices() == [(1, 2, 3)]
    assert Hypergraph.from_edges(2, [(1, 2), (1, 2)]).edges == ()


def test_vertices_outside_range_are_rejected():
    with pytest.raises(InputError):
        Hypergraph.from_edges(3, [(1, 4)])
    with pytest.raises(InputError):
        Hypergraph.from_edges(3, [()])


def test_characteristic_function_of_ccz():
    ccz = Hypergraph.from_edges(3, [(1, 2, 3)])
    assert characteristic_eval(ccz, "111") == 1
    assert characteristic_eval(ccz, "110") == 0
    assert ccz.characteristic().weight == 1
    assert characteristic_distance(ccz, Hypergraph.empty(3)) == 1


def test_state_vector_signs_follow_characteristic_function():
    ccz = Hypergraph.from_edges(3, [(1, 2, 3)])
    psi = state_vector(ccz)
    expected = np.full(8, 8**-0.5)
    expected[7] *= -1
    assert_allclose(psi, expected)


def test_state_vector_respects_cutoff():
    with pytest.raises(CapacityError):
        state_vector(Hypergraph.empty(6), cutoff=5)


def test_stabilizer_detection():
    assert Hypergraph.from_edges(4, [(1, 2), (3,), (2, 4)]).is_stabilizer()
    assert not Hypergraph.from_edges(4, [(1, 2, 4)]).is_stabilizer()


def test_canonical_form_is_relabel_invariant(make_hypergraph):
    h = make_hypergraph(5, 4)
    moved = h.relabel([3, 5, 1, 2, 4])
    assert moved.canonical_form() == h.canonical_form()


def test_restrict_keeps_edges_meeting_vertices():
    h = Hypergraph.from_edges(5, [(1, 2, 3), (4, 5), (3, 4)])
    assert h.restrict([1]).edge_vertices() == [(1, 2, 3)]
    assert sorted(h.restrict([4]).edge_vertices()) == [(3, 4), (4, 5)]


def test_trace_terms_have_uniform_weights():
    h = Hypergraph.from_edges(4, [(1, 2, 3), (2, 3, 4)])
    terms = partial_trace_decomposition(h, [4])
    assert [t.weight for t in terms] == [Fraction(1, 2), Fraction(1, 2)]
    assert terms[0].child.edge_vertices() == [(1, 2, 3)]
    assert sorted(terms[1].child.edge_vertices()) == [(1, 2, 3), (2, 3)]
    assert terms[1].vertices == (1, 2, 3)


@pytest.mark.parametrize("keep", [(1,), (2, 5), (1, 3, 6), (2, 3, 4, 6)])
def test_reduced_density_matches_full_state(make_hypergraph, keep):
    h = make_hypergraph(6, 5)
    full = PauliVector.from_state_vector(state_vector(h))
    reduced = reduced_density(h, keep)
    assert_allclose(reduced.coeffs, _restricted_coeffs(full, keep), atol=1e-12)


def test_trace_term_mixture_matches_reduced_density(make_hypergraph):
    h = make_hypergraph(7, 6)
    terms = partial_trace_decomposition(h, [5, 6, 7])
    rebuilt = mixture(
        (float(t.weight) for t in terms),
        (PauliVector.from_state_vector(state_vector(t.child)) for t in terms),
    )
    assert_allclose(rebuilt.coeffs, reduced_density(h, (1, 2, 3, 4)).coeffs, atol=1e-12)


def test_trace_term_fallback_matches_dense_path(make_hypergraph):
    h = make_hypergraph(8, 8)
    dense = reduced_density(h, (1, 2))
    streamed = reduced_density(h, (1, 2), dense_cutoff=2)
    assert_allclose(streamed.coeffs, dense.coeffs, atol=1e-12)


def test_four_qubit_scan_has_nine_classes():
    classes = four_qubit_scan_classes()
    assert len(classes) == 9
    assert all(h.max_degree >= 3 for h in classes)
    assert len({h.edges for h in classes}) == 9


def test_parse_qubit_text():
    h = parse_hypergraph_text("n=4 d=2\n# comment\n1 2 3\n2 4*3\n1 4*2\n")
    assert isinstance(h, Hypergraph)
    assert h.edge_vertices() == [(1, 2, 3), (2, 4)]


def test_parse_qudit_text():
    h = parse_hypergraph_text("n=3 d=3\n1 2 3*2\n1 2\n")
    assert isinstance(h, QuditHypergraph)
    assert (0b111, 2) in h.edges
    assert (0b011, 1) in h.edges


@pytest.mark.parametrize(
    "text",
    ["", "d=2\n1 2", "n=x\n1", "n=3\n1 a", "n=3\n1 5"],
)
def test_parse_rejects_malformed_text(text):
    with pytest.raises(InputError):
        parse_hypergraph_text(text)


def test_load_hypergraph_from_file(tmp_path):
    path = tmp_path / "ccz.txt"
    path.write_text("n=3 d=2\n1 2 3\n", encoding="utf-8")
    assert load_hypergraph(path) == Hypergraph(3, (0b111,))


@pytest.mark.parametrize("keep", [(1, 2, 4), (2, 5), (1, 3, 5, 6), (6,)])
@pytest.mark.parametrize("perm", [(2, 3, 1, 6, 4, 5), (6, 5, 4, 3, 2, 1), (1, 4, 2, 5, 3, 6)])
def test_marginals_follow_vertex_relabeling(make_hypergraph, keep, perm):
    h = make_hypergraph(6, 7)
    moved_keep = sorted(perm[v - 1] for v in keep)
    marginal = reduced_density(h, keep)
    moved = reduced_density(h.relabel(perm), moved_keep)
    positions = [moved_keep.index(perm[v - 1]) for v in keep]
    assert_allclose(marginal.permute(positions).coeffs, moved.coeffs, atol=1e-12)
