from __future__ import annotations

import math

import pytest
from numpy.testing import assert_allclose

from magic_decay.errors import InputError
from magic_decay.families import (
    COUNTEREXAMPLE_WEIGHT,
    complete,
    complete_marginal,
    complete_marginal_terms,
    counterexample_limit_marginal,
    four_complete_limit_marginal,
    named_state,
    three_complete_phi,
    union_jack_patch,
)
from magic_decay.hypergraph import Hypergraph, reduced_density


def test_complete_hypergraph_edges():
    assert len(complete(5, 3).edges) == math.comb(5, 3)
    assert complete(4, 4).edge_vertices() == [(1, 2, 3, 4)]
    with pytest.raises(InputError):
        complete(3, 4)


def test_union_jack_patch_shape():
    patch = union_jack_patch()
    assert patch.n == 14
    assert len(patch.edges) == 16
    assert all(len(e) == 3 for e in patch.edge_vertices())
    touched = {v for e in patch.edge_vertices() for v in e}
    assert touched == set(range(1, 15))
    focus_hits = [len(set(e) & {1, 2, 3, 4}) for e in patch.edge_vertices()]
    assert min(focus_hits) >= 1


def test_three_complete_phi_levels():
    assert len(three_complete_phi(3, 0).edges) == 1
    assert len(three_complete_phi(3, 1).edges) == 4
    assert len(three_complete_phi(3, 2).edges) == 4
    assert len(three_complete_phi(3, 3).edges) == 7
    with pytest.raises(InputError):
        three_complete_phi(3, 4)


@pytest.mark.parametrize("n,r,k", [(6, 3, 3), (7, 3, 2), (6, 4, 3), (5, 2, 2)])
def test_complete_marginal_matches_reduced_density(n, r, k):
    terms = complete_marginal_terms(n, r, k)
    assert sum(w for w, _ in terms) == 1
    exact = reduced_density(complete(n, r), tuple(range(1, k + 1)))
    assert_allclose(complete_marginal(n, r, k).coeffs, exact.coeffs, atol=1e-12)


def test_four_complete_limit_is_an_equal_mixture():
    rho = four_complete_limit_marginal()
    assert rho.n == 3
    assert rho.trace == pytest.approx(1.0)
    assert rho.purity < 1.0


def test_counterexample_weight():
    assert COUNTEREXAMPLE_WEIGHT == pytest.approx((1 - math.exp(-2)) / 2)
    rho = counterexample_limit_marginal()
    assert rho.trace == pytest.approx(1.0)


@pytest.mark.parametrize(
    "label,edges",
    [
        ("ccz", [(1, 2, 3)]),
        ("cnz:4", [(1, 2, 3, 4)]),
        ("plus:2", []),
        ("complete:4:2", [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]),
    ],
)
def test_named_states(label, edges):
    h = named_state(label)
    assert sorted(h.edge_vertices()) == sorted(edges)


def test_named_state_uses_explicit_n():
    assert named_state("3complete", 5) == complete(5, 3)
    assert named_state("unionjack").n == 14
    assert isinstance(named_state("4complete:6"), Hypergraph)


@pytest.mark.parametrize("label", ["cnz", "bogus:3", "cnz:x"])
def test_bad_names_are_rejected(label):
    with pytest.raises(InputError):
        named_state(label)
