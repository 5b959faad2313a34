"""Named hypergraph families and exact mixtures for their marginals."""
from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

from .errors import InputError
from .hypergraph import Hypergraph, state_vector
from .pauli import PauliVector, mixture

# Union Jack patch: vertices 1-4 are the corners (0,0), (1,0) and the face
# centres above and below the edge between them; the rest is every triangle
# of the lattice that touches one of them.
UNION_JACK_SITES: tuple[tuple[float, float], ...] = (
    (0.0, 0.0), (1.0, 0.0), (0.5, 0.5), (0.5, -0.5),
    (0.0, 1.0), (1.0, 1.0), (0.0, -1.0), (1.0, -1.0),
    (-1.0, 0.0), (2.0, 0.0),
    (-0.5, 0.5), (-0.5, -0.5), (1.5, 0.5), (1.5, -0.5),
)

COUNTEREXAMPLE_WEIGHT = (1.0 - math.exp(-2.0)) / 2.0


def ccz() -> Hypergraph:
    return cnz(3)


def cnz(n: int) -> Hypergraph:
    if n < 1:
        raise InputError("cnz needs n >= 1")
    return Hypergraph(n, ((1 << n) - 1,))


def plus_state(n: int) -> Hypergraph:
    return Hypergraph.empty(n)


def complete(n: int, r: int) -> Hypergraph:
    """Every r-subset of the n vertices is an edge."""
    if not 1 <= r <= n:
        raise InputError(f"r-complete needs 1 <= r <= n (got r={r}, n={n})")
    edges = [sum(1 << v for v in subset) for subset in itertools.combinations(range(n), r)]
    return Hypergraph(n, tuple(edges))


def _cell_triangles(a: int, b: int) -> list[tuple[tuple[float, float], ...]]:
    center = (a + 0.5, b + 0.5)
    corners = [(a, b), (a + 1, b), (a + 1, b + 1), (a, b + 1)]
    return [(center, corners[i], corners[(i + 1) % 4]) for i in range(4)]


def union_jack_patch() -> Hypergraph:
    """14-qubit patch whose marginal on vertices 1-4 equals the full lattice's."""
    index = {site: i + 1 for i, site in enumerate(UNION_JACK_SITES)}
    focus = set(UNION_JACK_SITES[:4])
    edges = []
    for a in range(-1, 2):
        for b in range(-1, 1):
            for triangle in _cell_triangles(a, b):
                points = [(float(x), float(y)) for x, y in triangle]
                if focus.intersection(points):
                    edges.append(tuple(index[p] for p in points))
    return Hypergraph.from_edges(len(UNION_JACK_SITES), edges)


def three_complete_phi(k: int, level: int) -> Hypergraph:
    """Φ_l on k qubits: the 3-complete edges, plus all pairs (l=1), all singletons (l=2) or both (l=3)."""
    if level not in range(4):
        raise InputError("level must be 0, 1, 2 or 3")
    vertices = range(1, k + 1)
    edges = list(itertools.combinations(vertices, 3))
    if level in (1, 3):
        edges += itertools.combinations(vertices, 2)
    if level in (2, 3):
        edges += [(v,) for v in vertices]
    return Hypergraph.from_edges(k, edges)


def complete_marginal_terms(n: int, r: int, k: int) -> list[tuple[Fraction, Hypergraph]]:
    """Exact mixture for the k-qubit marginal of the n-qubit r-complete state.

    With j of the m = n-k traced qubits labelled 1, a kept t-subset survives as an
    edge iff C(j, r-t) is odd; the label class carries weight C(m, j) / 2^m.
    """
    if not 1 <= k <= n:
        raise InputError("marginal size must satisfy 1 <= k <= n")
    if not 1 <= r <= n:
        raise InputError(f"r-complete needs 1 <= r <= n (got r={r}, n={n})")
    m = n - k
    weights: Counter[tuple[int, ...]] = Counter()
    for j in range(m + 1):
        edges = []
        for t in range(1, min(r, k) + 1):
            if math.comb(j, r - t) % 2:
                edges += [sum(1 << v for v in s) for s in itertools.combinations(range(k), t)]
        child = Hypergraph(k, tuple(edges))
        weights[child.edges] += Fraction(math.comb(m, j), 1 << m)
    return [(w, Hypergraph(k, edges)) for edges, w in weights.items()]


def complete_marginal(n: int, r: int, k: int) -> PauliVector:
    terms = complete_marginal_terms(n, r, k)
    return mixture(
        (float(w) for w, _ in terms),
        (PauliVector.from_state_vector(state_vector(child)) for _, child in terms),
    )


def three_complete_mixture(k: int, weights: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)) -> PauliVector:
    if abs(sum(weights) - 1.0) > 1e-12 or min(weights) < 0:
        raise InputError("mixture weights must be a probability vector")
    states = [PauliVector.from_state_vector(state_vector(three_complete_phi(k, level))) for level in range(4)]
    return mixture(weights, states)


def four_complete_limit_marginal() -> PauliVector:
    """Large-n limit of the 3-qubit marginal of the 4-complete state: equal mixture of
    |+³⟩, CCZ, all-CZ and CCZ·CZs·Zs."""
    states = []
    for j in range(4):
        edges = []
        for t in (1, 2, 3):
            if math.comb(j, 4 - t) % 2:
                edges += [sum(1 << v for v in s) for s in itertools.combinations(range(3), t)]
        states.append(PauliVector.from_state_vector(state_vector(Hypergraph(3, tuple(edges)))))
    return mixture([0.25] * 4, states)


def counterexample_limit_marginal(q: float = COUNTEREXAMPLE_WEIGHT) -> PauliVector:
    """(1-q)|+³⟩⟨+³| + q|CCZ⟩⟨CCZ|."""
    plus = PauliVector.from_state_vector(state_vector(plus_state(3)))
    target = PauliVector.from_state_vector(state_vector(ccz()))
    return mixture([1.0 - q, q], [plus, target])


def named_state(text: str, n: int | None = None) -> Hypergraph:
    """``ccz``, ``plus``, ``cnz:5``, ``3complete:5``, ``4complete:6``, ``complete:6:3`` or ``unionjack``."""
    name, *args = text.strip().lower().split(":")
    try:
        values = [int(a) for a in args]
    except ValueError as exc:
        raise InputError(f"malformed state name {text!r}") from exc
    size = values[0] if values else n
    if name == "ccz":
        return ccz()
    if name == "unionjack":
        return union_jack_patch()
    if size is None:
        raise InputError(f"state {name!r} needs a qubit count, e.g. {name}:4")
    if name == "plus":
        return plus_state(size)
    if name == "cnz":
        return cnz(size)
    if name in ("3complete", "4complete"):
        return complete(size, int(name[0]))
    if name == "complete" and len(values) == 2:
        return complete(values[0], values[1])
    raise InputError(f"unknown state {text!r}")
