"""Hypergraph model, characteristic functions and exact partial-trace rules.

Vertices are 1-based in every public signature and in the text format; bit ``i``
of an edge mask or of a basis index corresponds to vertex ``i + 1``.
"""
from __future__ import annotations

import itertools
import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from . import settings
from .errors import CapacityError, InputError
from .pauli import PauliVector

if TYPE_CHECKING:
    from .wigner import QuditHypergraph

logger = logging.getLogger(__name__)


def _mask_vertices(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def _edge_key(mask: int) -> tuple[int, ...]:
    return _mask_vertices(mask)


def _vertices_mask(vertices: Iterable[int], n: int) -> int:
    mask = 0
    for vertex in vertices:
        v = int(vertex)
        if not 1 <= v <= n:
            raise InputError(f"vertex {v} outside 1..{n}")
        mask |= 1 << (v - 1)
    return mask


def _compress(mask: int, positions: dict[int, int]) -> int:
    out = 0
    for bit, new in positions.items():
        if mask >> bit & 1:
            out |= 1 << new
    return out


@dataclass(frozen=True, slots=True)
class Hypergraph:
    """Qubit hypergraph; edge multiplicities are reduced mod 2 on construction."""

    n: int
    edges: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.n <= settings.MAX_HYPERGRAPH_QUBITS:
            raise InputError(f"n={self.n} outside 0..{settings.MAX_HYPERGRAPH_QUBITS}")
        counts = Counter(int(e) for e in self.edges)
        kept = []
        for mask, count in counts.items():
            if mask <= 0 or mask >> self.n:
                raise InputError(f"edge mask {mask:#x} is not a nonempty subset of {self.n} vertices")
            if count % 2:
                kept.append(mask)
        object.__setattr__(self, "edges", tuple(sorted(kept, key=_edge_key)))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Iterable[int]]) -> "Hypergraph":
        masks = []
        for edge in edges:
            vertices = list(edge)
            if not vertices:
                raise InputError("edges must be nonempty")
            masks.append(_vertices_mask(vertices, n))
        return cls(n, tuple(masks))

    @classmethod
    def empty(cls, n: int) -> "Hypergraph":
        return cls(n, ())

    def edge_vertices(self) -> list[tuple[int, ...]]:
        return [tuple(v + 1 for v in _mask_vertices(e)) for e in self.edges]

    @property
    def max_degree(self) -> int:
        return max((bin(e).count("1") for e in self.edges), default=0)

    def is_stabilizer(self) -> bool:
        """True when every edge has degree at most 2 (a Clifford circuit on |+⟩'s)."""
        return self.max_degree <= 2

    def add_edges(self, edges: Iterable[Iterable[int]]) -> "Hypergraph":
        extra = Hypergraph.from_edges(self.n, edges)
        return Hypergraph(self.n, self.edges + extra.edges)

    def relabel(self, permutation: Sequence[int]) -> "Hypergraph":
        """Return the hypergraph with vertex ``i`` renamed to ``permutation[i - 1]``."""
        if sorted(permutation) != list(range(1, self.n + 1)):
            raise InputError("permutation must be a rearrangement of 1..n")
        positions = {i: int(p) - 1 for i, p in enumerate(permutation)}
        return Hypergraph(self.n, tuple(_compress(e, positions) for e in self.edges))

    def restrict(self, vertices: Iterable[int]) -> "Hypergraph":
        """Keep only edges meeting ``vertices``; the vertex set is unchanged."""
        mask = _vertices_mask(vertices, self.n)
        return Hypergraph(self.n, tuple(e for e in self.edges if e & mask))

    def canonical_form(self) -> "Hypergraph":
        """Lexicographically smallest relabeling; brute force over all permutations."""
        if self.n > 8:
            raise CapacityError("canonical_form enumerates n! permutations; n <= 8 supported")
        best: tuple[tuple[int, ...], ...] | None = None
        best_masks: tuple[int, ...] = ()
        for perm in itertools.permutations(range(self.n)):
            positions = dict(enumerate(perm))
            masks = sorted((_compress(e, positions) for e in self.edges), key=_edge_key)
            key = tuple(_edge_key(m) for m in masks)
            if best is None or key < best:
                best, best_masks = key, tuple(masks)
        return Hypergraph(self.n, best_masks)

    def characteristic(self) -> "CharacteristicFunction":
        return CharacteristicFunction(self.n, characteristic_table(self))


@dataclass(frozen=True, slots=True)
class CharacteristicFunction:
    """Truth table of f(x) = Σ_e Π_{i∈e} x_i mod 2, indexed by basis integer."""

    n: int
    table: np.ndarray

    def __call__(self, x: Sequence[int] | str) -> int:
        return int(self.table[_bits_to_index(x, self.n)])

    @property
    def weight(self) -> int:
        return int(self.table.sum())


@dataclass(frozen=True, slots=True)
class TraceTerm:
    weight: Fraction
    child: Hypergraph
    label: tuple[int, ...]
    vertices: tuple[int, ...]


def _bits_to_index(x: Sequence[int] | str, n: int) -> int:
    bits = [int(ch) for ch in x] if isinstance(x, str) else [int(b) for b in x]
    if len(bits) != n:
        raise InputError(f"bit string has length {len(bits)}, expected {n}")
    if any(b not in (0, 1) for b in bits):
        raise InputError("bit strings may only contain 0 and 1")
    return sum(b << i for i, b in enumerate(bits))


def characteristic_eval(hypergraph: Hypergraph, x: Sequence[int] | str) -> int:
    index = _bits_to_index(x, hypergraph.n)
    return sum(1 for e in hypergraph.edges if index & e == e) % 2


def characteristic_table(hypergraph: Hypergraph) -> np.ndarray:
    if hypergraph.n > settings.MAX_HYPERGRAPH_QUBITS:
        raise CapacityError(f"n={hypergraph.n} too large for a truth table")
    s = np.arange(1 << hypergraph.n, dtype=np.int64)
    table = np.zeros(s.shape, dtype=np.uint8)
    for e in hypergraph.edges:
        table ^= ((s & e) == e).astype(np.uint8)
    return table


def characteristic_distance(first: Hypergraph, second: Hypergraph) -> int:
    """Hamming weight of f₁+f₂."""
    if first.n != second.n:
        raise InputError("hypergraphs must have the same vertex count")
    return int(np.count_nonzero(characteristic_table(first) ^ characteristic_table(second)))


def state_vector(hypergraph: Hypergraph, *, cutoff: int | None = None) -> np.ndarray:
    limit = settings.DENSE_CUTOFF if cutoff is None else cutoff
    if hypergraph.n > limit:
        raise CapacityError(f"dense state vector for n={hypergraph.n} exceeds cutoff {limit}")
    signs = 1.0 - 2.0 * characteristic_table(hypergraph).astype(np.float64)
    return signs * 2.0 ** (-hypergraph.n / 2)


def _validate_subset(vertices: Iterable[int], n: int, *, allow_empty: bool) -> list[int]:
    chosen = sorted({int(v) for v in vertices})
    if not chosen and not allow_empty:
        raise InputError("vertex subset must be nonempty")
    for v in chosen:
        if not 1 <= v <= n:
            raise InputError(f"vertex {v} outside 1..{n}")
    return [v - 1 for v in chosen]


def partial_trace_decomposition(hypergraph: Hypergraph, traced: Iterable[int]) -> list[TraceTerm]:
    """Tr_I(Ψ) as 2^{|I|} equally weighted hypergraph states, one per label b.

    A traced vertex labeled 0 deletes its incident edges; one labeled 1 is
    removed from its edges, which stay. Edges that become empty are global
    phases and vanish; duplicates cancel mod 2.
    """
    traced0 = _validate_subset(traced, hypergraph.n, allow_empty=False)
    if 1 << len(traced0) > settings.MAX_TRACE_TERMS:
        raise CapacityError(f"2^{len(traced0)} trace terms exceed MAGICDECAY_MAX_TRACE_TERMS")
    traced_set = set(traced0)
    kept = [v for v in range(hypergraph.n) if v not in traced_set]
    positions = {v: i for i, v in enumerate(kept)}
    keep_mask = sum(1 << v for v in kept)
    weight = Fraction(1, 1 << len(traced0))
    vertices = tuple(v + 1 for v in kept)

    terms: list[TraceTerm] = []
    for label in itertools.product((0, 1), repeat=len(traced0)):
        zeros = sum(1 << v for v, b in zip(traced0, label) if b == 0)
        child_edges = []
        for e in hypergraph.edges:
            if e & zeros:
                continue
            rest = e & keep_mask
            if rest:
                child_edges.append(_compress(rest, positions))
        terms.append(
            TraceTerm(
                weight=weight,
                child=Hypergraph(len(kept), tuple(child_edges)),
                label=tuple(label),
                vertices=vertices,
            )
        )
    return terms


def _localize(hypergraph: Hypergraph, keep0: list[int]) -> tuple[Hypergraph, int]:
    """Drop edges disjoint from ``keep`` and re-index: kept vertices first, in order."""
    keep_mask = sum(1 << v for v in keep0)
    touching = [e for e in hypergraph.edges if e & keep_mask]
    support = 0
    for e in touching:
        support |= e
    others = [v for v in _mask_vertices(support & ~keep_mask)]
    order = keep0 + others
    positions = {v: i for i, v in enumerate(order)}
    local = Hypergraph(len(order), tuple(_compress(e, positions) for e in touching))
    return local, len(keep0)


def reduced_density(
    hypergraph: Hypergraph,
    keep: Iterable[int],
    *,
    dense_cutoff: int | None = None,
) -> PauliVector:
    """PauliVector of the marginal on ``keep`` (qubit j of the result is the j-th smallest kept vertex)."""
    keep0 = _validate_subset(keep, hypergraph.n, allow_empty=True)
    if not keep0:
        return PauliVector.maximally_mixed(0)
    if len(keep0) > settings.PAULI_MAX_QUBITS:
        raise CapacityError(f"marginal on {len(keep0)} qubits exceeds MAGICDECAY_PAULI_MAX_QUBITS")
    local, m = _localize(hypergraph, keep0)
    limit = settings.DENSE_CUTOFF if dense_cutoff is None else dense_cutoff
    if local.n == m:
        return PauliVector.from_state_vector(state_vector(local, cutoff=limit))
    if local.n <= limit:
        psi = state_vector(local, cutoff=limit).reshape(1 << (local.n - m), 1 << m)
        rho = psi.T @ psi.conj()
        return PauliVector.from_density(rho)

    logger.info("[Trace] %d-qubit neighbourhood above dense cutoff; summing trace terms", local.n)
    aggregated: Counter[tuple[int, ...]] = Counter()
    for term in partial_trace_decomposition(local, range(m + 1, local.n + 1)):
        aggregated[term.child.edges] += term.weight
    coeffs = np.zeros(4**m)
    for edges, weight in aggregated.items():
        child = PauliVector.from_state_vector(state_vector(Hypergraph(m, edges)))
        coeffs += float(weight) * child.coeffs
    return PauliVector(m, coeffs)


def four_qubit_scan_classes() -> list[Hypergraph]:
    """Nonempty 4-vertex hypergraphs with all edges of degree >= 3, one per S₄ orbit."""
    candidates = [0b0111, 0b1011, 0b1101, 0b1110, 0b1111]
    seen: dict[tuple[int, ...], Hypergraph] = {}
    for chosen in range(1, 1 << len(candidates)):
        edges = tuple(c for i, c in enumerate(candidates) if chosen >> i & 1)
        canonical = Hypergraph(4, edges).canonical_form()
        seen.setdefault(canonical.edges, canonical)
    return sorted(seen.values(), key=lambda h: (len(h.edges), h.max_degree, h.edges))


def parse_hypergraph_text(text: str) -> "Hypergraph | QuditHypergraph":
    """Parse ``n=<int> d=<int>`` followed by one edge per line (``1 2 3*2``)."""
    lines = [line.split("#", 1)[0].strip() for line in text.splitlines()]
    lines = [line for line in lines if line]
    if not lines:
        raise InputError("empty hypergraph description")
    header: dict[str, int] = {}
    for token in lines[0].split():
        key, sep, value = token.partition("=")
        if not sep:
            raise InputError(f"malformed header token {token!r}")
        try:
            header[key.strip().lower()] = int(value)
        except ValueError as exc:
            raise InputError(f"header value {value!r} is not an integer") from exc
    if "n" not in header:
        raise InputError("header must declare n=<int>")
    n, d = header["n"], header.get("d", 2)

    edges: list[tuple[tuple[int, ...], int]] = []
    for line in lines[1:]:
        body, _, mult = line.partition("*")
        try:
            vertices = tuple(int(tok) for tok in body.split())
            multiplicity = int(mult) if mult else 1
        except ValueError as exc:
            raise InputError(f"malformed edge line {line!r}") from exc
        if not vertices:
            raise InputError(f"edge line {line!r} lists no vertices")
        edges.append((vertices, multiplicity))

    if d == 2:
        masks = [_vertices_mask(v, n) for v, mult in edges for _ in range(mult % 2)]
        return Hypergraph(n, tuple(masks))

    from .wigner import QuditHypergraph

    return QuditHypergraph.from_edges(n, d, edges)


def load_hypergraph(path: str | Path) -> "Hypergraph | QuditHypergraph":
    return parse_hypergraph_text(Path(path).read_text(encoding="utf-8"))
