"""Analytic upper and lower bounds on noisy robustness of magic.

Everything here stays cheap at large n; LP calls are only made for reduced
states on at most four qubits.
"""
from __future__ import annotations

import itertools
import logging
import math
from typing import Callable, Iterable, Sequence

import numpy as np

from . import families, settings
from .errors import CapacityError, InputError, UnsupportedError
from .hypergraph import Hypergraph, partial_trace_decomposition, reduced_density, state_vector
from .pauli import (
    NoiseModel,
    PauliVector,
    closed_form_D_3complete,
    closed_form_D_cnz,
    noisy_stabilizer_norm,
    popcount,
    second_order_nonlinearity,
)
from .rom import default_store, resolve_basis, rom, rom_noisy, threshold
from .stabilizer import BasisStore, StabilizerBasis
from .structures import BoundProfile, LocalMagicRow, Provenance, SweepRow

logger = logging.getLogger(__name__)

MAX_ADDED_EDGES = 20
LP_MARGINAL_QUBITS = 4

MarginalOracle = Callable[[Hypergraph, tuple[int, ...]], float]


def _power(base: float, exponent: float) -> float:
    """base**exponent evaluated in the log domain once it could overflow."""
    if base <= 0.0:
        return 0.0 if exponent > 0 else 1.0
    if exponent <= 512:
        return base**exponent
    log_value = exponent * math.log(base)
    return math.inf if log_value > 709.0 else math.exp(log_value)


def _check_rate(lam: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise InputError(f"noise rate {lam} outside [0, 1]")


def rom_range_bound(k: int) -> float:
    """√(2^k(2^k+1)), an upper bound on the RoM of any k-qubit state."""
    return math.sqrt((1 << k) * ((1 << k) + 1))


def marginal_is_stabilizer(hypergraph: Hypergraph, keep: Iterable[int]) -> bool:
    """True when every edge meets ``keep`` in at most two vertices."""
    mask = sum(1 << (v - 1) for v in keep)
    return all(bin(e & mask).count("1") <= 2 for e in hypergraph.edges)


def lp_marginal_oracle(basis: BasisStore | None = None) -> MarginalOracle:
    store = basis or default_store()

    def oracle(hypergraph: Hypergraph, keep: tuple[int, ...]) -> float:
        if len(keep) > LP_MARGINAL_QUBITS:
            raise CapacityError(f"no exact RoM for a {len(keep)}-qubit marginal")
        return rom(reduced_density(hypergraph, keep), store).value

    return oracle


def ub_convexity(
    hypergraph: Hypergraph,
    lam: float,
    oracle: MarginalOracle | None = None,
    *,
    basis: BasisStore | None = None,
) -> float:
    """Σ_I (1-λ)^{n-|I|} λ^{|I|} R(Tr_I ρ), grouping subsets by the kept set."""
    _check_rate(lam)
    n = hypergraph.n
    if n > settings.MAX_HYPERGRAPH_QUBITS - 4:
        raise CapacityError(f"convexity bound enumerates 2^{n} subsets")
    lookup = oracle or lp_marginal_oracle(basis)
    cache: dict[tuple[int, ...], float] = {}
    total = 0.0
    for size in range(n + 1):
        weight = _power(1.0 - lam, size) * _power(lam, n - size)
        if weight == 0.0:
            continue
        for keep in itertools.combinations(range(1, n + 1), size):
            if size == 0 or marginal_is_stabilizer(hypergraph, keep):
                value = 1.0
            else:
                local = hypergraph.restrict(keep)
                key = (local.edges, keep)
                if key not in cache:
                    cache[key] = lookup(local, keep)
                value = cache[key]
            total += weight * value
    return total


def ub_convexity_threshold_ccz(epsilon: float) -> float:
    """λ*_ε ≤ 1-(9ε/14)^{1/3}."""
    if epsilon < 0:
        raise InputError("epsilon must be non-negative")
    return max(0.0, 1.0 - (9.0 * epsilon / 14.0) ** (1.0 / 3.0))


def ub_general(n: int, lam: float) -> float:
    _check_rate(lam)
    return _power(2.0 - lam, n) + 0.5 * _power((1.0 + lam) / 2.0, n)


def ub_cnz(n: int, lam: float) -> float:
    if n < 2:
        raise InputError("ub_cnz needs n >= 2")
    _check_rate(lam)
    return 1.0 + 4.0 * _power(1.0 - lam / 2.0, n)


def ub_cnz_threshold(n: int, epsilon: float) -> float:
    """λ*_ε ≤ 2(1-(ε/4)^{1/n}), clipped to [0, 1]."""
    if epsilon < 0:
        raise InputError("epsilon must be non-negative")
    return min(1.0, max(0.0, 2.0 * (1.0 - (epsilon / 4.0) ** (1.0 / n))))


def _noisy_rom(psi: Hypergraph, lam: float, basis: BasisStore | StabilizerBasis | None) -> float:
    if psi.is_stabilizer() or lam >= 1.0:
        return 1.0
    if psi.n > LP_MARGINAL_QUBITS:
        raise CapacityError(f"R(E(Ψ)) for n={psi.n} needs an explicit base value")
    return rom_noisy(psi, NoiseModel.depolarizing(lam), basis).value


def cpsi(
    psi: Hypergraph,
    *,
    basis: BasisStore | None = None,
    override: float | None = None,
) -> float:
    """max over traced sets I and labels s of R(Ψ^{(I,s)}), Ψ itself included."""
    if override is not None:
        return float(override)
    if psi.is_stabilizer():
        return 1.0
    if psi.n > LP_MARGINAL_QUBITS:
        raise CapacityError(f"C_Ψ for n={psi.n} needs an override value")
    children: dict[tuple[int, tuple[int, ...]], Hypergraph] = {(psi.n, psi.canonical_form().edges): psi}
    for size in range(1, psi.n):
        for traced in itertools.combinations(range(1, psi.n + 1), size):
            for term in partial_trace_decomposition(psi, traced):
                child = term.child.canonical_form()
                children.setdefault((child.n, child.edges), child)
    best = 1.0
    for child in children.values():
        if not child.is_stabilizer():
            best = max(best, rom_noisy(child, NoiseModel.depolarizing(0.0), basis).value)
    logger.info("[Bounds] C_psi over %d distinct children: %.9f", len(children), best)
    return best


def _edge_masks(n: int, edges: Iterable[Iterable[int] | int]) -> list[int]:
    masks = []
    for edge in edges:
        if isinstance(edge, (int, np.integer)):
            masks.append(int(edge))
        else:
            vertices = tuple(edge)
            if not vertices:
                raise InputError("added edges must be nonempty")
            masks.append(Hypergraph.from_edges(n, [vertices]).edges[0])
    if any(m >> n for m in masks):
        raise InputError(f"added edge mask exceeds {n} vertices")
    if len(set(masks)) != len(masks) or 0 in masks:
        raise InputError("added edges must be distinct and nonempty")
    return masks


def edge_addition_bound(
    psi: Hypergraph,
    added: Sequence[Iterable[int] | int],
    lam: float,
    c_psi: float | None = None,
    *,
    base_rom: float | None = None,
    basis: BasisStore | None = None,
) -> float:
    """R(E(Ψ)) + C_Ψ Σ_{∅≠J} (5^{|J|}+1)(1-λ/2)^{|∪_{j∈J} e_j|}."""
    _check_rate(lam)
    masks = _edge_masks(psi.n, added)
    if len(masks) > MAX_ADDED_EDGES:
        raise CapacityError(f"{len(masks)} added edges exceed the cap of {MAX_ADDED_EDGES}")
    base = _noisy_rom(psi, lam, basis) if base_rom is None else float(base_rom)
    if not masks:
        return base
    constant = cpsi(psi, basis=basis) if c_psi is None else float(c_psi)
    unions = np.zeros(1, dtype=np.int64)
    sizes = np.zeros(1, dtype=np.int64)
    for mask in masks:
        unions = np.concatenate([unions, unions | mask])
        sizes = np.concatenate([sizes, sizes + 1])
    unions, sizes = unions[1:], sizes[1:]
    decay = 1.0 - lam / 2.0
    terms = (5.0 ** sizes + 1.0) * np.array([_power(decay, int(w)) for w in popcount(unions)])
    return base + constant * float(terms.sum())


def ub_3complete(n: int, lam: float) -> float:
    _check_rate(lam)
    return 1.0 + 2.0 * _power(2.0 - (2.0 - 2.0**-0.5) * lam, n)


def _first_crossing(function: Callable[[float], float], level: float, tol: float = 1e-10) -> float:
    """Smallest λ in [0,1] with function(λ) ≤ level for a non-increasing function."""
    if function(0.0) <= level:
        return 0.0
    if function(1.0) > level:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if function(mid) <= level:
            hi = mid
        else:
            lo = mid
    return hi


def lb_threshold_3complete(n: int, epsilon: float = 0.0) -> float:
    """Lower bound on λ*_ε from the stabilizer norm (odd n)."""
    return _first_crossing(lambda lam: closed_form_D_3complete(n, lam), 1.0 + epsilon)


def ub_threshold_3complete(n: int, epsilon: float) -> float:
    if epsilon <= 0:
        raise InputError("the 3-complete upper bound only yields a threshold for epsilon > 0")
    return _first_crossing(lambda lam: ub_3complete(n, lam), 1.0 + epsilon)


def local_magic_3complete_ub(n: int, k: int) -> float:
    """M_K(Γ_n) ≤ 1+2^{1+3K/2-n/2}."""
    if not 1 <= k <= n:
        raise InputError("marginal size must satisfy 1 <= K <= n")
    return 1.0 + 2.0 ** (1.0 + 1.5 * k - n / 2.0)


def stabilizer_mixture_check_3complete(
    k: int,
    weights: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25),
    *,
    basis: BasisStore | StabilizerBasis | None = None,
) -> bool:
    if not 1 <= k <= LP_MARGINAL_QUBITS:
        raise CapacityError("the mixture check runs an LP; K <= 4")
    value = rom(families.three_complete_mixture(k, weights), basis).value
    logger.info("[Bounds] 3-complete mixture K=%d weights=%s: RoM %.9f", k, weights, value)
    return value <= 1.0 + settings.REPORT_TOL


def near_n_edge_bound(
    psi: Hypergraph | float,
    degrees: Sequence[int],
    lam: float,
    *,
    n: int | None = None,
    c: int | None = None,
    basis: BasisStore | None = None,
) -> float:
    """R(E(Ψ)) + Σ_i 4·2^{n-m_i}(1-λ/2)ⁿ for added edges of degree m_i ≥ n-c."""
    _check_rate(lam)
    if isinstance(psi, Hypergraph):
        size = psi.n
        base = _noisy_rom(psi, lam, basis)
    else:
        if n is None:
            raise InputError("n is required when the base RoM is given as a number")
        size, base = n, float(psi)
    for m in degrees:
        if not 1 <= m <= size:
            raise InputError(f"edge degree {m} outside 1..{size}")
        if c is not None and m < size - c:
            raise InputError(f"edge degree {m} is below n-c = {size - c}")
    envelope = _power(1.0 - lam / 2.0, size)
    return base + sum(4.0 * 2.0 ** (size - m) * envelope for m in degrees)


def nonlinearity_bound(hypergraph: Hypergraph) -> float:
    """1+4χ(f), from the distance to the nearest quadratic (stabilizer) state."""
    return 1.0 + 4.0 * second_order_nonlinearity(hypergraph)


def distillation_copy_lb(n: int, lam: float, target_rom: float) -> int:
    """Smallest K with (1+4(1-λ/2)ⁿ)^K ≥ target_rom."""
    if target_rom <= 1.0:
        return 0
    per_copy = math.log1p(4.0 * _power(1.0 - lam / 2.0, n))
    if per_copy <= 0.0:
        raise UnsupportedError("no finite number of copies reaches the target")
    return math.ceil(math.log(target_rom) / per_copy - 1e-12)


def distance_constant(b: float, a: float, k: int) -> float:
    """C′ = (b-a)/√(2^K(2^K+1)): trace distance between R ≥ b and R ≤ a states."""
    if not b > a >= 1.0:
        raise InputError("distance constant needs b > a >= 1")
    return (b - a) / rom_range_bound(k)


def local_magic_threshold_lb(m_k: float, k: int, epsilon: float = 0.0) -> float:
    """λ*_ε ≥ 1-(1-C′/3)^{1/K} with b = M_K and a = 1+ε; zero when M_K ≤ 1+ε."""
    if m_k <= 1.0 + epsilon:
        return 0.0
    constant = distance_constant(m_k, 1.0 + epsilon, k)
    return 1.0 - (1.0 - constant / 3.0) ** (1.0 / k)


def cnz_marginal_bounds(n: int) -> tuple[float, float]:
    """(D, UB) for the CⁿZ three-qubit marginal: 1+7/2ⁿ and 1+(14/9)2^{3-n}."""
    if n < 3:
        raise InputError("the CⁿZ marginal bounds need n >= 3")
    return 1.0 + 7.0 / 2.0**n, 1.0 + (14.0 / 9.0) * 2.0 ** (3 - n)


def ub_qudit_cnz_marginal(n: int, d: int, m_d: float) -> float:
    """1+4M_d d³((d-1)/d)ⁿ."""
    if m_d < 1.0:
        raise InputError("M_d is a supremum of RoM values and cannot be below 1")
    return 1.0 + 4.0 * m_d * d**3 * _power((d - 1) / d, n)


_FAMILY_SPECIFIC = {
    "ccz": ("ub_cnz", lambda n, lam: ub_cnz(n, lam)),
    "cnz": ("ub_cnz", lambda n, lam: ub_cnz(n, lam)),
    "3complete": ("ub_3complete", lambda n, lam: ub_3complete(n, lam)),
    "4complete": ("ub_general", lambda n, lam: ub_general(n, lam)),
    "custom": ("ub_general", lambda n, lam: ub_general(n, lam)),
}


def _lower_bound(family: str, hypergraph: Hypergraph, lam: float, psi: np.ndarray | None) -> tuple[str, float | None]:
    n = hypergraph.n
    if family in ("ccz", "cnz"):
        return "closed_form_D_cnz", closed_form_D_cnz(n, lam)
    if family == "3complete" and n % 2:
        return "closed_form_D_3complete", closed_form_D_3complete(n, lam)
    if psi is None:
        return "unavailable", None
    return "noisy_stabilizer_norm", noisy_stabilizer_norm(psi, lam)


def bound_profile(
    family: str,
    n: int,
    grid: Sequence[float],
    *,
    hypergraph: Hypergraph | None = None,
    basis: BasisStore | None = None,
    exact: bool = True,
    lower_only: bool = False,
) -> BoundProfile:
    """One BoundProfile row per λ: stabilizer norm, convexity and family bounds, and the LP when n ≤ 4."""
    if family not in _FAMILY_SPECIFIC:
        raise InputError(f"unknown family {family!r}")
    if family == "custom":
        if hypergraph is None:
            raise InputError("custom sweeps need a hypergraph")
        target = hypergraph
    elif family == "ccz":
        target = families.ccz()
    elif family == "cnz":
        target = families.cnz(n)
    else:
        target = families.complete(n, int(family[0]))
    size = target.n
    psi = state_vector(target) if size <= settings.NORM_MAX_QUBITS else None
    specific_tag, specific = _FAMILY_SPECIFIC[family]
    with_lp = exact and not lower_only and size <= LP_MARGINAL_QUBITS

    rows: list[SweepRow] = []
    lb_tag = "unavailable"
    convexity_tag = "unavailable"
    for lam in grid:
        lb_tag, lb = _lower_bound(family, target, lam, psi)
        row = SweepRow(lam=float(lam), lb_D=lb)
        if not lower_only:
            row.ub_family_specific = specific(size, lam) if size >= 2 else None
            if size <= LP_MARGINAL_QUBITS or target.is_stabilizer():
                try:
                    row.ub_convexity = ub_convexity(target, lam, basis=basis)
                    convexity_tag = "ub_convexity"
                except CapacityError:
                    row.ub_convexity = None
        if with_lp:
            row.rom_exact = rom_noisy(target, NoiseModel.depolarizing(lam), basis).value
        rows.append(row)
    logger.info("[Bounds] %s n=%d: %d grid points (LP %s)", family, size, len(rows), "on" if with_lp else "off")

    formulas = {"lb_D": lb_tag, "ub_convexity": convexity_tag, "ub_family_specific": specific_tag}
    if with_lp:
        formulas["rom_exact"] = "lp"
    checksum = resolve_basis(size, basis).checksum if with_lp else None
    return BoundProfile(
        family=family,
        n=size,
        rows=rows,
        provenance=Provenance(formulas=formulas, basis_checksum=checksum),
    )


def _marginal_row(
    name: str,
    n: int,
    state: PauliVector,
    *,
    m_k_bound: float | None,
    basis: BasisStore | None,
    tol: float,
) -> LocalMagicRow:
    value = rom(state, basis).value
    lam_star = threshold(state, "depolarizing", 0.0, tol, basis).lambda_star
    lam_lb = local_magic_threshold_lb(value, state.n)
    consistent = not (value > 1.0 + settings.REPORT_TOL and lam_star <= 0.0)
    return LocalMagicRow(
        name=name,
        n=n,
        k=state.n,
        marginal_rom=value,
        m_k_bound=m_k_bound,
        lambda_star=lam_star,
        lambda_lb=lam_lb,
        consistent=consistent,
    )


DEFAULT_LOCAL_SAMPLES = ("cnz:10", "4complete", "counterexample", "3complete:9:3")


def local_magic_prop_check(
    samples: Sequence[str] = DEFAULT_LOCAL_SAMPLES,
    *,
    basis: BasisStore | None = None,
    tol: float = 1e-3,
) -> list[LocalMagicRow]:
    """Marginal RoM, the marginal's own threshold and the distance bound for each sample.

    ``unionjack``, ``cnz:<n>``, ``4complete``, ``counterexample`` and
    ``3complete:<n>:<K>`` are understood.
    """
    rows: list[LocalMagicRow] = []
    for sample in samples:
        name, *args = sample.lower().split(":")
        if name == "unionjack":
            patch = families.union_jack_patch()
            state = reduced_density(patch, (1, 2, 3, 4))
            rows.append(_marginal_row(sample, patch.n, state, m_k_bound=None, basis=basis, tol=tol))
        elif name == "cnz":
            size = int(args[0]) if args else 10
            d_value, upper = cnz_marginal_bounds(size)
            rows.append(
                LocalMagicRow(
                    name=sample,
                    n=size,
                    k=3,
                    marginal_D=d_value,
                    m_k_bound=upper,
                    note="LP value lies between marginal_D and m_k_bound",
                )
            )
        elif name in ("4complete", "counterexample"):
            if name == "4complete":
                state = families.four_complete_limit_marginal()
            else:
                state = families.counterexample_limit_marginal()
            row = _marginal_row(sample, 0, state, m_k_bound=None, basis=basis, tol=tol)
            row.note = "large-n limit of the marginal"
            rows.append(row)
        elif name == "3complete" and len(args) == 2:
            size, k = int(args[0]), int(args[1])
            state = families.complete_marginal(size, 3, k)
            bound = local_magic_3complete_ub(size, k)
            rows.append(_marginal_row(sample, size, state, m_k_bound=bound, basis=basis, tol=tol))
        else:
            raise InputError(f"unknown local-magic sample {sample!r}")
    for row in rows:
        if not row.consistent:
            logger.warning("[Bounds] %s has marginal RoM above 1 but a zero threshold", row.name)
    return rows
