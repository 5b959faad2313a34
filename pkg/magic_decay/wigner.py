"""Discrete Wigner functions for odd-prime qudits and qudit hypergraph states.

Phase-space points u = (z, x) are stored at flat index ``z_index * dⁿ + x_index``
where ``index = Σ_i digit_i dⁱ`` (qudit 0 is the least significant digit).
"""
from __future__ import annotations

import cmath
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import settings
from .errors import CapacityError, InputError, NumericalError, UnsupportedError

logger = logging.getLogger(__name__)

SUPPORTED_DIMENSIONS = (3, 5, 7)
IMAGINARY_TOL = 1e-10


def _is_odd_prime(d: int) -> bool:
    return d > 2 and d % 2 == 1 and all(d % p for p in range(3, math.isqrt(d) + 1, 2))


@dataclass(frozen=True, slots=True)
class QuditSystem:
    d: int
    n: int

    def __post_init__(self) -> None:
        if not _is_odd_prime(self.d):
            raise UnsupportedError(f"d={self.d} is not an odd prime")
        if self.d not in SUPPORTED_DIMENSIONS:
            raise UnsupportedError(f"d={self.d} is outside the supported set {SUPPORTED_DIMENSIONS}")
        if self.n < 1:
            raise InputError("a qudit system needs n >= 1")

    @property
    def omega(self) -> complex:
        return cmath.exp(2j * math.pi / self.d)

    @property
    def tau(self) -> complex:
        return cmath.exp((self.d + 1) * math.pi * 1j / self.d)

    @property
    def dim(self) -> int:
        return self.d**self.n

    def check_capacity(self) -> None:
        if self.dim > settings.WIGNER_MAX_DIM:
            raise CapacityError(f"d^n = {self.dim} exceeds MAGICDECAY_WIGNER_MAX_DIM={settings.WIGNER_MAX_DIM}")

    def x_operator(self) -> np.ndarray:
        return np.roll(np.eye(self.d), 1, axis=0).astype(np.complex128)

    def z_operator(self) -> np.ndarray:
        return np.diag(self.omega ** np.arange(self.d))

    def digits(self) -> np.ndarray:
        idx = np.arange(self.dim)
        return (idx[:, None] // self.d ** np.arange(self.n)) % self.d

    def flat(self, digits: np.ndarray) -> np.ndarray:
        return np.asarray(digits) @ (self.d ** np.arange(self.n))


@dataclass(frozen=True, slots=True)
class PhasePoint:
    d: int
    z: tuple[int, ...]
    x: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.z) != len(self.x):
            raise InputError("z and x must have the same length")
        object.__setattr__(self, "z", tuple(int(v) % self.d for v in self.z))
        object.__setattr__(self, "x", tuple(int(v) % self.d for v in self.x))

    @classmethod
    def of(cls, system: QuditSystem, z: int | Sequence[int], x: int | Sequence[int]) -> "PhasePoint":
        zs = (z,) * system.n if isinstance(z, (int, np.integer)) else tuple(z)
        xs = (x,) * system.n if isinstance(x, (int, np.integer)) else tuple(x)
        if len(zs) != system.n:
            raise InputError(f"phase point needs {system.n} components")
        return cls(system.d, zs, xs)

    def index(self, system: QuditSystem) -> int:
        powers = system.d ** np.arange(system.n)
        return int(np.dot(self.z, powers)) * system.dim + int(np.dot(self.x, powers))


def _kron_all(factors: Iterable[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for factor in factors:
        # qudit 0 is the least significant digit, so it goes rightmost
        out = np.kron(factor, out)
    return out


def weyl_operator(system: QuditSystem, u: PhasePoint) -> np.ndarray:
    """T_u = ⊗ τ^{-z x} Z^z X^x."""
    x_op, z_op = system.x_operator(), system.z_operator()
    factors = [
        system.tau ** (-(zi * xi)) * np.linalg.matrix_power(z_op, zi) @ np.linalg.matrix_power(x_op, xi)
        for zi, xi in zip(u.z, u.x)
    ]
    return _kron_all(factors)


def _single_phase_point(d: int, z: int, x: int) -> np.ndarray:
    omega = cmath.exp(2j * math.pi / d)
    matrix = np.zeros((d, d), dtype=np.complex128)
    for j in range(d):
        matrix[(2 * x - j) % d, j] = omega ** ((2 * z * (x - j)) % d)
    return matrix


def phase_point_operator(system: QuditSystem, u: PhasePoint) -> np.ndarray:
    """Per-qudit factors of A_u = T_u A₀ T_u†, shape (n, d, d)."""
    return np.stack([_single_phase_point(system.d, zi, xi) for zi, xi in zip(u.z, u.x)])


def dense_phase_point(system: QuditSystem, u: PhasePoint) -> np.ndarray:
    return _kron_all(phase_point_operator(system, u))


@dataclass(slots=True)
class WignerTable:
    system: QuditSystem
    values: np.ndarray

    def value(self, u: PhasePoint) -> float:
        return float(self.values[u.index(self.system)])

    @property
    def total(self) -> float:
        return float(self.values.sum())

    @property
    def sn(self) -> float:
        """Total negative mass Σ_{W<0} |W|."""
        return float(-np.minimum(self.values, 0.0).sum())

    @property
    def negativity_bound(self) -> float:
        return rom_lb_from_sn(self.sn)

    def as_grid(self) -> np.ndarray:
        return self.values.reshape(self.system.dim, self.system.dim)


def _as_state(system: QuditSystem, state: "np.ndarray | QuditHypergraph") -> np.ndarray:
    if isinstance(state, QuditHypergraph):
        if (state.n, state.d) != (system.n, system.d):
            raise InputError("hypergraph does not match the qudit system")
        return qudit_hypergraph_state(state)
    array = np.asarray(state, dtype=np.complex128)
    if array.shape not in ((system.dim,), (system.dim, system.dim)):
        raise InputError(f"state shape {array.shape} does not match d^n = {system.dim}")
    return array


def wigner(system: QuditSystem, state: "np.ndarray | QuditHypergraph") -> WignerTable:
    """W(z,x) = d^{-n} Σ_s ω^{-2z·s} ρ[x+s, x-s], one FFT over s per x."""
    system.check_capacity()
    array = _as_state(system, state)
    pure = array.ndim == 1
    d, n, size = system.d, system.n, system.dim
    digits = system.digits()
    frequency = system.flat((2 * digits) % d)
    grid = np.empty((size, size))
    chunk = max(1, (1 << 20) // size)
    residue = 0.0
    for start in range(0, size, chunk):
        xs = np.arange(start, min(size, start + chunk))
        shifted = digits[xs][:, None, :]
        plus = system.flat((shifted + digits[None, :, :]) % d)
        minus = system.flat((shifted - digits[None, :, :]) % d)
        g = array[plus] * array[minus].conj() if pure else array[plus, minus]
        spectrum = np.fft.fftn(g.reshape((len(xs),) + (d,) * n), axes=tuple(range(1, n + 1)))
        block = spectrum.reshape(len(xs), size)[:, frequency].T / size
        residue = max(residue, float(np.max(np.abs(block.imag))))
        grid[:, xs] = block.real
    if residue > IMAGINARY_TOL:
        raise NumericalError(f"Wigner values carry imaginary residue {residue:.3g}")
    logger.debug("[Wigner] d=%d n=%d %s state, imaginary residue %.2g", d, n, "pure" if pure else "mixed", residue)
    return WignerTable(system, grid.reshape(-1))


def noisy_wigner(system: QuditSystem, state: "np.ndarray | QuditHypergraph", lam: float) -> WignerTable:
    """Wigner table of E_λ^{⊗n}(ρ), applied qudit by qudit in phase space."""
    if not 0.0 <= lam <= 1.0:
        raise InputError(f"noise rate {lam} outside [0, 1]")
    table = wigner(system, state)
    if lam == 0.0:
        return table
    d, n = system.d, system.n
    tensor = table.values.reshape((d,) * (2 * n))
    for q in range(n):
        z_axis, x_axis = n - 1 - q, 2 * n - 1 - q
        marginal = tensor.sum(axis=(z_axis, x_axis), keepdims=True)
        tensor = (1.0 - lam) * tensor + (lam / d**2) * marginal
    noisy = WignerTable(system, tensor.reshape(-1))
    logger.info("[Wigner] d=%d n=%d lambda=%g: sn=%.9f", d, n, lam, noisy.sn)
    return noisy


def max_negativity_threshold(d: int) -> float:
    """Noise rate d/(d+1) above which every noisy Wigner function is non-negative."""
    return d / (d + 1)


def witness_state(d: int) -> np.ndarray:
    """(|1⟩ - |d-1⟩)/√2, negative at the origin for every λ < d/(d+1)."""
    psi = np.zeros(d, dtype=np.complex128)
    psi[1], psi[d - 1] = 1.0, -1.0
    return psi / math.sqrt(2.0)


@dataclass(frozen=True, slots=True)
class QuditHypergraph:
    """Qudit hypergraph; edges are (vertex mask, multiplicity) with multiplicities in 1..d-1."""

    n: int
    d: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if not _is_odd_prime(self.d):
            raise UnsupportedError(f"d={self.d} is not an odd prime")
        totals: dict[int, int] = {}
        for mask, mult in self.edges:
            if mask <= 0 or mask >> self.n:
                raise InputError(f"edge mask {mask:#x} is not a nonempty subset of {self.n} vertices")
            totals[mask] = (totals.get(mask, 0) + int(mult)) % self.d
        kept = [(mask, mult) for mask, mult in totals.items() if mult]
        kept.sort(key=lambda item: tuple(i for i in range(self.n) if item[0] >> i & 1))
        object.__setattr__(self, "edges", tuple(kept))

    @classmethod
    def from_edges(cls, n: int, d: int, edges: Iterable[tuple[Iterable[int], int]]) -> "QuditHypergraph":
        masks = []
        for vertices, mult in edges:
            mask = 0
            for v in vertices:
                if not 1 <= int(v) <= n:
                    raise InputError(f"vertex {v} outside 1..{n}")
                mask |= 1 << (int(v) - 1)
            if not mask:
                raise InputError("edges must be nonempty")
            masks.append((mask, int(mult)))
        return cls(n, d, tuple(masks))

    @classmethod
    def cnz(cls, n: int, d: int, multiplicity: int = 1) -> "QuditHypergraph":
        return cls(n, d, (((1 << n) - 1, multiplicity),))

    @property
    def system(self) -> QuditSystem:
        return QuditSystem(self.d, self.n)


def qudit_hypergraph_state(hypergraph: QuditHypergraph) -> np.ndarray:
    """Amplitudes d^{-n/2} ω^{f(s)} with f(s) = Σ_e α_e Π_{i∈e} s_i mod d."""
    system = hypergraph.system
    system.check_capacity()
    digits = system.digits()
    f = np.zeros(system.dim, dtype=np.int64)
    for mask, mult in hypergraph.edges:
        cols = [i for i in range(hypergraph.n) if mask >> i & 1]
        f = (f + mult * np.prod(digits[:, cols], axis=1)) % hypergraph.d
    return system.omega**f / math.sqrt(system.dim)


def qudit_partial_trace(
    hypergraph: QuditHypergraph,
    traced: Iterable[int],
) -> list[tuple[Fraction, QuditHypergraph]]:
    """Tr_I(Ψ) as d^{|I|} equally weighted children, one per label b ∈ Z_d^I.

    An edge meeting I has its multiplicity scaled by Π_{i∈e∩I} b_i and loses the
    traced vertices; a zero product deletes it.
    """
    chosen = sorted({int(v) - 1 for v in traced})
    if not chosen or chosen[0] < 0 or chosen[-1] >= hypergraph.n:
        raise InputError("traced set must be a nonempty subset of 1..n")
    d = hypergraph.d
    if d ** len(chosen) > settings.MAX_TRACE_TERMS:
        raise CapacityError(f"{d}^{len(chosen)} trace terms exceed MAGICDECAY_MAX_TRACE_TERMS")
    kept = [v for v in range(hypergraph.n) if v not in set(chosen)]
    positions = {v: i for i, v in enumerate(kept)}
    weight = Fraction(1, d ** len(chosen))
    terms = []
    for label in itertools.product(range(d), repeat=len(chosen)):
        values = dict(zip(chosen, label))
        child_edges = []
        for mask, mult in hypergraph.edges:
            factor = mult
            rest = 0
            for v in range(hypergraph.n):
                if not mask >> v & 1:
                    continue
                if v in values:
                    factor = factor * values[v] % d
                else:
                    rest |= 1 << positions[v]
            if factor and rest:
                child_edges.append((rest, factor))
        terms.append((weight, QuditHypergraph(len(kept), d, tuple(child_edges))))
    return terms


def qutrit_cnz_W10(n: int, lam: float) -> float:
    """W at z = 1ⁿ, x = 0ⁿ for the noisy qutrit CⁿZ state (n ≡ 3 mod 4)."""
    if n < 3 or n % 4 != 3:
        raise InputError("the closed form holds for n = 3, 7, 11, ...")
    if not 0.0 <= lam <= 1.0:
        raise InputError(f"noise rate {lam} outside [0, 1]")
    scaled = (
        -0.5 * 3.0 ** ((n + 1) / 2) * (1 - lam) ** n
        + lam**n
        + 0.75 * (1 - lam / 3) ** n
        + 0.75 * (1 - 5 * lam / 3) ** n
    )
    return scaled / 3.0 ** (2 * n)


def qutrit_cnz_threshold(n: int) -> float:
    """Noise rate where the leading negative term of W(1,0) stops dominating: 1-5^{1/n}3^{-(n+1)/(2n)}."""
    if n < 1:
        raise InputError("n must be positive")
    return 1.0 - 5.0 ** (1.0 / n) * 3.0 ** (-(n + 1) / (2.0 * n))


def ub_qudit_cnz(n: int, d: int, lam: float, m_d: float) -> float:
    """1+4M_d(d-1)ⁿ(1-(d-1)λ/d)ⁿ."""
    if m_d < 1.0:
        raise InputError("M_d is a supremum of RoM values and cannot be below 1")
    if not 0.0 <= lam <= 1.0:
        raise InputError(f"noise rate {lam} outside [0, 1]")
    return 1.0 + 4.0 * m_d * ((d - 1) * (1.0 - (d - 1) * lam / d)) ** n


def qudit_cnz_crossover(d: int) -> float:
    """ub_qudit_cnz tends to 1 for λ above d(d-2)/(d-1)²."""
    return d * (d - 2) / (d - 1) ** 2


def rom_lb_from_sn(sn: float) -> float:
    if sn < -1e-12:
        raise InputError("negativity cannot be negative")
    return 1.0 + 2.0 * max(sn, 0.0)
