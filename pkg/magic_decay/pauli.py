"""Pauli-basis operator algebra: coefficient vectors, noise channels and the stabilizer norm.

A ``PauliVector`` stores Tr(P ρ) for every Hermitian Pauli P_(z,x) at flat index
``z * 2**n + x``; bit ``q`` of ``z`` and ``x`` belongs to qubit ``q``. The single-qubit
factor for (z_q, x_q) is I, X, Z or Y for (0,0), (0,1), (1,0), (1,1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from . import settings
from .errors import CapacityError, InputError, UnsupportedError

if TYPE_CHECKING:
    from .hypergraph import CharacteristicFunction, Hypergraph

_MINUS_I_POWERS = np.array([1.0, -1.0j, -1.0, 1.0j])
_LETTERS = {(0, 0): "I", (0, 1): "X", (1, 0): "Z", (1, 1): "Y"}
_LETTER_BITS = {v: k for k, v in _LETTERS.items()}


@lru_cache(maxsize=1)
def _bit_table() -> np.ndarray:
    values = np.arange(1 << 16)
    table = np.zeros(1 << 16, dtype=np.int64)
    for shift in range(16):
        table += (values >> shift) & 1
    return table


def popcount(values: np.ndarray | int) -> np.ndarray:
    v = np.asarray(values, dtype=np.int64)
    table = _bit_table()
    return table[v & 0xFFFF] + table[(v >> 16) & 0xFFFF] + table[(v >> 32) & 0xFFFF]


@lru_cache(maxsize=16)
def _walsh(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return 1.0 - 2.0 * (popcount(idx[:, None] & idx[None, :]) % 2)


@lru_cache(maxsize=16)
def _phase_matrix(n: int) -> np.ndarray:
    """(-i)^{|z∧x|} indexed [z, x]."""
    idx = np.arange(1 << n)
    return _MINUS_I_POWERS[popcount(idx[:, None] & idx[None, :]) % 4]


@lru_cache(maxsize=16)
def weight_table(n: int) -> np.ndarray:
    """Pauli weight popcount(z|x) for every flat index."""
    idx = np.arange(1 << n)
    return popcount(idx[:, None] | idx[None, :]).reshape(-1)


def fwht(values: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard transform along the last axis (length a power of two)."""
    data = np.array(values, copy=True)
    size = data.shape[-1]
    lead = data.shape[:-1]
    h = 1
    while h < size:
        data = data.reshape(*lead, size // (2 * h), 2, h)
        first, second = data[..., 0, :], data[..., 1, :]
        data = np.stack((first + second, first - second), axis=-2).reshape(*lead, size)
        h *= 2
    return data


def _qubits_for_dim(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim <= 0 or 1 << n != dim:
        raise InputError(f"dimension {dim} is not a power of two")
    return n


def pauli_coefficients_batch(states: np.ndarray) -> np.ndarray:
    """Pauli coefficients of a batch of pure states, shape (batch, 4**n)."""
    batch = np.atleast_2d(np.asarray(states, dtype=np.complex128))
    count, dim = batch.shape
    n = _qubits_for_dim(dim)
    idx = np.arange(dim)
    shifted = idx[:, None] ^ idx[None, :]
    overlaps = batch.conj()[:, None, :] * batch[:, shifted]
    spectrum = overlaps @ _walsh(n)
    coeffs = spectrum.transpose(0, 2, 1) * _phase_matrix(n)[None, :, :]
    return coeffs.real.reshape(count, dim * dim)


def _check_cap(n: int) -> None:
    if n > settings.PAULI_MAX_QUBITS:
        raise CapacityError(f"Pauli vectors are capped at {settings.PAULI_MAX_QUBITS} qubits (got {n})")


@dataclass(frozen=True, slots=True)
class PauliVector:
    n: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.array(self.coeffs, dtype=np.float64)
        if arr.shape != (4**self.n,):
            raise InputError(f"expected {4**self.n} coefficients for n={self.n}, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def maximally_mixed(cls, n: int) -> "PauliVector":
        coeffs = np.zeros(4**n)
        coeffs[0] = 1.0
        return cls(n, coeffs)

    @classmethod
    def from_state_vector(cls, psi: np.ndarray) -> "PauliVector":
        vector = np.asarray(psi, dtype=np.complex128).reshape(-1)
        n = _qubits_for_dim(vector.size)
        _check_cap(n)
        return cls(n, pauli_coefficients_batch(vector)[0])

    @classmethod
    def from_density(cls, rho: np.ndarray) -> "PauliVector":
        matrix = np.asarray(rho, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InputError("density matrix must be square")
        dim = matrix.shape[0]
        n = _qubits_for_dim(dim)
        _check_cap(n)
        idx = np.arange(dim)
        shifted = idx[:, None] ^ idx[None, :]
        diagonals = matrix[idx[None, :], shifted]
        spectrum = diagonals @ _walsh(n)
        coeffs = spectrum.T * _phase_matrix(n).conj()
        return cls(n, coeffs.real.reshape(-1))

    @classmethod
    def from_label_map(cls, n: int, values: dict[str, float]) -> "PauliVector":
        coeffs = np.zeros(4**n)
        for label, value in values.items():
            coeffs[label_index(label)] = value
        return cls(n, coeffs)

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def trace(self) -> float:
        return float(self.coeffs[0])

    @property
    def purity(self) -> float:
        return float(np.dot(self.coeffs, self.coeffs)) / self.dim

    def to_density(self) -> np.ndarray:
        dim = self.dim
        idx = np.arange(dim)
        shifted = idx[:, None] ^ idx[None, :]
        weighted = self.coeffs.reshape(dim, dim) * _phase_matrix(self.n)
        diagonals = (_walsh(self.n) @ weighted) / dim
        rho = np.zeros((dim, dim), dtype=np.complex128)
        rho[idx[:, None], shifted] = diagonals
        return rho

    def inner(self, other: "PauliVector") -> float:
        """Tr(A B) for the operators behind the two vectors."""
        if other.n != self.n:
            raise InputError("qubit counts differ")
        return float(np.dot(self.coeffs, other.coeffs)) / self.dim

    def tensor(self, other: "PauliVector") -> "PauliVector":
        """self ⊗ other, with self on the low qubits."""
        _check_cap(self.n + other.n)
        low = self.coeffs.reshape(self.dim, self.dim)
        high = other.coeffs.reshape(other.dim, other.dim)
        joint = np.einsum("ac,bd->abcd", high, low).reshape(self.dim * other.dim, -1)
        return PauliVector(self.n + other.n, joint.reshape(-1))

    def permute(self, positions: Sequence[int]) -> "PauliVector":
        """Move qubit ``j`` to position ``positions[j]``."""
        if sorted(positions) != list(range(self.n)):
            raise InputError("positions must be a permutation of 0..n-1")
        idx = np.arange(self.dim)
        moved = np.zeros_like(idx)
        for j, p in enumerate(positions):
            moved |= ((idx >> j) & 1) << p
        out = np.empty_like(self.coeffs)
        out[(moved[:, None] * self.dim + moved[None, :]).reshape(-1)] = self.coeffs
        return PauliVector(self.n, out)

    def key(self, decimals: int = 9) -> bytes:
        return np.round(self.coeffs, decimals).tobytes()

    def label(self, index: int) -> str:
        return pauli_label(index, self.n)


def mixture(weights: Iterable[float], vectors: Iterable[PauliVector]) -> PauliVector:
    pairs = list(zip(weights, vectors))
    if not pairs:
        raise InputError("mixture needs at least one component")
    n = pairs[0][1].n
    total = np.zeros(4**n)
    for weight, vector in pairs:
        if vector.n != n:
            raise InputError("mixture components must share n")
        total += float(weight) * vector.coeffs
    return PauliVector(n, total)


def pauli_label(index: int, n: int) -> str:
    z, x = divmod(int(index), 1 << n)
    return "".join(_LETTERS[(z >> q & 1, x >> q & 1)] for q in range(n))


def label_index(label: str) -> int:
    n = len(label)
    z = x = 0
    for q, letter in enumerate(label.upper()):
        if letter not in _LETTER_BITS:
            raise InputError(f"unknown Pauli letter {letter!r}")
        bz, bx = _LETTER_BITS[letter]
        z |= bz << q
        x |= bx << q
    return (z << n) + x


def _as_mask(value: int | str | Sequence[int]) -> int:
    if isinstance(value, (int, np.integer)):
        return int(value)
    bits = [int(ch) for ch in value]
    return sum(b << i for i, b in enumerate(bits))


def pauli_weight(z: int | str | Sequence[int], x: int | str | Sequence[int]) -> int:
    return bin(_as_mask(z) | _as_mask(x)).count("1")


SINGLE_QUBIT_STABILIZERS = {
    "0": {"I": 1.0, "Z": 1.0},
    "1": {"I": 1.0, "Z": -1.0},
    "+": {"I": 1.0, "X": 1.0},
    "-": {"I": 1.0, "X": -1.0},
    "+i": {"I": 1.0, "Y": 1.0},
    "-i": {"I": 1.0, "Y": -1.0},
}


def single_qubit_stabilizer(name: str) -> PauliVector:
    try:
        return PauliVector.from_label_map(1, SINGLE_QUBIT_STABILIZERS[name])
    except KeyError as exc:
        raise InputError(f"unknown single-qubit stabilizer {name!r}") from exc


_NOISE_ALIASES = {
    "dep": "depolarizing",
    "depolarizing": "depolarizing",
    "deph": "dephasing",
    "dephasing": "dephasing",
    "rep": "replacement",
    "replacement": "replacement",
}


@dataclass(frozen=True, slots=True)
class NoiseModel:
    kind: str
    rate: float
    reference: PauliVector | None = None

    def __post_init__(self) -> None:
        if self.kind not in {"depolarizing", "dephasing", "replacement"}:
            raise InputError(f"unknown noise kind {self.kind!r}")
        if not 0.0 <= self.rate <= 1.0:
            raise InputError(f"noise rate {self.rate} outside [0, 1]")
        if self.kind == "replacement":
            ref = self.reference
            if ref is None or ref.n != 1:
                raise InputError("replacement noise needs a single-qubit reference state")
            magnitudes = sorted(np.abs(np.round(ref.coeffs, 12)))
            if abs(ref.coeffs[0] - 1.0) > 1e-12 or magnitudes != [0.0, 0.0, 1.0, 1.0]:
                raise InputError("replacement reference must be a single-qubit stabilizer state")

    @classmethod
    def depolarizing(cls, rate: float) -> "NoiseModel":
        return cls("depolarizing", float(rate))

    @classmethod
    def dephasing(cls, rate: float) -> "NoiseModel":
        return cls("dephasing", float(rate))

    @classmethod
    def replacement(cls, rate: float, state: str | PauliVector = "0") -> "NoiseModel":
        ref = single_qubit_stabilizer(state) if isinstance(state, str) else state
        return cls("replacement", float(rate), ref)

    @classmethod
    def parse(cls, text: str) -> "NoiseModel":
        """``dep:0.2``, ``deph:0.3`` or ``rep:0.2:+``."""
        parts = text.strip().split(":")
        kind = _NOISE_ALIASES.get(parts[0].lower())
        if kind is None or len(parts) < 2:
            raise InputError(f"cannot parse noise model {text!r}")
        try:
            rate = float(parts[1])
        except ValueError as exc:
            raise InputError(f"noise rate in {text!r} is not a number") from exc
        if kind == "replacement":
            return cls.replacement(rate, parts[2] if len(parts) > 2 else "0")
        return cls(kind, rate)

    def with_rate(self, rate: float) -> "NoiseModel":
        return NoiseModel(self.kind, float(rate), self.reference)

    def transfer_matrix(self) -> np.ndarray:
        """Single-qubit Pauli transfer matrix in the order I, X, Z, Y."""
        lam = self.rate
        if self.kind == "depolarizing":
            return np.diag([1.0, 1.0 - lam, 1.0 - lam, 1.0 - lam])
        if self.kind == "dephasing":
            r = math.sqrt(1.0 - lam)
            return np.diag([1.0, r, 1.0, r])
        matrix = (1.0 - lam) * np.eye(4)
        matrix[:, 0] += lam * np.asarray(self.reference.coeffs)
        return matrix

    def describe(self) -> str:
        if self.kind == "replacement":
            return f"replacement:{self.rate:g}"
        return f"{self.kind}:{self.rate:g}"


def _apply_per_qubit(coeffs: np.ndarray, n: int, transfer: np.ndarray) -> np.ndarray:
    order = [axis for q in range(n) for axis in (q, n + q)]
    tensor = coeffs.reshape((2,) * (2 * n)).transpose(order).reshape((4,) * n)
    for axis in range(n):
        tensor = np.moveaxis(np.tensordot(transfer, tensor, axes=([1], [axis])), 0, axis)
    restored = tensor.reshape((2,) * (2 * n)).transpose(np.argsort(order))
    return restored.reshape(-1)


def apply_noise(rho: PauliVector, noise: NoiseModel) -> PauliVector:
    if noise.rate == 0.0 or rho.n == 0:
        return rho
    if noise.kind == "depolarizing":
        return PauliVector(rho.n, rho.coeffs * (1.0 - noise.rate) ** weight_table(rho.n))
    return PauliVector(rho.n, _apply_per_qubit(rho.coeffs, rho.n, noise.transfer_matrix()))


def conjugate(rho: PauliVector, unitary: np.ndarray) -> PauliVector:
    """U ρ U† through the dense matrix (small n only)."""
    u = np.asarray(unitary, dtype=np.complex128)
    if u.shape != (rho.dim, rho.dim):
        raise InputError("unitary dimension does not match the state")
    return PauliVector.from_density(u @ rho.to_density() @ u.conj().T)


def stabilizer_norm(rho: PauliVector) -> float:
    """D(ρ) = 2^{-n} Σ_P |Tr(Pρ)|."""
    return float(np.abs(rho.coeffs).sum()) / rho.dim


def noisy_stabilizer_norm(psi: np.ndarray, rate: float = 0.0) -> float:
    """D of a depolarized pure state, streamed over x so 4ⁿ coefficients never coexist."""
    vector = np.asarray(psi, dtype=np.complex128).reshape(-1)
    n = _qubits_for_dim(vector.size)
    if n > settings.NORM_MAX_QUBITS:
        raise CapacityError(f"streaming stabilizer norm capped at {settings.NORM_MAX_QUBITS} qubits")
    if not 0.0 <= rate <= 1.0:
        raise InputError(f"noise rate {rate} outside [0, 1]")
    dim = vector.size
    idx = np.arange(dim)
    chunk = max(1, (1 << 20) // dim)
    damping = 1.0 - rate
    total = 0.0
    for start in range(0, dim, chunk):
        xs = np.arange(start, min(dim, start + chunk))
        overlaps = vector.conj()[None, :] * vector[idx[None, :] ^ xs[:, None]]
        spectrum = np.abs(fwht(overlaps))
        weights = popcount(xs[:, None] | idx[None, :])
        total += float(np.sum(spectrum * damping**weights))
    return total / dim


def cnz_pauli_spectrum(n: int, z: int | str | Sequence[int], x: int | str | Sequence[int]) -> float:
    """|⟨CⁿZ|P_(z,x)|CⁿZ⟩| for the n-qubit state with one full edge."""
    if n < 2:
        raise InputError("the CⁿZ spectrum is defined for n >= 2")
    zm, xm = _as_mask(z), _as_mask(x)
    if zm >> n or xm >> n:
        raise InputError("z and x must be n-bit strings")
    if xm == 0:
        return 1.0 if zm == 0 else 0.0
    if zm == 0:
        return 1.0 - 2.0 ** (-(n - 2))
    if bin(zm & xm).count("1") % 2 == 0:
        return 2.0 ** (-(n - 2))
    return 0.0


def closed_form_D_cnz(n: int, lam: float) -> float:
    if n < 2:
        raise InputError("closed_form_D_cnz needs n >= 2")
    return 4.0 ** (-n) * (8 + 2 * (4 - 3 * lam) ** n + (4 - 2 * lam) ** n - 10 * (2 - lam) ** n)


def closed_form_D_3complete(n: int, lam: float) -> float:
    """D of the depolarized 3-complete hypergraph state, odd n only."""
    if n < 3 or n % 2 == 0:
        raise UnsupportedError("closed form is only available for odd n >= 3")
    tail = 2.0 ** (-1.5 - 1.5 * n)
    return (
        (0.5 - 2.0**-n) * (1 - lam) ** n
        + 2.0 ** (-n - 1) * (2 - lam) ** n
        + (2.0 ** (-n - 1) - tail) * lam**n
        + tail * (4 - 3 * lam) ** n
    )


def second_order_nonlinearity(f: "CharacteristicFunction | Hypergraph") -> int:
    """min over quadratic f′ of wt(f + f′), by brute force over all quadratics."""
    function = f.characteristic() if hasattr(f, "characteristic") else f
    n = function.n
    if n > 4:
        raise CapacityError("second_order_nonlinearity enumerates quadratics for n <= 4 only")
    s = np.arange(1 << n)
    monomials = [0] + [1 << i for i in range(n)]
    monomials += [(1 << i) | (1 << j) for i in range(n) for j in range(i + 1, n)]
    basis = np.array([(s & m) == m for m in monomials], dtype=np.int64)
    choices = (np.arange(1 << len(monomials))[:, None] >> np.arange(len(monomials))) & 1
    tables = (choices @ basis) % 2
    return int(np.min(np.sum(tables != np.asarray(function.table)[None, :], axis=1)))
