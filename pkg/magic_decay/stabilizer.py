"""Pure stabilizer states as LP columns: |K,q,b⟩ labels, enumeration and the disk cache.

Cache file layout: magic ``STBB``, version u16, n u8, count u64, then ``count`` records
of 4ⁿ int8 Pauli coefficients, then the 32-byte SHA-256 digest of the records.
"""
from __future__ import annotations

import hashlib
import heapq
import itertools
import logging
import math
import os
import struct
import tempfile
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import BinaryIO, Iterator

import numpy as np
from scipy import sparse
from tenacity import RetryError, retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from . import settings
from .errors import BasisFormatError, CapacityError, InputError
from .file_utils import basis_cache_path, discard, ensure_parent, partial_path
from .pauli import PauliVector, pauli_coefficients_batch

logger = logging.getLogger(__name__)

MAGIC = b"STBB"
VERSION = 1
HEADER = struct.Struct("<4sHBQ")
DIGEST_SIZE = 32
MAX_QUBITS = 5


def stabilizer_count(n: int) -> int:
    """Number of pure n-qubit stabilizer states, 2ⁿ Π_{k=1..n}(2^k+1)."""
    return (1 << n) * math.prod((1 << k) + 1 for k in range(1, n + 1))


def _gf2_rank(vectors: tuple[int, ...]) -> int:
    rows = list(vectors)
    rank = 0
    while rows:
        pivot = rows.pop()
        if pivot == 0:
            continue
        rank += 1
        low = pivot & -pivot
        rows = [r ^ pivot if r & low else r for r in rows]
    return rank


@dataclass(frozen=True, slots=True)
class StabilizerLabel:
    """|K,q,b⟩ with K = offset + span(basis).

    ``quadratic[j]`` is the row mask of the upper-triangular form over subspace
    coordinates: bit ``i >= j`` set means the term y_j y_i (the diagonal is the
    linear part, y_j² = y_j). ``b`` enters through i^{b·x} with b·x counted as an integer.
    """

    n: int
    offset: int = 0
    basis: tuple[int, ...] = ()
    quadratic: tuple[int, ...] = ()
    b: int = 0

    def __post_init__(self) -> None:
        limit = 1 << self.n
        for value in (self.offset, self.b, *self.basis):
            if not 0 <= value < limit:
                raise InputError(f"mask {value:#x} does not fit in {self.n} bits")
        quadratic = self.quadratic or (0,) * len(self.basis)
        if len(quadratic) != len(self.basis):
            raise InputError("quadratic form needs one row per basis vector")
        for j, row in enumerate(quadratic):
            if row >> len(self.basis) or row & ((1 << j) - 1):
                raise InputError("quadratic form must be upper triangular over the subspace coordinates")
        object.__setattr__(self, "quadratic", tuple(quadratic))

    @property
    def k(self) -> int:
        return len(self.basis)

    def amplitudes(self) -> np.ndarray:
        if _gf2_rank(self.basis) != self.k:
            raise InputError("subspace basis vectors are linearly dependent")
        ys = np.arange(1 << self.k)
        xs = np.full(ys.shape, self.offset, dtype=np.int64)
        q = np.zeros(ys.shape, dtype=np.int64)
        for j, vector in enumerate(self.basis):
            yj = (ys >> j) & 1
            xs ^= yj * vector
            for i in range(j, self.k):
                if self.quadratic[j] >> i & 1:
                    q += yj * ((ys >> i) & 1)
        linear = np.array([bin(self.b & int(x)).count("1") for x in xs], dtype=np.int64)
        psi = np.zeros(1 << self.n, dtype=np.complex128)
        psi[xs] = (1j) ** ((2 * q + linear) % 4) / math.sqrt(1 << self.k)
        return psi


def state_from_label(label: StabilizerLabel) -> PauliVector:
    coeffs = PauliVector.from_state_vector(label.amplitudes()).coeffs
    return PauliVector(label.n, np.rint(coeffs))


def _rref_bases(n: int, k: int) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Every k-dim subspace of F₂ⁿ once, as (pivots, rows) in reduced echelon form."""
    for pivots in itertools.combinations(range(n), k):
        pivot_set = set(pivots)
        free = [[c for c in range(p + 1, n) if c not in pivot_set] for p in pivots]
        total = sum(len(cols) for cols in free)
        for assignment in range(1 << total):
            rows = []
            bit = 0
            for p, cols in zip(pivots, free):
                row = 1 << p
                for c in cols:
                    if assignment >> bit & 1:
                        row |= 1 << c
                    bit += 1
                rows.append(row)
            yield pivots, tuple(rows)


@lru_cache(maxsize=8)
def _phase_table(k: int) -> np.ndarray:
    """Amplitude phases for every (quadratic form, pivot phase) choice, shape (2^{P+k}, 2^k)."""
    ys = np.arange(1 << k)
    bits = (ys[:, None] >> np.arange(k)) & 1
    pairs = [(j, i) for j in range(k) for i in range(j, k)]
    monomials = np.stack([bits[:, j] * bits[:, i] for j, i in pairs], axis=1) if pairs else np.zeros((1 << k, 0), int)
    quad_choices = (np.arange(1 << len(pairs))[:, None] >> np.arange(len(pairs))) & 1
    lin_choices = (np.arange(1 << k)[:, None] >> np.arange(k)) & 1
    q = (quad_choices @ monomials.T) % 2
    lin = lin_choices @ bits.T
    exponent = (2 * q[:, None, :] + lin[None, :, :]) % 4
    return ((1j) ** exponent).reshape(-1, 1 << k) / math.sqrt(1 << k)


def iter_basis_chunks(n: int, chunk_size: int = 4096) -> Iterator[np.ndarray]:
    """Pauli vectors (int8 rows) of all stabilizer states, in deterministic generation order."""
    dim = 1 << n
    for k in range(n + 1):
        phases = _phase_table(k)
        ys = np.arange(1 << k)
        for pivots, rows in _rref_bases(n, k):
            non_pivot = [c for c in range(n) if c not in set(pivots)]
            span = np.zeros(ys.shape, dtype=np.int64)
            for j, row in enumerate(rows):
                span ^= ((ys >> j) & 1) * row
            for offset_bits in range(1 << len(non_pivot)):
                offset = sum(1 << c for i, c in enumerate(non_pivot) if offset_bits >> i & 1)
                xs = span ^ offset
                for start in range(0, phases.shape[0], chunk_size):
                    block = phases[start:start + chunk_size]
                    states = np.zeros((block.shape[0], dim), dtype=np.complex128)
                    states[:, xs] = block
                    yield np.rint(pauli_coefficients_batch(states)).astype(np.int8)


@dataclass(slots=True)
class StabilizerBasis:
    n: int
    vectors: np.ndarray
    _columns: sparse.csc_matrix | None = field(default=None, init=False, repr=False, compare=False)
    _index: dict[bytes, int] | None = field(default=None, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False)

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    def state(self, index: int) -> PauliVector:
        return PauliVector(self.n, self.vectors[index].astype(np.float64))

    def column_matrix(self) -> sparse.csc_matrix:
        """4ⁿ × count sparse matrix whose columns are the basis Pauli vectors."""
        with self._lock:
            if self._columns is None:
                self._columns = sparse.csr_matrix(self.vectors).T.tocsc().astype(np.float64)
            return self._columns

    def index_of(self, vector: PauliVector | np.ndarray) -> int | None:
        with self._lock:
            if self._index is None:
                self._index = {row.tobytes(): i for i, row in enumerate(np.asarray(self.vectors))}
        coeffs = vector.coeffs if isinstance(vector, PauliVector) else np.asarray(vector)
        rounded = np.rint(coeffs)
        if np.max(np.abs(coeffs - rounded), initial=0.0) > 1e-9:
            return None
        return self._index.get(rounded.astype(np.int8).tobytes())

    @property
    def checksum(self) -> str:
        digest = hashlib.sha256()
        for start in range(0, len(self), 65536):
            digest.update(np.ascontiguousarray(self.vectors[start:start + 65536]).tobytes())
        return digest.hexdigest()


def _check_size(n: int, allow_large: bool | None) -> None:
    if n < 1 or n > MAX_QUBITS:
        raise CapacityError(f"stabilizer enumeration supports 1 <= n <= {MAX_QUBITS} (got {n})")
    large_ok = settings.ALLOW_N5 if allow_large is None else allow_large
    if n == MAX_QUBITS and not large_ok:
        raise CapacityError("n=5 enumeration (2 423 520 states) needs MAGICDECAY_ALLOW_N5 or --allow-n5")


def enumerate_basis(n: int, *, allow_large: bool | None = None) -> StabilizerBasis:
    """All pure n-qubit stabilizer states, deduplicated and sorted lexicographically."""
    _check_size(n, allow_large)
    logger.info("[Basis] enumerating n=%d (%d states expected)", n, stabilizer_count(n))
    stacked = np.concatenate(list(iter_basis_chunks(n)), axis=0)
    unique = np.unique(stacked, axis=0)
    if len(unique) != stabilizer_count(n):
        logger.warning("[Basis] n=%d produced %d states, expected %d", n, len(unique), stabilizer_count(n))
    return StabilizerBasis(n, unique)


def save_basis(basis: StabilizerBasis, path: str | Path) -> Path:
    target = Path(path)
    ensure_parent(target)
    temp = partial_path(target)
    records = np.ascontiguousarray(basis.vectors, dtype=np.int8)
    with temp.open("wb") as handle:
        handle.write(HEADER.pack(MAGIC, VERSION, basis.n, len(records)))
        handle.write(records.tobytes())
        handle.write(hashlib.sha256(records.tobytes()).digest())
    os.replace(temp, target)
    logger.info("[Basis] wrote %d states to %s", len(records), target)
    return target


def _spill_sorted_runs(n: int, directory: Path, run_rows: int) -> list[Path]:
    """Write generation-order rows as deduplicated, lexicographically sorted run files."""
    runs: list[Path] = []
    pending: list[np.ndarray] = []
    size = 0
    chunks = iter_basis_chunks(n)
    while True:
        chunk = next(chunks, None)
        if chunk is not None:
            pending.append(chunk)
            size += len(chunk)
        if pending and (chunk is None or size >= run_rows):
            path = directory / f"run{len(runs):05d}.bin"
            np.unique(np.concatenate(pending), axis=0).tofile(path)
            runs.append(path)
            pending, size = [], 0
        if chunk is None:
            return runs


def _run_keys(path: Path, width: int) -> Iterator[bytes]:
    # int8 rows shifted to uint8 so that bytes order equals signed lexicographic order
    rows = np.memmap(path, dtype=np.uint8, mode="r").reshape(-1, width)
    for start in range(0, len(rows), 4096):
        for row in np.asarray(rows[start:start + 4096]) ^ np.uint8(0x80):
            yield row.tobytes()


def _flush_rows(handle: BinaryIO, digest: hashlib._Hash, pending: list[bytes]) -> int:
    if not pending:
        return 0
    block = (np.frombuffer(b"".join(pending), dtype=np.uint8) ^ np.uint8(0x80)).tobytes()
    handle.write(block)
    digest.update(block)
    written = len(pending)
    pending.clear()
    return written


def write_basis_stream(
    n: int,
    path: str | Path,
    *,
    allow_large: bool | None = None,
    run_rows: int = 1 << 16,
) -> Path:
    """Enumerate straight to disk in the order of :func:`enumerate_basis`.

    Rows are sorted in runs of ``run_rows``, spilled next to the target and
    k-way merged, so memory stays bounded by one run.
    """
    _check_size(n, allow_large)
    if run_rows < 1:
        raise InputError("run_rows must be positive")
    target = Path(path)
    ensure_parent(target)
    temp = partial_path(target)
    width = 4**n
    digest = hashlib.sha256()
    count = 0
    try:
        with tempfile.TemporaryDirectory(dir=target.parent, prefix=".stbb-runs-") as scratch:
            runs = _spill_sorted_runs(n, Path(scratch), run_rows)
            logger.info("[Basis] merging %d sorted runs for n=%d", len(runs), n)
            with temp.open("wb") as handle:
                handle.write(HEADER.pack(MAGIC, VERSION, n, 0))
                previous = None
                pending: list[bytes] = []
                for key in heapq.merge(*(_run_keys(run, width) for run in runs)):
                    if key == previous:
                        continue
                    previous = key
                    pending.append(key)
                    if len(pending) == 4096:
                        count += _flush_rows(handle, digest, pending)
                count += _flush_rows(handle, digest, pending)
                handle.write(digest.digest())
                handle.seek(0)
                handle.write(HEADER.pack(MAGIC, VERSION, n, count))
    except BaseException:
        discard(temp)
        raise
    os.replace(temp, target)
    logger.info("[Basis] streamed %d states for n=%d to %s", count, n, target)
    return target


def load_basis(path: str | Path) -> StabilizerBasis:
    target = Path(path)
    size = target.stat().st_size
    with target.open("rb") as handle:
        raw = handle.read(HEADER.size)
    if len(raw) < HEADER.size:
        raise BasisFormatError(f"{target} is too short to hold a header")
    magic, version, n, count = HEADER.unpack(raw)
    if magic != MAGIC:
        raise BasisFormatError(f"{target} has magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise BasisFormatError(f"{target} has version {version}, expected {VERSION}")
    width = 4**n
    if size != HEADER.size + count * width + DIGEST_SIZE:
        raise BasisFormatError(f"{target} size does not match its header")
    vectors = np.memmap(target, dtype=np.int8, mode="r", offset=HEADER.size, shape=(count, width))
    digest = hashlib.sha256()
    for start in range(0, count, 65536):
        digest.update(np.asarray(vectors[start:start + 65536]).tobytes())
    with target.open("rb") as handle:
        handle.seek(size - DIGEST_SIZE)
        stored = handle.read(DIGEST_SIZE)
    if digest.digest() != stored:
        raise BasisFormatError(f"{target} checksum mismatch")
    if n < MAX_QUBITS:
        vectors = np.array(vectors)
    return StabilizerBasis(n, vectors)


class _CacheBusy(RuntimeError):
    """Another process is still writing the cache file."""


@retry(
    stop=stop_after_attempt(settings.CACHE_WAIT_ATTEMPTS),
    wait=wait_exponential(multiplier=0.5, min=0.5, max=8),
    retry=retry_if_exception_type(_CacheBusy),
)
def _load_when_ready(path: Path) -> StabilizerBasis:
    if partial_path(path).exists():
        raise _CacheBusy(str(path))
    return load_basis(path)


class BasisStore:
    """Directory-backed stabilizer bases, loaded once per process and shared read-only."""

    def __init__(self, cache_dir: str | Path | None = None, *, allow_large: bool | None = None) -> None:
        self.cache_dir = Path(cache_dir) if cache_dir is not None else settings.CACHE_DIR
        self.allow_large = settings.ALLOW_N5 if allow_large is None else allow_large
        self._loaded: dict[int, StabilizerBasis] = {}
        self._lock = threading.Lock()

    def path_for(self, n: int) -> Path:
        return basis_cache_path(self.cache_dir, n)

    def get(self, n: int) -> StabilizerBasis:
        with self._lock:
            if n not in self._loaded:
                self._loaded[n] = self._load_or_build(n)
            return self._loaded[n]

    def _load_or_build(self, n: int) -> StabilizerBasis:
        _check_size(n, self.allow_large)
        path = self.path_for(n)
        if path.exists() or partial_path(path).exists():
            try:
                basis = _load_when_ready(path)
                logger.info("[Basis] loaded %d states for n=%d from %s", len(basis), n, path)
                return basis
            except RetryError:
                logger.warning("[Basis] %s still being written; enumerating locally", path)
            except FileNotFoundError:
                pass
            except BasisFormatError as exc:
                logger.warning("[Basis] discarding cache %s: %s", path, exc)
        if n == MAX_QUBITS:
            write_basis_stream(n, path, allow_large=True)
            return load_basis(path)
        basis = enumerate_basis(n, allow_large=self.allow_large)
        save_basis(basis, path)
        return basis
