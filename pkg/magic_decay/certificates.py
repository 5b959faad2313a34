"""Loading dual-witness tables stored as permutation-symmetric Pauli coefficients."""
from __future__ import annotations

import csv
import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import InputError
from .pauli import PauliVector

logger = logging.getLogger(__name__)

DEFAULT_TABLE = Path(__file__).resolve().parent / "data" / "ccz_certificates.csv"

# Row-label digits: 0=I, 1=X, 2=Y, 3=Z, as (z, x) bits.
_DIGIT_BITS = {"0": (0, 0), "1": (0, 1), "2": (1, 1), "3": (1, 0)}


def _label_indices(label: str) -> set[int]:
    """Flat Pauli indices of every qubit permutation of ``label`` (digit k is qubit k)."""
    n = len(label)
    indices = set()
    for perm in set(itertools.permutations(label)):
        z = x = 0
        for q, digit in enumerate(perm):
            if digit not in _DIGIT_BITS:
                raise InputError(f"row label {label!r} may only use digits 0-3")
            bz, bx = _DIGIT_BITS[digit]
            z |= bz << q
            x |= bx << q
        indices.add((z << n) + x)
    return indices


@dataclass(slots=True)
class CertificateTable:
    """Dual witnesses A_j, stored as y_P = Tr(A_j P) / 2ⁿ."""

    n: int
    names: tuple[str, ...]
    dual: np.ndarray

    def witness(self, name: str) -> PauliVector:
        column = self.names.index(name)
        return PauliVector(self.n, self.dual[:, column] * (1 << self.n))

    def alphas(self, rho: PauliVector) -> np.ndarray:
        """Tr(ρ A_j) for every column."""
        if rho.n != self.n:
            raise InputError(f"table is for n={self.n}, state has n={rho.n}")
        return rho.coeffs @ self.dual

    def by_name(self) -> Mapping[str, np.ndarray]:
        return {name: self.dual[:, i] for i, name in enumerate(self.names)}


@lru_cache(maxsize=4)
def load_certificates(path: str | Path = DEFAULT_TABLE) -> CertificateTable:
    raw = Path(path)
    with raw.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(row for row in handle if row.strip() and not row.startswith("#"))
        header = next(reader, None)
        if not header or len(header) < 2:
            raise InputError(f"{raw} has no witness columns")
        names = tuple(name.strip() for name in header[1:])
        rows = [row for row in reader]
    if not rows:
        raise InputError(f"{raw} lists no coefficients")
    n = len(rows[0][0].strip())
    dual = np.zeros((4**n, len(names)))
    covered: set[int] = set()
    for row in rows:
        label = row[0].strip()
        if len(label) != n or len(row) != len(names) + 1:
            raise InputError(f"malformed certificate row {row!r}")
        try:
            values = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise InputError(f"non-numeric coefficient in row {label}") from exc
        for index in _label_indices(label):
            if index in covered:
                raise InputError(f"row {label} overlaps an earlier permutation class")
            covered.add(index)
            dual[index] = values
    logger.info("[Certificates] loaded %d witnesses over %d Pauli terms from %s", len(names), len(covered), raw)
    return CertificateTable(n=n, names=names, dual=dual)
