"""Robustness of magic by linear programming, plus thresholds, capacities and certificates.

The LP minimizes Σ|cᵢ| subject to Σ cᵢ σᵢ = ρ over the stabilizer columns σᵢ,
written in Pauli-coefficient space. The equality duals y give the witness
A with Pauli coefficients 2ⁿ·y, so that Tr(ρA) = b·y and |Tr(σA)| ≤ 1.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import settings
from .certificates import DEFAULT_TABLE, CertificateTable, load_certificates
from .errors import InputError, SolverError, UnsupportedError
from .hypergraph import Hypergraph, characteristic_table, state_vector
from .pauli import NoiseModel, PauliVector, apply_noise
from .stabilizer import BasisStore, StabilizerBasis
from .structures import CertificateReport, CertificateRow

logger = logging.getLogger(__name__)

DUALITY_GAP_TOL = 1e-6


@dataclass(slots=True)
class LpSolution:
    primal: np.ndarray
    dual: np.ndarray
    value: float
    iterations: int
    backend: str


class LpBackend(Protocol):
    name: str

    def solve(self, matrix: sparse.csc_matrix, target: np.ndarray) -> LpSolution:
        ...


class HighsBackend:
    """scipy's HiGHS wrapper on the split formulation c = c⁺ − c⁻."""

    def __init__(self, method: str = "highs-ds", tolerance: float | None = None) -> None:
        self.method = method
        self.tolerance = settings.LP_FEASIBILITY_TOL if tolerance is None else tolerance

    @property
    def name(self) -> str:
        return self.method

    def solve(self, matrix: sparse.csc_matrix, target: np.ndarray) -> LpSolution:
        count = matrix.shape[1]
        a_eq = sparse.hstack([matrix, -matrix], format="csc")
        options = {
            "primal_feasibility_tolerance": self.tolerance,
            "dual_feasibility_tolerance": self.tolerance,
        }
        if self.method == "highs-ipm":
            options["ipm_optimality_tolerance"] = self.tolerance
        res = linprog(
            np.ones(2 * count),
            A_eq=a_eq,
            b_eq=np.asarray(target, dtype=np.float64),
            bounds=(0, None),
            method=self.method,
            options=options,
        )
        iterations = int(getattr(res, "nit", 0) or 0)
        if res.status == 2:
            raise InputError("LP is infeasible; the input is not a valid state")
        if res.status != 0 or res.x is None:
            raise SolverError(str(res.message), iterations=iterations, backend=self.method)
        primal = res.x[:count] - res.x[count:]
        dual = np.asarray(res.eqlin.marginals, dtype=np.float64)
        return LpSolution(primal=primal, dual=dual, value=float(res.fun), iterations=iterations, backend=self.method)


class CompositeLpBackend:
    """Try several backends until one reaches an optimum."""

    def __init__(self, backends: Sequence[LpBackend]) -> None:
        self.backends = tuple(backends)

    @property
    def name(self) -> str:
        return "+".join(b.name for b in self.backends)

    def solve(self, matrix: sparse.csc_matrix, target: np.ndarray) -> LpSolution:
        iterations = 0
        last: SolverError | None = None
        for backend in self.backends:
            try:
                return backend.solve(matrix, target)
            except SolverError as exc:
                logger.warning("[LP] %s failed after %d iterations: %s", backend.name, exc.iterations, exc)
                iterations += exc.iterations
                last = exc
        raise SolverError(f"all LP backends failed: {last}", iterations=iterations, backend=self.name)


def default_backend() -> CompositeLpBackend:
    return CompositeLpBackend([HighsBackend("highs-ds"), HighsBackend("highs-ipm")])


@lru_cache(maxsize=1)
def default_store() -> BasisStore:
    return BasisStore()


def resolve_basis(n: int, basis: StabilizerBasis | BasisStore | None = None) -> StabilizerBasis:
    if isinstance(basis, StabilizerBasis):
        if basis.n != n:
            raise InputError(f"basis is for n={basis.n}, state has n={n}")
        return basis
    store = basis if isinstance(basis, BasisStore) else default_store()
    return store.get(n)


@dataclass(slots=True)
class RomResult:
    n: int
    value: float
    decomposition: dict[int, float]
    witness: PauliVector | None
    dual_value: float
    reconstruction_error: float
    backend: str
    iterations: int = 0

    @property
    def negative_mass(self) -> float:
        return -sum(c for c in self.decomposition.values() if c < 0)

    @property
    def duality_gap(self) -> float:
        return self.value - self.dual_value

    @property
    def support_size(self) -> int:
        return len(self.decomposition)

    def split(self) -> tuple[float, dict[int, float], dict[int, float]]:
        """(a, σ, τ) with ρ = (a+1)σ − aτ, σ and τ as convex weights over basis indices."""
        a = self.negative_mass
        sigma = {i: c / (a + 1.0) for i, c in self.decomposition.items() if c > 0}
        tau = {i: -c / a for i, c in self.decomposition.items() if c < 0} if a > 0 else {}
        return a, sigma, tau


def _identity_witness(n: int) -> PauliVector:
    coeffs = np.zeros(4**n)
    coeffs[0] = float(1 << n)
    return PauliVector(n, coeffs)


def _validate_density(rho: PauliVector) -> None:
    if abs(rho.coeffs[0] - 1.0) > 1e-9:
        raise InputError(f"state has trace {rho.coeffs[0]:.6g}, expected 1")
    if np.max(np.abs(rho.coeffs)) > 1.0 + 1e-9:
        raise InputError("Pauli coefficients exceed 1 in magnitude; not a density operator")
    if rho.n <= 5:
        lowest = float(np.linalg.eigvalsh(rho.to_density())[0])
        if lowest < -1e-8:
            raise InputError(f"state has negative eigenvalue {lowest:.3g}")


def rom(
    rho: PauliVector,
    basis: StabilizerBasis | BasisStore | None = None,
    *,
    backend: LpBackend | None = None,
) -> RomResult:
    """Exact robustness of magic with primal decomposition and dual witness."""
    _validate_density(rho)
    if rho.n == 0:
        return RomResult(0, 1.0, {}, _identity_witness(0), 1.0, 0.0, "trivial")
    columns = resolve_basis(rho.n, basis)
    member = columns.index_of(rho)
    if member is not None:
        return RomResult(rho.n, 1.0, {member: 1.0}, _identity_witness(rho.n), 1.0, 0.0, "member")

    matrix = columns.column_matrix()
    solution = (backend or default_backend()).solve(matrix, rho.coeffs)
    coeffs = solution.primal
    support = np.flatnonzero(np.abs(coeffs) > 1e-12)
    reconstruction = float(np.max(np.abs(matrix @ coeffs - rho.coeffs)))
    dual_value = float(rho.coeffs @ solution.dual)
    feasibility = float(np.max(np.abs(matrix.T @ solution.dual)))
    value = float(np.abs(coeffs).sum())

    if reconstruction > settings.REPORT_TOL:
        logger.warning("[LP] reconstruction error %.3g above %.1g", reconstruction, settings.REPORT_TOL)
    if feasibility > 1.0 + settings.REPORT_TOL:
        logger.warning("[LP] witness violates dual feasibility: max |Tr(σA)| = %.9f", feasibility)
    if value - dual_value > DUALITY_GAP_TOL:
        logger.warning("[LP] duality gap %.3g (primal %.9f, dual %.9f)", value - dual_value, value, dual_value)
    logger.debug("[LP] n=%d value=%.9f support=%d via %s", rho.n, value, len(support), solution.backend)

    return RomResult(
        n=rho.n,
        value=value,
        decomposition={int(i): float(coeffs[i]) for i in support},
        witness=PauliVector(rho.n, solution.dual * (1 << rho.n)),
        dual_value=dual_value,
        reconstruction_error=reconstruction,
        backend=solution.backend,
        iterations=solution.iterations,
    )


def as_state(target: Hypergraph | PauliVector) -> PauliVector:
    if isinstance(target, PauliVector):
        return target
    if isinstance(target, Hypergraph):
        return PauliVector.from_state_vector(state_vector(target))
    raise InputError(f"cannot build a state from {type(target).__name__}")


def rom_noisy(
    target: Hypergraph | PauliVector,
    noise: NoiseModel,
    basis: StabilizerBasis | BasisStore | None = None,
    *,
    backend: LpBackend | None = None,
) -> RomResult:
    return rom(apply_noise(as_state(target), noise), basis, backend=backend)


def rom_many(
    states: Iterable[PauliVector],
    basis: StabilizerBasis | BasisStore | None = None,
    *,
    threads: int | None = None,
    backend: LpBackend | None = None,
) -> list[RomResult]:
    """rom over many states sharing one basis; results keep the input order."""
    items = list(states)
    if not items:
        return []
    resolved: dict[int, StabilizerBasis] = {}
    for state in items:
        if state.n and state.n not in resolved:
            resolved[state.n] = resolve_basis(state.n, basis)
            resolved[state.n].column_matrix()
            resolved[state.n].index_of(np.zeros(4**state.n))
    workers = max(1, threads or settings.THREADS)

    def _solve(state: PauliVector) -> RomResult:
        return rom(state, resolved.get(state.n), backend=backend)

    if workers == 1 or len(items) == 1:
        return [_solve(s) for s in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_solve, items))


@dataclass(slots=True)
class ThresholdResult:
    lambda_star: float
    epsilon: float
    bracket: tuple[float, float]
    evaluations: int
    noise: str = "depolarizing"
    monotone: bool = True
    samples: dict[float, float] = field(default_factory=dict)


def noise_template(noise: str | NoiseModel) -> NoiseModel:
    if isinstance(noise, NoiseModel):
        return noise
    return NoiseModel.parse(noise if ":" in noise else f"{noise}:0")


def _non_increasing(samples: dict[float, float]) -> bool:
    values = [samples[lam] for lam in sorted(samples)]
    return all(b <= a + settings.REPORT_TOL for a, b in zip(values, values[1:]))


def threshold(
    target: Hypergraph | PauliVector,
    noise: str | NoiseModel = "depolarizing",
    epsilon: float = 0.0,
    tol: float = 1e-4,
    basis: StabilizerBasis | BasisStore | None = None,
    *,
    check_monotone: bool = False,
    grid_points: int = 64,
    threads: int | None = None,
    backend: LpBackend | None = None,
) -> ThresholdResult:
    """Smallest noise rate with R ≤ 1+ε, by bisection on the non-increasing RoM profile.

    Every bisection sample is checked for monotonicity. If R rises with λ anywhere
    on them, or ``check_monotone`` is set, a ``grid_points`` scan brackets the first
    crossing before bisecting.
    """
    if epsilon < 0:
        raise InputError("epsilon must be non-negative")
    if not 0 < tol < 1:
        raise InputError("tol must lie in (0, 1)")
    template = noise_template(noise)
    rho = as_state(target)
    columns = resolve_basis(rho.n, basis) if rho.n else None
    limit = 1.0 + epsilon + settings.REPORT_TOL
    samples: dict[float, float] = {}

    def evaluate(lam: float) -> float:
        value = rom(apply_noise(rho, template.with_rate(lam)), columns, backend=backend).value
        samples[lam] = value
        return value

    if evaluate(0.0) <= limit:
        return ThresholdResult(0.0, epsilon, (0.0, 0.0), len(samples), template.kind, True, samples)

    lo, hi = 0.0, 1.0
    monotone = True
    if check_monotone:
        grid = [float(v) for v in np.linspace(0.0, 1.0, grid_points)]
        noisy = [apply_noise(rho, template.with_rate(lam)) for lam in grid]
        values = [r.value for r in rom_many(noisy, columns, threads=threads, backend=backend)]
        samples.update(zip(grid, values))
        above = [v > limit for v in values]
        changes = sum(1 for a, b in zip(above, above[1:]) if a != b)
        crossing = next((i for i in range(len(grid) - 1) if above[i] and not above[i + 1]), None)
        if changes > 1 or not _non_increasing(samples):
            monotone = False
            logger.warning("[Threshold] non-monotone profile (%d sign changes); refining first crossing", changes)
        if crossing is not None:
            lo, hi = grid[crossing], grid[crossing + 1]

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if evaluate(mid) <= limit:
            hi = mid
        else:
            lo = mid

    if not check_monotone and not _non_increasing(samples):
        logger.warning("[Threshold] RoM rose with noise between bisection samples; rescanning on a %d-point grid", grid_points)
        rescan = threshold(
            rho, template, epsilon, tol, columns,
            check_monotone=True, grid_points=grid_points, threads=threads, backend=backend,
        )
        rescan.samples = {**samples, **rescan.samples}
        rescan.evaluations += len(samples)
        rescan.monotone = False
        return rescan

    logger.info("[Threshold] %s eps=%g: lambda*=%.6f after %d LPs", template.kind, epsilon, hi, len(samples))
    return ThresholdResult(hi, epsilon, (lo, hi), len(samples), template.kind, monotone, samples)


_GATE_ALIASES = {"cz": 2, "ccz": 3}


def diagonal_gate(gate: str | Hypergraph | np.ndarray, n: int | None = None) -> tuple[str, np.ndarray]:
    """(name, diagonal) for a named CⁿZ power, a hypergraph circuit or an explicit matrix."""
    if isinstance(gate, Hypergraph):
        signs = 1.0 - 2.0 * characteristic_table(gate).astype(np.float64)
        return f"hypergraph:{gate.n}", signs.astype(np.complex128)
    if isinstance(gate, str):
        name, _, count = gate.lower().partition(":")
        if name in _GATE_ALIASES:
            size = _GATE_ALIASES[name]
        elif name == "cnz":
            size = int(count) if count else n
            if size is None:
                raise InputError("cnz needs a qubit count, e.g. cnz:4")
        else:
            raise InputError(f"unknown gate {gate!r}")
        if not 1 <= size <= settings.PAULI_MAX_QUBITS:
            raise InputError(f"gate size {size} out of range")
        _, diag = diagonal_gate(Hypergraph(size, ((1 << size) - 1,)))
        return gate.lower(), diag
    matrix = np.asarray(gate, dtype=np.complex128)
    if matrix.ndim == 2:
        if matrix.shape[0] != matrix.shape[1]:
            raise InputError("gate matrix must be square")
        off = matrix - np.diag(np.diag(matrix))
        if np.max(np.abs(off), initial=0.0) > 1e-12:
            raise UnsupportedError("magic capacity is only implemented for diagonal gates")
        matrix = np.diag(matrix)
    if matrix.ndim != 1 or np.max(np.abs(np.abs(matrix) - 1.0), initial=0.0) > 1e-9:
        raise InputError("gate diagonal must be a vector of unit-modulus phases")
    return "diagonal", matrix


@dataclass(slots=True)
class CapacityResult:
    value: float
    inputs: int
    distinct_outputs: int
    best: PauliVector | None = None


def _capacity_outputs(diag: np.ndarray, columns: StabilizerBasis, noise: NoiseModel | None) -> list[PauliVector]:
    phases = np.outer(diag, diag.conj())
    outputs: dict[bytes, PauliVector] = {}
    for i in range(len(columns)):
        out = PauliVector.from_density(columns.state(i).to_density() * phases)
        if noise is not None:
            out = apply_noise(out, noise)
        outputs.setdefault(out.key(), out)
    return list(outputs.values())


def magic_capacity_details(
    gate: str | Hypergraph | np.ndarray,
    n: int | None = None,
    basis: StabilizerBasis | BasisStore | None = None,
    noise: NoiseModel | None = None,
    *,
    threads: int | None = None,
    backend: LpBackend | None = None,
) -> CapacityResult:
    name, diag = diagonal_gate(gate, n)
    qubits = int(diag.size).bit_length() - 1
    if 1 << qubits != diag.size:
        raise InputError("gate dimension is not a power of two")
    if qubits > 4:
        raise UnsupportedError("magic capacity sweeps are limited to n <= 4")
    columns = resolve_basis(qubits, basis)
    outputs = _capacity_outputs(diag, columns, noise)
    results = rom_many(outputs, columns, threads=threads, backend=backend)
    best = int(np.argmax([r.value for r in results]))
    logger.info(
        "[Capacity] %s on %d inputs (%d distinct outputs): %.9f",
        name, len(columns), len(outputs), results[best].value,
    )
    return CapacityResult(results[best].value, len(columns), len(outputs), outputs[best])


def magic_capacity_diagonal(
    gate: str | Hypergraph | np.ndarray,
    n: int | None = None,
    basis: StabilizerBasis | BasisStore | None = None,
    noise: NoiseModel | None = None,
    *,
    threads: int | None = None,
    backend: LpBackend | None = None,
) -> float:
    """max over pure stabilizer inputs |s⟩ of R(U|s⟩), noise applied after U when given."""
    return magic_capacity_details(gate, n, basis, noise, threads=threads, backend=backend).value


def capacity_vanishing_point(
    gate: str | Hypergraph | np.ndarray,
    n: int | None = None,
    noise: str | NoiseModel = "dephasing",
    basis: StabilizerBasis | BasisStore | None = None,
    *,
    tol: float = 1e-3,
    threads: int | None = None,
    backend: LpBackend | None = None,
) -> ThresholdResult:
    """Smallest noise rate at which the capacity of ``noise ∘ U`` drops to 1."""
    template = noise_template(noise)
    name, diag = diagonal_gate(gate, n)
    qubits = int(diag.size).bit_length() - 1
    columns = resolve_basis(qubits, basis)
    workers = max(1, threads or settings.THREADS)
    outputs = _capacity_outputs(diag, columns, None)
    noiseless = rom_many(outputs, columns, threads=threads, backend=backend)
    ranked = sorted(
        ((r.value, i) for i, r in enumerate(noiseless) if r.value > 1.0 + settings.REPORT_TOL),
        reverse=True,
    )
    candidates = [outputs[i] for _, i in ranked]
    evaluations = len(outputs)
    if not candidates:
        return ThresholdResult(0.0, 0.0, (0.0, 0.0), evaluations, template.kind)

    def exceeds(lam: float) -> bool:
        nonlocal evaluations
        noisy_model = template.with_rate(lam)
        batch = 2 * workers
        for start in range(0, len(candidates), batch):
            chunk = [apply_noise(s, noisy_model) for s in candidates[start:start + batch]]
            values = [r.value for r in rom_many(chunk, columns, threads=threads, backend=backend)]
            evaluations += len(values)
            if max(values) > 1.0 + settings.REPORT_TOL:
                return True
        return False

    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if exceeds(mid):
            lo = mid
        else:
            hi = mid
    logger.info("[Capacity] %s under %s reaches 1 at lambda=%.4f (%d LPs)", name, template.kind, hi, evaluations)
    return ThresholdResult(hi, 0.0, (lo, hi), evaluations, template.kind)


def verify_certificates(
    table: CertificateTable | str | Path | None = None,
    grid: Sequence[float] | None = None,
    basis: StabilizerBasis | BasisStore | None = None,
    *,
    target: Hypergraph | PauliVector | None = None,
    tolerance: float = 5e-4,
    compare_rom: bool = True,
    threads: int | None = None,
) -> CertificateReport:
    """Check max_j Tr(E_λ(ρ)A_j) against the LP and each A_j against dual feasibility."""
    certificates = table if isinstance(table, CertificateTable) else load_certificates(table or DEFAULT_TABLE)
    lambdas = [float(v) for v in (grid if grid is not None else np.linspace(0.0, 1.0, 21))]
    state = as_state(target if target is not None else Hypergraph(3, (0b111,)))
    if state.n != certificates.n:
        raise InputError(f"certificate table is for n={certificates.n}, state has n={state.n}")
    columns = resolve_basis(state.n, basis)

    bound = np.abs(columns.column_matrix().T @ certificates.dual).max(axis=0)
    feasibility = {name: float(v) for name, v in zip(certificates.names, bound)}
    for name, worst in feasibility.items():
        if worst > 1.0 + tolerance:
            logger.warning("[Certificates] %s is not dual feasible: max |Tr(σA)| = %.6f", name, worst)

    noisy = [apply_noise(state, NoiseModel.depolarizing(lam)) for lam in lambdas]
    exact = rom_many(noisy, columns, threads=threads) if compare_rom else [None] * len(noisy)
    rows: list[CertificateRow] = []
    for lam, rho, result in zip(lambdas, noisy, exact):
        alphas = certificates.alphas(rho)
        j = int(np.argmax(alphas))
        row = CertificateRow(lam=lam, best=certificates.names[j], max_alpha=float(alphas[j]))
        if result is not None:
            row.rom = result.value
            row.difference = abs(result.value - row.max_alpha)
            row.ok = row.difference <= tolerance
        rows.append(row)
    ok = all(r.ok for r in rows) and all(v <= 1.0 + tolerance for v in feasibility.values())
    return CertificateReport(rows=rows, feasibility=feasibility, tolerance=tolerance, ok=ok)
