"""Runtime configuration read from the environment (and optional .env files)."""
from __future__ import annotations

import os
from pathlib import Path

try:
    from dotenv import load_dotenv
except ImportError:  # pragma: no cover - fallback when package missing
    load_dotenv = None  # type: ignore

if load_dotenv:
    BASE_DIR = Path(__file__).resolve().parent
    CANDIDATES = [
        BASE_DIR / ".env",
        BASE_DIR.parent / ".env",
    ]
    loaded = False
    for env_path in CANDIDATES:
        if env_path.exists():
            load_dotenv(dotenv_path=str(env_path), override=False)
            loaded = True
    if not loaded:
        load_dotenv(override=False)


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        return default


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError:
        return default


def _env_flag(name: str, default: bool = False) -> bool:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    return str(raw).lower() in {"1", "true", "yes", "on"}


CACHE_DIR = Path(os.getenv("MAGICDECAY_CACHE", str(Path.home() / ".cache" / "magic_decay")))
DENSE_CUTOFF = _env_int("MAGICDECAY_DENSE_CUTOFF", 20)
PAULI_MAX_QUBITS = _env_int("MAGICDECAY_PAULI_MAX_QUBITS", 8)
NORM_MAX_QUBITS = _env_int("MAGICDECAY_NORM_MAX_QUBITS", 14)
MAX_HYPERGRAPH_QUBITS = 24
LP_FEASIBILITY_TOL = _env_float("MAGICDECAY_LP_FEASIBILITY_TOL", 1e-9)
REPORT_TOL = _env_float("MAGICDECAY_REPORT_TOL", 1e-7)
THREADS = _env_int("MAGICDECAY_THREADS", 0) or (os.cpu_count() or 1)
ALLOW_N5 = _env_flag("MAGICDECAY_ALLOW_N5")
MAX_TRACE_TERMS = _env_int("MAGICDECAY_MAX_TRACE_TERMS", 1 << 22)
WIGNER_MAX_DIM = _env_int("MAGICDECAY_WIGNER_MAX_DIM", 6561)
CACHE_WAIT_ATTEMPTS = max(1, _env_int("MAGICDECAY_CACHE_WAIT_ATTEMPTS", 5))
LOG_LEVEL = os.getenv("MAGICDECAY_LOG_LEVEL", "INFO").upper()
