"""Path helpers for the stabilizer basis cache and report files."""
from __future__ import annotations

import pathlib


def ensure_parent(path: str | pathlib.Path) -> pathlib.Path:
    """Create the directory that will hold the file at *path*."""
    target = pathlib.Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    return target


def discard(path: str | pathlib.Path) -> None:
    """Remove a leftover file; a missing or locked file is left alone."""
    try:
        pathlib.Path(path).unlink(missing_ok=True)
    except PermissionError:
        pass


def basis_cache_path(base_dir: str | pathlib.Path, n: int) -> pathlib.Path:
    return pathlib.Path(base_dir) / "basis" / f"stab_n{n}.stbb"


def partial_path(path: str | pathlib.Path) -> pathlib.Path:
    """Sibling path used while a cache file is still being written."""
    target = pathlib.Path(path)
    return target.with_name(target.name + ".partial")
