from __future__ import annotations

import os

import numpy as np
import pytest

from magic_decay.hypergraph import Hypergraph
from magic_decay.stabilizer import BasisStore

RUN_SLOW = os.getenv("MAGICDECAY_RUN_SLOW", "").lower() in {"1", "true", "yes", "on"}


def pytest_collection_modifyitems(config, items):
    if RUN_SLOW:
        return
    skip_slow = pytest.mark.skip(reason="set MAGICDECAY_RUN_SLOW=1 to run slow checks")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def store(tmp_path_factory) -> BasisStore:
    """One basis cache per test session, outside the user's cache directory."""
    return BasisStore(tmp_path_factory.mktemp("basis-cache"), allow_large=False)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def random_hypergraph(rng: np.random.Generator, n: int, edges: int, max_degree: int = 3) -> Hypergraph:
    masks = []
    for _ in range(edges):
        size = int(rng.integers(1, max_degree + 1))
        vertices = rng.choice(n, size=min(size, n), replace=False)
        masks.append(int(sum(1 << int(v) for v in vertices)))
    return Hypergraph(n, tuple(masks))


@pytest.fixture
def make_hypergraph(rng):
    def build(n: int, edges: int, max_degree: int = 3) -> Hypergraph:
        return random_hypergraph(rng, n, edges, max_degree)

    return build
