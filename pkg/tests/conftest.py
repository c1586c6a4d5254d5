import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from bls_ridge.data import mnist_paths  # noqa: E402

FIXTURES = Path(__file__).resolve().parent / "fixtures"


def mnist_available() -> bool:
    return all(p.exists() for split in ("train", "test") for p in mnist_paths(split))


requires_mnist = pytest.mark.skipif(
    not mnist_available(), reason="MNIST files not found in the dataset cache"
)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture(scope="session")
def frozen():
    with np.load(FIXTURES / "frozen.npz") as z:
        return {k: z[k] for k in z.files}


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion."""

    def record(name: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
