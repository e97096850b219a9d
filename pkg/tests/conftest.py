import numpy as np
import pytest

from treeseed.dataset import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_dataset(rng, n, d, dup=0, scale=10.0):
    X = rng.normal(scale=scale, size=(n, d))
    if dup:
        X[rng.integers(0, n, dup)] = X[rng.integers(0, n, dup)]
    return Dataset(X)


def tv(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


# criterion number -> (title, passed, detail), filled by test_acceptance
CRITERIA: dict = {}


def record(number: int, title: str, passed: bool, detail: str) -> None:
    CRITERIA[number] = (title, bool(passed), detail)
    print(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, ok, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
