import itertools

import numpy as np
import pytest

from tpgdecode.code import ParityCheckMatrix, load_alist
from tpgdecode.harness import resolve_code, resolve_params
from tpgdecode.polytope import build_qrd

# the 3 x 6 worked example
SMALL_H = [
    [1, 1, 1, 0, 0, 0],
    [0, 0, 1, 1, 0, 0],
    [0, 0, 0, 1, 1, 1],
]

SMALL_ALIST = """6 3
2 3
1 1 2 2 1 1
3 2 3
1 0
1 0
1 2
2 3
3 0
3 0
1 2 3
3 4 0
4 5 6
"""

# its constraint matrices under the canonical subset order
EXAMPLE_Q = np.array([
    [1, 0, 0, 1, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, 1, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 1, 0, 0, 1],
    [0, 0, 0, 0, 0, 0, 0, 1, 0, 1],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, 1],
])
EXAMPLE_R = np.array([
    [0, 1, 1, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 1, 0, 0, 0, 0, 0, 0, 0],
    [1, 1, 0, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0, 0, 1, 1, 0],
    [0, 0, 0, 0, 0, 0, 1, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 1, 1, 0, 0],
])
# (check, subset) -> constraint number, all 1-based
EXAMPLE_ELL = [
    (1, (1,)), (1, (2,)), (1, (3,)), (1, (1, 2, 3)),
    (2, (3,)), (2, (4,)),
    (3, (4,)), (3, (5,)), (3, (6,)), (3, (4, 5, 6)),
]


def brute_force_codewords(H) -> np.ndarray:
    H = np.asarray(H)
    n = H.shape[1]
    words = np.array(list(itertools.product([0, 1], repeat=n)), dtype=np.uint8)
    return words[~((words.astype(int) @ H.T) % 2).any(axis=1)]


@pytest.fixture(scope="session")
def small_code():
    return ParityCheckMatrix.from_dense(SMALL_H)


@pytest.fixture(scope="session")
def small_mats(small_code):
    return build_qrd(small_code)


@pytest.fixture(scope="session")
def code96():
    return resolve_code("regular_96_3_6")[0]


@pytest.fixture(scope="session")
def code204():
    return resolve_code("regular_204_3_6")[0]


@pytest.fixture(scope="session")
def trained204():
    return resolve_params("tpg_regular_204_3_6")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
