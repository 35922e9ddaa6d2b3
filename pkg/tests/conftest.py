import numpy as np
import pytest

from bssmf.matrixcore import ObservationMask

# the 6x6 instance with a non-unique NMF but unique bounded factorization:
# X = W H with W^T = 3*A_{2/3}, H = 3*A_{1/3}, bounds [0, 3]
EXAMPLE_H = np.array(
    [
        [1.0, 3, 3, 1, 0, 0],
        [3.0, 1, 0, 0, 1, 3],
        [0.0, 0, 1, 3, 3, 1],
    ]
)
EXAMPLE_W = np.array(
    [
        [2.0, 3, 3, 2, 0, 0],
        [3.0, 2, 0, 0, 2, 3],
        [0.0, 0, 2, 3, 3, 2],
    ]
).T
EXAMPLE_X = EXAMPLE_W @ EXAMPLE_H


@pytest.fixture
def example6x6():
    return EXAMPLE_X, EXAMPLE_W, EXAMPLE_H


def random_mask(rng, m, n, density=0.5, weighted=False):
    cells = [(i, j) for i in range(m) for j in range(n) if rng.uniform() < density]
    if not cells:
        cells = [(0, 0)]
    w = rng.uniform(0.1, 1.0, size=len(cells)) if weighted else np.ones(len(cells))
    return ObservationMask.from_entries(m, n, [(i, j, wk) for (i, j), wk in zip(cells, w)])
