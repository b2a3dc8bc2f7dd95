"""Shared reference implementations used as independent oracles.

Everything here is deliberately written the slow, literal way so the
library's optimized paths are checked against definitions rather than
against themselves.
"""

from __future__ import annotations

import numpy as np
import pytest

from relayosc.variation import sign_changes


def wrapped_rotation_count(v) -> int:
    """Literal cyclic variation: sup over rotations of the wrapped vector."""
    x = np.asarray(v, dtype=float)
    n = x.size
    return max(sign_changes(np.concatenate([x[i:], x[: i + 1]])) for i in range(n))


def brute_max_sign_changes(v) -> int:
    """Maximal alternations over all sign assignments of the zero entries."""
    x = np.asarray(v, dtype=float)
    zeros = np.flatnonzero(x == 0.0)
    best = -1
    for mask in range(2 ** zeros.size):
        y = x.copy()
        for j, idx in enumerate(zeros):
            y[idx] = 1.0 if (mask >> j) & 1 else -1.0
        best = max(best, sign_changes(y))
    return best


def brute_max_cyclic_sign_changes(v) -> int:
    """Maximal cyclic alternations over all sign assignments of zeros."""
    x = np.asarray(v, dtype=float)
    zeros = np.flatnonzero(x == 0.0)
    best = -1
    for mask in range(2 ** zeros.size):
        y = x.copy()
        for j, idx in enumerate(zeros):
            y[idx] = 1.0 if (mask >> j) & 1 else -1.0
        best = max(best, wrapped_rotation_count(y))
    return best


def column_cyclic_changes(matrix: np.ndarray) -> np.ndarray:
    """Cyclic sign changes of every column, vectorized over columns.

    Zero entries are deleted per column; the count walks the rows once
    and adds the wraparound comparison, matching cyclic_sign_changes for
    columns with at least one nonzero (all-zero columns report 0, which
    is fine for <= comparisons).
    """
    signs = np.sign(matrix)
    cols = matrix.shape[1]
    first = np.zeros(cols)
    prev = np.zeros(cols)
    count = np.zeros(cols, dtype=np.int64)
    for row in signs:
        live = row != 0.0
        first = np.where((first == 0.0) & live, row, first)
        count += (prev != 0.0) & live & (row != prev)
        prev = np.where(live, row, prev)
    count += (prev != 0.0) & (first != 0.0) & (first != prev)
    return count


def column_cyclic_diff(matrix: np.ndarray) -> np.ndarray:
    return np.roll(matrix, -1, axis=0) - matrix


def direct_periodic_summation(sample_fn, period: int, terms: int) -> np.ndarray:
    """Periodic summation by plain nested loops, the definition itself."""
    out = np.zeros(period)
    for i in range(period):
        for k in range(terms):
            out[i] += sample_fn(i + k * period)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)
