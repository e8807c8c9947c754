"""Shared constructions for the test suite."""

from __future__ import annotations

import numpy as np

from staralg import (
    MatrixStarAlgebra,
    full_matrix_algebra,
    generate_algebra,
)
from staralg.numerics import kron


def diag_algebra(n: int) -> MatrixStarAlgebra:
    """The algebra of diagonal matrices inside M_n."""
    gens = [np.diag(np.eye(n)[i]).astype(complex) for i in range(n - 1)]
    return generate_algebra(gens, n)


def left_factor(d1: int, d2: int) -> MatrixStarAlgebra:
    """M_{d1} tensor 1 inside M_{d1*d2}."""
    full = full_matrix_algebra(d1)
    gens = [kron(b, np.eye(d2)) for b in full.basis]
    return generate_algebra(gens, d1 * d2)


def right_factor(d1: int, d2: int) -> MatrixStarAlgebra:
    """1 tensor M_{d2} inside M_{d1*d2}."""
    full = full_matrix_algebra(d2)
    gens = [kron(np.eye(d1), b) for b in full.basis]
    return generate_algebra(gens, d1 * d2)


def matrix_unit(n: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((n, n), dtype=complex)
    e[i, j] = 1.0
    return e
