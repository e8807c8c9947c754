"""Dense complex-matrix numerics shared by every other module.

Matrices are numpy ``complex128`` arrays.  Vectorization is column-stacking
throughout, so ``vec(A X B) = (B^T kron A) vec(X)``.  Every comparison routes
through a :class:`Tolerances` instance so suites can tighten or loosen the
numerical contract in one place.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import IllConditioned, NonHermitian, ShapeMismatch

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "dagger",
    "vec",
    "unvec",
    "hs_inner",
    "hs_norm",
    "op_norm",
    "is_hermitian",
    "eig_hermitian",
    "is_psd",
    "kron",
    "null_space",
    "orthonormalize",
    "haar_unitary",
    "hermitian_to_rvec",
    "rvec_to_hermitian",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used across the toolkit.

    eps_herm     Hermiticity residual allowed on inputs.
    eps_psd      floor on eigenvalues when deciding positivity.
    eps_algebra  residual allowed on algebraic identities (closure,
                 commutation, projections onto spans).
    eps_verify   residual allowed when certifying derived objects
                 (isomorphisms, extensions, dilations).
    """

    eps_herm: float = 1e-9
    eps_psd: float = 1e-9
    eps_algebra: float = 1e-9
    eps_verify: float = 1e-8

    def __post_init__(self) -> None:
        for name in ("eps_herm", "eps_psd", "eps_algebra", "eps_verify"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


DEFAULT_TOL = Tolerances()


def _as_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.conj(np.swapaxes(np.asarray(a), -1, -2))


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec`."""
    cols = rows if cols is None else cols
    v = np.asarray(v, dtype=complex)
    if v.size != rows * cols:
        raise ShapeMismatch(f"cannot reshape length {v.size} into ({rows},{cols})")
    return v.reshape((rows, cols), order="F")


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product tr(a* b)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.sum(np.conj(a) * b))


def hs_norm(a: np.ndarray) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(a))


def op_norm(a: np.ndarray) -> float:
    """Operator (spectral) norm."""
    return float(np.linalg.norm(a, 2))


def is_hermitian(h: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> bool:
    h = _as_square(h)
    scale = max(1.0, hs_norm(h))
    return hs_norm(h - dagger(h)) <= tol.eps_herm * scale


def eig_hermitian(h: np.ndarray, tol: Tolerances = DEFAULT_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvector columns).  Raises
    :class:`NonHermitian` when the input fails the Hermiticity check.
    """
    h = _as_square(h)
    if not is_hermitian(h, tol):
        raise NonHermitian("matrix is not Hermitian within eps_herm")
    w, v = np.linalg.eigh(h)
    return w, v


def is_psd(h: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True when the Hermitian part has all eigenvalues >= -eps_psd."""
    h = _as_square(h)
    if not is_hermitian(h, tol):
        return False
    w = np.linalg.eigvalsh(0.5 * (h + dagger(h)))
    return bool(w.min() >= -tol.eps_psd)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product (delegates to numpy)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def null_space(
    mat: np.ndarray,
    rel_tol: float = 1e-9,
    gap_factor: float = 1e3,
    scale: float = 0.0,
) -> np.ndarray:
    """Orthonormal basis of the kernel of ``mat`` (columns).

    Singular values below rel_tol * max(sigma_max, scale) are treated as
    zero.  Callers whose matrix entries are O(1)-normalized should pass
    ``scale=1.0`` so an all-noise matrix reads as zero rather than as full
    rank.  The cut must be clean: the smallest kept singular value has to
    exceed the largest discarded one by ``gap_factor``, otherwise
    :class:`IllConditioned` is raised rather than guessing a rank.
    """
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2:
        raise ShapeMismatch("null_space expects a 2d array")
    n = mat.shape[1]
    if mat.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if max(smax, scale) == 0.0:
        return np.eye(n, dtype=complex)
    thresh = rel_tol * max(smax, scale)
    if smax <= thresh:
        return np.eye(n, dtype=complex)
    kept = s > thresh
    rank = int(np.count_nonzero(kept))
    if 0 < rank < s.size:
        below = s[rank:]
        largest_below = below[0]
        if largest_below > 0 and s[rank - 1] < gap_factor * largest_below:
            raise IllConditioned(
                "no clear spectral gap at the kernel threshold: "
                f"sigma_kept={s[rank - 1]:.3e}, sigma_dropped={largest_below:.3e}"
            )
    return dagger(vh[rank:, :]) if rank < n else np.zeros((n, 0), dtype=complex)


def orthonormalize(
    mats: np.ndarray,
    rel_tol: float = 1e-10,
    gap_factor: float = 1e3,
) -> np.ndarray:
    """Orthonormal basis (HS inner product) of the span of ``mats``.

    ``mats`` is an array of shape (k, n, m); the result has shape (r, n, m)
    with r the numerical rank of the span.  The rank cut must show a clean
    spectral gap, mirroring :func:`null_space`.
    """
    mats = np.asarray(mats, dtype=complex)
    if mats.ndim != 3:
        raise ShapeMismatch("orthonormalize expects an array of shape (k, n, m)")
    k, n, m = mats.shape
    if k == 0:
        return np.zeros((0, n, m), dtype=complex)
    rows = mats.reshape(k, n * m)
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.zeros((0, n, m), dtype=complex)
    kept = s > rel_tol * smax
    rank = int(np.count_nonzero(kept))
    if rank < s.size:
        largest_below = s[rank]
        if largest_below > 0 and s[rank - 1] < gap_factor * largest_below:
            raise IllConditioned(
                "span rank is ambiguous: "
                f"sigma_kept={s[rank - 1]:.3e}, sigma_dropped={largest_below:.3e}"
            )
    return vh[:rank, :].reshape(rank, n, m)


def _haar_from_rng(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    ph = d / np.abs(d)
    return q * ph


def haar_unitary(n: int, seed: int) -> np.ndarray:
    """Haar-distributed unitary, deterministic in ``seed``.

    Ginibre sample, QR, then the R-diagonal phase fix that makes the
    distribution exactly Haar.
    """
    if n < 1:
        raise ShapeMismatch("dimension must be at least 1")
    return _haar_from_rng(n, np.random.default_rng(seed))


@lru_cache(maxsize=64)
def _rvec_indices(n: int):
    return np.triu_indices(n, k=1)


def hermitian_to_rvec(h: np.ndarray) -> np.ndarray:
    """Isometry from Hermitian n x n matrices onto R^(n^2).

    Layout: diagonal (real), then sqrt(2) * real and sqrt(2) * imaginary
    parts of the strict upper triangle.  Preserves the HS inner product.
    """
    h = np.asarray(h, dtype=complex)
    n = h.shape[-1]
    iu = _rvec_indices(n)
    diag = np.real(h[..., np.arange(n), np.arange(n)])
    upper = h[..., iu[0], iu[1]]
    return np.concatenate(
        [diag, np.sqrt(2.0) * np.real(upper), np.sqrt(2.0) * np.imag(upper)],
        axis=-1,
    )


def rvec_to_hermitian(r: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`hermitian_to_rvec`."""
    r = np.asarray(r, dtype=float)
    iu = _rvec_indices(n)
    k = iu[0].size
    batch = r.shape[:-1]
    h = np.zeros(batch + (n, n), dtype=complex)
    h[..., np.arange(n), np.arange(n)] = r[..., :n]
    upper = (r[..., n : n + k] + 1j * r[..., n + k :]) / np.sqrt(2.0)
    h[..., iu[0], iu[1]] = upper
    h[..., iu[1], iu[0]] = np.conj(upper)
    return h
