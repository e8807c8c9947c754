"""Unital *-subalgebras of a full matrix algebra.

An algebra is stored as an orthonormal basis (Hilbert-Schmidt inner product)
of its linear span.  Generation closes a generating set under products and
adjoints, adjoining the unit; structure analysis produces the block
decomposition  W* A W = sum_k M_{n_k} (x) 1_{m_k}  through explicitly
constructed matrix units.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import isqrt

import numpy as np

from .errors import (
    AmbientMismatch,
    IllConditioned,
    ShapeMismatch,
    ValidationError,
)
from .numerics import (
    DEFAULT_TOL,
    Tolerances,
    dagger,
    hermitian_to_rvec,
    hs_norm,
    null_space,
    orthonormalize,
    rvec_to_hermitian,
    vec,
)

__all__ = [
    "MatrixStarAlgebra",
    "StructureDecomposition",
    "AlgebraBlock",
    "full_matrix_algebra",
    "scalar_algebra",
    "generate_algebra",
    "join",
    "commutant",
    "mutually_commute",
    "center_and_factor",
    "matrix_units",
    "structure_decomposition",
    "conditional_expectation",
]


@dataclass(eq=False)
class MatrixStarAlgebra:
    """Unital *-subalgebra of M_n, held as an HS-orthonormal basis.

    ``basis`` has shape (dim, n, n).  Invariants: the identity lies in the
    span, the span is closed under adjoints and products, and the basis is
    orthonormal.  Construction-site helpers guarantee these; ``validate``
    re-checks them on demand (the CLI runs it on parsed input).
    """

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self) -> None:
        self.basis = np.asarray(self.basis, dtype=complex)
        if self.basis.ndim != 3 or self.basis.shape[1:] != (self.ambient_dim, self.ambient_dim):
            raise ShapeMismatch(
                f"basis shape {self.basis.shape} does not match ambient dimension {self.ambient_dim}"
            )

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def basis_vecs(self) -> np.ndarray:
        """(dim, n^2) array whose rows are vec(b_i)."""
        return self.basis.transpose(0, 2, 1).reshape(self.dim, -1)

    def coefficients(self, x: np.ndarray) -> np.ndarray:
        """Coefficients of the HS-orthogonal projection of x onto the span."""
        return self.basis_vecs.conj() @ vec(x)

    def project(self, x: np.ndarray) -> np.ndarray:
        """HS-orthogonal projection of x onto the span."""
        return np.tensordot(self.coefficients(x), self.basis, axes=(0, 0))

    def distance_to_span(self, x: np.ndarray) -> float:
        return hs_norm(np.asarray(x, dtype=complex) - self.project(x))

    def contains(self, x: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> bool:
        scale = max(1.0, hs_norm(x))
        return self.distance_to_span(x) <= tol.eps_algebra * scale

    def contains_algebra(self, other: "MatrixStarAlgebra", tol: Tolerances = DEFAULT_TOL) -> bool:
        return all(self.contains(b, tol) for b in other.basis)

    @cached_property
    def hermitian_basis(self) -> np.ndarray:
        """Real-orthonormal basis of the Hermitian part of the span.

        The span is adjoint closed, so its Hermitian part has real dimension
        equal to ``dim``; the result has shape (dim, n, n).
        """
        h = 0.5 * (self.basis + dagger(self.basis))
        k = (self.basis - dagger(self.basis)) / 2j
        cand = hermitian_to_rvec(np.concatenate([h, k], axis=0))
        _, s, vt = np.linalg.svd(cand, full_matrices=False)
        rank = int(np.count_nonzero(s > 1e-10 * s[0]))
        if rank != self.dim:
            raise IllConditioned(
                f"Hermitian part has ambiguous rank {rank}, expected {self.dim}"
            )
        return rvec_to_hermitian(vt[:rank], self.ambient_dim)

    def validate(self, tol: Tolerances = DEFAULT_TOL) -> None:
        """Re-check orthonormality, the unit, adjoint and product closure."""
        n, d = self.ambient_dim, self.dim
        gram = self.basis_vecs.conj() @ self.basis_vecs.T
        if np.abs(gram - np.eye(d)).max() > tol.eps_algebra:
            raise ValidationError("basis is not HS-orthonormal")
        if not self.contains(np.eye(n), tol):
            raise ValidationError("identity is not in the span")
        for b in self.basis:
            if self.distance_to_span(dagger(b)) > tol.eps_algebra:
                raise ValidationError("span is not closed under adjoints")
        prods = np.einsum("aij,bjk->abik", self.basis, self.basis).reshape(-1, n, n)
        for p in prods:
            if self.distance_to_span(p) > tol.eps_algebra * max(1.0, hs_norm(p)):
                raise ValidationError("span is not closed under products")


def full_matrix_algebra(n: int) -> MatrixStarAlgebra:
    """The full algebra M_n with the matrix-unit basis."""
    basis = np.zeros((n * n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            basis[i * n + j, i, j] = 1.0
    return MatrixStarAlgebra(n, basis)


def scalar_algebra(n: int) -> MatrixStarAlgebra:
    """The scalars C.1 inside M_n."""
    return MatrixStarAlgebra(n, (np.eye(n) / np.sqrt(n))[None, :, :])


def generate_algebra(
    generators,
    ambient_dim: int,
    tol: Tolerances = DEFAULT_TOL,
) -> MatrixStarAlgebra:
    """Smallest unital *-subalgebra of M_n containing the generators.

    The unit and all adjoints are adjoined, then the span is closed under
    pairwise products; closure is declared once the dimension is stable for
    two consecutive rounds.
    """
    n = ambient_dim
    mats = [np.eye(n, dtype=complex)]
    for g in generators:
        g = np.asarray(g, dtype=complex)
        if g.shape != (n, n):
            raise ShapeMismatch(f"generator of shape {g.shape} in ambient dimension {n}")
        mats.append(g)
        mats.append(dagger(g))
    basis = orthonormalize(np.stack(mats))
    stable = 0
    while stable < 2:
        prods = np.einsum("aij,bjk->abik", basis, basis).reshape(-1, n, n)
        new_basis = orthonormalize(np.concatenate([basis, prods], axis=0))
        stable = stable + 1 if new_basis.shape[0] == basis.shape[0] else 0
        basis = new_basis
        if basis.shape[0] > n * n:
            raise IllConditioned("closure exceeded the ambient dimension bound")
    return MatrixStarAlgebra(n, basis)


def _check_same_ambient(a1: MatrixStarAlgebra, a2: MatrixStarAlgebra) -> None:
    if a1.ambient_dim != a2.ambient_dim:
        raise AmbientMismatch(
            f"ambient dimensions differ: {a1.ambient_dim} vs {a2.ambient_dim}"
        )


def join(
    a1: MatrixStarAlgebra,
    a2: MatrixStarAlgebra,
    tol: Tolerances = DEFAULT_TOL,
) -> MatrixStarAlgebra:
    """Algebra generated by the union of the two spans.

    For commuting pairs the join equals the span of the pairwise products
    X.Y, which is asserted.
    """
    _check_same_ambient(a1, a2)
    out = generate_algebra(
        np.concatenate([a1.basis, a2.basis], axis=0), a1.ambient_dim, tol
    )
    if mutually_commute(a1, a2, tol):
        n = a1.ambient_dim
        prods = np.einsum("aij,bjk->abik", a1.basis, a2.basis).reshape(-1, n, n)
        prod_dim = orthonormalize(prods).shape[0]
        assert prod_dim == out.dim, (
            f"commuting join must equal the span of products ({prod_dim} vs {out.dim})"
        )
    return out


def commutant(a: MatrixStarAlgebra, tol: Tolerances = DEFAULT_TOL) -> MatrixStarAlgebra:
    """Relative commutant of the span inside the ambient matrix algebra.

    X commutes with every b iff vec(X) lies in the joint kernel of the
    stacked operators 1 (x) b - b^T (x) 1.
    """
    n = a.ambient_dim
    eye = np.eye(n)
    blocks = [np.kron(eye, b) - np.kron(b.T, eye) for b in a.basis]
    kernel = null_space(np.concatenate(blocks, axis=0), scale=1.0)
    mats = np.stack(
        [kernel[:, k].reshape((n, n), order="F") for k in range(kernel.shape[1])]
    ) if kernel.shape[1] else np.zeros((0, n, n), dtype=complex)
    return MatrixStarAlgebra(n, mats)


def mutually_commute(
    a1: MatrixStarAlgebra,
    a2: MatrixStarAlgebra,
    tol: Tolerances = DEFAULT_TOL,
) -> bool:
    """True when every pair of basis elements commutes within eps_algebra."""
    _check_same_ambient(a1, a2)
    left = np.einsum("aij,bjk->abik", a1.basis, a2.basis)
    right = np.einsum("bij,ajk->abik", a2.basis, a1.basis)
    resid = np.abs(left - right).max()
    return bool(resid <= tol.eps_algebra)


# ---------------------------------------------------------------------------
# structure analysis
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class AlgebraBlock:
    """One central block: minimal central projection plus its matrix units.

    ``units[a, b]`` is the (a, b) matrix unit of the block factor, so
    units[a, b] units[c, d] = delta_{bc} units[a, d] and the diagonal units
    sum to ``central_projection``.  ``size`` is the factor size n_k and
    ``multiplicity`` the ambient multiplicity m_k = rank(z_k)/n_k.
    """

    central_projection: np.ndarray
    units: np.ndarray
    size: int
    multiplicity: int


@dataclass(eq=False)
class StructureDecomposition:
    """Blocks [(n_k, m_k), ...] and the intertwiner realizing them.

    ``intertwiner`` W is unitary with W* a W block diagonal, block k acting
    as x (x) 1_{m_k}.  ``offsets[k]`` is the first row of block k.
    """

    blocks: list[tuple[int, int]]
    intertwiner: np.ndarray
    offsets: list[int] = field(default_factory=list)


def center_and_factor(
    a: MatrixStarAlgebra,
    tol: Tolerances = DEFAULT_TOL,
    seed: int = 0,
):
    """Center of the algebra, factor flag, and minimal central projections.

    Returns (center, is_factor, projections).  The projections are obtained
    from the spectral clusters of a generic Hermitian central element; the
    draw is retried until the clusters are unambiguous, then verified to be
    idempotent, central and complete.
    """
    n, d = a.ambient_dim, a.dim
    comm = np.einsum("aij,bjk->abik", a.basis, a.basis) - np.einsum(
        "bij,ajk->abik", a.basis, a.basis
    )
    # coefficient-space kernel: sum_i c_i [b_i, b_j] = 0 for all j
    k_mat = comm.transpose(1, 2, 3, 0).reshape(d * n * n, d)
    coeffs = null_space(k_mat, scale=1.0)
    center_basis = np.tensordot(coeffs.T, a.basis, axes=(1, 0))
    center = MatrixStarAlgebra(n, center_basis)
    if center.dim == 1:
        return center, True, [np.eye(n, dtype=complex)]
    projections = _minimal_projections_of_abelian(center, tol, seed)
    return center, False, projections


def _cluster_sorted(values: np.ndarray, gap: float) -> list[np.ndarray]:
    """Split sorted values into clusters at gaps larger than ``gap``."""
    groups = []
    start = 0
    for i in range(1, values.size + 1):
        if i == values.size or values[i] - values[i - 1] > gap:
            groups.append(np.arange(start, i))
            start = i
    return groups


def _minimal_projections_of_abelian(
    center: MatrixStarAlgebra,
    tol: Tolerances,
    seed: int,
) -> list[np.ndarray]:
    """Minimal idempotents of an abelian algebra via a generic element."""
    n, c = center.ambient_dim, center.dim
    herm = center.hermitian_basis
    rng = np.random.default_rng(seed)
    for _ in range(24):
        z = np.tensordot(rng.standard_normal(c), herm, axes=(0, 0))
        w, v = np.linalg.eigh(z)
        spread = max(w[-1] - w[0], 1.0)
        groups = _cluster_sorted(w, 1e-6 * spread)
        if len(groups) != c:
            continue
        intra = max(float(w[g].max() - w[g].min()) for g in groups)
        inter = min(
            float(w[groups[i + 1]].min() - w[groups[i]].max())
            for i in range(len(groups) - 1)
        )
        if intra > 0 and inter < 1e3 * intra:
            continue
        projections = []
        ok = True
        for g in groups:
            cols = v[:, g]
            p = cols @ dagger(cols)
            if center.distance_to_span(p) > tol.eps_algebra * n:
                ok = False
                break
            projections.append(p)
        if not ok:
            continue
        total = sum(projections)
        if hs_norm(total - np.eye(n)) > tol.eps_algebra * n:
            continue
        return projections
    raise IllConditioned("could not separate the central spectrum into clusters")


def _block_compression(a: MatrixStarAlgebra, z: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the span of z.b over the algebra basis."""
    cut = np.einsum("ij,ajk->aik", z, a.basis)
    return orthonormalize(cut)


def matrix_units(
    a: MatrixStarAlgebra,
    tol: Tolerances = DEFAULT_TOL,
    seed: int = 0,
) -> list[AlgebraBlock]:
    """Matrix units for every central block of the algebra.

    For each minimal central projection z the block algebra z.A is a full
    matrix factor M_{n_k} with some ambient multiplicity; a generic Hermitian
    block element yields its minimal diagonal projections, and polar-
    normalized corners give the off-diagonal partial isometries.
    """
    n = a.ambient_dim
    _, _, projections = center_and_factor(a, tol, seed)
    blocks = []
    rng = np.random.default_rng(seed + 1)
    for z in projections:
        block_basis = _block_compression(a, z)
        bdim = block_basis.shape[0]
        size = isqrt(bdim)
        if size * size != bdim:
            raise IllConditioned(f"central block dimension {bdim} is not a square")
        rank = int(round(float(np.real(np.trace(z)))))
        if rank % size != 0:
            raise IllConditioned("block rank is not divisible by the factor size")
        mult = rank // size
        if size == 1:
            units = z[None, None, :, :].copy()
            blocks.append(AlgebraBlock(z, units, 1, mult))
            continue
        diag = _minimal_block_projections(block_basis, z, size, mult, rng, tol)
        corners = _corner_isometries(block_basis, diag, mult, rng)
        units = np.zeros((size, size, n, n), dtype=complex)
        for alpha in range(size):
            for beta in range(size):
                units[alpha, beta] = corners[alpha] @ dagger(corners[beta])
        _verify_units(units, z, tol)
        blocks.append(AlgebraBlock(z, units, size, mult))
    return blocks


def _minimal_block_projections(block_basis, z, size, mult, rng, tol):
    """Minimal projections of a factor block from a generic element."""
    n = z.shape[0]
    herm_part = orthonormalize(
        np.concatenate([0.5 * (block_basis + dagger(block_basis)),
                        (block_basis - dagger(block_basis)) / 2j], axis=0)
    )
    for _ in range(24):
        h = np.tensordot(rng.standard_normal(herm_part.shape[0]), herm_part, axes=(0, 0))
        h = 0.5 * (h + dagger(h))
        shift = 2.0 * hs_norm(h) + 1.0
        w, v = np.linalg.eigh(h + shift * z)
        inside = w > shift / 2.0
        wz, vz = w[inside], v[:, inside]
        if wz.size != size * mult:
            continue
        spread = max(float(wz[-1] - wz[0]), 1.0)
        groups = _cluster_sorted(wz, 1e-6 * spread)
        if len(groups) != size or any(g.size != mult for g in groups):
            continue
        projections = [vz[:, g] @ dagger(vz[:, g]) for g in groups]
        vecs = block_basis.transpose(0, 2, 1).reshape(block_basis.shape[0], -1)

        def in_span(p: np.ndarray) -> bool:
            proj = np.tensordot(vecs.conj() @ vec(p), block_basis, axes=(0, 0))
            return hs_norm(p - proj) <= tol.eps_algebra * n

        if all(in_span(p) for p in projections):
            return projections
    raise IllConditioned("could not isolate minimal projections of a factor block")


def _corner_isometries(block_basis, diag, mult, rng):
    """Partial isometries u_a with u_a* u_a = e_11 and u_a u_a* = e_aa."""
    e11 = diag[0]
    corners = [e11]
    for p in diag[1:]:
        v = None
        best = 0.0
        for c in block_basis:
            cand = p @ c @ e11
            norm = hs_norm(cand)
            if norm > best:
                best, v = norm, cand
        for _ in range(8):
            if best > 1e-8:
                break
            c = np.tensordot(
                rng.standard_normal(block_basis.shape[0])
                + 1j * rng.standard_normal(block_basis.shape[0]),
                block_basis,
                axes=(0, 0),
            )
            cand = p @ c @ e11
            if hs_norm(cand) > best:
                best, v = hs_norm(cand), cand
        if v is None or best <= 1e-8:
            raise IllConditioned("vanishing corner while building matrix units")
        lam = hs_norm(v) ** 2 / mult
        corners.append(v / np.sqrt(lam))
    return corners


def _verify_units(units, z, tol):
    size = units.shape[0]
    n = z.shape[0]
    total = sum(units[alpha, alpha] for alpha in range(size))
    if hs_norm(total - z) > tol.eps_verify * n:
        raise IllConditioned("diagonal matrix units do not resolve the block unit")
    for a in range(size):
        for b in range(size):
            lhs = units[a, b] @ units[b, a]
            if hs_norm(lhs - units[a, a]) > tol.eps_verify * n:
                raise IllConditioned("matrix-unit relations fail numerically")


def structure_decomposition(
    a: MatrixStarAlgebra,
    tol: Tolerances = DEFAULT_TOL,
    seed: int = 0,
) -> StructureDecomposition:
    """Block decomposition of the algebra with an explicit intertwiner.

    Returns blocks [(n_k, m_k), ...] with sum n_k m_k = ambient_dim and
    sum n_k^2 = dim, plus the unitary W whose conjugation sends every
    algebra element to a direct sum of x_k (x) 1_{m_k}.
    """
    n = a.ambient_dim
    # the full algebra needs no work and the identity is the natural witness
    if a.dim == n * n:
        return StructureDecomposition([(n, 1)], np.eye(n, dtype=complex), [0])
    blocks = matrix_units(a, tol, seed)
    columns = []
    block_dims = []
    offsets = []
    offset = 0
    for blk in blocks:
        e11 = blk.units[0, 0]
        w, v = np.linalg.eigh(0.5 * (e11 + dagger(e11)))
        chi = v[:, w > 0.5]
        if chi.shape[1] != blk.multiplicity:
            raise IllConditioned("range of the corner projection has wrong dimension")
        for alpha in range(blk.size):
            base = blk.units[alpha, 0] if alpha else e11
            for s in range(blk.multiplicity):
                columns.append(base @ chi[:, s])
        block_dims.append((blk.size, blk.multiplicity))
        offsets.append(offset)
        offset += blk.size * blk.multiplicity
    w_mat = np.stack(columns, axis=1)
    if hs_norm(dagger(w_mat) @ w_mat - np.eye(n)) > tol.eps_verify * n:
        raise IllConditioned("assembled intertwiner is not unitary")
    decomp = StructureDecomposition(block_dims, w_mat, offsets)
    _verify_structure(a, decomp, tol)
    return decomp


def _verify_structure(a, decomp, tol):
    n = a.ambient_dim
    w = decomp.intertwiner
    if sum(nk * mk for nk, mk in decomp.blocks) != n:
        raise IllConditioned("block dimensions do not add up to the ambient dimension")
    if sum(nk * nk for nk, mk in decomp.blocks) != a.dim:
        raise IllConditioned("block dimensions do not add up to the algebra dimension")
    for b in a.basis:
        rotated = dagger(w) @ b @ w
        resid = _block_form_residual(rotated, decomp)
        if resid > tol.eps_verify * max(1.0, hs_norm(b)):
            raise IllConditioned(
                f"conjugated basis element is not in block form (residual {resid:.2e})"
            )


def _block_form_residual(rotated, decomp):
    """Distance of W*bW from the direct-sum-of-x(x)1 form."""
    n = rotated.shape[0]
    model = np.zeros_like(rotated)
    for (nk, mk), off in zip(decomp.blocks, decomp.offsets):
        sub = rotated[off : off + nk * mk, off : off + nk * mk]
        cube = sub.reshape(nk, mk, nk, mk)
        x = np.einsum("asbs->ab", cube) / mk
        model[off : off + nk * mk, off : off + nk * mk] = np.kron(x, np.eye(mk))
    return hs_norm(rotated - model)


def conditional_expectation(a: MatrixStarAlgebra, tol: Tolerances = DEFAULT_TOL):
    """Trace-compatible conditional expectation onto the algebra.

    The HS-orthogonal projection onto the span of a unital *-subalgebra is
    completely positive, unital, idempotent, faithful and bimodular; the
    returned channel carries certified flags.
    """
    from .channels import build_channel

    v = a.basis_vecs
    action = v.T @ v.conj()
    return build_channel(full_matrix_algebra(a.ambient_dim), a.ambient_dim, action, tol)
