"""Seeded random instances: algebras, algebra pairs, states, and channels.

Everything here is driven by an explicit ``numpy.random.Generator`` so the
randomized sweeps and the fuzzing front end are reproducible bit for bit.
Constructors that know the answer (block layout, split structure) return it
alongside the instance so tests can use it as an oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import MatrixStarAlgebra, full_matrix_algebra
from .channels import ChannelMap, build_channel, superop_from_kraus
from .errors import UnknownFamily
from .numerics import DEFAULT_TOL, Tolerances, dagger, _haar_from_rng, vec
from .states import AlgebraState, state_from_density

__all__ = [
    "PairInstance",
    "random_density",
    "random_pure_density",
    "random_hermitian",
    "canonical_block_algebra",
    "conjugate_algebra",
    "random_subalgebra",
    "tensor_pair",
    "cell_pair",
    "noncommuting_pair",
    "sample_state_pairs",
    "random_faithful_nonselective_channel",
    "random_prep_channel",
    "random_luders_channel",
    "FUZZ_FAMILIES",
    "fuzz_instances",
]


@dataclass(eq=False)
class PairInstance:
    """A sampled algebra pair plus whatever ground truth the sampler knows."""

    a1: MatrixStarAlgebra
    a2: MatrixStarAlgebra
    family: str
    meta: dict = field(default_factory=dict)


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_pure_density(n: int, rng: np.random.Generator) -> np.ndarray:
    return random_density(n, rng, rank=1)


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (g + dagger(g))


def canonical_block_algebra(blocks: list[tuple[int, int]], ambient_dim: int) -> MatrixStarAlgebra:
    """Block-diagonal algebra with prescribed (size, multiplicity) blocks.

    Block k contributes matrix units of size n_k repeated m_k times along
    the diagonal; the basis is orthonormal by construction.
    """
    if sum(nk * mk for nk, mk in blocks) != ambient_dim:
        raise ValueError("block dimensions do not fill the ambient space")
    basis = []
    offset = 0
    for nk, mk in blocks:
        for i in range(nk):
            for j in range(nk):
                m = np.zeros((ambient_dim, ambient_dim), dtype=complex)
                for s in range(mk):
                    m[offset + i * mk + s, offset + j * mk + s] = 1.0 / np.sqrt(mk)
                basis.append(m)
        offset += nk * mk
    return MatrixStarAlgebra(ambient_dim, np.stack(basis))


def conjugate_algebra(a: MatrixStarAlgebra, u: np.ndarray) -> MatrixStarAlgebra:
    return MatrixStarAlgebra(a.ambient_dim, np.einsum("ij,ajk,lk->ail", u, a.basis, u.conj()))


def _random_blocks(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Random block layout (n_k, m_k) with sum n_k m_k = n."""
    blocks = []
    rem = n
    while rem > 0:
        nk = int(rng.integers(1, min(3, rem) + 1))
        mk = int(rng.integers(1, rem // nk + 1))
        blocks.append((nk, mk))
        rem -= nk * mk
    return blocks


def random_subalgebra(
    n: int, rng: np.random.Generator
) -> tuple[MatrixStarAlgebra, list[tuple[int, int]]]:
    """Haar-conjugated block algebra in M_n, plus its true block layout."""
    blocks = _random_blocks(n, rng)
    alg = canonical_block_algebra(blocks, n)
    u = _haar_from_rng(n, rng)
    return conjugate_algebra(alg, u), blocks


def tensor_pair(
    d1: int, d2: int, rng: np.random.Generator | None = None
) -> PairInstance:
    """The pair (M_d1 (x) 1, 1 (x) M_d2), optionally Haar-conjugated."""
    n = d1 * d2
    eye1, eye2 = np.eye(d1), np.eye(d2)
    b1 = np.stack([np.kron(b, eye2 / np.sqrt(d2)) for b in full_matrix_algebra(d1).basis])
    b2 = np.stack([np.kron(eye1 / np.sqrt(d1), b) for b in full_matrix_algebra(d2).basis])
    a1 = MatrixStarAlgebra(n, b1)
    a2 = MatrixStarAlgebra(n, b2)
    meta: dict = {"d1": d1, "d2": d2}
    if rng is not None:
        u = _haar_from_rng(n, rng)
        a1, a2 = conjugate_algebra(a1, u), conjugate_algebra(a2, u)
        meta["conjugated"] = True
    return PairInstance(a1, a2, "tensor", meta)


def cell_pair(
    mu: np.ndarray,
    sizes1: list[int],
    sizes2: list[int],
    rng: np.random.Generator | None = None,
) -> PairInstance:
    """Commuting pair with prescribed joint multiplicity matrix.

    Cell (i, j) of the ambient space carries C^{sizes1[i]} (x) C^{sizes2[j]}
    (x) C^{mu[i,j]}, on which the first algebra acts in the first slot and
    the second algebra in the second; mu[i, j] = 0 deletes the cell, which
    breaks product position.  This one constructor therefore produces
    tensor pairs, annihilating pairs, and product-but-not-split pairs.
    """
    mu = np.asarray(mu, dtype=int)
    n_i, m_j = list(sizes1), list(sizes2)
    cells = {}
    offset = 0
    for i, ni in enumerate(n_i):
        for j, mj in enumerate(m_j):
            cnt = int(mu[i, j])
            if cnt == 0:
                continue
            cells[i, j] = offset
            offset += ni * mj * cnt
    n = offset
    # cell (i, j) carries C^{n_i} (x) C^{m_j * mu_ij}; algebra one is the
    # sum over j of E_pq (x) 1 per block row i, algebra two the mirror image
    basis1 = []
    for i, ni in enumerate(n_i):
        weight = sum(m_j[j] * int(mu[i, j]) for j in range(len(m_j)) if (i, j) in cells)
        for p in range(ni):
            for q in range(ni):
                g = np.zeros((n, n), dtype=complex)
                for j, mj in enumerate(m_j):
                    if (i, j) not in cells:
                        continue
                    off = cells[i, j]
                    width = mj * int(mu[i, j])
                    g[off + p * width : off + (p + 1) * width, off + q * width : off + (q + 1) * width] = np.eye(width)
                basis1.append(g / np.sqrt(weight))
    basis2 = []
    for j, mj in enumerate(m_j):
        weight = sum(n_i[i] * int(mu[i, j]) for i in range(len(n_i)) if (i, j) in cells)
        for r in range(mj):
            for s in range(mj):
                g = np.zeros((n, n), dtype=complex)
                unit = np.zeros((mj, mj))
                unit[r, s] = 1.0
                for i, ni in enumerate(n_i):
                    if (i, j) not in cells:
                        continue
                    off = cells[i, j]
                    cnt = int(mu[i, j])
                    size = ni * mj * cnt
                    g[off : off + size, off : off + size] = np.kron(
                        np.eye(ni), np.kron(unit, np.eye(cnt))
                    )
                basis2.append(g / np.sqrt(weight))
    a1 = MatrixStarAlgebra(n, np.stack(basis1))
    a2 = MatrixStarAlgebra(n, np.stack(basis2))
    a1.validate()
    a2.validate()
    meta = {"mu": mu, "sizes1": n_i, "sizes2": m_j}
    if rng is not None:
        u = _haar_from_rng(n, rng)
        a1, a2 = conjugate_algebra(a1, u), conjugate_algebra(a2, u)
        meta["conjugated"] = True
    return PairInstance(a1, a2, "cell", meta)


def noncommuting_pair(n: int, rng: np.random.Generator) -> PairInstance:
    """Generic non-commuting pair: a block algebra and a rotated copy."""
    for _ in range(32):
        a1, blocks1 = random_subalgebra(n, rng)
        a2, blocks2 = random_subalgebra(n, rng)
        from .algebra import mutually_commute

        if not mutually_commute(a1, a2):
            return PairInstance(a1, a2, "noncommuting", {"blocks1": blocks1, "blocks2": blocks2})
    raise UnknownFamily("failed to sample a non-commuting pair")  # pragma: no cover


def _central_projections_cached(a: MatrixStarAlgebra, tol: Tolerances):
    from .algebra import center_and_factor

    _, _, projs = center_and_factor(a, tol)
    return projs


def sample_state_pairs(
    a1: MatrixStarAlgebra,
    a2: MatrixStarAlgebra,
    count: int,
    rng: np.random.Generator,
    tol: Tolerances = DEFAULT_TOL,
) -> list[tuple[AlgebraState, AlgebraState]]:
    """State pairs for extension experiments, adversarial ones first.

    The head of the list pairs up central-projection states of the two
    algebras (these witness every annihilation obstruction), followed by
    the tracial pair and Ginibre-random densities restricted to each side.
    """
    n = a1.ambient_dim
    pairs: list[tuple[AlgebraState, AlgebraState]] = []
    projs1 = _central_projections_cached(a1, tol)
    projs2 = _central_projections_cached(a2, tol)
    for z1 in projs1:
        for z2 in projs2:
            if len(pairs) >= count:
                break
            s1 = state_from_density(a1, z1 / np.trace(z1).real)
            s2 = state_from_density(a2, z2 / np.trace(z2).real)
            pairs.append((s1, s2))
    while len(pairs) < count:
        draw = rng.integers(0, 4)
        if draw == 0:
            r1, r2 = random_pure_density(n, rng), random_pure_density(n, rng)
        elif draw == 1:
            r1, r2 = np.eye(n, dtype=complex) / n, random_density(n, rng)
        else:
            r1, r2 = random_density(n, rng), random_density(n, rng)
        pairs.append((state_from_density(a1, r1), state_from_density(a2, r2)))
    return pairs[:count]


def _expi(h: np.ndarray) -> np.ndarray:
    """Unitary exp(i h) of a Hermitian matrix via its spectral decomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)) @ dagger(v)


def _algebra_action(a: MatrixStarAlgebra, kraus: np.ndarray, tol: Tolerances) -> ChannelMap:
    v = a.basis_vecs
    action = superop_from_kraus(kraus) @ (v.T @ v.conj())
    channel = build_channel(a, a.ambient_dim, action, tol)
    return channel


def random_faithful_nonselective_channel(
    a: MatrixStarAlgebra,
    rng: np.random.Generator,
    n_terms: int = 3,
    tol: Tolerances = DEFAULT_TOL,
) -> ChannelMap:
    """Mixture of unitary conjugations by exponentials inside the algebra.

    T(x) = sum_k p_k u_k* x u_k with u_k = exp(i h_k), h_k Hermitian in the
    span; such a map leaves the algebra invariant and is unital, completely
    positive and faithful.
    """
    herm = a.hermitian_basis
    p = rng.random(n_terms) + 0.2
    p /= p.sum()
    kraus = []
    for k in range(n_terms):
        h = np.tensordot(rng.standard_normal(herm.shape[0]), herm, axes=(0, 0))
        kraus.append(np.sqrt(p[k]) * _expi(h))
    return _algebra_action(a, np.stack(kraus), tol)


def random_prep_channel(
    a: MatrixStarAlgebra,
    rng: np.random.Generator,
    faithful: bool = True,
    tol: Tolerances = DEFAULT_TOL,
) -> tuple[ChannelMap, AlgebraState]:
    """Discard-and-prepare on the algebra: x -> phi(x) 1, for a random phi."""
    n = a.ambient_dim
    rho = random_density(n, rng) if faithful else random_pure_density(n, rng)
    state = state_from_density(a, rho)
    rep = np.tensordot(state.expect_basis(), dagger(a.basis), axes=(0, 0))
    action = np.outer(vec(np.eye(n)), vec(rep).conj())
    return build_channel(a, n, action, tol), state


def random_luders_channel(
    a: MatrixStarAlgebra,
    rng: np.random.Generator,
    tol: Tolerances = DEFAULT_TOL,
) -> ChannelMap:
    """Nonselective measurement of a generic observable inside the algebra."""
    herm = a.hermitian_basis
    h = np.tensordot(rng.standard_normal(herm.shape[0]), herm, axes=(0, 0))
    w, v = np.linalg.eigh(h)
    spread = max(float(w[-1] - w[0]), 1.0)
    projections = []
    start = 0
    for i in range(1, w.size + 1):
        if i == w.size or w[i] - w[i - 1] > 1e-8 * spread:
            cols = v[:, start:i]
            projections.append(cols @ dagger(cols))
            start = i
    return _algebra_action(a, np.stack(projections), tol)


# ---------------------------------------------------------------------------
# fuzz families
# ---------------------------------------------------------------------------

FUZZ_FAMILIES = ("tensor_split", "shared_block", "haar_overlap", "factor_split")


def fuzz_instances(family: str, count: int, seed: int) -> list[PairInstance]:
    """Deterministic instance stream for one named family.

    tensor_split: Haar-conjugated pairs with rank-one multiplicity, so the
    whole hierarchy holds.  shared_block: pairs with an annihilating pair
    of central projections, so independence fails.  haar_overlap: generic
    non-commuting pairs.  factor_split: the first algebra is a factor, so
    the interpolation fast path applies.
    """
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        if family == "tensor_split":
            if rng.integers(0, 2) == 0:
                inst = tensor_pair(2, int(rng.integers(2, 4)), rng)
            else:
                inst = cell_pair(
                    np.array([[1, 1], [1, 1]]), [1, 2], [1, 2], rng
                )
            inst.family = family
        elif family == "shared_block":
            mu = np.array([[1, 1], [0, 1]]) if rng.integers(0, 2) == 0 else np.array([[1, 0], [0, 1]])
            inst = cell_pair(mu, [1, 2], [2, 1], rng)
            inst.family = family
            inst.meta["annihilating"] = True
        elif family == "haar_overlap":
            inst = noncommuting_pair(int(rng.integers(3, 6)), rng)
            inst.family = family
        elif family == "factor_split":
            inst = tensor_pair(int(rng.integers(2, 4)), 2, rng)
            inst.family = family
            inst.meta["factor_side"] = 1
        else:
            raise UnknownFamily(
                f"unknown family {family!r}; known: {', '.join(FUZZ_FAMILIES)}"
            )
        inst.meta["index"] = k
        out.append(inst)
    return out
