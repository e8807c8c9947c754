"""States on matrix *-algebras and the joint-extension solver.

A state is represented by an ambient density matrix: ``phi(x) = tr(density
@ x)`` for x in the algebra.  Restriction keeps the density and merely
points at the smaller algebra; construction from functional data uses the
canonical in-span representer, whose ambient positivity is equivalent to
positivity of the functional on the algebra.

``extend_state`` decides whether prescribed marginals on two subalgebras
admit a joint density matrix on the ambient algebra.  It runs Dykstra's
alternating projections between the affine set of the marginal constraints
and the spectahedron {rho >= 0, tr rho = 1}, and resolves each problem into

* ``Feasible`` -- a joint density is produced and its marginal residual
  re-checked independently of the solver;
* ``InfeasibleCertified`` -- an exact refusal witness is produced: either
  an inconsistent linear relation among the constraint observables, or a
  separating observable in their span whose forced expectation exceeds its
  largest eigenvalue by more than 10x eps_verify;
* ``Undecided`` -- the iteration stalled or hit max_iter without either.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .algebra import MatrixStarAlgebra, mutually_commute
from .errors import (
    AmbientMismatch,
    InvalidIsomorphism,
    InvalidState,
    NotCommuting,
    NotSubalgebra,
    ShapeMismatch,
)
from .numerics import (
    DEFAULT_TOL,
    Tolerances,
    dagger,
    hermitian_to_rvec,
    hs_norm,
    is_hermitian,
    rvec_to_hermitian,
)

__all__ = [
    "AlgebraState",
    "ExtensionOutcome",
    "canonical_trace_state",
    "state_from_values",
    "state_from_density",
    "restrict",
    "is_faithful",
    "extend_state",
    "extend_state_batch",
    "marginal_residual",
    "product_state",
    "is_product_across",
]

ExtensionStatus = Literal["Feasible", "InfeasibleCertified", "Undecided"]


@dataclass(eq=False)
class AlgebraState:
    """Positive unital functional on an algebra, via an ambient density."""

    algebra: MatrixStarAlgebra
    density: np.ndarray

    def __post_init__(self) -> None:
        self.density = np.asarray(self.density, dtype=complex)
        n = self.algebra.ambient_dim
        if self.density.shape != (n, n):
            raise ShapeMismatch(f"density shape {self.density.shape}, ambient {n}")

    def expect(self, x: np.ndarray) -> complex:
        return complex(np.trace(self.density @ np.asarray(x, dtype=complex)))

    def expect_basis(self) -> np.ndarray:
        """Values on the algebra basis, phi(b_a)."""
        return np.einsum("ij,aji->a", self.density, self.algebra.basis)

    def validate(self, tol: Tolerances = DEFAULT_TOL) -> None:
        if not is_hermitian(self.density, tol):
            raise InvalidState("density is not Hermitian")
        evals = np.linalg.eigvalsh(0.5 * (self.density + dagger(self.density)))
        if evals[0] < -tol.eps_psd * max(1.0, evals[-1]):
            raise InvalidState(f"density is not positive (eigenvalue {evals[0]:.3e})")
        if abs(float(np.real(np.trace(self.density))) - 1.0) > 1e-10:
            raise InvalidState("density does not have unit trace")

    def is_faithful(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return is_faithful(self, self.algebra, tol)


def is_faithful(
    state: AlgebraState,
    algebra: MatrixStarAlgebra | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> bool:
    """Nondegeneracy of the inner product phi(x* y) over the algebra basis."""
    algebra = state.algebra if algebra is None else algebra
    basis = algebra.basis
    gram = np.einsum("ij,akj,bki->ab", state.density, basis.conj(), basis)
    gram = 0.5 * (gram + dagger(gram))
    evals = np.linalg.eigvalsh(gram)
    return bool(evals[0] > tol.eps_psd * max(1.0, evals[-1]))


def canonical_trace_state(algebra: MatrixStarAlgebra) -> AlgebraState:
    """The normalized trace, which is faithful on every algebra."""
    n = algebra.ambient_dim
    return AlgebraState(algebra, np.eye(n, dtype=complex) / n)


def state_from_values(
    algebra: MatrixStarAlgebra, values: np.ndarray, tol: Tolerances = DEFAULT_TOL
) -> AlgebraState:
    """State with prescribed basis values phi(b_a).

    The density is the canonical in-span representer sum_a phi(b_a) b_a*;
    for a positive unital functional this is a genuine density matrix,
    which validation confirms.
    """
    values = np.asarray(values, dtype=complex)
    if values.shape != (algebra.dim,):
        raise ShapeMismatch(f"expected {algebra.dim} basis values, got {values.shape}")
    rep = np.tensordot(values, dagger(algebra.basis), axes=(0, 0))
    state = AlgebraState(algebra, rep)
    state.validate(tol)
    return state


def state_from_density(
    algebra: MatrixStarAlgebra, rho: np.ndarray, tol: Tolerances = DEFAULT_TOL
) -> AlgebraState:
    """State read off an ambient density matrix; the density is kept as is."""
    state = AlgebraState(algebra, np.asarray(rho, dtype=complex))
    state.validate(tol)
    return state


def restrict(state: AlgebraState, sub: MatrixStarAlgebra) -> AlgebraState:
    """Same density, smaller algebra; values on the subalgebra are unchanged."""
    if sub.ambient_dim != state.algebra.ambient_dim:
        raise NotSubalgebra("restriction target lives in a different ambient algebra")
    return AlgebraState(sub, state.density)


# ---------------------------------------------------------------------------
# joint extension
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ExtensionOutcome:
    """Result of a joint-extension problem.

    ``density`` is the joint density matrix when feasible.  ``certificate``
    carries the infeasibility witness: kind ``inconsistent_constraints``
    with an exact null relation among the constraint observables, or kind
    ``separating_observable`` with the observable, its forced expectation,
    its largest eigenvalue and the normalized gap; both kinds also carry
    the marginal pair that was refused.  ``residual`` is the final marginal
    residual (max norm).
    """

    status: ExtensionStatus
    density: np.ndarray | None = None
    certificate: dict | None = None
    iterations: int = 0
    residual: float = float("nan")


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    b, n = v.shape
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1)
    ks = np.arange(1, n + 1)
    positive = u - (css - 1.0) / ks > 0
    rho = positive.sum(axis=1)
    rho = np.maximum(rho, 1)
    theta = (css[np.arange(b), rho - 1] - 1.0) / rho
    return np.maximum(v - theta[:, None], 0.0)


def _project_spectahedron(x: np.ndarray, n: int) -> np.ndarray:
    """Rows are rvec coordinates; project onto {rho >= 0, tr rho = 1}.

    This is the exact metric projection: the spectrum is projected onto the
    probability simplex in the eigenbasis, which clips negative directions
    and restores unit trace simultaneously.
    """
    mats = rvec_to_hermitian(x, n)
    w, v = np.linalg.eigh(mats)
    w = _project_simplex(w)
    mats = np.einsum("bik,bk,bjk->bij", v, w, v.conj())
    return hermitian_to_rvec(mats)


def marginal_residual(rho: np.ndarray, states: Sequence[AlgebraState]) -> float:
    """Largest deviation of the density's marginals from the given states."""
    worst = 0.0
    for s in states:
        diff = np.einsum("ij,aji->a", np.asarray(rho, dtype=complex), s.algebra.basis)
        worst = max(worst, float(np.abs(diff - s.expect_basis()).max()))
    return worst


def extend_state(
    state1: AlgebraState,
    state2: AlgebraState,
    ambient_dim: int | None = None,
    tol: Tolerances = DEFAULT_TOL,
    max_iter: int = 20000,
) -> ExtensionOutcome:
    """Joint density matrix with the two given marginals, or a refusal.

    The solver is symmetric in its arguments and its feasible densities are
    re-checked against both marginals independently before being returned.
    ``ambient_dim``, if given, must match the shared ambient of the two
    algebras; it is only a cross-check.
    """
    if ambient_dim is not None and ambient_dim != state1.algebra.ambient_dim:
        raise AmbientMismatch(
            f"requested ambient {ambient_dim}, marginals live in "
            f"{state1.algebra.ambient_dim}"
        )
    return extend_state_batch([(state1, state2)], tol, max_iter)[0]


def extend_state_batch(
    pairs: Sequence[tuple[AlgebraState, AlgebraState]],
    tol: Tolerances = DEFAULT_TOL,
    max_iter: int = 20000,
) -> list[ExtensionOutcome]:
    """Solve many joint-extension problems over one algebra pair at once.

    Every pair must involve the same two algebras so the constraint matrix
    is shared; the problems then run in lockstep with batched
    eigendecompositions, which is how the randomized sweeps stay cheap.
    """
    if not pairs:
        return []
    a1, a2 = pairs[0][0].algebra, pairs[0][1].algebra
    n = a1.ambient_dim
    if a2.ambient_dim != n:
        raise AmbientMismatch("marginals live in different ambient algebras")
    for s1, s2 in pairs:
        for s, a in ((s1, a1), (s2, a2)):
            if s.algebra is not a and not np.array_equal(s.algebra.basis, a.basis):
                raise AmbientMismatch("all pairs must share the same algebra pair")
        s1.validate(tol)
        s2.validate(tol)

    h_mats = np.concatenate([a1.hermitian_basis, a2.hermitian_basis], axis=0)
    c_mat = hermitian_to_rvec(h_mats)
    targets = np.stack(
        [
            np.concatenate(
                [
                    np.real(np.einsum("ij,aji->a", s1.density, a1.hermitian_basis)),
                    np.real(np.einsum("ij,aji->a", s2.density, a2.hermitian_basis)),
                ]
            )
            for s1, s2 in pairs
        ]
    )
    u_svd, s_svd, vt_svd = np.linalg.svd(c_mat, full_matrices=False)
    rank = int(np.count_nonzero(s_svd > 1e-12 * s_svd[0]))
    u_r, s_r, vt_r = u_svd[:, :rank], s_svd[:rank], vt_svd[:rank]

    b = len(pairs)
    outcomes: list[ExtensionOutcome | None] = [None] * b
    active = np.ones(b, dtype=bool)

    # affine consistency first: an exact relation sum_k u_k h_k = 0 with
    # sum_k u_k t_k != 0 rules out any solution, Hermitian or not
    x_ls = (targets @ u_r / s_r) @ vt_r
    resid_vec = x_ls @ c_mat.T - targets
    bad = np.linalg.norm(resid_vec, axis=1) > 10 * tol.eps_verify
    for i in np.nonzero(bad)[0]:
        u = resid_vec[i]
        rel_norm = float(hs_norm(np.tensordot(u, h_mats, axes=(0, 0))))
        violation = float(u @ targets[i])
        # sound refusal: densities have HS norm <= 1, so the relation must
        # dominate its own observable residual to rule them all out
        if rel_norm >= 0.1 * abs(violation):
            continue
        outcomes[i] = ExtensionOutcome(
            status="InfeasibleCertified",
            certificate={
                "kind": "inconsistent_constraints",
                "relation": u,
                "relation_observable_norm": rel_norm,
                "violation": violation,
                # any unit-trace PSD matrix has HS norm <= 1, so it misses
                # the forced value by at least this margin
                "gap": abs(violation) - rel_norm,
                "witness_states": (pairs[i][0], pairs[i][1]),
            },
        )
        active[i] = False

    x = np.tile(hermitian_to_rvec(np.eye(n) / n), (b, 1))
    p_corr = np.zeros_like(x)
    q_corr = np.zeros_like(x)
    prev = x.copy()
    quiet = np.zeros(b, dtype=int)
    pinv_t = (u_r / s_r) @ vt_r  # (K, D): residual @ pinv_t corrects the affine part

    it = 0
    while it < max_iter and active.any():
        it += 1
        idx = np.nonzero(active)[0]
        y = x[idx] + p_corr[idx]
        a_pt = y - ((y @ c_mat.T) - targets[idx]) @ pinv_t
        p_corr[idx] = y - a_pt
        z = a_pt + q_corr[idx]
        b_pt = _project_spectahedron(z, n)
        q_corr[idx] = z - b_pt
        x[idx] = b_pt

        if it % 25 == 0:
            # feasibility: the PSD iterate already satisfies the marginals
            m_resid = np.abs(b_pt @ c_mat.T - targets[idx]).max(axis=1)
            done = m_resid <= tol.eps_verify
            for j, i in enumerate(idx[done]):
                outcomes[i] = ExtensionOutcome(
                    status="Feasible",
                    density=rvec_to_hermitian(b_pt[done][j], n),
                    iterations=it,
                    residual=float(m_resid[done][j]),
                )
                active[i] = False
            live = ~done
            if live.any():
                _try_certificates(
                    a_pt[live] - b_pt[live],
                    idx[live],
                    pairs,
                    targets,
                    h_mats,
                    (u_r, s_r, vt_r),
                    outcomes,
                    active,
                    tol,
                    it,
                )
            # stall: essentially no movement across four consecutive checks
            idx2 = np.nonzero(active)[0]
            change = np.linalg.norm(x[idx2] - prev[idx2], axis=1)
            quiet[idx2] = np.where(change < 1e-12, quiet[idx2] + 1, 0)
            for i in idx2[quiet[idx2] >= 4]:
                resid = float(np.abs(x[i] @ c_mat.T - targets[i]).max())
                outcomes[i] = ExtensionOutcome(
                    status="Undecided", iterations=it, residual=resid
                )
                active[i] = False
            prev = x.copy()

    for i in np.nonzero(active)[0]:
        resid = float(np.abs(x[i] @ c_mat.T - targets[i]).max())
        outcomes[i] = ExtensionOutcome(status="Undecided", iterations=it, residual=resid)
    return outcomes  # type: ignore[return-value]


def _try_certificates(
    deltas, idx, pairs, targets, h_mats, svd, outcomes, active, tol, it
):
    """Separating-observable test on the current affine/PSD gap directions.

    Each direction is replaced by an exact combination h = sum_k u_k h_k of
    constraint observables; any density matching the marginals must give h
    the expectation sum_k u_k t_k, which none can if that value exceeds the
    largest eigenvalue of h by more than the certification margin.
    """
    u_r, s_r, vt_r = svd
    w = deltas @ vt_r.T
    norms = np.linalg.norm(w, axis=1)
    ok = norms > 1e-12
    if not ok.any():
        return
    u_coef = (w[ok] / s_r) @ u_r.T
    h_dirs = np.tensordot(u_coef, h_mats, axes=(1, 0))
    h_norms = np.linalg.norm(hermitian_to_rvec(h_dirs), axis=1)
    forced = np.einsum("bk,bk->b", u_coef, targets[idx[ok]])
    lam_max = np.linalg.eigvalsh(h_dirs)[:, -1]
    gaps = (forced - lam_max) / np.maximum(h_norms, 1e-300)
    hit = gaps >= 10 * tol.eps_verify
    for j in np.nonzero(hit)[0]:
        i = idx[ok][j]
        scale = h_norms[j]
        outcomes[i] = ExtensionOutcome(
            status="InfeasibleCertified",
            certificate={
                "kind": "separating_observable",
                "observable": h_dirs[j] / scale,
                "coefficients": u_coef[j] / scale,
                "forced_value": float(forced[j] / scale),
                "max_eigenvalue": float(lam_max[j] / scale),
                "gap": float(gaps[j]),
                "witness_states": (pairs[i][0], pairs[i][1]),
            },
            iterations=it,
        )
        active[i] = False


# ---------------------------------------------------------------------------
# product states
# ---------------------------------------------------------------------------


def product_state(
    state1: AlgebraState,
    state2: AlgebraState,
    iso,
    tol: Tolerances = DEFAULT_TOL,
) -> AlgebraState:
    """State on the join acting as phi1(x) phi2(y) on products x y.

    ``iso`` is the product isomorphism between the join and the tensor
    product of the two algebras; the resulting density is the canonical
    in-span representer on the join, which extends both marginals and is
    faithful there whenever both inputs are.
    """
    for factor, state in ((iso.factor1, state1), (iso.factor2, state2)):
        if factor.ambient_dim != state.algebra.ambient_dim or not np.array_equal(
            factor.basis, state.algebra.basis
        ):
            raise InvalidIsomorphism("isomorphism does not match the states' algebras")
    vals1 = state1.expect_basis()
    vals2 = state2.expect_basis()
    joint_vals = iso.to_tensor.T @ np.kron(vals1, vals2)
    rep = np.tensordot(joint_vals, dagger(iso.join.basis), axes=(0, 0))
    state = AlgebraState(iso.join, rep)
    state.validate(tol)
    return state


def is_product_across(
    state: AlgebraState,
    a1: MatrixStarAlgebra,
    a2: MatrixStarAlgebra,
    tol: Tolerances = DEFAULT_TOL,
) -> bool:
    """Whether phi(xy) = phi(x) phi(y) for all basis pairs of the algebras."""
    if not mutually_commute(a1, a2, tol):
        raise NotCommuting("product criterion needs mutually commuting algebras")
    rho = state.density
    prods = np.einsum("ij,ajk,bki->ab", rho, a1.basis, a2.basis)
    v1 = np.einsum("ij,aji->a", rho, a1.basis)
    v2 = np.einsum("ij,aji->a", rho, a2.basis)
    return bool(np.abs(prods - np.outer(v1, v2)).max() <= tol.eps_verify)