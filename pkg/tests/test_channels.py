"""Completely positive maps on subalgebras: Choi/Kraus/Stinespring
calculus, duals on densities, measurement and preparation operations,
tensor products, composition, and ambient extension.

Oracles: round-trips re-apply the reconstructed map to matrix units;
Choi positivity is recomputed from eigenvalues; the transpose map is the
canonical non-CP rejection case with Choi eigenvalue -1.
"""

from __future__ import annotations

import numpy as np
import pytest

from conftest import diag_algebra, left_factor, matrix_unit
from staralg import (
    ProjectiveMeasurement,
    build_channel,
    channel_from_kraus,
    choi,
    compose,
    dual_on_states,
    extend_to_ambient,
    full_matrix_algebra,
    generate_algebra,
    identity_channel,
    is_completely_positive,
    is_faithful_map,
    kraus_from_choi,
    luders_operation,
    map_from_choi,
    slice_map,
    state_prep_operation,
    stinespring_dilation,
    superop_from_kraus,
    tensor_channel,
)
from staralg.channels import superop_from_function
from staralg.numerics import dagger, hs_norm, is_psd, kron
from staralg.sampling import (
    random_density,
    random_faithful_nonselective_channel,
    random_luders_channel,
)


def random_kraus_channel(n, terms, rng):
    """A random nonselective map T(X) = sum W* X W with sum W* W = I."""
    ops = rng.standard_normal((terms, n, n)) + 1j * rng.standard_normal((terms, n, n))
    total = sum(dagger(w) @ w for w in ops)
    vals, vecs = np.linalg.eigh(total)
    inv_sqrt = vecs @ np.diag(vals ** -0.5) @ dagger(vecs)
    ops = np.stack([w @ inv_sqrt for w in ops])
    return channel_from_kraus(ops, n)


class TestChoi:
    def test_identity_choi_is_maximally_entangled_projector(self):
        c = choi(identity_channel(2))
        assert abs(np.trace(c).real - 2.0) <= 1e-12
        assert np.linalg.matrix_rank(c, tol=1e-9) == 1
        assert is_psd(c)

    def test_trace_map_choi_is_half_identity(self):
        a = full_matrix_algebra(2)
        act = superop_from_function(lambda x: np.trace(x) / 2 * np.eye(2), a, 2)
        t = build_channel(a, 2, act)
        np.testing.assert_allclose(choi(t), np.eye(4) / 2, atol=1e-12)

    def test_random_kraus_choi_is_psd(self):
        rng = np.random.default_rng(113)
        t = random_kraus_channel(3, 4, rng)
        evals = np.linalg.eigvalsh(choi(t))
        assert evals.min() >= -1e-12

    def test_transpose_choi_has_minus_one_eigenvalue(self):
        a = full_matrix_algebra(2)
        t = build_channel(a, 2, superop_from_function(lambda x: x.T, a, 2))
        evals = np.linalg.eigvalsh(choi(t))
        assert abs(evals.min() + 1.0) <= 1e-6
        assert not is_completely_positive(t)
        assert not t.cp_certified


class TestKrausFromChoi:
    def test_identity_single_kraus(self):
        ks = kraus_from_choi(choi(identity_channel(2)), 2, 2)
        assert len(ks.operators) == 1
        w = ks.operators[0]
        # proportional to the identity up to phase
        assert hs_norm(w - w[0, 0] * np.eye(2)) <= 1e-10
        assert abs(abs(w[0, 0]) - 1.0) <= 1e-10

    def test_luders_kraus_reproduce_action(self):
        m = ProjectiveMeasurement(
            np.stack([np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)])
        )
        t = luders_operation(m)
        ks = kraus_from_choi(choi(t), 2, 2)
        assert len(ks.operators) == 2
        # oracle: verify T(X) = sum W* X W on all four matrix units
        for i in range(2):
            for j in range(2):
                e = matrix_unit(2, i, j)
                recon = sum(dagger(w) @ e @ w for w in ks.operators)
                assert hs_norm(recon - t.apply(e)) <= 1e-10

    def test_half_identity_choi_has_rank_four_kraus(self):
        ks = kraus_from_choi(np.eye(4, dtype=complex) / 2, 2, 2)
        assert len(ks.operators) == 4
        comp = sum(dagger(w) @ w for w in ks.operators)
        assert hs_norm(comp - np.eye(2)) <= 1e-10


class TestRoundTrips:
    def test_choi_kraus_map_roundtrip(self):
        rng = np.random.default_rng(127)
        for n in (2, 3):
            t = random_kraus_channel(n, 3, rng)
            c = choi(t)
            ks = kraus_from_choi(c, n, n)
            action = superop_from_kraus(ks.operators)
            c2 = choi(build_channel(full_matrix_algebra(n), n, action))
            assert hs_norm(c - c2) <= 1e-10

    def test_map_from_choi_inverts_choi(self):
        rng = np.random.default_rng(131)
        t = random_kraus_channel(3, 2, rng)
        action = map_from_choi(choi(t), 3, 3)
        assert hs_norm(action - t.action) <= 1e-10


class TestStinespring:
    def test_identity_dilation_is_trivial(self):
        sd = stinespring_dilation(identity_channel(2))
        assert sd.rank == 1
        v = sd.isometry
        assert hs_norm(v - v[0, 0] * np.eye(2)) <= 1e-10

    def test_tracial_prep_dilation(self):
        prep = state_prep_operation(np.eye(2, dtype=complex) / 2)
        sd = stinespring_dilation(prep)
        assert sd.rank == 4
        v = sd.isometry
        assert hs_norm(dagger(v) @ v - np.eye(2)) <= 1e-8
        # oracle: residual of T(X) = V*(X (x) 1_r)V on matrix units
        for i in range(2):
            for j in range(2):
                e = matrix_unit(2, i, j)
                rhs = dagger(v) @ kron(e, np.eye(sd.rank)) @ v
                assert hs_norm(prep.apply(e) - rhs) <= 1e-8

    def test_luders_two_projections_rank_two(self):
        m = ProjectiveMeasurement(
            np.stack([np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)])
        )
        sd = stinespring_dilation(luders_operation(m))
        assert sd.rank == 2

    def test_isometry_for_random_nonselective(self):
        rng = np.random.default_rng(137)
        t = random_kraus_channel(3, 3, rng)
        sd = stinespring_dilation(t)
        v = sd.isometry
        assert hs_norm(dagger(v) @ v - np.eye(3)) <= 1e-8
        for i in range(3):
            for j in range(3):
                e = matrix_unit(3, i, j)
                rhs = dagger(v) @ kron(e, np.eye(sd.rank)) @ v
                assert hs_norm(t.apply(e) - rhs) <= 1e-8


class TestDualOnStates:
    def test_identity_leaves_densities_fixed(self):
        rng = np.random.default_rng(139)
        d = dual_on_states(identity_channel(3))
        rho = random_density(3, rng)
        assert hs_norm(d.apply(rho) - rho) <= 1e-12

    def test_unital_map_preserves_trace(self):
        rng = np.random.default_rng(149)
        t = random_kraus_channel(3, 3, rng)
        d = dual_on_states(t)
        rho = random_density(3, rng)
        assert abs(np.trace(d.apply(rho)).real - 1.0) <= 1e-10

    def test_luders_dual_keeps_diagonal_part(self):
        m = ProjectiveMeasurement(
            np.stack([np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)])
        )
        d = dual_on_states(luders_operation(m))
        rho = np.array([[0.7, 0.2], [0.2, 0.3]], dtype=complex)
        np.testing.assert_allclose(d.apply(rho), np.diag([0.7, 0.3]), atol=1e-12)

    def test_prep_dual_outputs_prescribed_density(self):
        rng = np.random.default_rng(151)
        sigma = random_density(2, rng)
        d = dual_on_states(state_prep_operation(sigma))
        for _ in range(5):
            rho = random_density(2, rng)
            assert hs_norm(d.apply(rho) - sigma) <= 1e-10


class TestStatePrepOperation:
    def test_tracial_prep_sends_unit_to_half_identity(self):
        t = state_prep_operation(np.eye(2, dtype=complex) / 2)
        np.testing.assert_allclose(
            t.apply(matrix_unit(2, 0, 0)), np.eye(2) / 2, atol=1e-12
        )

    def test_choi_psd_for_random_state(self):
        rng = np.random.default_rng(157)
        t = state_prep_operation(random_density(2, rng))
        assert is_psd(choi(t))
        assert t.cp_certified and t.unital


class TestLudersOperation:
    def test_trivial_measurement_is_identity(self):
        t = luders_operation(ProjectiveMeasurement(np.stack([np.eye(2, dtype=complex)])))
        rng = np.random.default_rng(163)
        x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        assert hs_norm(t.apply(x) - x) <= 1e-12

    def test_diagonal_projections_cut_off_diagonal(self):
        m = ProjectiveMeasurement(
            np.stack([np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)])
        )
        t = luders_operation(m)
        x = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
        np.testing.assert_allclose(t.apply(x), np.diag([1.0, 4.0]), atol=1e-12)

    def test_random_complete_family_unital_idempotent(self):
        rng = np.random.default_rng(167)
        t = random_luders_channel(full_matrix_algebra(4), rng)
        assert hs_norm(t.apply(np.eye(4, dtype=complex)) - np.eye(4)) <= 1e-10
        x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert hs_norm(t.apply(t.apply(x)) - t.apply(x)) <= 1e-10

    def test_rejects_non_resolution(self):
        from staralg import InvalidMeasurement

        with pytest.raises(InvalidMeasurement):
            ProjectiveMeasurement(
                np.stack([np.diag([1.0, 0.0]).astype(complex)])
            ).validate()


class TestTensorChannel:
    def test_identity_tensor_identity_is_identity(self):
        t = tensor_channel(identity_channel(2), identity_channel(3))
        rng = np.random.default_rng(173)
        x = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        assert hs_norm(t.apply(x) - x) <= 1e-12

    def test_prep_tensor_identity_acts_as_slice(self):
        rng = np.random.default_rng(179)
        sigma = random_density(2, rng)
        prep = state_prep_operation(sigma)
        t = tensor_channel(prep, identity_channel(2))
        # oracle: evaluation on the product basis X (x) Y
        for i in range(2):
            for j in range(2):
                x = matrix_unit(2, i, j)
                y = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
                got = t.apply(kron(x, y))
                expected = kron(np.trace(sigma @ x) * np.eye(2), y)
                assert hs_norm(got - expected) <= 1e-10

    def test_faithful_pair_gives_faithful_tensor(self):
        rng = np.random.default_rng(181)
        t1 = random_faithful_nonselective_channel(full_matrix_algebra(2), rng)
        t2 = random_faithful_nonselective_channel(full_matrix_algebra(3), rng)
        tt = tensor_channel(t1, t2)
        assert tt.faithful
        assert is_faithful_map(tt)
        # oracle: minimum eigenvalue of the Kronecker completeness sum
        comp = sum(w @ dagger(w) for w in tt.kraus.operators)
        assert np.linalg.eigvalsh(comp).min() > 1e-9

    def test_non_faithful_factor_breaks_faithfulness(self):
        rng = np.random.default_rng(191)
        nf = channel_from_kraus(np.stack([np.diag([1.0, 0.0]).astype(complex)]), 2)
        t2 = random_faithful_nonselective_channel(full_matrix_algebra(3), rng)
        tt = tensor_channel(nf, t2)
        assert not is_faithful_map(tt)
        comp = sum(w @ dagger(w) for w in tt.kraus.operators)
        assert np.linalg.eigvalsh(comp).min() <= 1e-9


class TestIsFaithfulMap:
    def test_identity_is_faithful(self):
        assert is_faithful_map(identity_channel(3))

    def test_invertible_kraus_is_faithful(self):
        rng = np.random.default_rng(193)
        t = random_kraus_channel(2, 2, rng)
        # generic Kraus operators are invertible, so the map kills no state
        assert is_faithful_map(t)

    def test_rank_deficient_prep_is_not_faithful(self):
        t = state_prep_operation(np.diag([1.0, 0.0]).astype(complex))
        assert not is_faithful_map(t)


class TestSliceMap:
    def test_collapses_second_factor_through_state(self):
        rng = np.random.default_rng(197)
        sigma = random_density(3, rng)
        l = slice_map(2, sigma)
        x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        got = l.apply(kron(x, matrix_unit(3, 0, 0)))
        assert hs_norm(got - np.trace(sigma @ matrix_unit(3, 0, 0)) * x) <= 1e-10

    def test_unit_goes_to_unit(self):
        l = slice_map(2, np.eye(2, dtype=complex) / 2)
        assert hs_norm(l.apply(np.eye(4, dtype=complex)) - np.eye(2)) <= 1e-12

    def test_intertwines_with_tensor_channels(self):
        rng = np.random.default_rng(199)
        sigma = random_density(2, rng)
        t = random_kraus_channel(2, 2, rng)
        l = slice_map(2, sigma)
        t_tensor_id = tensor_channel(t, identity_channel(2))
        # oracle: evaluation on random product elements
        for _ in range(4):
            x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            y = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            lhs = l.apply(t_tensor_id.apply(kron(x, y)))
            rhs = t.apply(l.apply(kron(x, y)))
            assert hs_norm(lhs - rhs) <= 1e-9


class TestExtendToAmbient:
    def test_full_domain_keeps_the_action(self):
        t = identity_channel(3)
        ext = extend_to_ambient(t)
        assert hs_norm(ext.action - t.action) <= 1e-12

    def test_identity_on_diagonal_extends_to_luders(self):
        d = diag_algebra(2)
        idd = build_channel(d, 2, superop_from_function(lambda x: x, d, 2))
        ext = extend_to_ambient(idd)
        assert ext.domain.dim == 4
        # oracle: the conditional-expectation formula gives the diagonal cut
        x = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
        np.testing.assert_allclose(ext.apply(x), np.diag([1.0, 4.0]), atol=1e-10)

    def test_extension_restricts_to_original(self):
        rng = np.random.default_rng(211)
        d = diag_algebra(3)
        lud = random_luders_channel(d, rng)
        ext = extend_to_ambient(lud)
        for b in d.basis:
            assert hs_norm(ext.apply(b) - lud.apply(b)) <= 1e-9


class TestCompose:
    def test_identity_is_neutral(self):
        rng = np.random.default_rng(223)
        t = random_kraus_channel(2, 2, rng)
        c = compose(identity_channel(2), t)
        assert hs_norm(c.action - t.action) <= 1e-12

    def test_luders_is_idempotent_under_composition(self):
        m = ProjectiveMeasurement(
            np.stack([np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)])
        )
        lud = luders_operation(m)
        c = compose(lud, lud)
        assert hs_norm(c.action - lud.action) <= 1e-12

    def test_composition_choi_stays_psd(self):
        rng = np.random.default_rng(227)
        t1 = random_kraus_channel(3, 2, rng)
        t2 = random_kraus_channel(3, 3, rng)
        c = compose(t1, t2)
        assert is_psd(choi(c))
        assert c.cp_certified


class TestChannelValidation:
    def test_kraus_without_completeness_is_not_an_operation(self):
        w = np.stack([0.5 * np.eye(2, dtype=complex)])
        t = channel_from_kraus(w, 2)
        assert not t.unital
        assert not t.operation

    def test_nonselective_map_is_an_operation(self):
        rng = np.random.default_rng(229)
        t = random_kraus_channel(2, 2, rng)
        assert t.cp_certified and t.unital and t.operation
