"""Subalgebra machinery: generation, commutants, center, block structure,
and conditional expectations.

Oracles: monomial closure by brute force for generated dimensions, an
entrywise commutation solve for commutants, and Choi positivity for the
conditional expectation.
"""

from __future__ import annotations

import numpy as np
import pytest

from conftest import diag_algebra, left_factor, matrix_unit, right_factor
from staralg import (
    MatrixStarAlgebra,
    ValidationError,
    center_and_factor,
    choi,
    commutant,
    conditional_expectation,
    full_matrix_algebra,
    generate_algebra,
    join,
    matrix_units,
    mutually_commute,
    scalar_algebra,
    structure_decomposition,
)
from staralg.numerics import dagger, hs_norm, is_psd, kron, vec


def monomial_closure_rank(generators, n, max_length=8):
    """Independent oracle: dimension of the span of all monomials in the
    generators and their adjoints up to the given word length."""
    letters = [np.eye(n, dtype=complex)]
    for g in generators:
        letters.append(np.asarray(g, dtype=complex))
        letters.append(dagger(g))
    words = [np.eye(n, dtype=complex)]
    frontier = [np.eye(n, dtype=complex)]
    for _ in range(max_length):
        frontier = [w @ l for w in frontier for l in letters[1:]]
        words.extend(frontier)
        if len(words) > 4 * n * n:
            break
    stacked = np.stack([vec(w) for w in words])
    return int(np.linalg.matrix_rank(stacked, tol=1e-9))


class TestGenerateAlgebra:
    def test_no_generators_gives_scalars(self):
        a = generate_algebra([], 2)
        assert a.dim == 1
        assert a.distance_to_span(np.eye(2, dtype=complex)) <= 1e-12

    def test_single_projection_gives_diagonal(self):
        a = generate_algebra([matrix_unit(2, 0, 0)], 2)
        assert a.dim == 2
        for d in (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])):
            assert a.distance_to_span(d.astype(complex)) <= 1e-10

    def test_generic_generator_gives_full_m4(self):
        rng = np.random.default_rng(31)
        x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert monomial_closure_rank([x], 4) == 16
        a = generate_algebra([x], 4)
        assert a.dim == 16

    def test_generated_dimension_matches_monomial_closure(self):
        rng = np.random.default_rng(37)
        for n in (2, 3, 4):
            g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            g = (g + dagger(g)) / 2
            assert generate_algebra([g], n).dim == monomial_closure_rank([g], n)

    def test_basis_is_orthonormal_and_closed(self):
        rng = np.random.default_rng(41)
        x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        a = generate_algebra([x + dagger(x)], 3)
        a.validate()  # orthonormality, unit, adjoint and product closure

    def test_contains_unit(self):
        a = diag_algebra(3)
        assert a.distance_to_span(np.eye(3, dtype=complex)) <= 1e-10


class TestJoin:
    def test_diagonal_tensor_factors_in_m4(self):
        a1 = generate_algebra([kron(matrix_unit(2, 0, 0), np.eye(2))], 4)
        a2 = generate_algebra([kron(np.eye(2), matrix_unit(2, 0, 0))], 4)
        j = join(a1, a2)
        # oracle: the joint span is exactly the diagonal algebra of M_4
        assert j.dim == 4
        for i in range(4):
            d = np.diag(np.eye(4)[i]).astype(complex)
            assert j.distance_to_span(d) <= 1e-10

    def test_tensor_factors_generate_everything(self):
        j = join(left_factor(2, 2), right_factor(2, 2))
        assert j.dim == 16


class TestCommutant:
    def test_commutant_of_scalars_is_full(self):
        assert commutant(scalar_algebra(3)).dim == 9

    def test_commutant_of_full_is_scalars(self):
        assert commutant(full_matrix_algebra(3)).dim == 1

    def test_commutant_of_left_factor_is_right_factor(self):
        a = left_factor(2, 2)
        c = commutant(a)
        # oracle: solve X b = b X entrywise for every basis element b
        rows = [kron(np.eye(4), b) - kron(b.T, np.eye(4)) for b in a.basis]
        kernel_dim = 16 - np.linalg.matrix_rank(np.vstack(rows), tol=1e-9)
        assert kernel_dim == 4
        assert c.dim == 4
        rf = right_factor(2, 2)
        for b in c.basis:
            assert rf.distance_to_span(b) <= 1e-9

    def test_double_commutant_identity_random(self):
        from staralg.sampling import random_subalgebra

        rng = np.random.default_rng(43)
        for _ in range(10):
            a, _ = random_subalgebra(int(rng.integers(2, 7)), rng)
            bicom = commutant(commutant(a))
            assert bicom.dim == a.dim
            for b in bicom.basis:
                assert a.distance_to_span(b) <= 1e-8


class TestCenterAndFactor:
    def test_full_algebra_is_a_factor(self):
        center, is_factor, projections = center_and_factor(full_matrix_algebra(4))
        assert is_factor
        assert center.dim == 1
        assert len(projections) == 1
        assert hs_norm(projections[0] - np.eye(4)) <= 1e-10

    def test_diagonal_algebra_is_its_own_center(self):
        center, is_factor, projections = center_and_factor(diag_algebra(2))
        assert not is_factor
        assert center.dim == 2
        got = sorted(tuple(np.round(np.diag(p).real).astype(int)) for p in projections)
        assert got == [(0, 1), (1, 0)]


class TestMatrixUnits:
    def test_full_algebra_single_block(self):
        blocks = matrix_units(full_matrix_algebra(4))
        assert [(b.size, b.multiplicity) for b in blocks] == [(4, 1)]

    def test_scalars_have_multiplicity_n(self):
        blocks = matrix_units(scalar_algebra(3))
        assert [(b.size, b.multiplicity) for b in blocks] == [(1, 3)]

    def test_diagonal_twin_block(self):
        # {x (+) x : x in M_2} inside M_4: one 2x2 block, multiplicity 2
        gens = [np.block([[matrix_unit(2, i, j), np.zeros((2, 2))],
                          [np.zeros((2, 2)), matrix_unit(2, i, j)]])
                for i in range(2) for j in range(2)]
        a = generate_algebra(gens, 4)
        assert a.dim == 4
        blocks = matrix_units(a)
        assert [(b.size, b.multiplicity) for b in blocks] == [(2, 2)]

    def test_two_block_sum_in_m5(self):
        # M_2 (+) M_3 block algebra: central projections of ranks 2 and 3
        gens = []
        for i in range(2):
            for j in range(2):
                m = np.zeros((5, 5), dtype=complex)
                m[i, j] = 1.0
                gens.append(m)
        for i in range(3):
            for j in range(3):
                m = np.zeros((5, 5), dtype=complex)
                m[2 + i, 2 + j] = 1.0
                gens.append(m)
        a = generate_algebra(gens, 5)
        blocks = matrix_units(a)
        ranks = sorted(int(round(np.trace(b.central_projection).real)) for b in blocks)
        assert ranks == [2, 3]
        assert sorted((b.size, b.multiplicity) for b in blocks) == [(2, 1), (3, 1)]

    def test_units_satisfy_multiplication_rules(self):
        a = diag_algebra(3)
        for block in matrix_units(a):
            units = block.units
            k = block.size
            for i in range(k):
                for j in range(k):
                    for p in range(k):
                        for q in range(k):
                            prod = units[i][j] @ units[p][q]
                            expected = units[i][q] if j == p else np.zeros_like(prod)
                            assert hs_norm(prod - expected) <= 1e-9


class TestStructureDecomposition:
    def test_full_algebra_trivial_decomposition(self):
        sd = structure_decomposition(full_matrix_algebra(4))
        assert sd.blocks == [(4, 1)]
        assert hs_norm(sd.intertwiner @ dagger(sd.intertwiner) - np.eye(4)) <= 1e-10

    def test_scalars_in_m3(self):
        sd = structure_decomposition(scalar_algebra(3))
        assert sd.blocks == [(1, 3)]

    def test_dimension_bookkeeping(self):
        from staralg.sampling import random_subalgebra

        rng = np.random.default_rng(47)
        for _ in range(8):
            n = int(rng.integers(2, 8))
            a, _ = random_subalgebra(n, rng)
            sd = structure_decomposition(a)
            assert sum(k * k for k, _ in sd.blocks) == a.dim
            assert sum(k * m for k, m in sd.blocks) == n

    def test_intertwiner_brings_block_form(self):
        # after conjugation each basis element is x (x) 1 per block
        gens = [np.block([[matrix_unit(2, i, j), np.zeros((2, 2))],
                          [np.zeros((2, 2)), matrix_unit(2, i, j)]])
                for i in range(2) for j in range(2)]
        a = generate_algebra(gens, 4)
        sd = structure_decomposition(a)
        (k, m), = sd.blocks
        assert (k, m) == (2, 2)
        w = sd.intertwiner
        for b in a.basis:
            t = dagger(w) @ b @ w
            x = t[::m, ::m]
            assert hs_norm(t - kron(x, np.eye(m))) <= 1e-8


class TestConditionalExpectation:
    def test_onto_full_algebra_is_identity(self):
        e = conditional_expectation(full_matrix_algebra(3))
        rng = np.random.default_rng(53)
        x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert hs_norm(e.apply(x) - x) <= 1e-10

    def test_onto_diagonal_is_entrywise_restriction(self):
        e = conditional_expectation(diag_algebra(2))
        x = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
        np.testing.assert_allclose(e.apply(x), np.diag([1.0, 4.0]), atol=1e-10)
        assert is_psd(choi(e))

    def test_properties_on_random_subalgebras(self):
        from staralg.sampling import random_subalgebra

        rng = np.random.default_rng(59)
        for _ in range(5):
            n = int(rng.integers(2, 7))
            a, _ = random_subalgebra(n, rng)
            e = conditional_expectation(a)
            x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            ex = e.apply(x)
            # idempotent projection onto the subalgebra
            assert a.distance_to_span(ex) <= 1e-8
            assert hs_norm(e.apply(ex) - ex) <= 1e-8
            # unital and completely positive
            assert hs_norm(e.apply(np.eye(n, dtype=complex)) - np.eye(n)) <= 1e-8
            assert is_psd(choi(e))
            # bimodularity over the subalgebra
            idx = rng.integers(0, a.dim, size=2)
            left, right = a.basis[idx[0]], a.basis[idx[1]]
            assert hs_norm(e.apply(left @ x @ right) - left @ ex @ right) <= 1e-8


class TestMutuallyCommute:
    def test_tensor_factors_commute(self):
        assert mutually_commute(left_factor(2, 2), right_factor(2, 2))

    def test_full_algebra_does_not_self_commute(self):
        a = full_matrix_algebra(2)
        assert not mutually_commute(a, a)

    def test_algebra_commutes_with_its_commutant(self):
        from staralg.sampling import random_subalgebra

        rng = np.random.default_rng(61)
        for _ in range(5):
            a, _ = random_subalgebra(int(rng.integers(2, 7)), rng)
            assert mutually_commute(a, commutant(a))


class TestValidation:
    def test_rejects_span_without_star_closure(self):
        basis = np.stack(
            [np.eye(2, dtype=complex) / np.sqrt(2), matrix_unit(2, 0, 1)]
        )
        with pytest.raises(ValidationError):
            MatrixStarAlgebra(2, basis).validate()

    def test_rejects_span_without_product_closure(self):
        basis = np.stack(
            [
                np.eye(3, dtype=complex) / np.sqrt(3),
                (matrix_unit(3, 0, 1) + matrix_unit(3, 1, 0)) / np.sqrt(2),
            ]
        )
        with pytest.raises(ValidationError):
            MatrixStarAlgebra(3, basis).validate()
