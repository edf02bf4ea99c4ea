"""Invariant derivations: brackets, Jacobi, coordinate realizations."""

import numpy as np
import pytest

from superhaar.charts import generator_point
from superhaar.groups import (
    check_membership_algebra,
    osp,
    rational_point,
    u,
    uosp,
)
from superhaar.symbols import (
    SuperPolynomial,
    monomial_parity,
    random_polynomial,
)
from superhaar.superalgebra import (
    act_on_polynomial,
    basis,
    bracket_dict_osp,
    canonical_osp,
    compare_divergence_form,
    compare_osp_realization,
    compare_u_even_realization,
    compare_u_realization,
    derivation_action,
    divergence_identity_residual,
    element_parity,
    jacobi_mismatches_osp,
    u_real_basis,
    verify_bracket,
)


def test_basis_sizes_match_the_algebra_dimensions():
    # osp(m|2n): m(m-1)/2 + n(2n+1) + 2mn
    assert len(basis(osp(2, 1))) == 1 + 3 + 4
    assert len(basis(osp(1, 2))) == 0 + 10 + 4
    assert len(basis(uosp(1, 1))) == 0 + 3 + 2
    # u(p|q): (p+q)^2 complex directions
    assert len(basis(u(1, 1))) == 4
    assert len(basis(u(2, 1))) == 9


def test_element_parity():
    spec = osp(2, 1)
    assert element_parity(spec, (1, 2)) == 0
    assert element_parity(spec, (3, 4)) == 0
    assert element_parity(spec, (1, 3)) == 1
    spec = u(1, 1)
    assert element_parity(spec, ("S", 1, 1)) == 0
    assert element_parity(spec, ("Y", 1, 1)) == 1
    assert element_parity(spec, ("Yb", 1, 1)) == 1


@pytest.mark.parametrize(
    "spec", [osp(1, 1), osp(2, 1), u(1, 1), uosp(1, 1)], ids=str
)
def test_bracket_closes_on_structure_constants(spec):
    assert verify_bracket(spec) == 0


@pytest.mark.parametrize("spec", [osp(1, 1), osp(2, 1)], ids=str)
def test_graded_jacobi(spec):
    assert jacobi_mismatches_osp(spec) == 0


def test_bracket_graded_antisymmetry():
    spec = osp(2, 1)
    for e1 in basis(spec):
        for e2 in basis(spec):
            sign = -1 if element_parity(spec, e1) * element_parity(spec, e2) else 1
            lhs = bracket_dict_osp(spec, e1, e2)
            rhs = bracket_dict_osp(spec, e2, e1)
            assert lhs == {k: -sign * v for k, v in rhs.items()}


def test_canonical_osp_reduction():
    spec = osp(2, 1)
    assert canonical_osp(spec, 1, 1) == (0, None)  # symmetric part dies
    assert canonical_osp(spec, 2, 1) == (-1, (1, 2))
    # odd-odd pairs flip with the opposite sign
    assert canonical_osp(spec, 4, 3) == (1, (3, 4))
    assert canonical_osp(spec, 3, 3)[1] == (3, 3)


@pytest.mark.parametrize("spec", [osp(1, 1), u(1, 1)], ids=str)
def test_derivations_satisfy_graded_leibniz(spec):
    rng = np.random.default_rng(0)
    f = random_polynomial(spec, rng, 2)
    g = random_polynomial(spec, rng, 2)
    for elem in basis(spec):
        action, par = derivation_action(spec, elem)
        lhs = act_on_polynomial(spec, action, par, f * g)
        # split f by parity to apply the graded sign termwise
        rhs = act_on_polynomial(spec, action, par, f) * g
        for mono, c in f.terms.items():
            piece = SuperPolynomial(spec, {mono: c})
            dg = act_on_polynomial(spec, action, par, g)
            if par and monomial_parity(spec, mono):
                rhs = rhs - piece * dg
            else:
                rhs = rhs + piece * dg
        assert (lhs - rhs).is_zero()


def test_u_real_basis_matrices_live_in_the_algebra():
    spec = u(2, 1)
    elems = u_real_basis(spec)
    # p^2 + q^2 even and 2pq odd directions, each twice over the reals
    assert sum(1 for _, par in elems if par == 0) == 4 + 1
    assert sum(1 for _, par in elems if par == 1) == 2 * 2 * 1
    for mat, _ in elems:
        numeric = np.array(
            [[complex(c.to_complex()) for c in row] for row in mat]
        )
        assert check_membership_algebra(spec, numeric)


# -- coordinate realizations ---------------------------------------------------


def exact_point(spec, seed):
    rng = np.random.default_rng(seed)
    return generator_point(spec, rational_point(spec, rng))


@pytest.mark.parametrize("spec", [osp(1, 1), osp(2, 1)], ids=str)
def test_osp_realization_matches_the_abstract_action(spec):
    point = exact_point(spec, 1)
    assert compare_osp_realization(spec, point) == 0.0


def test_osp_realization_sign_variant_fails():
    # the opposite sign on the third odd term does not realize the action
    spec = osp(2, 1)
    point = exact_point(spec, 2)
    assert compare_osp_realization(spec, point, variant=1) > 0.1


@pytest.mark.parametrize("spec", [u(1, 1), u(2, 1)], ids=str)
def test_u_odd_realization_matches_the_abstract_action(spec):
    point = exact_point(spec, 3)
    assert compare_u_realization(spec, point) == 0.0


def test_u_even_realization_matches_the_matrix_action():
    spec = u(2, 1)
    point = exact_point(spec, 4)
    pmat = [[1, 2], [0, -1]]
    qmat = [[3]]
    assert compare_u_even_realization(spec, point, pmat, qmat) == 0.0


def test_divergence_form_of_the_odd_derivation():
    spec = u(1, 1)
    point = exact_point(spec, 5)
    assert divergence_identity_residual(spec, point) == 0.0
    assert compare_divergence_form(spec, point) == 0.0
