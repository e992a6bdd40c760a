import itertools
import random
from fractions import Fraction

import pytest

from nilgeom import _exact
from nilgeom.nilmodule import (
    ModuleShape,
    NotNilpotent,
    RationalMatrix,
    invariant_factors,
    jordan_matrix,
)
from nilgeom.normal_forms import (
    AltFormRanks,
    CaseConstraintViolated,
    CharacteristicSignatures,
    DegenerateSignatures,
    NotAlternate,
    NotCompatible,
    NotSelfAdjoint,
    alt_form_ranks,
    characteristic_signatures,
    global_signature,
    normal_form_basis,
)

from oracles import all_shapes, sym_signature_oracle


def sign_splits(shape, case_label):
    """All admissible (r_a, s_a) assignments for the case."""
    delta = shape.delta
    choices = []
    for da in shape.d:
        if case_label in ("1", "2", "3"):
            choices.append([(delta * k, delta * (da - k)) for k in range(da + 1)])
        else:
            choices.append([(delta * da // 2, delta * da // 2)])
    return itertools.product(*choices)


CASES = [("1", 1, 8), ("2", 2, 8), ("2p", 2, 8), ("3", 4, 8), ("3p", 4, 8)]


@pytest.mark.parametrize("case_label,delta,max_dim", CASES)
def test_normal_form_round_trip(case_label, delta, max_dim):
    for n, d in all_shapes(max_dim, delta=delta):
        shape = ModuleShape(n, d, delta)
        for sigs in sign_splits(shape, case_label):
            pb = normal_form_basis(shape, sigs, case_label)
            dim = shape.dim_real
            assert pb.matN.rows == dim and pb.matg.rows == dim
            assert invariant_factors(pb.matN, delta=delta) == shape
            g = pb.matg.tolists()
            assert _exact.mat_eq(g, _exact.mat_transpose(g))
            assert _exact.rank(g) == dim
            # self-adjointness of N
            Nr = pb.matN.tolists()
            assert _exact.mat_eq(
                _exact.mat_mul(_exact.mat_transpose(Nr), g),
                _exact.mat_mul(g, Nr),
            )
            css = characteristic_signatures(pb.matN, pb.matg)
            assert css.sigs == tuple(sigs)
            assert css.shape == ModuleShape(n, tuple(delta * da for da in d), 1)
            assert css.nondegenerate()


@pytest.mark.parametrize("case_label,delta,max_dim", CASES)
def test_structure_relations(case_label, delta, max_dim):
    for n, d in all_shapes(max_dim, delta=delta):
        shape = ModuleShape(n, d, delta)
        sigs = next(iter(sign_splits(shape, case_label)))
        pb = normal_form_basis(shape, sigs, case_label)
        g = pb.matg.tolists()
        Nr = pb.matN.tolists()
        dim = len(g)
        ident = _exact.mat_identity(dim)
        mats = {name: m.tolists() for name, m, _ in pb.structures}
        for name, m, adj in pb.structures:
            assert adj == "skew"
            S = m.tolists()
            # skew-adjoint for g, commutes with N
            assert _exact.mat_eq(
                _exact.mat_mul(_exact.mat_transpose(S), g),
                _exact.mat_neg(_exact.mat_mul(g, S)),
            )
            assert _exact.mat_eq(_exact.mat_mul(S, Nr), _exact.mat_mul(Nr, S))
        if case_label == "1":
            assert not mats
        elif case_label == "2":
            J = mats["J"]
            assert _exact.mat_eq(_exact.mat_mul(J, J), _exact.mat_neg(ident))
        elif case_label == "2p":
            L = mats["L"]
            assert _exact.mat_eq(_exact.mat_mul(L, L), ident)
        elif case_label == "3":
            j1, j2, j3 = mats["J1"], mats["J2"], mats["J3"]
            for m in (j1, j2, j3):
                assert _exact.mat_eq(_exact.mat_mul(m, m), _exact.mat_neg(ident))
            assert _exact.mat_eq(_exact.mat_mul(j1, j2), j3)
        else:
            l1, l2, J = mats["L1"], mats["L2"], mats["J"]
            assert _exact.mat_eq(_exact.mat_mul(l1, l1), ident)
            assert _exact.mat_eq(_exact.mat_mul(l2, l2), ident)
            assert _exact.mat_eq(_exact.mat_mul(l1, l2), J)
            assert _exact.mat_eq(
                _exact.mat_mul(l2, l1), _exact.mat_neg(J)
            )
            assert _exact.mat_eq(_exact.mat_mul(J, J), _exact.mat_neg(ident))


@pytest.mark.parametrize("case_label,delta,max_dim", CASES)
def test_global_signature_matches_diagonalization(case_label, delta, max_dim):
    for n, d in all_shapes(max_dim, delta=delta):
        shape = ModuleShape(n, d, delta)
        for sigs in sign_splits(shape, case_label):
            pb = normal_form_basis(shape, sigs, case_label)
            assert global_signature(shape, sigs) == _exact.signature_of_symmetric(
                pb.matg.tolists()
            )


def test_global_signature_against_eigenvalue_oracle():
    for n, d in all_shapes(6):
        shape = ModuleShape(n, d, 1)
        for sigs in sign_splits(shape, "1"):
            pb = normal_form_basis(shape, sigs, "1")
            assert global_signature(shape, sigs) == sym_signature_oracle(
                pb.matg.tolists()
            )


def _random_invertible(rng, dim):
    while True:
        m = [
            [Fraction(rng.randint(-3, 3)) for _ in range(dim)]
            for _ in range(dim)
        ]
        if _exact.rank(m) == dim:
            return m


def test_signatures_are_congruence_invariant():
    rng = random.Random(7)
    for n, d in [(2, (1, 1)), (3, (1, 0, 1)), (2, (0, 2)), (1, (3,))]:
        shape = ModuleShape(n, d, 1)
        sigs = next(iter(sign_splits(shape, "1")))
        pb = normal_form_basis(shape, sigs, "1")
        dim = shape.dim_real
        for _ in range(4):
            P = _random_invertible(rng, dim)
            Pinv = _exact.inverse(P)
            Nr = _exact.mat_mul(Pinv, _exact.mat_mul(pb.matN.tolists(), P))
            gr = _exact.mat_mul(
                _exact.mat_transpose(P), _exact.mat_mul(pb.matg.tolists(), P)
            )
            css = characteristic_signatures(
                RationalMatrix.from_lists(Nr), RationalMatrix.from_lists(gr)
            )
            assert css.sigs == tuple(sigs)


def test_characteristic_signatures_simple_values():
    # N = 0 on R^3, g = diag(1, 1, -1): one degree, signature (2, 1)
    N = RationalMatrix.from_lists(_exact.mat_zero(3, 3))
    g = RationalMatrix.from_lists(
        [[1, 0, 0], [0, 1, 0], [0, 0, -1]]
    )
    css = characteristic_signatures(N, g)
    assert css.sigs == ((2, 1),)
    assert css.shape == ModuleShape(1, (3,), 1)
    assert global_signature(css.shape, css.sigs) == (2, 1)


def test_characteristic_signatures_degenerate_allowed():
    N = RationalMatrix.from_lists(_exact.mat_zero(2, 2))
    g = RationalMatrix.from_lists([[1, 0], [0, 0]])
    css = characteristic_signatures(N, g)
    assert css.sigs == ((1, 0),)
    assert not css.nondegenerate()
    with pytest.raises(DegenerateSignatures):
        global_signature(css.shape, css.sigs)


def test_characteristic_signatures_errors():
    g_asym = RationalMatrix.from_lists([[0, 1], [0, 0]])
    N0 = RationalMatrix.from_lists(_exact.mat_zero(2, 2))
    with pytest.raises(NotSelfAdjoint):
        characteristic_signatures(N0, g_asym)
    # not nilpotent
    ident = RationalMatrix.from_lists(_exact.mat_identity(2))
    with pytest.raises(NotNilpotent):
        characteristic_signatures(ident, ident)
    # nilpotent but not self-adjoint for g
    N = RationalMatrix.from_lists([[0, 1], [0, 0]])
    g = RationalMatrix.from_lists([[1, 0], [0, 1]])
    with pytest.raises(NotSelfAdjoint):
        characteristic_signatures(N, g)


def test_normal_form_basis_errors():
    s2 = ModuleShape(1, (1,), 2)
    with pytest.raises(CaseConstraintViolated):
        normal_form_basis(s2, [(2, 0)], "1")  # delta mismatch
    with pytest.raises(CaseConstraintViolated):
        normal_form_basis(s2, [(1, 1)], "2")  # odd real count
    with pytest.raises(CaseConstraintViolated):
        normal_form_basis(s2, [(2, 0)], "2p")  # para needs neutral
    with pytest.raises(CaseConstraintViolated):
        normal_form_basis(s2, [(2, 0)], "bogus")
    with pytest.raises(DegenerateSignatures):
        normal_form_basis(s2, [(0, 0)], "2")
    s1 = ModuleShape(2, (1, 1), 1)
    with pytest.raises(DegenerateSignatures):
        normal_form_basis(s1, [(1, 0)], "1")


def test_epsilon_order_plus_first_within_size():
    shape = ModuleShape(2, (2, 2), 1)
    pb = normal_form_basis(shape, [(1, 1), (1, 1)], "1")
    # blocks decreasing: two of size 2 then two of size 1
    assert pb.epsilons == (1, -1, 1, -1)
    assert pb.matg[(0, 1)] == 1  # first size-2 block is +K_2
    assert pb.matg[(2, 3)] == -1


def test_signatures_serialization_round_trip():
    shape = ModuleShape(2, (1, 2), 1)
    css = CharacteristicSignatures(shape, ((1, 0), (1, 1)))
    again = CharacteristicSignatures.from_json(css.to_json())
    assert again == css


def test_alt_form_ranks_full_rank_model():
    shape = ModuleShape(2, (0, 1), 2)
    pb = normal_form_basis(shape, [(0, 0), (2, 0)], "2")
    J = [m for name, m, _ in pb.structures if name == "J"][0]
    w = RationalMatrix.from_lists(
        _exact.mat_mul(pb.matg.tolists(), J.tolists())
    )
    res = alt_form_ranks(pb.matN, w)
    assert isinstance(res, AltFormRanks)
    assert res.shape == ModuleShape(2, (0, 2), 1)
    assert res.ranks == (0, 2)
    assert res.nondegenerate()
    # darboux grid: degree-2 block carries v^0 pairs, degree-1 block empty
    D = res.shape.D
    assert D == 2
    top = res.darboux[0][1]
    assert top.coeff(0) == -1 and top.coeff(1) == 0
    assert res.darboux[1][0].coeff(0) == 1
    assert res.darboux[0][0].is_zero()


def test_alt_form_ranks_degenerate_and_nu_weights():
    # N with blocks (2, 1); omega pairing only the length-2 chain
    shape = ModuleShape(2, (1, 1), 1)
    N = jordan_matrix(shape)
    w = _exact.mat_zero(3, 3)
    # chain e1 -> e2 (block of size 2), e3 fixed by nothing
    # omega(e1, e3) = 1 pairs degree 2 against degree 1: incompatible; use
    # a compatible one instead: omega = 0 except the graded piece of e3
    res = alt_form_ranks(N, RationalMatrix.from_lists(w))
    assert res.ranks == (0, 0)
    assert not res.nondegenerate()
    # weights: degree a block sits at v^(n-a)
    N0 = RationalMatrix.from_lists(_exact.mat_zero(2, 2))
    w0 = RationalMatrix.from_lists([[0, 1], [-1, 0]])
    res0 = alt_form_ranks(N0, w0)
    assert res0.ranks == (2,)
    assert res0.darboux[0][1].coeff(0) == -1


def test_alt_form_ranks_errors():
    N = RationalMatrix.from_lists([[0, 1], [0, 0]])
    sym = RationalMatrix.from_lists([[0, 1], [1, 0]])
    with pytest.raises(NotAlternate):
        alt_form_ranks(N, sym)
    # antisymmetric but not compatible: omega(N., .) != omega(., N.)
    N3 = RationalMatrix.from_lists(
        [[0, 1, 0], [0, 0, 0], [0, 0, 0]]
    )
    w = RationalMatrix.from_lists(
        [[0, 0, 1], [0, 0, 0], [-1, 0, 0]]
    )
    with pytest.raises(NotCompatible):
        alt_form_ranks(N3, w)
