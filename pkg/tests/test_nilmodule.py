from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nilgeom.nilmodule import (
    CountMismatch,
    ModuleShape,
    NotNilpotent,
    RationalMatrix,
    adapted_family_check,
    anti_identity_block,
    canonical_family,
    flag_dims,
    germ_coordinates,
    invariant_factors,
    jordan_matrix,
    nilpotent_block,
    nilpotent_on_coordinates,
    x_names,
)


def small_shapes(max_dim=8, delta=1):
    return [
        ModuleShape(n, d, delta)
        for n, d in oracles.all_shapes(max_dim, delta=delta)
    ]


def test_shape_derived():
    s = ModuleShape(3, (1, 0, 2))
    assert s.D == 3
    assert s.D_upto(0) == 0 and s.D_upto(1) == 1 and s.D_upto(3) == 3
    assert s.n_of(1) == 1 and s.n_of(2) == 3 and s.n_of(3) == 3
    assert s.dim_real == 7
    assert s.sizes_increasing() == (1, 3, 3)
    assert s.sizes_decreasing() == (3, 3, 1)


def test_shape_validation():
    with pytest.raises(ValueError):
        ModuleShape(2, (1, 0))  # d_n must be >= 1
    with pytest.raises(ValueError):
        ModuleShape(2, (1,))
    with pytest.raises(ValueError):
        ModuleShape(1, (1,), delta=3)


def test_shape_json_roundtrip():
    s = ModuleShape(2, (1, 2), delta=2)
    assert ModuleShape.from_json(s.to_json()) == s


def test_jordan_example():
    # shape n=2, d=(1,1): 3x3, single 1 at (1,2) of the leading 2x2 block
    N = jordan_matrix(ModuleShape(2, (1, 1)))
    expect = [[0, 1, 0], [0, 0, 0], [0, 0, 0]]
    assert N.tolists() == [[Fraction(v) for v in r] for r in expect]


@pytest.mark.parametrize("delta", [1, 2, 4])
def test_invariant_factors_roundtrip(delta):
    for s in small_shapes(8, delta):
        N = jordan_matrix(s)
        assert invariant_factors(N, delta=s.delta) == s


def test_not_nilpotent():
    m = RationalMatrix.from_lists([[Fraction(1), Fraction(0)], [Fraction(0), Fraction(0)]])
    with pytest.raises(NotNilpotent):
        invariant_factors(m)


def test_flag_dims_against_oracle():
    for s in small_shapes(7):
        N = jordan_matrix(s).tolists()
        for a in range(s.n + 1):
            for b in range(s.n + 1):
                assert flag_dims(s, a, b) == oracles.flag_dim_oracle(N, a, b), (s, a, b)


def test_flag_dims_delta_scaling():
    s1 = ModuleShape(2, (1, 1), 1)
    s2 = ModuleShape(2, (1, 1), 2)
    for a in range(3):
        for b in range(3):
            assert flag_dims(s2, a, b) == 2 * flag_dims(s1, a, b)


def test_adapted_family_canonical():
    for s in small_shapes(6):
        N = jordan_matrix(s)
        fam = canonical_family(s)
        assert adapted_family_check(N, fam) is True


def test_adapted_family_rejects_wrong_degree():
    # shape (1,1): swapping the two generators puts a degree-1 vector in the
    # degree-2 slice
    s = ModuleShape(2, (1, 1))
    N = jordan_matrix(s)
    fam = canonical_family(s)
    swapped = [fam[1], fam[0]]
    assert adapted_family_check(N, swapped) is False


def test_adapted_family_accepts_im_perturbation():
    # adding something from Im N to a generator does not change its class
    s = ModuleShape(2, (0, 2))
    N = jordan_matrix(s)
    fam = canonical_family(s)
    rows = N.tolists()
    im_vec = [sum(rows[i][k] * fam[1][k] for k in range(4)) for i in range(4)]
    fam[0] = [a + b for a, b in zip(fam[0], im_vec)]
    assert adapted_family_check(N, fam) is True


def test_adapted_family_count_mismatch():
    s = ModuleShape(2, (1, 1))
    N = jordan_matrix(s)
    fam = canonical_family(s)
    with pytest.raises(CountMismatch):
        adapted_family_check(N, fam[:1])


def test_blocks():
    nb = nilpotent_block(3, 2)
    assert len(nb) == 6
    assert nb[0][2] == 1 and nb[1][3] == 1 and nb[2][4] == 1 and nb[3][5] == 1
    assert all(nb[4][j] == 0 and nb[5][j] == 0 for j in range(6))
    kb = anti_identity_block(2, 2)
    assert kb[0][2] == 1 and kb[1][3] == 1 and kb[2][0] == 1 and kb[3][1] == 1


def test_germ_coordinates_order():
    # n=3, d=(1,1,1): layers a=2 then a=1 then x block
    s = ModuleShape(3, (1, 1, 1))
    assert germ_coordinates(s) == ["y3_2", "y2_1", "y3_1", "x1", "x2", "x3"]
    assert x_names(s) == ["x1", "x2", "x3"]


def test_germ_coordinates_delta():
    s = ModuleShape(2, (0, 1), delta=2)
    assert germ_coordinates(s) == ["y1_1", "y2_1", "x1", "x2"]


def test_nilpotent_on_coordinates_matches_shape():
    for s in small_shapes(6):
        M = nilpotent_on_coordinates(s)
        assert invariant_factors(M) == ModuleShape(s.n, s.d, 1)


@given(st.sampled_from(small_shapes(8)))
@settings(max_examples=30, deadline=None)
def test_jordan_matrix_nilpotency_index(s):
    N = jordan_matrix(s)
    if s.n == 1:
        assert N.is_zero()
        return
    p = N
    for _ in range(s.n - 2):
        p = p.mul(N)
    assert not p.is_zero()  # N^(n-1) != 0
    assert p.mul(N).is_zero()  # N^n = 0
