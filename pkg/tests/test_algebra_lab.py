import random
from fractions import Fraction

import pytest

from nilgeom import _exact
from nilgeom.algebra_lab import (
    ALL_LABELS,
    BadParams,
    CaseUnsupported,
    NotClassifiable,
    bicommutant,
    build_type,
    commutant_basis,
    commutant_dim,
    identify_type,
    solve_commutant,
)
from nilgeom.nilmodule import ModuleShape, RationalMatrix, jordan_matrix
from nilgeom.normal_forms import normal_form_basis

from oracles import (
    all_shapes,
    bicommutant_oracle,
    commutant_oracle,
    in_span,
    oracle_rank,
)


def shape_of(sizes, delta=1):
    n = max(sizes)
    d = tuple(list(sizes).count(a) for a in range(1, n + 1))
    return ModuleShape(n, d, delta)


def plus_sigs(shape, case_label):
    if case_label in ("1", "2", "3"):
        return [(shape.delta * da, 0) for da in shape.d]
    return [(shape.delta * da // 2, shape.delta * da // 2) for da in shape.d]


def model(case_label, shape, sigs=None):
    """(g, N, structure mats) of the privileged model, as lists."""
    if sigs is None:
        sigs = plus_sigs(shape, case_label)
    pb = normal_form_basis(shape, sigs, case_label)
    return (
        pb.matg.tolists(),
        pb.matN.tolists(),
        [m.tolists() for _, m, _ in pb.structures],
    )


def flat(m):
    rows = m.tolists() if isinstance(m, RationalMatrix) else m
    return [v for row in rows for v in row]


def real_flat(m):
    rows = m.tolists() if isinstance(m, RationalMatrix) else m
    out = []
    for row in rows:
        for v in row:
            c = _exact.as_crat(v)
            out.append(c.re)
            out.append(c.im)
    return out


def crat_mat(m):
    return [[_exact.as_crat(v) for v in row] for row in m]


def is_commutant_element(M, g, mats):
    rows = M.tolists() if isinstance(M, RationalMatrix) else M
    skew = _exact.mat_add(
        _exact.mat_mul(_exact.mat_transpose(rows), g), _exact.mat_mul(g, rows)
    )
    if not _exact.mat_is_zero(skew):
        return False
    return all(
        _exact.mat_eq(_exact.mat_mul(rows, s), _exact.mat_mul(s, rows))
        for s in mats
    )


# -- the eight models --------------------------------------------------------


BUILD_PARAMS = {
    "1": (2, 1),
    "1C": (2, 0),
    "2": (1, 1),
    "2p": (2, 0),
    "2C": (1, 0),
    "3": (1, 0),
    "3p": (1, 0),
    "3C": (1, 0),
}

EXPECTED_SIGNATURE = {
    "1": (2, 1),
    "1C": (2, 2),
    "2": (2, 2),
    "2p": (2, 2),
    "2C": (2, 2),
    "3": (4, 0),
    "3p": (2, 2),
    "3C": (4, 4),
}


@pytest.mark.parametrize("case_label", ALL_LABELS)
def test_build_type_adjointness(case_label):
    p, q = BUILD_PARAMS[case_label]
    ss = build_type(case_label, p, q)
    g = ss.g.tolists()
    assert _exact.mat_eq(g, _exact.mat_transpose(g))
    assert _exact.inverse(g) is not None
    assert _exact.signature_of_symmetric(g) == EXPECTED_SIGNATURE[case_label]
    for name, m, adj in ss.structures:
        S = m.tolists()
        lhs = _exact.mat_mul(_exact.mat_transpose(S), g)
        rhs = _exact.mat_mul(g, S)
        if adj == "self":
            assert _exact.mat_eq(lhs, rhs), name
        else:
            assert adj == "skew"
            assert _exact.mat_eq(lhs, _exact.mat_neg(rhs)), name


@pytest.mark.parametrize("case_label", ALL_LABELS)
def test_build_type_product_relations(case_label):
    p, q = BUILD_PARAMS[case_label]
    ss = build_type(case_label, p, q)
    ident = _exact.mat_identity(ss.dim)
    mats = {name: m.tolists() for name, m, _ in ss.structures}

    def prod(a, b):
        return _exact.mat_mul(mats[a], mats[b])

    if case_label == "1":
        assert not mats
    elif case_label == "1C":
        assert _exact.mat_eq(prod("Jbar", "Jbar"), _exact.mat_neg(ident))
    elif case_label == "2":
        assert _exact.mat_eq(prod("J", "J"), _exact.mat_neg(ident))
    elif case_label == "2p":
        assert _exact.mat_eq(prod("L", "L"), ident)
    elif case_label == "2C":
        assert _exact.mat_eq(prod("Jbar", "Jbar"), _exact.mat_neg(ident))
        assert _exact.mat_eq(prod("L", "L"), ident)
        assert _exact.mat_eq(prod("J", "J"), _exact.mat_neg(ident))
        # Jbar is a square root of -1 commuting with the whole set
        assert _exact.mat_eq(prod("Jbar", "L"), mats["J"])
        assert _exact.mat_eq(prod("L", "Jbar"), mats["J"])
        assert _exact.mat_eq(prod("Jbar", "J"), _exact.mat_neg(mats["L"]))
        assert _exact.mat_eq(prod("L", "J"), mats["Jbar"])
    elif case_label == "3":
        for k in ("J1", "J2", "J3"):
            assert _exact.mat_eq(prod(k, k), _exact.mat_neg(ident))
        assert _exact.mat_eq(prod("J1", "J2"), mats["J3"])
        assert _exact.mat_eq(prod("J2", "J1"), _exact.mat_neg(mats["J3"]))
        assert _exact.mat_eq(prod("J2", "J3"), mats["J1"])
        assert _exact.mat_eq(prod("J3", "J1"), mats["J2"])
    elif case_label == "3p":
        assert _exact.mat_eq(prod("L1", "L1"), ident)
        assert _exact.mat_eq(prod("L2", "L2"), ident)
        assert _exact.mat_eq(prod("J", "J"), _exact.mat_neg(ident))
        assert _exact.mat_eq(prod("L1", "L2"), _exact.mat_neg(mats["J"]))
        assert _exact.mat_eq(prod("L2", "L1"), mats["J"])
        assert _exact.mat_eq(prod("J", "L1"), mats["L2"])
        assert _exact.mat_eq(prod("L1", "J"), _exact.mat_neg(mats["L2"]))
    else:
        assert _exact.mat_eq(prod("Jbar", "Jbar"), _exact.mat_neg(ident))
        assert _exact.mat_eq(prod("J", "J"), _exact.mat_neg(ident))
        assert _exact.mat_eq(prod("L1", "L1"), ident)
        assert _exact.mat_eq(prod("L2", "L2"), ident)
        assert _exact.mat_eq(prod("J", "L1"), mats["L2"])
        assert _exact.mat_eq(prod("L1", "L2"), _exact.mat_neg(mats["J"]))
        assert _exact.mat_eq(prod("L2", "L1"), mats["J"])
        # the central root of -1 commutes with everything else
        for k in ("J", "L1", "L2"):
            assert _exact.mat_eq(prod("Jbar", k), prod(k, "Jbar"))


def test_build_type_bad_params():
    with pytest.raises(BadParams):
        build_type("4", 1)
    with pytest.raises(BadParams):
        build_type("1", 0, 0)
    with pytest.raises(BadParams):
        build_type("2p", 2, 1)  # single-parameter case
    with pytest.raises(BadParams):
        build_type("3C", 0)
    with pytest.raises(BadParams):
        build_type("1", -1, 2)


# -- parallel tensor catalog -------------------------------------------------


CATALOG_KINDS = {
    "1": ("metric",),
    "1C": ("metric", "complex-riemannian", "jbar-volume"),
    "2": ("metric", "symplectic", "kahler"),
    "2p": ("metric", "symplectic"),
    "2C": (
        "metric",
        "symplectic",
        "complex-riemannian",
        "kahler",
        "jbar-symplectic",
        "jbar-volume",
    ),
    "3": ("metric", "symplectic", "kahler", "j-symplectic", "j-volume"),
    "3p": ("metric", "symplectic", "kahler", "j-symplectic", "j-volume"),
    "3C": (
        "metric",
        "symplectic",
        "complex-riemannian",
        "kahler",
        "jbar-symplectic",
        "j-symplectic",
        "jbar-volume",
        "j-volume",
    ),
}

REAL_KINDS = ("metric", "symplectic")


@pytest.mark.parametrize("case_label", ALL_LABELS)
def test_tensor_catalog_kinds_and_symmetries(case_label):
    p, q = BUILD_PARAMS[case_label]
    ss = build_type(case_label, p, q)
    by_kind = dict((kind, m.tolists()) for kind, m in ss.tensor_catalog)
    assert tuple(kind for kind, _ in ss.tensor_catalog) == CATALOG_KINDS[case_label]
    d = ss.dim
    for kind, rows in by_kind.items():
        t = _exact.mat_transpose(rows)
        if kind in ("metric", "complex-riemannian", "jbar-volume"):
            assert _exact.mat_eq(t, rows), kind
        elif kind == "kahler":
            conj_t = _exact.mat_conj(t, _exact.field_of(t))
            assert _exact.mat_eq(conj_t, rows), kind
        else:
            assert _exact.mat_eq(t, _exact.mat_neg(rows)), kind
        if kind in REAL_KINDS:
            assert all(isinstance(v, Fraction) for v in flat(rows))
            assert _exact.rank(rows) == d
        else:
            # complex-bilinear entries kill the +i eigenspace of the
            # defining structure: rank d/2 over Q(i), never full
            assert _exact.rank(rows) == d // 2
    # the volume forms are recorded through the same matrices as the
    # pairings they scale out of
    if "jbar-volume" in by_kind:
        assert _exact.mat_eq(by_kind["jbar-volume"], by_kind["complex-riemannian"])
    if "j-volume" in by_kind:
        assert _exact.mat_eq(by_kind["j-volume"], by_kind["j-symplectic"])


# -- classification ----------------------------------------------------------


IDENTIFY_PARAMS = [
    ("1", 1, 0),
    ("1", 2, 1),
    ("1C", 1, 0),
    ("1C", 2, 0),
    ("2", 1, 0),
    ("2", 1, 1),
    ("2p", 1, 0),
    ("2p", 2, 0),
    ("2C", 1, 0),
    ("2C", 2, 0),
    ("3", 1, 0),
    ("3", 0, 1),
    ("3p", 1, 0),
    ("3p", 2, 0),
    ("3C", 1, 0),
]


@pytest.mark.parametrize("case_label,p,q", IDENTIFY_PARAMS)
def test_identify_round_trip(case_label, p, q):
    ss = build_type(case_label, p, q)
    assert identify_type(ss.generators, ss.g) == case_label


def _random_invertible(rng, dim):
    while True:
        m = [
            [Fraction(rng.randint(-3, 3)) for _ in range(dim)]
            for _ in range(dim)
        ]
        if _exact.rank(m) == dim:
            return m


def test_identify_is_conjugation_invariant():
    rng = random.Random(11)
    for case_label in ALL_LABELS:
        p, q = BUILD_PARAMS[case_label]
        ss = build_type(case_label, p, q)
        g = ss.g.tolists()
        for _ in range(2):
            P = _random_invertible(rng, ss.dim)
            Pinv = _exact.inverse(P)
            gens = [
                RationalMatrix.from_lists(
                    _exact.mat_mul(Pinv, _exact.mat_mul(m.tolists(), P))
                )
                for m in ss.generators
            ]
            gP = RationalMatrix.from_lists(
                _exact.mat_mul(_exact.mat_transpose(P), _exact.mat_mul(g, P))
            )
            assert identify_type(gens, gP) == case_label


def _lmul_i():
    return [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]


def _lmul_j():
    return [[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]]


def _dsum(a, b):
    d = len(a)
    out = _exact.mat_zero(2 * d, 2 * d)
    for i in range(d):
        for j in range(d):
            out[i][j] = Fraction(a[i][j])
            out[d + i][d + j] = Fraction(b[i][j])
    return out


def test_identify_rejects_doubled_quaternions():
    # two quaternion factors swapped by the adjoint; the center splits
    z4 = _exact.mat_zero(4, 4)
    gens = [
        RationalMatrix.from_lists(_dsum(_lmul_i(), z4)),
        RationalMatrix.from_lists(_dsum(_lmul_j(), z4)),
        RationalMatrix.from_lists(_dsum(z4, _lmul_i())),
        RationalMatrix.from_lists(_dsum(z4, _lmul_j())),
    ]
    g = _exact.mat_zero(8, 8)
    for i in range(4):
        g[i][4 + i] = Fraction(1)
        g[4 + i][i] = Fraction(1)
    with pytest.raises(NotClassifiable, match="split center"):
        identify_type(gens, RationalMatrix.from_lists(g))


def test_identify_rejects_nilpotent_generator():
    # y^2 = 0: dual numbers, self-adjoint for the hyperbolic plane
    gen = RationalMatrix.from_lists([[0, 1], [0, 0]])
    g = RationalMatrix.from_lists([[0, 1], [1, 0]])
    with pytest.raises(NotClassifiable, match="outside the catalogue"):
        identify_type([gen], g)


def test_identify_rejects_self_adjoint_involution():
    gen = RationalMatrix.from_lists([[1, 0], [0, -1]])
    g = RationalMatrix.from_lists(_exact.mat_identity(2))
    with pytest.raises(NotClassifiable, match="outside the catalogue"):
        identify_type([gen], g)


def test_identify_rejects_unstable_algebra():
    gen = RationalMatrix.from_lists([[0, 1], [0, 0]])
    g = RationalMatrix.from_lists(_exact.mat_identity(2))
    with pytest.raises(NotClassifiable, match="g-adjoint"):
        identify_type([gen], g)


def test_identify_rejects_degenerate_g():
    gen = RationalMatrix.from_lists(_exact.mat_identity(2))
    g = RationalMatrix.from_lists([[1, 0], [0, 0]])
    with pytest.raises(NotClassifiable, match="degenerate"):
        identify_type([gen], g)


# -- commutants --------------------------------------------------------------


SWEEP_CASES = [("1", 1), ("2", 2), ("2p", 2), ("3", 4), ("3p", 4)]


@pytest.mark.parametrize("case_label,delta", SWEEP_CASES)
def test_commutant_matches_oracle_exhaustively(case_label, delta):
    # every shape with at most 4 blocks and real dimension at most 8
    for n, d in all_shapes(8, max_D=4, delta=delta):
        shape = ModuleShape(n, d, delta)
        cb = commutant_basis(case_label, shape)
        assert cb.dim == commutant_dim(case_label, shape) == len(cb.basis)
        g, N, structs = model(case_label, shape)
        oracle = commutant_oracle(g, [N] + structs)
        assert len(oracle) == cb.dim, (case_label, shape)
        assert oracle_rank([flat(b) for b in cb.basis]) == cb.dim
        for b in cb.basis:
            assert is_commutant_element(b, g, [N] + structs)


def test_commutant_fixed_dims():
    assert commutant_dim("1", shape_of((2, 2))) == 2
    assert commutant_dim("1", shape_of((2, 1))) == 1
    assert commutant_dim("1", shape_of((3, 2, 1))) == 4
    assert commutant_dim("1", shape_of((4,))) == 0
    assert commutant_dim("2", shape_of((1, 1), delta=2)) == 4
    assert commutant_dim("3", shape_of((1,), delta=4)) == 3


MIXED_SIGS = [
    ("1", (2, (1, 1), 1), ((1, 0), (0, 1))),
    ("1", (1, (3,), 1), ((2, 1),)),
    ("2", (2, (1, 1), 2), ((2, 0), (0, 2))),
    ("3", (1, (2,), 4), ((4, 4),)),
]


@pytest.mark.parametrize("case_label,shape_args,sigs", MIXED_SIGS)
def test_commutant_mixed_signatures(case_label, shape_args, sigs):
    shape = ModuleShape(*shape_args)
    cb = commutant_basis(case_label, shape, sigs)
    assert cb.dim == commutant_dim(case_label, shape)
    g, N, structs = model(case_label, shape, sigs)
    oracle = commutant_oracle(g, [N] + structs)
    assert len(oracle) == cb.dim
    assert oracle_rank([flat(b) for b in cb.basis]) == cb.dim
    for b in cb.basis:
        assert is_commutant_element(b, g, [N] + structs)


def test_commutant_case_errors():
    s = shape_of((2, 1))
    for label in ("1C", "2C", "3C"):
        with pytest.raises(CaseUnsupported):
            commutant_dim(label, shape_of((2, 1), delta=1))
    with pytest.raises(BadParams):
        commutant_dim("x", s)
    with pytest.raises(BadParams):
        commutant_dim("2", s)  # needs delta 2
    with pytest.raises(BadParams):
        commutant_basis("1", s, sigs=[(3, 0)])  # one pair per degree


# -- bicommutants ------------------------------------------------------------


CASE1_SIZES = [
    (1,),
    (2,),
    (4,),
    (1, 1),
    (2, 2),
    (3, 3),
    (2, 1),
    (3, 1),
    (5, 1),
    (2, 1, 1),
    (2, 1, 1, 1),
    (3, 2, 2),
    (2, 2, 1),
    (3, 2, 1),
]


def _n123(sizes):
    n1 = sizes[0]
    n2 = sizes[1] if len(sizes) > 1 else 0
    n3 = sizes[2] if len(sizes) > 2 else 0
    return n1, n2, n3


def test_bicommutant_case1_grid():
    for sizes in CASE1_SIZES:
        shape = shape_of(sizes)
        res = bicommutant("1", shape)
        n1, n2, n3 = _n123(sizes)
        assert res.dim == n2 + (n1 - n2) ** 2 + (n2 - n3), sizes
        g, N, _ = model("1", shape)
        oracle = bicommutant_oracle(g, [N])
        assert len(oracle) == res.dim, sizes
        assert oracle_rank([flat(b) for b in res.basis]) == res.dim
        for b in res.basis:
            assert in_span(oracle, b.tolists())
        assert res.decomposable == (2 * n2 < n1), sizes
        if res.decomposable:
            dpp = n1 - 2 * n2
            assert res.flat_factor == (dpp, ((dpp + 1) // 2, dpp // 2))
        else:
            assert res.flat_factor is None
        if n1 == n2 and n3 == 0:
            assert res.exceptional == "extra (para)complex structure present"
        else:
            assert res.exceptional is None


def test_bicommutant_centralizes_the_commutant():
    for sizes in [(3, 1), (2, 1, 1), (2, 2)]:
        shape = shape_of(sizes)
        res = bicommutant("1", shape)
        g, N, _ = model("1", shape)
        for c in commutant_oracle(g, [N]):
            for b in res.basis:
                rows = b.tolists()
                assert _exact.mat_eq(
                    _exact.mat_mul(rows, c), _exact.mat_mul(c, rows)
                )


def test_bicommutant_polynomial_algebra_characterization():
    # the span of the powers of N is the whole bicommutant exactly when
    # n1 - n2 <= 1 and n2 = n3 (the corner block then collapses onto the
    # powers); the stricter "all three equal" rule misses five shapes
    hits = []
    for n, d in all_shapes(8, max_D=4, delta=1):
        shape = ModuleShape(n, d, 1)
        sizes = shape.sizes_decreasing()
        n1, n2, n3 = _n123(sizes)
        res = bicommutant("1", shape)
        is_poly = res.dim == n1
        assert is_poly == (n1 - n2 <= 1 and n2 == n3), sizes
        if is_poly:
            N = jordan_matrix(shape).tolists()
            powers = []
            acc = _exact.mat_identity(shape.dim_real)
            for _ in range(n1):
                powers.append(_exact.mat_copy(acc))
                acc = _exact.mat_mul(acc, N)
            stacked = [flat(b) for b in res.basis] + [flat(m) for m in powers]
            assert oracle_rank(stacked) == n1
            if not (n1 == n2 == n3):
                hits.append(sizes)
    assert sorted(hits) == [
        (1,),
        (2, 1, 1),
        (2, 1, 1, 1),
        (3, 2, 2),
        (3, 2, 2, 1),
    ]


BICOM_REAL = [
    ("2", 2, 2, [(1,), (2,), (1, 1), (2, 1), (2, 2)]),
    ("2p", 2, 2, [(1,), (2,), (1, 1), (2, 1)]),
    ("3", 4, 4, [(1,), (2,)]),
    ("3p", 4, 4, [(1,), (2,)]),
]


@pytest.mark.parametrize("case_label,delta,per_block,sizes_list", BICOM_REAL)
def test_bicommutant_structure_generated_cases(case_label, delta, per_block, sizes_list):
    for sizes in sizes_list:
        shape = shape_of(sizes, delta=delta)
        res = bicommutant(case_label, shape)
        assert res.dim == per_block * sizes[0]
        assert not res.decomposable
        assert res.flat_factor is None and res.exceptional is None
        g, N, structs = model(case_label, shape)
        oracle = bicommutant_oracle(g, [N] + structs)
        assert len(oracle) == res.dim, (case_label, sizes)
        assert oracle_rank([flat(b) for b in res.basis]) == res.dim
        for b in res.basis:
            assert in_span(oracle, b.tolists())


def test_bicommutant_complex_span_example():
    # one length-2 block over the complex coefficients: {Id, N, J, JN}
    shape = ModuleShape(2, (0, 1), 2)
    res = bicommutant("2", shape)
    assert res.dim == 4
    g, N, structs = model("2", shape)
    J = structs[0]
    expected = [
        _exact.mat_identity(4),
        N,
        J,
        _exact.mat_mul(J, N),
    ]
    stacked = [flat(b) for b in res.basis]
    assert oracle_rank(stacked) == 4
    for m in expected:
        assert in_span([b.tolists() for b in res.basis], m)


CPLX_SHAPES = {
    "1C": [(2,), (2, 1), (1, 1), (1, 1, 1)],
    "2C": [(1,), (2,), (2, 1)],
    "3C": [(1,), (2,)],
}


def _cplx_expected_dim(case_label, sizes):
    n1, n2, n3 = _n123(sizes)
    if case_label == "1C":
        return 2 * (n2 + (n1 - n2) ** 2 + (n2 - n3))
    if case_label == "2C":
        return 4 * n1
    return 8 * n1


def _cplx_oracle_model(case_label, shape):
    # same matrices read over Q(i); the commutant scales to the complex
    # coefficients and the oracle then works C-linearly
    base = {"1C": "1", "2C": "2p", "3C": "3p"}[case_label]
    g, N, structs = model(base, shape)
    return crat_mat(g), crat_mat(N), [crat_mat(s) for s in structs]


@pytest.mark.parametrize("case_label", ["1C", "2C", "3C"])
def test_bicommutant_complexified_cases(case_label):
    delta = {"1C": 1, "2C": 2, "3C": 4}[case_label]
    for sizes in CPLX_SHAPES[case_label]:
        shape = shape_of(sizes, delta=delta)
        res = bicommutant(case_label, shape)
        assert res.dim == _cplx_expected_dim(case_label, sizes)
        assert oracle_rank([real_flat(b) for b in res.basis]) == res.dim
        gC, NC, structsC = _cplx_oracle_model(case_label, shape)
        oracle = bicommutant_oracle(gC, [NC] + structsC)
        assert 2 * len(oracle) == res.dim, (case_label, sizes)
        for b in res.basis:
            assert in_span(oracle, b.tolists())
        # closed under products
        basis_rows = [b.tolists() for b in res.basis]
        stacked = [real_flat(m) for m in basis_rows]
        rank0 = oracle_rank(stacked)
        for x in basis_rows[:3]:
            for y in basis_rows[:3]:
                prod = _exact.mat_mul(x, y)
                assert oracle_rank(stacked + [real_flat(prod)]) == rank0


def test_bicommutant_complex_flags():
    res = bicommutant("1C", shape_of((2,)))
    assert res.decomposable and res.flat_factor == (2, None)
    exc = bicommutant("1C", shape_of((1, 1)))
    assert exc.exceptional == "extra (para)complex structure present"
    mid = bicommutant("1C", shape_of((2, 1)))
    assert not mid.decomposable and mid.exceptional is None


def test_bicommutant_errors():
    with pytest.raises(BadParams):
        bicommutant("x", shape_of((2,)))
    with pytest.raises(BadParams):
        bicommutant("1", shape_of((2,), delta=2))
    with pytest.raises(BadParams):
        bicommutant("2", shape_of((2,), delta=1))


# -- pointwise solver --------------------------------------------------------


def test_solve_commutant_matches_constant_model():
    shape = ModuleShape(2, (1, 1), 2)
    pb = normal_form_basis(shape, plus_sigs(shape, "2"), "2")
    structures = [m for _, m, _ in pb.structures]
    sols = solve_commutant(pb.matg, [pb.matN] + structures)
    assert len(sols) == commutant_dim("2", shape)
    g = pb.matg.tolists()
    mats = [pb.matN.tolists()] + [m.tolists() for m in structures]
    for M in sols:
        assert is_commutant_element(M, g, mats)
    # plain nested lists work too
    sols2 = solve_commutant(g, [mats[0]])
    assert len(sols2) == len(commutant_oracle(g, [mats[0]]))
