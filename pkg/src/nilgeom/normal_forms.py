"""Pointwise normal forms of a symmetric form with a self-adjoint nilpotent.

Characteristic signatures live on the graded quotients: for each degree a,
the form g(., N^(a-1) .) induced on ker N^a modulo ker N^(a-1) and Im N.
Signatures are counted in real units; for a shape with cell size delta the
nondegenerate total per degree is delta * d_a.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import _exact
from ._exact import congruence_diagonalize
from .nilmodule import (
    ModuleShape,
    RationalMatrix,
    anti_identity_block,
    block_diag,
    invariant_factors,
    jordan_matrix,
)
from .trunc_ring import REAL, TruncScalar


class NormalFormError(Exception):
    pass


class NotSelfAdjoint(NormalFormError):
    pass


class NotAlternate(NormalFormError):
    pass


class NotCompatible(NormalFormError):
    pass


class DegenerateSignatures(NormalFormError):
    pass


class CaseConstraintViolated(NormalFormError):
    pass


CASE_DELTA = {"1": 1, "2": 2, "2p": 2, "3": 4, "3p": 4}


@dataclass(frozen=True)
class CharacteristicSignatures:
    shape: ModuleShape
    sigs: tuple  # ((r_1, s_1), ..., (r_n, s_n)), real-unit counts

    def __post_init__(self):
        object.__setattr__(
            self, "sigs", tuple((int(r), int(s)) for r, s in self.sigs)
        )
        if len(self.sigs) != self.shape.n:
            raise ValueError("need one signature pair per degree")
        for a, (r, s) in enumerate(self.sigs, start=1):
            if r < 0 or s < 0:
                raise ValueError("signature counts must be >= 0")
            if r + s > self.shape.delta * self.shape.d[a - 1]:
                raise ValueError(
                    f"degree {a}: r+s = {r + s} exceeds "
                    f"{self.shape.delta * self.shape.d[a - 1]}"
                )

    def nondegenerate(self) -> bool:
        return all(
            r + s == self.shape.delta * da
            for (r, s), da in zip(self.sigs, self.shape.d)
        )

    def to_json(self):
        return {"shape": self.shape.to_json(), "sigs": [list(p) for p in self.sigs]}

    @staticmethod
    def from_json(obj) -> "CharacteristicSignatures":
        return CharacteristicSignatures(
            ModuleShape.from_json(obj["shape"]),
            tuple((int(r), int(s)) for r, s in obj["sigs"]),
        )


@dataclass(frozen=True)
class PrivilegedBasis:
    case_label: str
    shape: ModuleShape
    change_of_basis: RationalMatrix  # identity: the form is built in place
    matN: RationalMatrix
    matg: RationalMatrix
    structures: tuple  # ((name, RationalMatrix, adjointness), ...)
    epsilons: tuple  # per block, sizes decreasing; () when the case has none


# -- quotient machinery ------------------------------------------------------


def _power_list(N_rows, n):
    powers = [_exact.mat_identity(len(N_rows))]
    for _ in range(n + 1):
        powers.append(_exact.mat_mul(powers[-1], N_rows))
    return powers


def _independent_cols(cols):
    """Subset of the given column vectors that is independent, in order."""
    kept = []
    rows = []
    r = 0
    for c in cols:
        cand = rows + [list(c)]
        if _exact.rank(cand) > r:
            rows = cand
            r += 1
            kept.append(list(c))
    return kept


def _quotient_reps(powers, N_rows, a):
    """Representatives of ker N^a mod (ker N^(a-1) + Im N \\cap ker N^a)."""
    ker_a = _exact.nullspace(powers[a])
    ker_prev = _exact.nullspace(powers[a - 1]) if a > 1 else []
    # Im N intersect ker N^a = N(ker N^(a+1))
    ker_next = _exact.nullspace(powers[a + 1])
    dim = len(N_rows)
    imn_ker = [
        [sum(N_rows[i][k] * v[k] for k in range(dim)) for i in range(dim)]
        for v in ker_next
    ]
    sub = _independent_cols(ker_prev + imn_ker)
    reps = []
    rows = [list(c) for c in sub]
    r = len(rows)
    for v in ker_a:
        cand = rows + [list(v)]
        if _exact.rank(cand) > r:
            rows = cand
            r += 1
            reps.append(v)
    return reps


def _induced_form(g_rows, N_rows, a, reps):
    """Matrix of (x, y) -> g(x, N^(a-1) y) on the representatives."""
    dim = len(g_rows)
    Npow = _exact.mat_identity(dim)
    for _ in range(a - 1):
        Npow = _exact.mat_mul(Npow, N_rows)
    out = []
    for x in reps:
        gx = [sum(g_rows[i][k] * x[k] for k in range(dim)) for i in range(dim)]
        row = []
        for y in reps:
            ny = [sum(Npow[i][k] * y[k] for k in range(dim)) for i in range(dim)]
            row.append(sum(gx[i] * ny[i] for i in range(dim)))
        out.append(row)
    return out


# -- operations --------------------------------------------------------------


def characteristic_signatures(N: RationalMatrix, g: RationalMatrix) -> CharacteristicSignatures:
    """Signatures of the graded quotient forms of (g, N), real units."""
    if g.rows != g.cols or N.rows != N.cols or g.rows != N.rows:
        raise ValueError("N and g must be square of equal size")
    g_rows = g.tolists()
    if not _exact.mat_eq(g_rows, _exact.mat_transpose(g_rows)):
        raise NotSelfAdjoint("g must be symmetric")
    shape = invariant_factors(N)  # raises NotNilpotent
    N_rows = N.tolists()
    lhs = _exact.mat_mul(_exact.mat_transpose(N_rows), g_rows)
    rhs = _exact.mat_mul(g_rows, N_rows)
    if not _exact.mat_eq(lhs, rhs):
        raise NotSelfAdjoint("N is not self-adjoint for g")
    powers = _power_list(N_rows, shape.n)
    sigs = []
    for a in range(1, shape.n + 1):
        reps = _quotient_reps(powers, N_rows, a)
        form = _induced_form(g_rows, N_rows, a, reps)
        if form:
            sigs.append(_exact.signature_of_symmetric(form))
        else:
            sigs.append((0, 0))
    return CharacteristicSignatures(shape, tuple(sigs))


def _quaternion_left_units():
    """Left multiplications by i, j, k in the basis (1, i, j, k)."""
    i = [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]
    j = [[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]]
    k = [[0, 0, 0, -1], [0, 0, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0]]
    frac = lambda m: [[Fraction(v) for v in r] for r in m]
    return frac(i), frac(j), frac(k)


def _cell_repeat(cell, count):
    return block_diag(*([cell] * count))


_LAM = [[Fraction(0), Fraction(-1)], [Fraction(1), Fraction(0)]]
_PARA = [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(-1)]]
_I22 = [[Fraction(v) for v in r] for r in
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]]]
_LP2 = [[Fraction(v) for v in r] for r in
        [[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]]]
# _LP2 is [[0, J1], [-J1, 0]] with J1 = [[0,-1],[1,0]]


def _epsilon_list(shape: ModuleShape, sigs, case_label: str):
    """Per-block signs, blocks ordered by decreasing size, + before -."""
    delta = shape.delta
    per_size = {}
    for a, ((r, s), da) in enumerate(zip(sigs, shape.d), start=1):
        if r + s != delta * da:
            raise DegenerateSignatures(
                f"degree {a}: r+s = {r + s}, expected {delta * da}"
            )
        if case_label in ("1", "2", "3"):
            if r % delta or s % delta:
                raise CaseConstraintViolated(
                    f"degree {a}: signature ({r},{s}) not divisible by delta={delta}"
                )
            per_size[a] = [1] * (r // delta) + [-1] * (s // delta)
        else:  # para cases force the neutral signature
            if r != s:
                raise CaseConstraintViolated(
                    f"degree {a}: para case needs neutral signature, got ({r},{s})"
                )
            per_size[a] = []
    eps = []
    for a in range(shape.n, 0, -1):
        eps.extend(per_size[a])
    return eps


def normal_form_basis(shape: ModuleShape, sigs, case_label: str) -> PrivilegedBasis:
    """Privileged model (Mat N, Mat g, structure matrices) for the case.

    sigs is a sequence of real-unit pairs (r_a, s_a); the para cases accept
    only the forced neutral values. change_of_basis is the identity: the
    model is emitted directly in its privileged basis.
    """
    if case_label not in CASE_DELTA:
        raise CaseConstraintViolated(f"unknown case label {case_label!r}")
    if shape.delta != CASE_DELTA[case_label]:
        raise CaseConstraintViolated(
            f"case {case_label} needs delta={CASE_DELTA[case_label]}, "
            f"shape has delta={shape.delta}"
        )
    sigs = tuple((int(r), int(s)) for r, s in sigs)
    if len(sigs) != shape.n:
        raise DegenerateSignatures("need one signature pair per degree")
    eps = _epsilon_list(shape, sigs, case_label)
    delta = shape.delta
    sizes = shape.sizes_decreasing()

    matN = jordan_matrix(shape)
    gblocks = []
    for idx, p in enumerate(sizes):
        if case_label in ("1", "2", "3"):
            blk = anti_identity_block(p, delta)
            if eps[idx] < 0:
                blk = _exact.mat_neg(blk)
        elif case_label == "2p":
            blk = anti_identity_block(2 * p, 1)
        else:  # 3p
            blk = anti_identity_block(2 * p, 2)
        gblocks.append(blk)
    matg = RationalMatrix.from_lists(block_diag(*gblocks))

    cells = sum(sizes)  # number of delta-cells along the diagonal
    structures = []
    if case_label == "2":
        structures.append(("J", RationalMatrix.from_lists(_cell_repeat(_LAM, cells)), "skew"))
    elif case_label == "2p":
        structures.append(("L", RationalMatrix.from_lists(_cell_repeat(_PARA, cells)), "skew"))
    elif case_label == "3":
        li, lj, lk = _quaternion_left_units()
        structures.append(("J1", RationalMatrix.from_lists(_cell_repeat(li, cells)), "skew"))
        structures.append(("J2", RationalMatrix.from_lists(_cell_repeat(lj, cells)), "skew"))
        structures.append(("J3", RationalMatrix.from_lists(_cell_repeat(lk, cells)), "skew"))
    elif case_label == "3p":
        l1 = _cell_repeat(_I22, cells)
        l2 = _cell_repeat(_LP2, cells)
        structures.append(("L1", RationalMatrix.from_lists(l1), "skew"))
        structures.append(("L2", RationalMatrix.from_lists(l2), "skew"))
        j = _exact.mat_mul(l1, l2)
        structures.append(("J", RationalMatrix.from_lists(j), "skew"))

    ident = RationalMatrix.from_lists(_exact.mat_identity(matN.rows))
    return PrivilegedBasis(
        case_label=case_label,
        shape=shape,
        change_of_basis=ident,
        matN=matN,
        matg=matg,
        structures=tuple(structures),
        epsilons=tuple(eps) if case_label in ("1", "2", "3") else (),
    )


def global_signature(shape: ModuleShape, sigs):
    """Signature of the whole form from the characteristic signatures.

    (sum_a floor(a/2) delta d_a + sum_{a odd} r_a,
     sum_a floor(a/2) delta d_a + sum_{a odd} s_a)
    Only nondegenerate signature data is accepted.
    """
    sigs = tuple((int(r), int(s)) for r, s in sigs)
    if len(sigs) != shape.n:
        raise DegenerateSignatures("need one signature pair per degree")
    base = 0
    for a, da in enumerate(shape.d, start=1):
        base += (a // 2) * shape.delta * da
    for a, ((r, s), da) in enumerate(zip(sigs, shape.d), start=1):
        if r + s != shape.delta * da:
            raise DegenerateSignatures(
                f"degree {a}: r+s = {r + s}, expected {shape.delta * da}"
            )
    p = base + sum(r for a, (r, s) in enumerate(sigs, start=1) if a % 2 == 1)
    q = base + sum(s for a, (r, s) in enumerate(sigs, start=1) if a % 2 == 1)
    return (p, q)


@dataclass(frozen=True)
class AltFormRanks:
    shape: ModuleShape
    ranks: tuple
    darboux: tuple  # D x D grid of TruncScalar, order-n coefficients

    def nondegenerate(self) -> bool:
        return all(r == da for r, da in zip(self.ranks, self.shape.d))

    def to_json(self):
        return {
            "shape": self.shape.to_json(),
            "ranks": list(self.ranks),
            "darboux": [[t.to_json() for t in row] for row in self.darboux],
        }


def alt_form_ranks(N: RationalMatrix, omega: RationalMatrix) -> AltFormRanks:
    """Ranks of the graded quotients of an N-compatible alternate form.

    Compatibility means omega(x, N y) = omega(N x, y). The Darboux model is
    the constant-coefficient block diagonal with block v^(n-a) J_{d_a, r_a/2}
    for each degree a (increasing), J_{d, m} = diag(J_m, 0).
    """
    if omega.rows != omega.cols or omega.rows != N.rows:
        raise ValueError("N and omega must be square of equal size")
    w = omega.tolists()
    if not _exact.mat_eq(w, _exact.mat_neg(_exact.mat_transpose(w))):
        raise NotAlternate("omega must be antisymmetric")
    shape = invariant_factors(N)
    N_rows = N.tolists()
    lhs = _exact.mat_mul(_exact.mat_transpose(N_rows), w)
    rhs = _exact.mat_mul(w, N_rows)
    if not _exact.mat_eq(lhs, rhs):
        raise NotCompatible("omega(,N.) must equal omega(N.,.)")
    powers = _power_list(N_rows, shape.n)
    ranks = []
    for a in range(1, shape.n + 1):
        reps = _quotient_reps(powers, N_rows, a)
        form = _induced_form(w, N_rows, a, reps)
        ranks.append(_exact.rank(form) if form else 0)

    order = shape.n
    zero = TruncScalar.zero(order)
    D = shape.D
    grid = [[zero for _ in range(D)] for _ in range(D)]
    off = 0
    for a, (da, ra) in enumerate(zip(shape.d, ranks), start=1):
        m = ra // 2
        nu_pow = TruncScalar.nu(order, order - a)
        for t in range(m):
            grid[off + t][off + m + t] = -nu_pow
            grid[off + m + t][off + t] = nu_pow
        off += da
    return AltFormRanks(shape, tuple(ranks), tuple(tuple(r) for r in grid))
