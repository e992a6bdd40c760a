"""The eight structure-set types and their commutant matrix algebras.

A structure set is a metric g together with parallel-candidate endomorphisms
(complex, paracomplex, quaternionic, and their complexified variants). The
commutant machinery gives explicit bases of the skew-adjoint matrices
commuting with a privileged model (N, g, structures), and of the algebra
commuting with that whole commutant.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

from . import _exact
from ._exact import CRat, as_crat
from .nilmodule import (
    ModuleShape,
    RationalMatrix,
    block_diag,
    ipq,
    jmat,
    jordan_matrix,
    lmat,
)
from .normal_forms import CASE_DELTA, _epsilon_list, normal_form_basis


class AlgebraLabError(Exception):
    pass


class BadParams(AlgebraLabError):
    pass


class NotClassifiable(AlgebraLabError):
    pass


class CaseUnsupported(AlgebraLabError):
    pass


ALL_LABELS = ("1", "1C", "2", "2p", "2C", "3", "3p", "3C")
REAL_LABELS = ("1", "2", "2p", "3", "3p")


# -- structure sets ----------------------------------------------------------


@dataclass(frozen=True)
class StructureSet:
    case_label: str
    dim: int
    g: RationalMatrix
    structures: tuple  # ((name, RationalMatrix, "self"|"skew"), ...)
    tensor_catalog: tuple  # ((kind, RationalMatrix), ...)

    @property
    def generators(self):
        return [m for _, m, _ in self.structures]


def _two_by_two(a, b, c, d):
    n = len(a)
    out = _exact.mat_zero(2 * n, 2 * n)
    for i in range(n):
        for j in range(n):
            out[i][j] = a[i][j]
            out[i][n + j] = b[i][j]
            out[n + i][j] = c[i][j]
            out[n + i][n + j] = d[i][j]
    return out


def _complexify(re, im):
    return [[CRat(re[i][j], im[i][j]) for j in range(len(re[0]))]
            for i in range(len(re))]


def _cat(kind, rows):
    return (kind, RationalMatrix.from_lists(rows))


def _cat_c(kind, g, s):
    """(kind, g + i g s) as a complex-rational matrix."""
    return (kind, RationalMatrix.from_lists(
        _complexify(g, _exact.mat_mul(g, s))))


def _cat_pair(kind, g, u, ju):
    """(kind, g u + i g (ju)) for a complex 2-form."""
    return (kind, RationalMatrix.from_lists(
        _complexify(_exact.mat_mul(g, u), _exact.mat_mul(g, ju))))


def build_type(case_label: str, p: int, q: int = 0) -> StructureSet:
    """Canonical model of the case at size parameters (p, q) or p.

    Cases 1, 2, 3 take a signature pair (p, q); the others take the single
    parameter p (q must stay 0). The tensor catalog instantiates each
    parallel-tensor family at its canonical parameter (the identity, or the
    first skew structure for the alternate forms).
    """
    if case_label not in ALL_LABELS:
        raise BadParams(f"unknown case label {case_label!r}")
    if p < 0 or q < 0:
        raise BadParams("sizes must be >= 0")
    if case_label in ("1", "2", "3"):
        if p + q < 1:
            raise BadParams("need p + q >= 1")
    else:
        if q != 0:
            raise BadParams(f"case {case_label} takes the single parameter p")
        if p < 1:
            raise BadParams("need p >= 1")

    structures = []
    if case_label == "1":
        g = ipq(p, q)
        catalog = [_cat("metric", g)]
    elif case_label == "1C":
        g = ipq(p, p)
        jb = jmat(p)
        structures.append(("Jbar", jb, "self"))
        catalog = [
            _cat("metric", g),
            _cat_c("complex-riemannian", g, jb),
            _cat_c("jbar-volume", g, jb),
        ]
    elif case_label == "2":
        m = p + q
        g = block_diag(ipq(p, q), ipq(p, q))
        j = jmat(m)
        structures.append(("J", j, "skew"))
        catalog = [
            _cat("metric", g),
            _cat("symplectic", _exact.mat_mul(g, j)),
            _cat_c("kahler", g, j),
        ]
    elif case_label == "2p":
        g = ipq(p, p)
        l = lmat(p)
        structures.append(("L", l, "skew"))
        catalog = [
            _cat("metric", g),
            _cat("symplectic", _exact.mat_mul(g, l)),
        ]
    elif case_label == "2C":
        g = lmat(2 * p)
        jb = block_diag(jmat(p), _exact.mat_neg(jmat(p)))
        l = ipq(2 * p, 2 * p)
        j = block_diag(jmat(p), jmat(p))
        structures.append(("Jbar", jb, "self"))
        structures.append(("L", l, "skew"))
        structures.append(("J", j, "skew"))
        catalog = [
            _cat("metric", g),
            _cat("symplectic", _exact.mat_mul(g, l)),
            _cat_c("complex-riemannian", g, jb),
            _cat_c("kahler", g, j),
            _cat_pair("jbar-symplectic", g, l, _exact.mat_mul(jb, l)),
            _cat_c("jbar-volume", g, jb),
        ]
    elif case_label == "3":
        m = p + q
        a = ipq(p, q)
        g = block_diag(a, a, a, a)
        j1 = block_diag(_exact.mat_neg(jmat(m)), jmat(m))
        j2 = jmat(2 * m)
        zero = _exact.mat_zero(2 * m, 2 * m)
        j3 = _two_by_two(zero, jmat(m), jmat(m), zero)
        structures.append(("J1", j1, "skew"))
        structures.append(("J2", j2, "skew"))
        structures.append(("J3", j3, "skew"))
        om = _exact.mat_mul(g, j1)
        omj = _exact.mat_mul(g, _exact.mat_mul(j2, j1))
        catalog = [
            _cat("metric", g),
            _cat("symplectic", om),
            _cat_c("kahler", g, j2),
            _cat_pair("j-symplectic", g, j1, _exact.mat_mul(j2, j1)),
            (
                "j-volume",
                RationalMatrix.from_lists(_complexify(om, omj)),
            ),
        ]
    elif case_label == "3p":
        g = ipq(2 * p, 2 * p)
        l1 = lmat(2 * p)
        j = block_diag(_exact.mat_neg(jmat(p)), jmat(p))
        zero = _exact.mat_zero(2 * p, 2 * p)
        l2 = _two_by_two(zero, _exact.mat_neg(jmat(p)), jmat(p), zero)
        structures.append(("L1", l1, "skew"))
        structures.append(("J", j, "skew"))
        structures.append(("L2", l2, "skew"))
        omre = _exact.mat_mul(g, l1)
        omim = _exact.mat_mul(g, _exact.mat_mul(j, l1))
        catalog = [
            _cat("metric", g),
            _cat("symplectic", omre),
            _cat_c("kahler", g, j),
            _cat_pair("j-symplectic", g, l1, _exact.mat_mul(j, l1)),
            ("j-volume", RationalMatrix.from_lists(_complexify(omre, omim))),
        ]
    else:  # 3C
        b = ipq(2 * p, 2 * p)
        g = block_diag(b, _exact.mat_neg(b))
        jb = block_diag(jmat(2 * p), jmat(2 * p))
        j = block_diag(jmat(p), jmat(p),
                       _exact.mat_neg(jmat(p)), _exact.mat_neg(jmat(p)))
        l1 = lmat(4 * p)
        c = block_diag(jmat(p), jmat(p))
        zero = _exact.mat_zero(4 * p, 4 * p)
        l2 = _two_by_two(zero, c, _exact.mat_neg(c), zero)
        structures.append(("Jbar", jb, "self"))
        structures.append(("J", j, "skew"))
        structures.append(("L1", l1, "skew"))
        structures.append(("L2", l2, "skew"))
        omre = _exact.mat_mul(g, l1)
        omim = _exact.mat_mul(g, _exact.mat_mul(j, l1))
        catalog = [
            _cat("metric", g),
            _cat("symplectic", _exact.mat_mul(g, j)),
            _cat_c("complex-riemannian", g, jb),
            _cat_c("kahler", g, j),
            _cat_pair("jbar-symplectic", g, l1, _exact.mat_mul(jb, l1)),
            _cat_pair("j-symplectic", g, l1, _exact.mat_mul(j, l1)),
            _cat_c("jbar-volume", g, jb),
            ("j-volume", RationalMatrix.from_lists(_complexify(omre, omim))),
        ]

    return StructureSet(
        case_label=case_label,
        dim=len(g),
        g=RationalMatrix.from_lists(g),
        structures=tuple(
            (name, RationalMatrix.from_lists(m), adj) for name, m, adj in structures
        ),
        tensor_catalog=tuple(catalog),
    )


# -- identification ----------------------------------------------------------


def _flat(m):
    return [x for row in m for x in row]


class _Span:
    """Incremental rational span with reduced pivot rows."""

    def __init__(self):
        self.piv = {}  # col -> normalized reduced row

    def reduce(self, v):
        v = list(v)
        for c in sorted(self.piv):
            if v[c]:
                coef = v[c]
                row = self.piv[c]
                v = [x - coef * y for x, y in zip(v, row)]
        return v

    def contains(self, v):
        return all(x == 0 for x in self.reduce(v))

    def add(self, v):
        """True if v enlarged the span."""
        r = self.reduce(v)
        for c, x in enumerate(r):
            if x != 0:
                inv = 1 / x
                self.piv[c] = [y * inv for y in r]
                return True
        return False

    @property
    def dim(self):
        return len(self.piv)


def _algebra_closure(mats, d):
    """Basis of the unital algebra generated by mats (d x d lists)."""
    span = _Span()
    basis = []

    def try_add(m):
        if span.add(_flat(m)):
            basis.append(m)
            return True
        return False

    try_add(_exact.mat_identity(d))
    for m in mats:
        try_add(m)
    changed = True
    while changed:
        changed = False
        snapshot = list(basis)
        for a in snapshot:
            for b in snapshot:
                if try_add(_exact.mat_mul(a, b)):
                    changed = True
    return basis


def _coords(basis, m):
    """Coordinates of m in the given matrix basis, or None."""
    cols = [_flat(b) for b in basis]
    a = [[cols[j][i] for j in range(len(cols))] for i in range(len(cols[0]))]
    return _exact.solve(a, _flat(m))


def _trace(m):
    return sum(m[i][i] for i in range(len(m)))


def _eigen_subspace(basis, images, sign):
    """Basis (as matrices) of {X in span: sigma(X) = sign * X}."""
    k = len(basis)
    rows = []
    for i in range(k):
        im = images[i]
        diff = _exact.mat_sub(im, _exact.mat_scale(basis[i], Fraction(sign)))
        rows.append(_flat(diff))
    a = [[rows[j][i] for j in range(len(rows))] for i in range(len(rows[0]))]
    combos = _exact.nullspace(a)
    out = []
    d = len(basis[0])
    for v in combos:
        m = _exact.mat_zero(d, d)
        for coef, b in zip(v, basis):
            if coef:
                m = _exact.mat_add(m, _exact.mat_scale(b, coef))
        out.append(m)
    return out


def _square_root_if_perfect(fr: Fraction):
    if fr < 0:
        return None
    a, b = fr.numerator, fr.denominator
    ra, rb = isqrt(a), isqrt(b)
    if ra * ra == a and rb * rb == b:
        return Fraction(ra, rb)
    return None


def _complete_square(basis2, x):
    """For x with x^2 = a Id + b x, return (y, c) with y^2 = c Id."""
    ident, _ = basis2
    x2 = _exact.mat_mul(x, x)
    co = _coords([ident, x], x2)
    if co is None:
        return None
    a, b = co
    y = _exact.mat_sub(x, _exact.mat_scale(ident, b / 2))
    return y, a + b * b / 4


def identify_type(generators, g: RationalMatrix) -> str:
    """Case label of the algebra generated by the structures, for g.

    The generators are closed under products; the label is decided by the
    algebra's dimension, its adjoint involution, and exact squaring
    relations. Raises NotClassifiable when no case matches (for instance
    the doubled quaternion algebra, or a nilpotent generator).
    """
    g_rows = g.tolists()
    d = g.rows
    ginv = _exact.inverse(g_rows)
    if ginv is None:
        raise NotClassifiable("g is degenerate")
    mats = [m.tolists() if isinstance(m, RationalMatrix) else [list(r) for r in m]
            for m in generators]
    basis = _algebra_closure(mats, d)
    dA = len(basis)

    def sigma(x):
        return _exact.mat_mul(ginv, _exact.mat_mul(_exact.mat_transpose(x), g_rows))

    images = [sigma(b) for b in basis]
    span = _Span()
    for b in basis:
        span.add(_flat(b))
    for im in images:
        if not span.contains(_flat(im)):
            raise NotClassifiable("algebra is not closed under the g-adjoint")

    ident = _exact.mat_identity(d)

    if dA == 1:
        return "1"

    if dA == 2:
        x = basis[1]
        t = _trace(x)
        x0 = _exact.mat_sub(x, _exact.mat_scale(ident, t / d))
        done = _complete_square((ident, x0), x0)
        if done is None:
            raise NotClassifiable("squaring relation failed")
        y, c = done
        sy = sigma(y)
        if _exact.mat_eq(sy, y):
            parity = 1
        elif _exact.mat_eq(sy, _exact.mat_neg(y)):
            parity = -1
        else:
            raise NotClassifiable("adjoint does not stabilize the generator line")
        if c < 0 and parity == 1:
            return "1C"
        if c < 0 and parity == -1:
            return "2"
        if c > 0 and parity == -1:
            return "2p"
        raise NotClassifiable("dimension-2 algebra outside the catalogue")

    commutative = all(
        _exact.mat_eq(_exact.mat_mul(a, b), _exact.mat_mul(b, a))
        for i, a in enumerate(basis)
        for b in basis[i + 1 :]
    )

    if dA == 4 and commutative:
        return _identify_dim4_commutative(basis, images, sigma, ident, d)
    if dA == 4:
        return _identify_dim4_noncommutative(basis, images, sigma, ident, d)
    if dA == 8 and not commutative:
        return _identify_dim8(basis, sigma, ident, d)
    raise NotClassifiable(f"algebra dimension {dA} outside the catalogue")


def _identify_dim4_commutative(basis, images, sigma, ident, d):
    aplus = _eigen_subspace(basis, images, 1)
    aminus = _eigen_subspace(basis, images, -1)
    if len(aplus) != 2 or len(aminus) != 2:
        raise NotClassifiable("adjoint eigenspaces do not split 2+2")
    # traceless direction of the fixed part
    x = None
    for cand in aplus:
        t = _trace(cand)
        c0 = _exact.mat_sub(cand, _exact.mat_scale(ident, t / d))
        if not _exact.mat_is_zero(c0):
            x = c0
            break
    if x is None:
        raise NotClassifiable("fixed part is scalar only")
    done = _complete_square((ident, x), x)
    if done is None:
        raise NotClassifiable("squaring relation failed in the fixed part")
    y, c = done
    if not c < 0:
        raise NotClassifiable("no central complex unit")
    y1, y2 = aminus

    def in_k(m):
        return _coords([ident, y], m)

    p11 = in_k(_exact.mat_mul(y1, y1))
    p22 = in_k(_exact.mat_mul(y2, y2))
    p12 = in_k(
        _exact.mat_add(_exact.mat_mul(y1, y2), _exact.mat_mul(y2, y1))
    )
    if p11 is None or p22 is None or p12 is None:
        raise NotClassifiable("anti-fixed squares leave the central field")
    q1, r1 = p11
    q2, r2 = p22
    q12, r12 = p12  # (a y1 + b y2)^2 = (q1 a^2 + q12 a b + q2 b^2) Id + (...) y

    def q_of(a, b):
        return q1 * a * a + q12 * a * b + q2 * b * b

    lines = []
    if r1 == 0 and r2 == 0 and r12 == 0:
        # r vanishes identically: any direction with positive square works
        if q1 > 0:
            lines = [(Fraction(1), Fraction(0))]
        elif q2 > 0:
            lines = [(Fraction(0), Fraction(1))]
        elif q1 < 0 and q12 * q12 - 4 * q1 * q2 > 0:
            lines = [(-q12 / (2 * q1), Fraction(1))]
        elif q1 == 0 and q12 != 0:
            lines = [((1 - q2) / q12, Fraction(1))]
    elif r1 == 0:
        # r = b (r12 a + r2 b): the b = 0 line plus the other factor's line
        lines = [(Fraction(1), Fraction(0)), (Fraction(-r2), Fraction(r12))]
        lines = [l for l in lines if l != (Fraction(0), Fraction(0))]
    else:
        disc = _square_root_if_perfect(Fraction(r12 * r12 - 4 * r1 * r2))
        if disc is None:
            raise NotClassifiable("anti-fixed square cone has no rational zero line")
        lines = [((-r12 + disc) / (2 * r1), Fraction(1)),
                 ((-r12 - disc) / (2 * r1), Fraction(1))]
    for a, b in lines:
        if q_of(a, b) > 0:
            return "2C"
    raise NotClassifiable("no split anti-fixed direction with positive square")


def _identify_dim4_noncommutative(basis, images, sigma, ident, d):
    aplus = _eigen_subspace(basis, images, 1)
    if len(aplus) != 1:
        raise NotClassifiable("fixed part is not the scalars")
    traceless = []
    for b in basis:
        t = _trace(b)
        c0 = _exact.mat_sub(b, _exact.mat_scale(ident, t / d))
        if not _exact.mat_is_zero(c0):
            traceless.append(c0)
    span = _Span()
    x_basis = [m for m in traceless if span.add(_flat(m))]
    if len(x_basis) != 3:
        raise NotClassifiable("traceless part is not 3-dimensional")
    s = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            prod = _exact.mat_add(
                _exact.mat_mul(x_basis[i], x_basis[j]),
                _exact.mat_mul(x_basis[j], x_basis[i]),
            )
            co = _coords([ident], prod)
            if co is None:
                raise NotClassifiable("polarized squares are not scalar")
            s[i][j] = co[0] / 2
    sig = _exact.signature_of_symmetric(s)
    if sig == (0, 3):
        return "3"
    if sig == (2, 1):
        return "3p"
    raise NotClassifiable(f"squaring form signature {sig} matches no case")


def _identify_dim8(basis, sigma, ident, d):
    k = len(basis)
    center = []
    # central combinations: sum t_i (B_i A - A B_i) = 0 for every basis A
    cols = []
    for b in basis:
        col = []
        for a in basis:
            diff = _exact.mat_sub(_exact.mat_mul(b, a), _exact.mat_mul(a, b))
            col.extend(_flat(diff))
        cols.append(col)
    a_mat = [[cols[j][i] for j in range(k)] for i in range(len(cols[0]))]
    combos = _exact.nullspace(a_mat)
    for v in combos:
        m = _exact.mat_zero(d, d)
        for coef, b in zip(v, basis):
            if coef:
                m = _exact.mat_add(m, _exact.mat_scale(b, coef))
        center.append(m)
    if len(center) != 2:
        raise NotClassifiable("center is not 2-dimensional")
    x = None
    for cand in center:
        t = _trace(cand)
        c0 = _exact.mat_sub(cand, _exact.mat_scale(ident, t / d))
        if not _exact.mat_is_zero(c0):
            x = c0
            break
    if x is None:
        raise NotClassifiable("center is scalar only")
    done = _complete_square((ident, x), x)
    if done is None:
        raise NotClassifiable("central squaring relation failed")
    y, c = done
    if not c < 0:
        raise NotClassifiable("split center (a doubled algebra), no complex unit")
    if not _exact.mat_eq(sigma(y), y):
        raise NotClassifiable("central complex unit is not self-adjoint")
    # fixed part must be exactly Id and the central unit
    images = [sigma(b) for b in basis]
    aplus = _eigen_subspace(basis, images, 1)
    if len(aplus) != 2:
        raise NotClassifiable("fixed part has the wrong dimension")
    # K-traceless part: trace(Y) = 0 and trace(x Y) = 0
    cols = []
    for b in basis:
        cols.append([_trace(b), _trace(_exact.mat_mul(x, b))])
    a_mat = [[cols[j][i] for j in range(len(basis))] for i in range(2)]
    combos = _exact.nullspace(a_mat)
    a0 = []
    for v in combos:
        m = _exact.mat_zero(d, d)
        for coef, b in zip(v, basis):
            if coef:
                m = _exact.mat_add(m, _exact.mat_scale(b, coef))
        a0.append(m)
    if len(a0) != 6:
        raise NotClassifiable("complex-traceless part has the wrong dimension")
    # K-basis of a0: greedily pick y_i not in the K-span of the previous
    kspan = _Span()
    kbasis = []
    for m in a0:
        if kspan.add(_flat(m)):
            kbasis.append(m)
            kspan.add(_flat(_exact.mat_mul(x, m)))
        if len(kbasis) == 3:
            break
    if len(kbasis) != 3:
        raise NotClassifiable("complex-traceless part has no 3-element basis")
    kgram = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            prod = _exact.mat_add(
                _exact.mat_mul(kbasis[i], kbasis[j]),
                _exact.mat_mul(kbasis[j], kbasis[i]),
            )
            co = _coords([ident, x], prod)
            if co is None:
                raise NotClassifiable("polarized squares leave the center")
            kgram[i][j] = (co[0] / 2, co[1] / 2)
    # determinant over K = R[x]/(x^2 - c)
    cval = c

    def kmul(u, v):
        return (u[0] * v[0] + cval * u[1] * v[1], u[0] * v[1] + u[1] * v[0])

    def kadd(u, v):
        return (u[0] + v[0], u[1] + v[1])

    def kneg(u):
        return (-u[0], -u[1])

    det = (Fraction(0), Fraction(0))
    from itertools import permutations

    for perm in permutations(range(3)):
        inv = sum(
            1 for i in range(3) for j in range(i + 1, 3) if perm[i] > perm[j]
        )
        term = kmul(kmul(kgram[0][perm[0]], kgram[1][perm[1]]), kgram[2][perm[2]])
        det = kadd(det, term if inv % 2 == 0 else kneg(term))
    if det == (0, 0):
        raise NotClassifiable("degenerate complex squaring form")
    return "3C"


# -- commutants of the privileged models -------------------------------------


# (dim of the coefficient algebra A, dim of its anti-fixed part) per case
DIM_A = {"1": (1, 0), "2": (2, 1), "2p": (2, 1), "3": (4, 3), "3p": (4, 3)}

_F0 = Fraction(0)
_F1 = Fraction(1)

_CELL_FULL = {
    "1": ((_F1,),),
    "2": ((_F1, _F0), (_F0, _F1)),
    "2p": ((_F1, _F0), (_F0, _F1)),
    "3": (
        (_F1, _F0, _F0, _F0),
        (_F0, _F1, _F0, _F0),
        (_F0, _F0, _F1, _F0),
        (_F0, _F0, _F0, _F1),
    ),
    "3p": (
        (_F1, _F0, _F0, _F0),
        (_F0, _F1, _F0, _F0),
        (_F0, _F0, _F1, _F0),
        (_F0, _F0, _F0, _F1),
    ),
}

_CELL_MINUS = {
    "1": (),
    "2": ((_F0, _F1),),
    "2p": ((_F1, -_F1),),
    "3": (
        (_F0, _F1, _F0, _F0),
        (_F0, _F0, _F1, _F0),
        (_F0, _F0, _F0, _F1),
    ),
    "3p": (
        (_F1, _F0, _F0, -_F1),
        (_F0, _F1, _F0, _F0),
        (_F0, _F0, _F1, _F0),
    ),
}


def _cell_matrix(case_label, co):
    """delta x delta cell commuting with the repeated structure cells."""
    if case_label == "1":
        return [[co[0]]]
    if case_label == "2":
        a, b = co
        return [[a, -b], [b, a]]
    if case_label == "2p":
        a, b = co
        return [[a, _F0], [_F0, b]]
    if case_label == "3":
        # right multiplication by a + bi + cj + dk in the basis (1, i, j, k)
        a, b, c, d = co
        return [
            [a, -b, -c, -d],
            [b, a, d, -c],
            [c, -d, a, b],
            [d, c, -b, a],
        ]
    # 3p: diag(P, cof P) with P = [[a, b], [c, d]]
    a, b, c, d = co
    return [
        [a, b, _F0, _F0],
        [c, d, _F0, _F0],
        [_F0, _F0, d, -c],
        [_F0, _F0, -b, a],
    ]


def _cell_conj(case_label, co):
    """Pairing conjugation on the cell coefficients."""
    if case_label == "1":
        return co
    if case_label == "2":
        a, b = co
        return (a, -b)
    if case_label == "2p":
        a, b = co
        return (b, a)
    if case_label == "3":
        a, b, c, d = co
        return (a, -b, -c, -d)
    a, b, c, d = co
    return (d, -b, -c, a)


def _all_plus_sigs(shape: ModuleShape, case_label: str):
    if case_label in ("1", "2", "3"):
        return tuple((shape.delta * da, 0) for da in shape.d)
    return tuple(
        (shape.delta * da // 2, shape.delta * da // 2) for da in shape.d
    )


def _check_real_case(case_label, shape):
    if case_label in ("1C", "2C", "3C"):
        raise CaseUnsupported(
            f"case {case_label}: complexified coefficients are not expressible "
            "in a real module shape; classify the underlying real case instead"
        )
    if case_label not in REAL_LABELS:
        raise BadParams(f"unknown case label {case_label!r}")
    if shape.delta != CASE_DELTA[case_label]:
        raise BadParams(
            f"case {case_label} needs delta={CASE_DELTA[case_label]}, "
            f"shape has delta={shape.delta}"
        )


@dataclass(frozen=True)
class CommutantBasis:
    case_label: str
    shape: ModuleShape
    basis: tuple  # RationalMatrix, one per independent parameter
    dim: int


def _place_cell(m, row0, col0, cell):
    for r, rowvals in enumerate(cell):
        for c, v in enumerate(rowvals):
            if v:
                m[row0 + r][col0 + c] = v


def commutant_dim(case_label: str, shape: ModuleShape) -> int:
    """Dimension of the skew commutant, straight from the cell count."""
    _check_real_case(case_label, shape)
    sizes = shape.sizes_decreasing()
    full, minus = DIM_A[case_label]
    pairs = sum(j * nj for j, nj in enumerate(sizes))
    return full * pairs + minus * sum(sizes)


def commutant_basis(
    case_label: str, shape: ModuleShape, sigs=None
) -> CommutantBasis:
    """Basis of the g-skew matrices commuting with N and the structures.

    The model is the privileged basis at the given signatures (all-plus when
    sigs is omitted). Elements come in Toeplitz cell systems: one per
    coefficient-algebra basis element for every ordered block pair and
    Toeplitz offset, plus one per anti-fixed coefficient on the diagonal.
    """
    _check_real_case(case_label, shape)
    if sigs is None:
        sigs = _all_plus_sigs(shape, case_label)
    else:
        sigs = tuple((int(r), int(s)) for r, s in sigs)
        if len(sigs) != shape.n:
            raise BadParams("need one signature pair per degree")
    eps = _epsilon_list(shape, sigs, case_label)
    sizes = shape.sizes_decreasing()
    if not eps:
        eps = [1] * len(sizes)
    delta = shape.delta
    dim_total = delta * sum(sizes)
    offs = []
    acc = 0
    for p in sizes:
        offs.append(acc)
        acc += delta * p

    elements = []
    for i in range(len(sizes)):
        for j in range(i + 1, len(sizes)):
            ni, nj = sizes[i], sizes[j]
            shift = ni - nj
            sign = Fraction(-eps[i] * eps[j])
            for m in range(nj):
                for co in _CELL_FULL[case_label]:
                    mat = _exact.mat_zero(dim_total, dim_total)
                    cell = _cell_matrix(case_label, co)
                    pcell = _exact.mat_scale(
                        _cell_matrix(case_label, _cell_conj(case_label, co)),
                        sign,
                    )
                    for l in range(nj - m):
                        _place_cell(
                            mat, offs[i] + delta * l, offs[j] + delta * (l + m), cell
                        )
                        _place_cell(
                            mat,
                            offs[j] + delta * l,
                            offs[i] + delta * (shift + l + m),
                            pcell,
                        )
                    elements.append(mat)
    for i in range(len(sizes)):
        ni = sizes[i]
        for m in range(ni):
            for co in _CELL_MINUS[case_label]:
                mat = _exact.mat_zero(dim_total, dim_total)
                cell = _cell_matrix(case_label, co)
                for l in range(ni - m):
                    _place_cell(
                        mat, offs[i] + delta * l, offs[i] + delta * (l + m), cell
                    )
                elements.append(mat)

    return CommutantBasis(
        case_label=case_label,
        shape=shape,
        basis=tuple(RationalMatrix.from_lists(m) for m in elements),
        dim=len(elements),
    )


# -- the algebra commuting with the commutant --------------------------------


@dataclass(frozen=True)
class BicommutantResult:
    case_label: str
    shape: ModuleShape
    basis: tuple  # RationalMatrix; complexified cases carry CRat entries
    dim: int  # real dimension = len(basis)
    decomposable: bool
    flat_factor: tuple | None  # (flat dim, signature) when decomposable
    exceptional: str | None


_BICOM_DELTA = {
    "1": 1,
    "1C": 1,
    "2": 2,
    "2p": 2,
    "2C": 2,
    "3": 4,
    "3p": 4,
    "3C": 4,
}


def _to_crat_mat(m):
    return [[as_crat(x) for x in row] for row in m]


def _case1_bicommutant_mats(shape: ModuleShape):
    """Real matrices spanning the algebra commuting with the commutant."""
    sizes = shape.sizes_decreasing()
    n1 = sizes[0]
    n2 = sizes[1] if len(sizes) > 1 else 0
    n3 = sizes[2] if len(sizes) > 2 else 0
    dim_total = sum(sizes)
    big_n = jordan_matrix(shape).tolists()
    mats = []
    power = _exact.mat_identity(dim_total)
    for _ in range(n2):
        mats.append(_exact.mat_copy(power))
        power = _exact.mat_mul(power, big_n)
    # the corner square of the leading block acts freely
    for r in range(n1 - n2):
        for c in range(n2, n1):
            mat = _exact.mat_zero(dim_total, dim_total)
            mat[r][c] = _F1
            mats.append(mat)
    # shared Toeplitz slots between the two leading blocks
    for m in range(n3, n2):
        mat = _exact.mat_zero(dim_total, dim_total)
        for l in range(n2 - m):
            mat[l][n1 + l + m] = _F1
            mat[n1 + l][(n1 - n2) + l + m] = -_F1
        mats.append(mat)
    return mats, (n1, n2, n3)


def _case1_flags(n1, n2, n3):
    decomposable = 2 * n2 < n1
    flat = None
    if decomposable:
        d2 = n1 - 2 * n2
        flat = (d2, ((d2 + 1) // 2, d2 // 2))
    exceptional = None
    if n2 == n1 and n3 == 0:
        exceptional = "extra (para)complex structure present"
    return decomposable, flat, exceptional


def bicommutant(case_label: str, shape: ModuleShape) -> BicommutantResult:
    """Real basis of the algebra commuting with every commutant element.

    Cases 1 and 1C carry the decomposability data (a nonzero flat factor
    splits off exactly when the second block is shorter than half the
    first); the other cases are N-generated over their coefficient algebra
    and never decompose.
    """
    if case_label not in ALL_LABELS:
        raise BadParams(f"unknown case label {case_label!r}")
    if shape.delta != _BICOM_DELTA[case_label]:
        raise BadParams(
            f"case {case_label} needs delta={_BICOM_DELTA[case_label]}, "
            f"shape has delta={shape.delta}"
        )
    sizes = shape.sizes_decreasing()
    n1 = sizes[0]

    if case_label in ("1", "1C"):
        mats, (m1, m2, m3) = _case1_bicommutant_mats(shape)
        decomposable, flat, exceptional = _case1_flags(m1, m2, m3)
        if case_label == "1C":
            cmats = [_to_crat_mat(m) for m in mats]
            mats = []
            for m in cmats:
                mats.append(m)
                mats.append(_exact.mat_scale(m, _exact.CRAT_I))
            if flat is not None:
                flat = (flat[0], None)
        return BicommutantResult(
            case_label=case_label,
            shape=shape,
            basis=tuple(RationalMatrix.from_lists(m) for m in mats),
            dim=len(mats),
            decomposable=decomposable,
            flat_factor=flat,
            exceptional=exceptional,
        )

    model_label = {"2": "2", "2p": "2p", "3": "3", "3p": "3p",
                   "2C": "2p", "3C": "3p"}[case_label]
    pb = normal_form_basis(shape, _all_plus_sigs(shape, model_label), model_label)
    gens = [_exact.mat_identity(shape.delta * sum(sizes))]
    gens.extend(s.tolists() for _, s, _ in pb.structures)
    big_n = pb.matN.tolists()
    mats = []
    for s in gens:
        power = _exact.mat_copy(s)
        for _ in range(n1):
            mats.append(_exact.mat_copy(power))
            power = _exact.mat_mul(power, big_n)
    if case_label in ("2C", "3C"):
        cmats = [_to_crat_mat(m) for m in mats]
        mats = []
        for m in cmats:
            mats.append(m)
            mats.append(_exact.mat_scale(m, _exact.CRAT_I))
    return BicommutantResult(
        case_label=case_label,
        shape=shape,
        basis=tuple(RationalMatrix.from_lists(m) for m in mats),
        dim=len(mats),
        decomposable=False,
        flat_factor=None,
        exceptional=None,
    )


# -- pointwise solver --------------------------------------------------------


def solve_commutant(g, structures):
    """Basis of {M : M^t g + g M = 0 and M S = S M for every S}.

    Works on plain numeric matrices (RationalMatrix or nested lists), so it
    applies at a single point of a germ as well as to constant models. Used
    by the holonomy containment checks.
    """
    g_rows = g.tolists() if isinstance(g, RationalMatrix) else [list(r) for r in g]
    mats = [
        s.tolists() if isinstance(s, RationalMatrix) else [list(r) for r in s]
        for s in structures
    ]
    d = len(g_rows)
    rows = []
    for i in range(d):
        for j in range(d):
            row = [_F0] * (d * d)
            for r in range(d):
                # (M^t g)[i][j] picks M[r][i]; (g M)[i][j] picks M[r][j]
                row[r * d + i] = row[r * d + i] + g_rows[r][j]
                row[r * d + j] = row[r * d + j] + g_rows[i][r]
            rows.append(row)
    for s in mats:
        for i in range(d):
            for j in range(d):
                row = [_F0] * (d * d)
                for r in range(d):
                    row[i * d + r] = row[i * d + r] + s[r][j]
                    row[r * d + j] = row[r * d + j] - s[i][r]
                rows.append(row)
    sols = _exact.nullspace(rows)
    out = []
    for v in sols:
        out.append(
            RationalMatrix.from_lists(
                [[v[i * d + j] for j in range(d)] for i in range(d)]
            )
        )
    return out
