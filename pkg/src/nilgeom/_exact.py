"""Exact linear algebra over the rationals and Gaussian rationals.

Everything in here works on plain lists of lists whose entries support
+, -, *, /, == 0. No floats anywhere. Matrices are small (dim <= 64-ish),
so classical Gaussian elimination with exact arithmetic is fine.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class CRat:
    """Gaussian rational a + b*i, componentwise exact."""

    re: Fraction
    im: Fraction

    def __add__(self, other):
        other = as_crat(other)
        return CRat(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = as_crat(other)
        return CRat(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return as_crat(other) - self

    def __neg__(self):
        return CRat(-self.re, -self.im)

    def __mul__(self, other):
        other = as_crat(other)
        return CRat(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_crat(other)
        n = other.re * other.re + other.im * other.im
        if n == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return CRat(
            (self.re * other.re + self.im * other.im) / n,
            (self.im * other.re - self.re * other.im) / n,
        )

    def __rtruediv__(self, other):
        return as_crat(other) / self

    def conj(self) -> "CRat":
        return CRat(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self):
        return not self.is_zero()

    def __str__(self):
        return f"{self.re}{'+' if self.im >= 0 else ''}{self.im}i"


def as_crat(v) -> CRat:
    if isinstance(v, CRat):
        return v
    if isinstance(v, (int, Fraction)):
        return CRat(Fraction(v), Fraction(0))
    raise TypeError(f"cannot coerce {type(v).__name__} to CRat")


CRAT_ZERO = CRat(Fraction(0), Fraction(0))
CRAT_ONE = CRat(Fraction(1), Fraction(0))
CRAT_I = CRat(Fraction(0), Fraction(1))


class Field:
    """Field descriptor used by the generic matrix routines."""

    name: str

    def zero(self):
        raise NotImplementedError

    def one(self):
        raise NotImplementedError

    def coerce(self, v):
        raise NotImplementedError

    def is_zero(self, v) -> bool:
        raise NotImplementedError

    def conj(self, v):
        return v


class _QField(Field):
    name = "Q"

    def zero(self):
        return Fraction(0)

    def one(self):
        return Fraction(1)

    def coerce(self, v):
        if isinstance(v, Fraction):
            return v
        if isinstance(v, int):
            return Fraction(v)
        if isinstance(v, str):
            return Fraction(v)
        raise TypeError(f"cannot coerce {type(v).__name__} to Fraction")

    def is_zero(self, v) -> bool:
        return v == 0


class _QiField(Field):
    name = "Qi"

    def zero(self):
        return CRAT_ZERO

    def one(self):
        return CRAT_ONE

    def coerce(self, v):
        if isinstance(v, CRat):
            return v
        return as_crat(Fraction(v) if isinstance(v, str) else v)

    def is_zero(self, v) -> bool:
        return v.is_zero()

    def conj(self, v):
        return v.conj()


QQ = _QField()
QI = _QiField()


def field_of(entries) -> Field:
    for row in entries:
        for v in row:
            if isinstance(v, CRat):
                return QI
    return QQ


def mat_zero(rows, cols, field=QQ):
    z = field.zero()
    return [[z for _ in range(cols)] for _ in range(rows)]


def mat_identity(n, field=QQ):
    m = mat_zero(n, n, field)
    for i in range(n):
        m[i][i] = field.one()
    return m


def mat_copy(m):
    return [list(r) for r in m]


def mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_neg(a):
    return [[-x for x in r] for r in a]


def mat_scale(a, c):
    return [[c * x for x in r] for r in a]


def mat_mul(a, b):
    rows, inner, cols = len(a), len(b), len(b[0])
    out = []
    for i in range(rows):
        row = []
        ai = a[i]
        for j in range(cols):
            s = ai[0] * b[0][j]
            for k in range(1, inner):
                s = s + ai[k] * b[k][j]
            row.append(s)
        out.append(row)
    return out


def mat_transpose(a):
    return [list(col) for col in zip(*a)]


def mat_conj(a, field):
    return [[field.conj(x) for x in r] for r in a]


def mat_eq(a, b, field=None) -> bool:
    if len(a) != len(b) or len(a[0]) != len(b[0]):
        return False
    f = field or field_of(a)
    for ra, rb in zip(a, b):
        for x, y in zip(ra, rb):
            if not f.is_zero(x - y):
                return False
    return True


def mat_is_zero(a, field=None) -> bool:
    f = field or field_of(a)
    return all(f.is_zero(x) for r in a for x in r)


def rref(m, field=None):
    """Reduced row echelon form. Returns (rref_matrix, pivot_columns).

    Lowest-index pivot wins ties, so the result is deterministic.
    """
    if not m:
        return [], []
    f = field or field_of(m)
    a = mat_copy(m)
    rows, cols = len(a), len(a[0])
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        pivot = None
        for i in range(r, rows):
            if not f.is_zero(a[i][c]):
                pivot = i
                break
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        inv = f.one() / a[r][c]
        a[r] = [inv * x for x in a[r]]
        for i in range(rows):
            if i != r and not f.is_zero(a[i][c]):
                factor = a[i][c]
                a[i] = [x - factor * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m, field=None) -> int:
    if not m or not m[0]:
        return 0
    _, pivots = rref(m, field)
    return len(pivots)


def nullspace(m, field=None):
    """Basis of the right nullspace, as a list of column vectors (lists)."""
    if not m:
        return []
    f = field or field_of(m)
    cols = len(m[0])
    red, pivots = rref(m, f)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        v = [f.zero()] * cols
        v[fc] = f.one()
        for r, pc in enumerate(pivots):
            v[pc] = -red[r][fc]
        basis.append(v)
    return basis


def solve(a, b, field=None):
    """One solution x of a x = b (column vector), or None if inconsistent."""
    f = field or field_of(a)
    rows, cols = len(a), len(a[0])
    aug = [list(a[i]) + [b[i]] for i in range(rows)]
    red, pivots = rref(aug, f)
    for r in range(len(red)):
        if all(f.is_zero(red[r][c]) for c in range(cols)) and not f.is_zero(red[r][cols]):
            return None
    x = [f.zero()] * cols
    for r, pc in enumerate(pivots):
        if pc < cols:
            x[pc] = red[r][cols]
    return x


def inverse(m, field=None):
    f = field or field_of(m)
    n = len(m)
    aug = [list(m[i]) + list(mat_identity(n, f)[i]) for i in range(n)]
    red, pivots = rref(aug, f)
    if pivots[:n] != list(range(n)):
        return None
    return [row[n:] for row in red]


def det(m, field=None):
    f = field or field_of(m)
    n = len(m)
    a = mat_copy(m)
    d = f.one()
    for c in range(n):
        pivot = None
        for i in range(c, n):
            if not f.is_zero(a[i][c]):
                pivot = i
                break
        if pivot is None:
            return f.zero()
        if pivot != c:
            a[c], a[pivot] = a[pivot], a[c]
            d = -d
        d = d * a[c][c]
        inv = f.one() / a[c][c]
        for i in range(c + 1, n):
            if not f.is_zero(a[i][c]):
                factor = a[i][c] * inv
                a[i] = [x - factor * y for x, y in zip(a[i], a[c])]
    return d


def congruence_diagonalize(g):
    """Lagrange diagonalization of a symmetric rational matrix.

    Returns (P, diag) with tP g P = diag(diag). Exact, deterministic.
    """
    n = len(g)
    a = mat_copy(g)
    p = mat_identity(n, QQ)

    def add_col(dst, src, c):
        # col_dst += c * col_src, same on rows to keep congruence
        for i in range(n):
            a[i][dst] += c * a[i][src]
        for j in range(n):
            a[dst][j] += c * a[src][j]
        for i in range(n):
            p[i][dst] += c * p[i][src]

    def swap_col(i, j):
        for r in range(n):
            a[r][i], a[r][j] = a[r][j], a[r][i]
        a[i], a[j] = a[j], a[i]
        for r in range(n):
            p[r][i], p[r][j] = p[r][j], p[r][i]

    for k in range(n):
        if a[k][k] == 0:
            pivot = None
            for i in range(k + 1, n):
                if a[i][i] != 0:
                    pivot = i
                    break
            if pivot is not None:
                swap_col(k, pivot)
            else:
                off = None
                for i in range(k, n):
                    for j in range(i + 1, n):
                        if a[i][j] != 0:
                            off = (i, j)
                            break
                    if off:
                        break
                if off is None:
                    break
                i, j = off
                if i != k:
                    swap_col(k, i)
                    if j == k:
                        j = i
                add_col(k, j, Fraction(1))
        if a[k][k] == 0:
            continue
        for j in range(k + 1, n):
            if a[k][j] != 0:
                add_col(j, k, -a[k][j] / a[k][k])
    return p, [a[i][i] for i in range(n)]


def signature_of_symmetric(g):
    """(positives, negatives) of a symmetric rational matrix, exactly."""
    _, d = congruence_diagonalize(g)
    pos = sum(1 for x in d if x > 0)
    neg = sum(1 for x in d if x < 0)
    return pos, neg


def frac_str(q) -> str:
    if isinstance(q, CRat):
        if q.im == 0:
            return frac_str(q.re)
        sign = "-" if q.im < 0 else "+"
        return f"{frac_str(q.re)}{sign}{frac_str(abs(q.im))}i"
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_frac(s):
    """Rational or complex-rational from its frac_str form."""
    if isinstance(s, (Fraction, CRat)):
        return s
    if isinstance(s, int):
        return Fraction(s)
    if isinstance(s, str):
        if s.endswith("i"):
            body = s[:-1]
            for k in range(len(body) - 1, 0, -1):
                if body[k] in "+-" and body[k - 1] not in "/+-":
                    re, im = body[:k], body[k] + body[k + 1 :]
                    return CRat(Fraction(re), Fraction(im))
            return CRat(Fraction(0), Fraction(body))
        return Fraction(s)
    raise TypeError(f"cannot parse rational from {type(s).__name__}")
