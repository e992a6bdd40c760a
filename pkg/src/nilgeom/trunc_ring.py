"""Truncated polynomial scalars R[v]/(v^n) and C[v]/(v^n) over exact rationals.

A scalar of order n is c0 + c1*v + ... + c_{n-1}*v^{n-1} with v^n = 0.
Coefficients are Fraction (base_field "real-rational") or CRat
(base_field "complex-rational"). All arithmetic is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ._exact import CRat, QI, QQ, as_crat, frac_str, parse_frac

REAL = "real-rational"
COMPLEX = "complex-rational"


class TruncRingError(Exception):
    pass


class OrderMismatch(TruncRingError):
    pass


class NotInvertible(TruncRingError):
    pass


class NotDivisible(TruncRingError):
    pass


class WrongField(TruncRingError):
    pass


def _field(base_field: str):
    if base_field == REAL:
        return QQ
    if base_field == COMPLEX:
        return QI
    raise WrongField(f"unknown base field {base_field!r}")


@dataclass(frozen=True)
class TruncScalar:
    order: int
    coeffs: tuple
    base_field: str = REAL

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        f = _field(self.base_field)
        cs = tuple(f.coerce(c) for c in self.coeffs)
        if len(cs) < self.order:
            cs = cs + tuple(f.zero() for _ in range(self.order - len(cs)))
        elif len(cs) > self.order:
            raise ValueError("too many coefficients for the given order")
        object.__setattr__(self, "coeffs", cs)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(order: int, base_field: str = REAL) -> "TruncScalar":
        return TruncScalar(order, (), base_field)

    @staticmethod
    def one(order: int, base_field: str = REAL) -> "TruncScalar":
        f = _field(base_field)
        return TruncScalar(order, (f.one(),), base_field)

    @staticmethod
    def nu(order: int, power: int = 1, base_field: str = REAL) -> "TruncScalar":
        """The class of v^power; zero when power >= order."""
        f = _field(base_field)
        cs = [f.zero()] * order
        if 0 <= power < order:
            cs[power] = f.one()
        return TruncScalar(order, tuple(cs), base_field)

    @staticmethod
    def const(order: int, value, base_field: str = REAL) -> "TruncScalar":
        return TruncScalar(order, (value,), base_field)

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        f = _field(self.base_field)
        return all(f.is_zero(c) for c in self.coeffs)

    def is_unit(self) -> bool:
        return not _field(self.base_field).is_zero(self.coeffs[0])

    def valuation(self) -> int:
        """Index of the first nonzero coefficient; order if zero."""
        f = _field(self.base_field)
        for i, c in enumerate(self.coeffs):
            if not f.is_zero(c):
                return i
        return self.order

    def coeff(self, k: int):
        return self.coeffs[k]

    def _check(self, other: "TruncScalar"):
        if not isinstance(other, TruncScalar):
            raise TypeError("expected a TruncScalar")
        if other.order != self.order:
            raise OrderMismatch(f"orders {self.order} and {other.order} differ")
        if other.base_field != self.base_field:
            raise WrongField(
                f"base fields {self.base_field} and {other.base_field} differ"
            )

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        self._check(other)
        return TruncScalar(
            self.order,
            tuple(a + b for a, b in zip(self.coeffs, other.coeffs)),
            self.base_field,
        )

    def __sub__(self, other):
        self._check(other)
        return TruncScalar(
            self.order,
            tuple(a - b for a, b in zip(self.coeffs, other.coeffs)),
            self.base_field,
        )

    def __neg__(self):
        return TruncScalar(self.order, tuple(-a for a in self.coeffs), self.base_field)

    def __mul__(self, other):
        if isinstance(other, TruncScalar):
            return trunc_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c) -> "TruncScalar":
        f = _field(self.base_field)
        c = f.coerce(c)
        return TruncScalar(self.order, tuple(c * a for a in self.coeffs), self.base_field)

    # -- formatting --------------------------------------------------------

    def _fmt_coeff(self, c) -> str:
        if self.base_field == REAL:
            return frac_str(c)
        return f"({frac_str(c.re)}{'+' if c.im >= 0 else '-'}{frac_str(abs(c.im))}i)"

    def __str__(self):
        parts = []
        for k, c in enumerate(self.coeffs):
            s = self._fmt_coeff(c)
            if k == 0:
                parts.append(s)
            elif k == 1:
                parts.append(f"{s}*v")
            else:
                parts.append(f"{s}*v^{k}")
        return " + ".join(parts)

    def to_json(self):
        if self.base_field == REAL:
            cs = [frac_str(c) for c in self.coeffs]
        else:
            cs = [[frac_str(c.re), frac_str(c.im)] for c in self.coeffs]
        return {"order": self.order, "base_field": self.base_field, "coeffs": cs}

    @staticmethod
    def from_json(obj) -> "TruncScalar":
        bf = obj.get("base_field", REAL)
        if bf == REAL:
            cs = tuple(parse_frac(c) for c in obj["coeffs"])
        else:
            cs = tuple(CRat(parse_frac(a), parse_frac(b)) for a, b in obj["coeffs"])
        return TruncScalar(obj["order"], cs, bf)


def trunc_mul(a: TruncScalar, b: TruncScalar) -> TruncScalar:
    a._check(b)
    f = _field(a.base_field)
    n = a.order
    out = [f.zero()] * n
    for i, ca in enumerate(a.coeffs):
        if f.is_zero(ca):
            continue
        for j in range(n - i):
            cb = b.coeffs[j]
            if not f.is_zero(cb):
                out[i + j] = out[i + j] + ca * cb
    return TruncScalar(n, tuple(out), a.base_field)


def trunc_inverse(a: TruncScalar) -> TruncScalar:
    """Multiplicative inverse; exists iff the constant coefficient is a unit."""
    f = _field(a.base_field)
    if f.is_zero(a.coeffs[0]):
        raise NotInvertible("constant coefficient is zero")
    n = a.order
    inv0 = f.one() / a.coeffs[0]
    out = [f.zero()] * n
    out[0] = inv0
    # recursively: (sum a_i v^i)(sum b_j v^j) = 1
    for k in range(1, n):
        s = f.zero()
        for i in range(1, k + 1):
            s = s + a.coeffs[i] * out[k - i]
        out[k] = -inv0 * s
    return TruncScalar(n, tuple(out), a.base_field)


def trunc_shift_div(a: TruncScalar, k: int) -> TruncScalar:
    """Divide by v^k, requiring the first k coefficients to vanish.

    The representative with zero top coefficients is returned, so that
    trunc_shift_div(a, k) * nu^k == a.
    """
    if k < 0:
        raise ValueError("shift must be >= 0")
    f = _field(a.base_field)
    if any(not f.is_zero(c) for c in a.coeffs[:k]):
        raise NotDivisible(f"not divisible by v^{k}")
    cs = list(a.coeffs[k:]) + [f.zero()] * min(k, a.order)
    return TruncScalar(a.order, tuple(cs[: a.order]), a.base_field)


def trunc_conj(a: TruncScalar) -> TruncScalar:
    """Coefficientwise complex conjugation; identity on the real ring."""
    if a.base_field == REAL:
        return a
    return TruncScalar(a.order, tuple(c.conj() for c in a.coeffs), a.base_field)


def parse_trunc(text: str, base_field: str = REAL) -> TruncScalar:
    """Inverse of str(): "c0 + c1*v + c2*v^2" with rational coefficients."""
    parts = [p.strip() for p in text.split(" + ")]
    f = _field(base_field)
    coeffs = []
    for k, part in enumerate(parts):
        if k == 0:
            coeff_s = part
        else:
            star = part.rindex("*")
            coeff_s = part[:star]
        if base_field == COMPLEX:
            inner = coeff_s.strip()
            if not (inner.startswith("(") and inner.endswith("i)")):
                raise ValueError(f"bad complex coefficient {coeff_s!r}")
            inner = inner[1:-2]
            for pos in range(1, len(inner)):
                if inner[pos] in "+-" and inner[pos - 1] != "/":
                    re_s, sign, im_s = inner[:pos], inner[pos], inner[pos + 1 :]
                    break
            else:
                raise ValueError(f"bad complex coefficient {coeff_s!r}")
            im = parse_frac(im_s)
            coeffs.append(CRat(parse_frac(re_s), -im if sign == "-" else im))
        else:
            coeffs.append(parse_frac(coeff_s))
    return TruncScalar(len(parts), tuple(coeffs), base_field)
