"""Polynomial calculus in the integral coordinates of a nilpotent structure.

Coordinates come per Jordan block: x_i on the transversal and layers
y_{i,1} .. y_{i,n(i)-1} along the image foliation, block sizes read off a
ModuleShape in ascending degree order. Functions are sparse polynomials
with truncated-scalar coefficients, so every identity below is decided
exactly. The module provides the adaptation test for boundary data on the
transversal, the extension of adapted data to a function annihilated by
d(.)o N - nu d(.), the converse checker, and the weighted expansion
operator that redistributes x-derivatives onto y-monomials.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .nilmodule import ModuleShape
from .trunc_ring import (
    COMPLEX,
    REAL,
    OrderMismatch,
    TruncScalar,
    WrongField,
)
from ._exact import CRat, frac_str, parse_frac


class NilocalcError(Exception):
    pass


class NotAdapted(NilocalcError):
    pass


class VariableMismatch(NilocalcError):
    pass


def x_name(i: int) -> str:
    return f"x{i}"


def y_name(i: int, a: int) -> str:
    return f"y{i}_{a}"


def block_sizes(shape: ModuleShape) -> tuple:
    """Block sizes n(i) for i = 1..D, ascending degree."""
    out = []
    for a, da in enumerate(shape.d, start=1):
        out.extend([a] * da)
    return tuple(out)


def coordinate_names(shape: ModuleShape) -> tuple:
    """All declared variable names: x_i and the y-layers of each block."""
    names = []
    for i, sz in enumerate(block_sizes(shape), start=1):
        names.append(x_name(i))
        names.extend(y_name(i, a) for a in range(1, sz))
    return tuple(names)


def _coerce_coeff(c, order, base_field):
    if isinstance(c, TruncScalar):
        if c.order != order:
            raise OrderMismatch(f"coefficient order {c.order}, expected {order}")
        if c.base_field != base_field:
            raise WrongField(
                f"coefficient field {c.base_field}, expected {base_field}"
            )
        return c
    return TruncScalar.const(order, c, base_field)


class Poly:
    """Sparse polynomial over R[v]/(v^order) (or its complex variant).

    Monomials are tuples of (variable, exponent) pairs sorted by name;
    coefficients are TruncScalar. Instances are immutable by convention:
    every operation returns a new Poly.
    """

    __slots__ = ("order", "base_field", "terms")

    def __init__(self, order: int, terms=None, base_field: str = REAL):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        self.base_field = base_field
        clean = {}
        for mono, c in (terms or {}).items():
            c = _coerce_coeff(c, order, base_field)
            if c.is_zero():
                continue
            exps = {}
            for v, e in mono:
                e = int(e)
                if e < 0:
                    raise ValueError("negative exponent")
                if e:
                    exps[str(v)] = exps.get(str(v), 0) + e
            mono = tuple(sorted(exps.items()))
            clean[mono] = clean[mono] + c if mono in clean else c
        self.terms = {m: c for m, c in clean.items() if not c.is_zero()}

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(order: int, base_field: str = REAL) -> "Poly":
        return Poly(order, {}, base_field)

    @staticmethod
    def const(order: int, value, base_field: str = REAL) -> "Poly":
        return Poly(order, {(): value}, base_field)

    @staticmethod
    def one(order: int, base_field: str = REAL) -> "Poly":
        return Poly.const(order, 1, base_field)

    @staticmethod
    def nu(order: int, power: int = 1, base_field: str = REAL) -> "Poly":
        return Poly(order, {(): TruncScalar.nu(order, power, base_field)}, base_field)

    @staticmethod
    def var(name: str, order: int, base_field: str = REAL) -> "Poly":
        return Poly(order, {((name, 1),): 1}, base_field)

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def variables(self) -> frozenset:
        return frozenset(v for mono in self.terms for v, _ in mono)

    def degree(self) -> int:
        """Total degree in the x and y variables; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e for _, e in mono) for mono in self.terms)

    def constant_term(self) -> TruncScalar:
        return self.terms.get((), TruncScalar.zero(self.order, self.base_field))

    def nu_coeff(self, c: int) -> "Poly":
        """Coefficient of v^c, as an order-1 polynomial over the base field."""
        out = {}
        for mono, coeff in self.terms.items():
            v = coeff.coeff(c)
            out[mono] = TruncScalar.const(1, v, self.base_field)
        return Poly(1, out, self.base_field)

    def _check(self, other: "Poly"):
        if not isinstance(other, Poly):
            raise TypeError("expected a Poly")
        if other.order != self.order:
            raise OrderMismatch(f"orders {self.order} and {other.order} differ")
        if other.base_field != self.base_field:
            raise WrongField(
                f"base fields {self.base_field} and {other.base_field} differ"
            )

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for mono, c in other.terms.items():
            out[mono] = out[mono] + c if mono in out else c
        return Poly(self.order, out, self.base_field)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return Poly(
            self.order, {m: -c for m, c in self.terms.items()}, self.base_field
        )

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return self.scale(other)
        self._check(other)
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                c = c1 * c2
                if c.is_zero():
                    continue
                exps = dict(m1)
                for v, e in m2:
                    exps[v] = exps.get(v, 0) + e
                mono = tuple(sorted(exps.items()))
                out[mono] = out[mono] + c if mono in out else c
        return Poly(self.order, out, self.base_field)

    __rmul__ = __mul__

    def scale(self, c) -> "Poly":
        c = _coerce_coeff(c, self.order, self.base_field)
        return Poly(
            self.order, {m: co * c for m, co in self.terms.items()}, self.base_field
        )

    def mul_nu(self, power: int) -> "Poly":
        return self.scale(TruncScalar.nu(self.order, power, self.base_field))

    def lift(self, order: int) -> "Poly":
        """The same polynomial at a higher truncation order."""
        if order < self.order:
            raise OrderMismatch(f"cannot lower order {self.order} to {order}")
        if order == self.order:
            return self
        out = {
            m: TruncScalar(order, c.coeffs, self.base_field)
            for m, c in self.terms.items()
        }
        return Poly(order, out, self.base_field)

    def complexify(self) -> "Poly":
        if self.base_field == COMPLEX:
            return self
        out = {
            m: TruncScalar(self.order, c.coeffs, COMPLEX)
            for m, c in self.terms.items()
        }
        return Poly(self.order, out, COMPLEX)

    def real_imag(self) -> tuple:
        """Split a complex polynomial into (real part, imaginary part)."""
        if self.base_field != COMPLEX:
            raise WrongField("real_imag needs a complex polynomial")
        re = {}
        im = {}
        for m, c in self.terms.items():
            re[m] = TruncScalar(self.order, tuple(z.re for z in c.coeffs), REAL)
            im[m] = TruncScalar(self.order, tuple(z.im for z in c.coeffs), REAL)
        return Poly(self.order, re, REAL), Poly(self.order, im, REAL)

    def __eq__(self, other):
        return (
            isinstance(other, Poly)
            and self.order == other.order
            and self.base_field == other.base_field
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash(
            (self.order, self.base_field, tuple(sorted(self.terms.items(), key=lambda t: t[0])))
        )

    # -- calculus ----------------------------------------------------------

    def diff(self, name: str) -> "Poly":
        out = {}
        for mono, c in self.terms.items():
            exps = dict(mono)
            e = exps.get(name, 0)
            if e == 0:
                continue
            if e == 1:
                del exps[name]
            else:
                exps[name] = e - 1
            m = tuple(sorted(exps.items()))
            add = c.scale(e)
            out[m] = out[m] + add if m in out else add
        return Poly(self.order, out, self.base_field)

    def substitute(self, assign: dict) -> "Poly":
        """Replace variables by constant values (rational or TruncScalar)."""
        consts = {}
        for name, v in assign.items():
            consts[str(name)] = _coerce_coeff(v, self.order, self.base_field)
        out = Poly.zero(self.order, self.base_field)
        for mono, c in self.terms.items():
            kept = {}
            for v, e in mono:
                if v in consts:
                    for _ in range(e):
                        c = c * consts[v]
                else:
                    kept[v] = e
            out = out + Poly(
                self.order, {tuple(sorted(kept.items())): c}, self.base_field
            )
        return out

    def eval_at(self, assign: dict) -> TruncScalar:
        res = self.substitute(assign)
        stray = res.variables()
        if stray:
            raise VariableMismatch(f"unassigned variables {sorted(stray)}")
        return res.constant_term()

    def substitute_poly(self, assign: dict) -> "Poly":
        """Composition: replace variables by polynomials of the same order.

        The base field widens to complex as soon as the source or any
        target is complex; unassigned variables stay themselves.
        """
        order = self.order
        field = self.base_field
        prepared = {}
        for name, p in assign.items():
            if not isinstance(p, Poly):
                raise TypeError("substitution targets must be Poly")
            if p.order != order:
                raise OrderMismatch(
                    f"target order {p.order} differs from source order {order}"
                )
            if p.base_field == COMPLEX:
                field = COMPLEX
            prepared[str(name)] = p
        if field == COMPLEX:
            prepared = {k: p.complexify() for k, p in prepared.items()}
        base = self.complexify() if field == COMPLEX else self
        out = Poly.zero(order, field)
        for mono, c in base.terms.items():
            term = Poly.const(order, c, field)
            for v, e in mono:
                target = prepared.get(v)
                if target is None:
                    target = Poly.var(v, order, field)
                for _ in range(e):
                    term = term * target
            out = out + term
        return out

    # -- formatting and serialization --------------------------------------

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for mono, c in sorted(self.terms.items()):
            m = "*".join(
                v if e == 1 else f"{v}^{e}" for v, e in mono
            )
            parts.append(f"({c})*{m}" if m else f"({c})")
        return " + ".join(parts)

    def __repr__(self):
        return f"Poly(order={self.order}, {str(self)!r})"

    def to_json(self) -> list:
        entries = []
        for mono, c in self.terms.items():
            md = {v: e for v, e in mono}
            for a in range(self.order):
                ca = c.coeff(a)
                if self.base_field == REAL:
                    if ca == 0:
                        continue
                    coeff = frac_str(ca)
                else:
                    if ca.is_zero():
                        continue
                    coeff = [frac_str(ca.re), frac_str(ca.im)]
                entries.append({"mono": md, "coeff": coeff, "nu": a})
        entries.sort(key=lambda t: (t["nu"], tuple(sorted(t["mono"].items()))))
        return entries

    @staticmethod
    def from_json(entries, order: int, base_field: str = REAL) -> "Poly":
        total = Poly.zero(order, base_field)
        for entry in entries:
            mono = tuple((str(v), int(e)) for v, e in entry["mono"].items())
            a = int(entry.get("nu", 0))
            raw = entry["coeff"]
            if isinstance(raw, (list, tuple)):
                c = CRat(parse_frac(raw[0]), parse_frac(raw[1]))
            else:
                c = parse_frac(raw)
            coeff = TruncScalar.const(order, c, base_field) * TruncScalar.nu(
                order, a, base_field
            )
            total = total + Poly(order, {mono: coeff}, base_field)
        return total


# -- adapted boundary data ---------------------------------------------------


@dataclass(frozen=True)
class AdaptedSeed:
    """Boundary value on the transversal {y = 0}, one scalar function.

    The value lives in the x-variables of the shape only and must satisfy
    the layer-dependence rule checked by is_adapted: the coefficient of
    v^c may involve x_i only when the block of x_i is long enough,
    n(i) >= n - c. Degree-c data on too-short blocks cannot extend.
    """

    shape: ModuleShape
    value: Poly

    def __post_init__(self):
        if self.value.order != self.shape.n:
            raise OrderMismatch(
                f"seed order {self.value.order} differs from shape degree {self.shape.n}"
            )
        allowed = {x_name(i) for i in range(1, len(block_sizes(self.shape)) + 1)}
        stray = self.value.variables() - allowed
        if stray:
            raise VariableMismatch(
                f"seed uses non-transversal variables {sorted(stray)}"
            )

    def to_json(self):
        return {
            "n": self.shape.n,
            "d": list(self.shape.d),
            "delta": self.shape.delta,
            "base_field": self.value.base_field,
            "value": self.value.to_json(),
        }

    @staticmethod
    def from_json(obj) -> "AdaptedSeed":
        shape = ModuleShape(int(obj["n"]), tuple(obj["d"]), int(obj.get("delta", 1)))
        bf = obj.get("base_field", REAL)
        return AdaptedSeed(shape, Poly.from_json(obj["value"], shape.n, bf))


def is_adapted(seed: AdaptedSeed) -> bool:
    """Layer-dependence test: v^c data only sees blocks with n(i) >= n-c."""
    n = seed.shape.n
    sizes = block_sizes(seed.shape)
    for c in range(n):
        allowed = {x_name(i) for i, sz in enumerate(sizes, 1) if sz >= n - c}
        if not seed.value.nu_coeff(c).variables() <= allowed:
            return False
    return True


def nilomorphic_extend(seed: AdaptedSeed) -> Poly:
    """Unique extension of the seed off the transversal.

    f = sum over multi-indices alpha of (1/alpha!) (d^alpha fcheck / dx^alpha)
    (vy)^alpha, with (vy_i) the truncated coordinate sum of the block of i.
    The series is finite because each (vy_i) is nilpotent.
    """
    if not is_adapted(seed):
        raise NotAdapted("seed violates the layer-dependence rule")
    n = seed.shape.n
    bf = seed.value.base_field
    sizes = block_sizes(seed.shape)
    nu_y = []
    for i, sz in enumerate(sizes, 1):
        p = Poly.zero(n, bf)
        for a in range(1, sz):
            p = p + Poly.var(y_name(i, a), n, bf).mul_nu(a)
        nu_y.append(p)

    total = Poly.zero(n, bf)

    def rec(i, deriv, acc):
        nonlocal total
        if i == len(sizes):
            total = total + deriv * acc
            return
        # alpha_i = 0 term, then successive x_i-derivatives paired with
        # powers of (vy_i); both die quickly, cut as soon as one does
        rec(i + 1, deriv, acc)
        power = nu_y[i]
        k = 1
        d = deriv.diff(x_name(i + 1))
        while not (d.is_zero() or power.is_zero()):
            rec(i + 1, d, (acc * power).scale(Fraction(1, factorial(k))))
            k += 1
            power = power * nu_y[i]
            d = d.diff(x_name(i + 1))

    rec(0, seed.value, Poly.one(n, bf))
    return total


def check_nilomorphic(f: Poly, shape: ModuleShape) -> bool:
    """Exact symbolic test of d f o N = v d f in the shape's coordinates."""
    if f.order != shape.n:
        raise OrderMismatch(
            f"function order {f.order} differs from shape degree {shape.n}"
        )
    declared = set(coordinate_names(shape))
    stray = f.variables() - declared
    if stray:
        raise VariableMismatch(f"undeclared variables {sorted(stray)}")
    for i, sz in enumerate(block_sizes(shape), 1):
        fx = f.diff(x_name(i))
        for a in range(1, sz):
            if f.diff(y_name(i, a)) != fx.mul_nu(a):
                return False
        # the chain of x_i ends: v^{n(i)} times the x_i-derivative vanishes
        if not fx.mul_nu(sz).is_zero():
            return False
    return True


def restrict(f: Poly, shape: ModuleShape) -> Poly:
    """Restriction to the transversal {y = 0}."""
    zeros = {}
    for i, sz in enumerate(block_sizes(shape), 1):
        for a in range(1, sz):
            zeros[y_name(i, a)] = 0
    return f.substitute(zeros)


def weighted_expand(eta: Poly, b: int, shape: ModuleShape) -> Poly:
    """Redistribute x-derivatives of eta onto weight-b monomials in y.

    Sum over multi-indices (alpha_{i,a}) with total weight sum a*alpha_{i,a}
    equal to b of (1/alpha!) (iterated x-derivative of eta) y^alpha. Weight
    0 returns eta itself.
    """
    if b < 0 or b >= shape.n:
        raise ValueError(f"weight {b} outside 0..{shape.n - 1}")
    sizes = block_sizes(shape)
    allowed = {x_name(i) for i in range(1, len(sizes) + 1)}
    stray = eta.variables() - allowed
    if stray:
        raise VariableMismatch(f"expected x-variables only, got {sorted(stray)}")
    pairs = [
        (i, a) for i, sz in enumerate(sizes, 1) for a in range(1, sz)
    ]
    total = Poly.zero(eta.order, eta.base_field)

    def rec(idx, budget, acc):
        nonlocal total
        if budget == 0:
            total = total + acc
            return
        if idx == len(pairs):
            return
        i, a = pairs[idx]
        rec(idx + 1, budget, acc)
        yv = Poly.var(y_name(i, a), eta.order, eta.base_field)
        k = 1
        cur = acc
        while a * k <= budget:
            cur = cur.diff(x_name(i)) * yv
            if cur.is_zero():
                break
            rec(idx + 1, budget - a * k, cur.scale(Fraction(1, factorial(k))))
            k += 1

    rec(0, b, eta)
    return total
