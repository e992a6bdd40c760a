"""Constructors of polynomial metric germs with prescribed parallel structures.

Every constructor returns a MetricGerm: a symmetric matrix of exact
polynomial entries over named real coordinates, a rational base point,
and the constant endomorphism matrices the germ declares parallel
(the nilpotent N always, plus J, L, Jbar or Nprime depending on the
construction). The heavy lifting happens in nilocalc: boundary data on
the transversal {y = 0} is extended to functions compatible with the
nilpotent structure, and the metric entries are read off as truncated
coefficients of the extended matrix. All data stays rational, so the
downstream checks (parallelism, curvature identities) can be exact.

Degenerate input is rejected, never repaired: base points are frozen at
the origin and a singular seed there raises instead of moving the point.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement

from ._exact import CRat, det, frac_str, mat_mul, parse_frac, rank, signature_of_symmetric
from .nilmodule import ModuleShape
from .nilocalc import (
    AdaptedSeed,
    NotAdapted,
    Poly,
    block_sizes,
    nilomorphic_extend,
    x_name,
    y_name,
)
from .trunc_ring import COMPLEX, REAL


class ForgeError(Exception):
    pass


class SeedViolation(ForgeError):
    pass


class Degenerate(ForgeError):
    pass


class IncompatibleShape(ForgeError):
    pass


class ShapeViolation(ForgeError):
    pass


class NestedSeedViolation(ForgeError):
    pass


_I = CRat(Fraction(0), Fraction(1))


def _zero1() -> Poly:
    return Poly.zero(1, REAL)


# -- coordinates of a germ ----------------------------------------------------


def coordinate_slots(shape: ModuleShape) -> tuple:
    """Slot labels (i, a): layer a of block i, a = 0 being x_i itself.

    Deep layers come first, inside a layer the blocks ascend; the x-row
    closes the list. This ordering puts the metric into the anti-triangular
    block form of the worked low-degree examples.
    """
    sizes = block_sizes(shape)
    out = []
    for a in range(shape.n - 1, 0, -1):
        out.extend((i, a) for i, sz in enumerate(sizes, 1) if sz > a)
    out.extend((i, 0) for i in range(1, shape.D + 1))
    return tuple(out)


def germ_coordinates(shape: ModuleShape) -> tuple:
    return tuple(
        y_name(i, a) if a else x_name(i) for i, a in coordinate_slots(shape)
    )


def nilpotent_matrix(shape: ModuleShape) -> tuple:
    """The structure endomorphism in germ coordinates: d/dx_i -> d/dy_{i,1}
    and each layer to the next deeper one."""
    slots = coordinate_slots(shape)
    index = {s: r for r, s in enumerate(slots)}
    sizes = block_sizes(shape)
    dim = len(slots)
    m = [[Fraction(0)] * dim for _ in range(dim)]
    for c, (i, a) in enumerate(slots):
        if a + 1 <= sizes[i - 1] - 1:
            m[index[(i, a + 1)]][c] = Fraction(1)
    return tuple(tuple(row) for row in m)


# -- seeds --------------------------------------------------------------------


def _norm_poly_matrix(mat, what: str):
    rows = tuple(tuple(row) for row in mat)
    for row in rows:
        if len(row) != len(rows):
            raise SeedViolation(f"{what} must be square")
        for p in row:
            if not isinstance(p, Poly):
                raise SeedViolation(f"{what} entries must be Poly")
            if p.order != 1 or p.base_field != REAL:
                raise SeedViolation(f"{what} entries must be real of order 1")
    return rows


@dataclass(frozen=True)
class SeedForms:
    """Boundary data of a nilpotent-adapted metric: one symmetric D x D
    polynomial matrix B^a per degree a = 0 .. n-1, in the x-variables.

    B^a may only touch rows, columns and variables of blocks with
    n(i) >= n-a, and its leading subblock (rows and columns with
    n(i) = n-a exactly) must be nondegenerate at the origin.
    """

    shape: ModuleShape
    B: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "B", tuple(tuple(tuple(row) for row in Ba) for Ba in self.B)
        )

    def validate(self):
        shape = self.shape
        n, D = shape.n, shape.D
        sizes = block_sizes(shape)
        if len(self.B) != n:
            raise SeedViolation(f"expected {n} matrices, got {len(self.B)}")
        for a, Ba in enumerate(self.B):
            _norm_poly_matrix(Ba, f"B^{a}")
            if len(Ba) != D:
                raise SeedViolation(f"B^{a} must be {D} x {D}")
            allowed_vars = {
                x_name(k) for k, sz in enumerate(sizes, 1) if sz >= n - a
            }
            for i in range(D):
                for j in range(D):
                    p = Ba[i][j]
                    if p != Ba[j][i]:
                        raise SeedViolation(f"B^{a} is not symmetric")
                    if p.is_zero():
                        continue
                    if min(sizes[i], sizes[j]) < n - a:
                        raise SeedViolation(
                            f"B^{a}[{i + 1}][{j + 1}] sits on a block shorter than {n - a}"
                        )
                    stray = p.variables() - allowed_vars
                    if stray:
                        raise SeedViolation(
                            f"B^{a}[{i + 1}][{j + 1}] uses {sorted(stray)}, "
                            f"allowed only degree >= {n - a} variables"
                        )
            lead = [k for k in range(D) if sizes[k] == n - a]
            if lead:
                block = [
                    [_const_value(Ba[i][j]) for j in lead] for i in lead
                ]
                if det(block) == 0:
                    raise SeedViolation(
                        f"leading subblock of B^{a} is degenerate at the origin"
                    )

    def to_json(self) -> dict:
        return {
            "n": self.shape.n,
            "d": list(self.shape.d),
            "delta": self.shape.delta,
            "B": [
                [[p.to_json() for p in row] for row in Ba] for Ba in self.B
            ],
        }

    @staticmethod
    def from_json(obj) -> "SeedForms":
        shape = ModuleShape(int(obj["n"]), tuple(obj["d"]), int(obj.get("delta", 1)))
        B = tuple(
            tuple(
                tuple(Poly.from_json(e, 1, REAL) for e in row) for row in Ba
            )
            for Ba in obj["B"]
        )
        return SeedForms(shape, B)


def _const_value(p: Poly) -> Fraction:
    # value at the origin; stray y-variables cannot occur in seed data
    c = p.substitute({v: 0 for v in p.variables()}).constant_term()
    return c.coeff(0)


def random_seed_forms(shape: ModuleShape, seed, degree: int = 2) -> SeedForms:
    """Seeded random boundary data that always forges.

    B^0 is the identity plus a random linear form on the allowed
    variables; deeper levels are random of total degree <= degree with an
    identity summand on their leading subblock. Entries carry no constant
    term away from those diagonals, respect the block-support rule, and
    are deterministic in the seed.
    """
    rng = random.Random(seed)
    sizes = block_sizes(shape)
    n, D = shape.n, shape.D
    B = []
    for a in range(n):
        allowed = [k for k in range(D) if sizes[k] >= n - a]
        names = [x_name(k + 1) for k in allowed]
        top = 1 if a == 0 else max(1, degree)
        monos = []
        for deg in range(1, top + 1):
            monos.extend(combinations_with_replacement(names, deg))
        rows = [[_zero1() for _ in range(D)] for _ in range(D)]
        for pos, i in enumerate(allowed):
            for j in allowed[pos:]:
                p = _zero1()
                for mono in monos:
                    c = rng.randint(-2, 2)
                    if not c:
                        continue
                    term = Poly.const(1, Fraction(c), REAL)
                    for nm in mono:
                        term = term * Poly.var(nm, 1, REAL)
                    p = p + term
                rows[i][j] = rows[j][i] = p
        for k in range(D):
            if sizes[k] == n - a:
                rows[k][k] = rows[k][k] + Poly.one(1, REAL)
        B.append(tuple(tuple(row) for row in rows))
    return SeedForms(shape, tuple(B))


# -- germs --------------------------------------------------------------------


@dataclass(frozen=True)
class Structure:
    name: str
    matrix: tuple
    adjoint: str

    def __post_init__(self):
        if self.adjoint not in ("self", "skew"):
            raise ValueError("adjoint tag must be 'self' or 'skew'")
        object.__setattr__(
            self,
            "matrix",
            tuple(tuple(Fraction(x) for x in row) for row in self.matrix),
        )


@dataclass(frozen=True)
class MetricGerm:
    shape: ModuleShape
    coordinates: tuple
    sym_matrix: tuple
    structures: tuple
    base_point: tuple

    def __post_init__(self):
        object.__setattr__(self, "coordinates", tuple(self.coordinates))
        object.__setattr__(
            self, "sym_matrix", tuple(tuple(row) for row in self.sym_matrix)
        )
        object.__setattr__(self, "structures", tuple(self.structures))
        object.__setattr__(
            self, "base_point", tuple(Fraction(x) for x in self.base_point)
        )

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    def entry(self, r: int, c: int) -> Poly:
        return self.sym_matrix[r][c]

    def matrix_at(self, point=None):
        """Exact value of the metric matrix at a rational point."""
        if point is None:
            point = self.base_point
        assign = dict(zip(self.coordinates, point))
        return [
            [p.eval_at(assign).coeff(0) for p in row] for row in self.sym_matrix
        ]

    def structure(self, name: str) -> Structure:
        for s in self.structures:
            if s.name == name:
                return s
        raise KeyError(f"no structure named {name!r}")

    def validate(self):
        dim = self.dim
        if len(self.sym_matrix) != dim or any(
            len(row) != dim for row in self.sym_matrix
        ):
            raise ForgeError("metric matrix does not match the coordinates")
        declared = set(self.coordinates)
        for r in range(dim):
            for c in range(dim):
                p = self.sym_matrix[r][c]
                if not isinstance(p, Poly) or p.order != 1 or p.base_field != REAL:
                    raise ForgeError("metric entries must be real of order 1")
                if p != self.sym_matrix[c][r]:
                    raise ForgeError("metric matrix is not symmetric")
                stray = p.variables() - declared
                if stray:
                    raise ForgeError(f"undeclared variables {sorted(stray)}")
        if len(self.base_point) != dim:
            raise ForgeError("base point has the wrong length")
        for s in self.structures:
            if len(s.matrix) != dim or any(len(row) != dim for row in s.matrix):
                raise ForgeError(f"structure {s.name} has the wrong size")
            sign = Fraction(1) if s.adjoint == "self" else Fraction(-1)
            bad = _adjoint_defect(self.sym_matrix, s.matrix, sign)
            if bad is not None:
                raise ForgeError(
                    f"structure {s.name} breaks its {s.adjoint}-adjointness "
                    f"at entry {bad}"
                )
        if det(self.matrix_at()) == 0:
            raise Degenerate("metric is degenerate at the base point")

    def to_json(self) -> dict:
        return {
            "shape": {
                "n": self.shape.n,
                "d": list(self.shape.d),
                "delta": self.shape.delta,
            },
            "coordinates": list(self.coordinates),
            "matrix": [[p.to_json() for p in row] for row in self.sym_matrix],
            "structures": [
                {
                    "name": s.name,
                    "adjoint": s.adjoint,
                    "matrix": [[frac_str(x) for x in row] for row in s.matrix],
                }
                for s in self.structures
            ],
            "base_point": [frac_str(x) for x in self.base_point],
        }

    @staticmethod
    def from_json(obj) -> "MetricGerm":
        sh = obj["shape"]
        shape = ModuleShape(int(sh["n"]), tuple(sh["d"]), int(sh.get("delta", 1)))
        return MetricGerm(
            shape=shape,
            coordinates=tuple(obj["coordinates"]),
            sym_matrix=tuple(
                tuple(Poly.from_json(e, 1, REAL) for e in row)
                for row in obj["matrix"]
            ),
            structures=tuple(
                Structure(
                    s["name"],
                    tuple(
                        tuple(parse_frac(x) for x in row) for row in s["matrix"]
                    ),
                    s["adjoint"],
                )
                for s in obj["structures"]
            ),
            base_point=tuple(parse_frac(x) for x in obj["base_point"]),
        )


def _adjoint_defect(G, S, sign: Fraction):
    """First entry where tS G differs from sign * G S, else None."""
    dim = len(G)
    for r in range(dim):
        for c in range(dim):
            left = _zero1()
            for k in range(dim):
                if S[k][r]:
                    left = left + G[k][c].scale(S[k][r])
            right = _zero1()
            for k in range(dim):
                if S[k][c]:
                    right = right + G[r][k].scale(S[k][c])
            if left != right.scale(sign):
                return (r, c)
    return None


# -- the main construction ----------------------------------------------------


def _extended_matrix(seeds: SeedForms):
    """Extend the combined boundary matrix sum_a nu^a B^a off {y = 0}."""
    shape = seeds.shape
    n, D = shape.n, shape.D
    H = [[None] * D for _ in range(D)]
    for i in range(D):
        for j in range(i, D):
            tot = Poly.zero(n, REAL)
            for c, Bc in enumerate(seeds.B):
                p = Bc[i][j]
                if not p.is_zero():
                    tot = tot + p.lift(n).mul_nu(c)
            ext = nilomorphic_extend(AdaptedSeed(shape, tot))
            H[i][j] = ext
            H[j][i] = ext
    return H


def _assemble(shape: ModuleShape, H) -> tuple:
    """Metric matrix from the extended generator matrix: the slot pair
    ((i,a),(j,b)) reads the coefficient of nu^{n-1-a-b} in H[i][j]."""
    n = shape.n
    slots = coordinate_slots(shape)
    zero = _zero1()
    rows = []
    for i, a in slots:
        row = []
        for j, b in slots:
            if a + b <= n - 1:
                row.append(H[i - 1][j - 1].nu_coeff(n - 1 - a - b))
            else:
                row.append(zero)
        rows.append(tuple(row))
    return tuple(rows)


def _origin(shape: ModuleShape) -> tuple:
    return (Fraction(0),) * len(coordinate_slots(shape))


def forge_nilpotent_metric(seeds: SeedForms) -> MetricGerm:
    """Metric germ making the shape's nilpotent N parallel and self-adjoint.

    The seeds prescribe the metric on the transversal; the extension is
    the unique one compatible with N. On a free two-block shape this
    reproduces the familiar anti-triangular matrix with corner
    B^1 + sum_i (dB^0/dx_i) y_i.
    """
    seeds.validate()
    shape = seeds.shape
    germ = MetricGerm(
        shape=shape,
        coordinates=germ_coordinates(shape),
        sym_matrix=_assemble(shape, _extended_matrix(seeds)),
        structures=(Structure("N", nilpotent_matrix(shape), "self"),),
        base_point=_origin(shape),
    )
    germ.validate()
    return germ


def reconstruct_nilomorphic(germ: MetricGerm) -> tuple:
    """Rebuild the truncated matrix H[i][j] = sum_a nu^a g(X_i, N^{n-1-a} X_j)
    from a forged germ; entrywise this must pass check_nilomorphic."""
    shape = germ.shape
    n = shape.n
    sizes = block_sizes(shape)
    slots = coordinate_slots(shape)
    index = {s: r for r, s in enumerate(slots)}
    D = shape.D
    out = []
    for i in range(1, D + 1):
        row = []
        for j in range(1, D + 1):
            tot = Poly.zero(n, REAL)
            for a in range(n):
                c = n - 1 - a
                if c > sizes[j - 1] - 1:
                    continue
                p = germ.sym_matrix[index[(i, 0)]][index[(j, c)]]
                tot = tot + p.lift(n).mul_nu(a)
            row.append(tot)
        out.append(tuple(row))
    return tuple(out)


# -- potentials: Kaehler, para-Kaehler and their complex analogues ------------


def _pair_structure_matrix(shape: ModuleShape) -> tuple:
    """Rotation by the pairing (2k-1, 2k) of consecutive blocks, extended
    layer by layer. Paired blocks must have equal sizes."""
    slots = coordinate_slots(shape)
    index = {s: r for r, s in enumerate(slots)}
    dim = len(slots)
    m = [[Fraction(0)] * dim for _ in range(dim)]
    for c, (i, a) in enumerate(slots):
        if i % 2 == 1:
            m[index[(i + 1, a)]][c] = Fraction(1)
        else:
            m[index[(i - 1, a)]][c] = Fraction(-1)
    return tuple(tuple(row) for row in m)


def _parity_sign_matrix(shape: ModuleShape, block_sign) -> tuple:
    slots = coordinate_slots(shape)
    dim = len(slots)
    m = [[Fraction(0)] * dim for _ in range(dim)]
    for c, (i, _) in enumerate(slots):
        m[c][c] = Fraction(block_sign(i))
    return tuple(tuple(row) for row in m)


def _expect_real_paired(shape: ModuleShape):
    if shape.delta != 1:
        raise IncompatibleShape("a real shape is required here")
    if any(da % 2 for da in shape.d):
        raise IncompatibleShape(
            "every multiplicity must be even to pair the blocks"
        )


def _expect_potential(seed, shape: ModuleShape, field: str) -> AdaptedSeed:
    if not isinstance(seed, AdaptedSeed):
        raise NotAdapted("the potential must be an AdaptedSeed")
    if seed.shape != shape:
        raise IncompatibleShape("the potential lives on a different shape")
    if seed.value.base_field != field:
        raise NotAdapted(f"the potential must be {field}")
    return seed


def _forge_hermitian(shape: ModuleShape, seed: AdaptedSeed) -> MetricGerm:
    # g = Re of the Hermitian Hessian of the extended potential, with
    # P_k = (d/dx_{2k-1} - i d/dx_{2k})/2 and its conjugate
    u = nilomorphic_extend(seed)
    D = shape.D
    quarter = Fraction(1, 4)
    ux = [u.diff(x_name(i)) for i in range(1, D + 1)]
    G = [[None] * D for _ in range(D)]
    for k in range(1, D // 2 + 1):
        for l in range(1, D // 2 + 1):
            re = (
                ux[2 * k - 2].diff(x_name(2 * l - 1))
                + ux[2 * k - 1].diff(x_name(2 * l))
            ).scale(quarter)
            im = (
                ux[2 * k - 2].diff(x_name(2 * l))
                - ux[2 * k - 1].diff(x_name(2 * l - 1))
            ).scale(quarter)
            G[2 * k - 2][2 * l - 2] = re
            G[2 * k - 1][2 * l - 1] = re
            G[2 * k - 2][2 * l - 1] = im
            G[2 * k - 1][2 * l - 2] = -im
    germ = MetricGerm(
        shape=shape,
        coordinates=germ_coordinates(shape),
        sym_matrix=_assemble(shape, G),
        structures=(
            Structure("N", nilpotent_matrix(shape), "self"),
            Structure("J", _pair_structure_matrix(shape), "skew"),
        ),
        base_point=_origin(shape),
    )
    germ.validate()
    return germ


def _forge_para(shape: ModuleShape, seed: AdaptedSeed) -> MetricGerm:
    # checkerboard Hessian: only opposite parities pair, L = +/-1 per parity
    u = nilomorphic_extend(seed)
    D = shape.D
    zero = Poly.zero(shape.n, REAL)
    ux = [u.diff(x_name(i)) for i in range(1, D + 1)]
    G = [
        [
            ux[i].diff(x_name(j + 1)) if (i + j) % 2 else zero
            for j in range(D)
        ]
        for i in range(D)
    ]
    germ = MetricGerm(
        shape=shape,
        coordinates=germ_coordinates(shape),
        sym_matrix=_assemble(shape, G),
        structures=(
            Structure("N", nilpotent_matrix(shape), "self"),
            Structure(
                "L",
                _parity_sign_matrix(shape, lambda i: 1 if i % 2 else -1),
                "skew",
            ),
        ),
        base_point=_origin(shape),
    )
    germ.validate()
    return germ


def _realification_substitution(shape_c: ModuleShape) -> dict:
    """x_k -> x_{2k-1} + i x_{2k} and likewise per layer, as complex
    polynomials over the doubled real coordinate names."""
    n = shape_c.n
    sub = {}
    for k, sz in enumerate(block_sizes(shape_c), 1):
        sub[x_name(k)] = Poly.var(x_name(2 * k - 1), n, COMPLEX) + Poly.var(
            x_name(2 * k), n, COMPLEX
        ).scale(_I)
        for a in range(1, sz):
            sub[y_name(k, a)] = Poly.var(y_name(2 * k - 1, a), n, COMPLEX) + Poly.var(
                y_name(2 * k, a), n, COMPLEX
            ).scale(_I)
    return sub


def _realify_bilinear(shape_c: ModuleShape, Hc) -> tuple:
    """Real part of a symmetric complex-bilinear matrix, on doubled blocks.

    With H = A + iB on the complex generators, the real generators
    (E_k, iE_k) produce the 2x2 pattern [[A, -B], [-B, -A]].
    """
    Dc = shape_c.D
    sub = _realification_substitution(shape_c)
    real_shape = ModuleShape(shape_c.n, tuple(2 * da for da in shape_c.d), 1)
    D = 2 * Dc
    G = [[None] * D for _ in range(D)]
    for k in range(1, Dc + 1):
        for l in range(1, Dc + 1):
            re, im = Hc[k - 1][l - 1].substitute_poly(sub).real_imag()
            G[2 * k - 2][2 * l - 2] = re
            G[2 * k - 2][2 * l - 1] = -im
            G[2 * k - 1][2 * l - 2] = -im
            G[2 * k - 1][2 * l - 1] = -re
    return real_shape, G


def _forge_complex_riemannian(shape_c: ModuleShape, hmat) -> MetricGerm:
    if shape_c.delta != 2:
        raise IncompatibleShape("a complex shape (delta = 2) is required")
    n, Dc = shape_c.n, shape_c.D
    sizes = block_sizes(shape_c)
    rows = tuple(tuple(row) for row in hmat)
    if len(rows) != Dc or any(len(r) != Dc for r in rows):
        raise SeedViolation(f"the coefficient matrix must be {Dc} x {Dc}")
    for k in range(Dc):
        for l in range(Dc):
            s = rows[k][l]
            if not isinstance(s, AdaptedSeed):
                raise NotAdapted("matrix entries must be AdaptedSeed")
            if s.shape != shape_c:
                raise IncompatibleShape("entry shape mismatch")
            if s.value.base_field != COMPLEX:
                raise NotAdapted("matrix entries must be complex")
            if s.value != rows[l][k].value:
                raise SeedViolation("the coefficient matrix must be symmetric")
            floor = n - min(sizes[k], sizes[l])
            for c in range(min(floor, n)):
                if not s.value.nu_coeff(c).is_zero():
                    raise SeedViolation(
                        f"entry ({k + 1},{l + 1}) has nu^{c} data below the "
                        f"bilinearity floor nu^{floor}"
                    )
    Hc = [[nilomorphic_extend(rows[k][l]) for l in range(Dc)] for k in range(Dc)]
    real_shape, G = _realify_bilinear(shape_c, Hc)
    germ = MetricGerm(
        shape=real_shape,
        coordinates=germ_coordinates(real_shape),
        sym_matrix=_assemble(real_shape, G),
        structures=(
            Structure("N", nilpotent_matrix(real_shape), "self"),
            Structure("Jbar", _pair_structure_matrix(real_shape), "self"),
        ),
        base_point=_origin(real_shape),
    )
    germ.validate()
    return germ


def _forge_complex_para(shape_c: ModuleShape, seed: AdaptedSeed) -> MetricGerm:
    if shape_c.delta != 2:
        raise IncompatibleShape("a complex shape (delta = 2) is required")
    if any(da % 2 for da in shape_c.d):
        raise IncompatibleShape(
            "every complex multiplicity must be even to pair the blocks"
        )
    seed = _expect_potential(seed, shape_c, COMPLEX)
    u = nilomorphic_extend(seed)
    n, Dc = shape_c.n, shape_c.D
    zero = Poly.zero(n, COMPLEX)
    ux = [u.diff(x_name(i)) for i in range(1, Dc + 1)]
    Hc = [
        [
            ux[k].diff(x_name(l + 1)) if (k + l) % 2 else zero
            for l in range(Dc)
        ]
        for k in range(Dc)
    ]
    real_shape, G = _realify_bilinear(shape_c, Hc)
    germ = MetricGerm(
        shape=real_shape,
        coordinates=germ_coordinates(real_shape),
        sym_matrix=_assemble(real_shape, G),
        structures=(
            Structure("N", nilpotent_matrix(real_shape), "self"),
            Structure("Jbar", _pair_structure_matrix(real_shape), "self"),
            Structure(
                "L",
                _parity_sign_matrix(
                    real_shape, lambda i: 1 if ((i + 1) // 2) % 2 else -1
                ),
                "skew",
            ),
        ),
        base_point=_origin(real_shape),
    )
    germ.validate()
    return germ


def forge_kahler_nilpotent(shape, case_label, potential_seed) -> MetricGerm:
    """Metric germ from a potential, per catalogue case.

    case '2'  : real shape, even multiplicities, real potential; Hermitian
                Hessian of the extension, structures N and J (skew).
    case '2p' : real shape, even multiplicities, real potential;
                checkerboard Hessian, structures N and L (skew).
    case '1C' : complex shape; the potential argument is the full symmetric
                matrix of complex adapted coefficients, taken directly.
                Structures N and Jbar (self).
    case '2C' : complex shape, even multiplicities, complex potential;
                complexified checkerboard Hessian then realification.
                Structures N, Jbar (self) and L (skew).
    """
    if case_label == "2":
        _expect_real_paired(shape)
        return _forge_hermitian(shape, _expect_potential(potential_seed, shape, REAL))
    if case_label == "2p":
        _expect_real_paired(shape)
        return _forge_para(shape, _expect_potential(potential_seed, shape, REAL))
    if case_label == "1C":
        return _forge_complex_riemannian(shape, potential_seed)
    if case_label == "2C":
        return _forge_complex_para(shape, potential_seed)
    raise IncompatibleShape(f"no potential construction for case {case_label!r}")


# -- tensoring and the tangent lift -------------------------------------------


def _base_matrix_checked(base_metric, op: str):
    rows = tuple(tuple(row) for row in base_metric)
    D = len(rows)
    if D == 0:
        raise Degenerate(f"{op}: empty base metric")
    allowed = {x_name(i) for i in range(1, D + 1)}
    for i in range(D):
        if len(rows[i]) != D:
            raise Degenerate(f"{op}: base metric must be square")
        for j in range(D):
            p = rows[i][j]
            if not isinstance(p, Poly) or p.order != 1 or p.base_field != REAL:
                raise Degenerate(f"{op}: entries must be real Poly of order 1")
            if p != rows[j][i]:
                raise Degenerate(f"{op}: base metric must be symmetric")
            stray = p.variables() - allowed
            if stray:
                raise Degenerate(
                    f"{op}: entries may only use x_1..x_{D}, got {sorted(stray)}"
                )
    value = [[_const_value(rows[i][j]) for j in range(D)] for i in range(D)]
    if det(value) == 0:
        raise Degenerate(f"{op}: base metric is degenerate at the origin")
    return rows


def forge_by_tensoring(base_metric, n: int) -> MetricGerm:
    """Scalar extension of a polynomial metric to truncation degree n.

    Substituting x_i + nu y_{i,1} + ... into every coefficient is exactly
    the extension of the boundary data on the free shape, so this is the
    nilpotent forge with B^0 the base metric and no deeper seed.
    """
    if n < 1:
        raise ShapeViolation("the truncation degree must be at least 1")
    rows = _base_matrix_checked(base_metric, "tensoring")
    D = len(rows)
    shape = ModuleShape(n, (0,) * (n - 1) + (D,), 1)
    zero = tuple(tuple(_zero1() for _ in range(D)) for _ in range(D))
    seeds = SeedForms(shape, (rows,) + (zero,) * (n - 1))
    return forge_nilpotent_metric(seeds)


def tangent_lift(base_metric) -> MetricGerm:
    """Neutral metric on the tangent bundle of a polynomial metric.

    Vertical and horizontal distributions are isotropic and pair by the
    base metric; in the coordinates (y, x) the matrix is
    [[0, G], [G, sum_l (dG/dx_l) y_l]], the Christoffel terms of the
    horizontal lift cancelling against each other. The vertical
    projection N is parallel and the signature is split.
    """
    rows = _base_matrix_checked(base_metric, "tangent lift")
    return forge_by_tensoring(rows, 2)


# -- the Lorentzian normal form -----------------------------------------------


def forge_lorentzian(B1_0, b: Poly) -> MetricGerm:
    """Lorentzian germ with parallel null N: matrix [[0,0,1],[0,B1_0,0],[1,0,b]]
    in the coordinates (y, x_1..x_m, x_{m+1}).

    B1_0 must be positive definite at the origin; it and b are polynomials
    in the x-variables (so independent of the null direction y).
    """
    rows = tuple(tuple(row) for row in B1_0)
    m = len(rows)
    D = m + 1
    allowed = {x_name(i) for i in range(1, D + 1)}
    for i in range(m):
        if len(rows[i]) != m:
            raise SeedViolation("B1_0 must be square")
        for j in range(m):
            p = rows[i][j]
            if not isinstance(p, Poly) or p.order != 1 or p.base_field != REAL:
                raise SeedViolation("B1_0 entries must be real Poly of order 1")
            if p != rows[j][i]:
                raise SeedViolation("B1_0 must be symmetric")
            if p.variables() - allowed:
                raise SeedViolation("B1_0 entries may only use the x-variables")
    if not isinstance(b, Poly) or b.order != 1 or b.base_field != REAL:
        raise SeedViolation("b must be a real Poly of order 1")
    if b.variables() - allowed:
        raise SeedViolation("b may only use the x-variables")
    value = [[_const_value(rows[i][j]) for j in range(m)] for i in range(m)]
    if signature_of_symmetric(value) != (m, 0):
        raise Degenerate("B1_0 is not positive definite at the origin")
    shape = ModuleShape(2, (m, 1), 1)
    zero = _zero1()
    B0 = tuple(
        tuple(Poly.one(1) if i == j == m else zero for j in range(D))
        for i in range(D)
    )
    B1 = tuple(
        tuple(
            rows[i][j]
            if i < m and j < m
            else (b if i == j == m else zero)
            for j in range(D)
        )
        for i in range(D)
    )
    return forge_nilpotent_metric(SeedForms(shape, (B0, B1)))


# -- two commuting nilpotent structures ---------------------------------------


def _in_structure_algebra(gens, target) -> bool:
    """Exact membership of target in the unital algebra generated by gens."""
    dim = len(target)
    if dim == 0:
        return True

    def flat(mat):
        return [mat[r][c] for r in range(dim) for c in range(dim)]

    ident = [
        [Fraction(1) if r == c else Fraction(0) for c in range(dim)]
        for r in range(dim)
    ]
    basis = [ident]
    flats = [flat(ident)]
    grown = True
    while grown:
        grown = False
        for mat in list(basis):
            for g in gens:
                cand = mat_mul(mat, [list(row) for row in g])
                fc = flat(cand)
                if rank(flats + [fc]) > rank(flats):
                    basis.append(cand)
                    flats.append(fc)
                    grown = True
    return rank(flats + [flat(target)]) == rank(flats)


def forge_two_nilpotents(shape, u_matrix, quotient, B1=None) -> MetricGerm:
    """Germ carrying two parallel self-adjoint nilpotents N and N' = N U.

    The shape must be two-step with Im N = ker N (free of degree 2). The
    quotient argument is either SeedForms (a nested nilpotent forge
    provides the metric G0 making U parallel) or a prebuilt MetricGerm,
    for instance from the case-1C potential constructor when U has
    irreducible quadratic invariant factors. U must be constant, lie in
    the algebra generated by the quotient's declared structures, and be
    self-adjoint for G0. The result is [[0, G0], [G0, B1 + dG0 . y]].
    """
    if shape.delta != 1 or shape.n != 2 or shape.d != (0, shape.D):
        raise ShapeViolation(
            "a free two-step real shape (0, D) is required so that Im N = ker N"
        )
    D = shape.D
    if isinstance(quotient, SeedForms):
        try:
            inner = forge_nilpotent_metric(quotient)
        except ForgeError as exc:
            raise NestedSeedViolation(f"quotient forge failed: {exc}") from exc
    elif isinstance(quotient, MetricGerm):
        inner = quotient
    else:
        raise TypeError("quotient must be SeedForms or MetricGerm")
    if inner.dim != D:
        raise ShapeViolation(
            f"quotient dimension {inner.dim} does not match D = {D}"
        )
    sub = {
        name: Poly.var(x_name(t), 1, REAL)
        for t, name in enumerate(inner.coordinates, 1)
    }
    G0 = tuple(
        tuple(p.substitute_poly(sub) for p in row) for row in inner.sym_matrix
    )
    U = tuple(tuple(Fraction(x) for x in row) for row in u_matrix)
    if len(U) != D or any(len(row) != D for row in U):
        raise NestedSeedViolation(f"U must be {D} x {D}")
    if not _in_structure_algebra([s.matrix for s in inner.structures], U):
        raise NestedSeedViolation(
            "U is not generated by the quotient structures, its parallelism "
            "is not guaranteed"
        )
    if _adjoint_defect(G0, U, Fraction(1)) is not None:
        raise NestedSeedViolation("U is not self-adjoint for the quotient metric")
    if B1 is None:
        B1 = tuple(tuple(_zero1() for _ in range(D)) for _ in range(D))
    outer = forge_nilpotent_metric(SeedForms(shape, (G0, B1)))
    nprime = [[Fraction(0)] * (2 * D) for _ in range(2 * D)]
    for i in range(D):
        for j in range(D):
            nprime[i][D + j] = U[i][j]
    germ = MetricGerm(
        shape=shape,
        coordinates=outer.coordinates,
        sym_matrix=outer.sym_matrix,
        structures=outer.structures + (Structure("Nprime", nprime, "self"),),
        base_point=outer.base_point,
    )
    germ.validate()
    return germ


# -- transversal gauge (test helper) ------------------------------------------


def apply_seed_gauge(seeds: SeedForms, v) -> SeedForms:
    """Move the transversal by the field V = sum v_i d/dx_i: B^1 gains the
    Lie derivative L_V B^0. Two-step shapes only; v_i must vanish on the
    short blocks. The germs of the old and new seeds are isometric under
    y_i -> y_i + v_i, which tests may verify directly.

    The helper re-checks the exchange identity making d(iota_X B^1)
    well defined along the short directions: for every long block i the
    1-form (L_V B^0)(X_i, .) is closed in the short x-variables.
    """
    shape = seeds.shape
    if shape.n != 2:
        raise ShapeViolation("the gauge helper covers two-step shapes only")
    seeds.validate()
    sizes = block_sizes(shape)
    D = shape.D
    v = tuple(v)
    if len(v) != D:
        raise SeedViolation(f"v must have {D} components")
    for i, p in enumerate(v):
        if not isinstance(p, Poly) or p.order != 1 or p.base_field != REAL:
            raise SeedViolation("v components must be real Poly of order 1")
        if p.variables() - {x_name(k) for k in range(1, D + 1)}:
            raise SeedViolation("v components may only use the x-variables")
        if sizes[i] == 1 and not p.is_zero():
            raise SeedViolation("v must vanish on blocks of degree 1")
    B0, B1 = seeds.B[0], seeds.B[1]
    lie = []
    for i in range(D):
        row = []
        for j in range(D):
            tot = _zero1()
            for k in range(D):
                if not v[k].is_zero():
                    tot = tot + v[k] * B0[i][j].diff(x_name(k + 1))
                    tot = tot + B0[k][j] * v[k].diff(x_name(i + 1))
                    tot = tot + B0[i][k] * v[k].diff(x_name(j + 1))
            row.append(tot)
        lie.append(tuple(row))
    short = [j for j in range(D) if sizes[j] == 1]
    for i in range(D):
        if sizes[i] == 1:
            continue
        for j in short:
            for k in short:
                djk = lie[i][j].diff(x_name(k + 1))
                dkj = lie[i][k].diff(x_name(j + 1))
                if djk != dkj:
                    raise ForgeError(
                        "the gauge term is not closed along the short leaves; "
                        "this contradicts the transversal-change identity"
                    )
    B1p = tuple(
        tuple(B1[i][j] + lie[i][j] for j in range(D)) for i in range(D)
    )
    gauged = SeedForms(shape, (B0, B1p))
    gauged.validate()
    return gauged
