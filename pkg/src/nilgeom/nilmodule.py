"""Shapes of truncated free modules and nilpotent endomorphism bookkeeping.

A shape records the multiplicities d = (d_1, ..., d_n) of invariant factors
v^a of a nilpotent operator N with N^n = 0, plus a block scalar size
delta in {1, 2, 4} (real, complex, quaternionic cells). Real dimension is
delta * sum(a * d_a).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import _exact
from ._exact import QQ, field_of, frac_str, parse_frac


class NilmoduleError(Exception):
    pass


class NotNilpotent(NilmoduleError):
    pass


class CountMismatch(NilmoduleError):
    pass


@dataclass(frozen=True)
class ModuleShape:
    n: int
    d: tuple
    delta: int = 1

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(int(x) for x in self.d))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if len(self.d) != self.n:
            raise ValueError("d must have exactly n entries")
        if any(x < 0 for x in self.d):
            raise ValueError("multiplicities must be >= 0")
        if self.d[-1] < 1:
            raise ValueError("d_n must be >= 1")
        if self.delta not in (1, 2, 4):
            raise ValueError("delta must be 1, 2 or 4")

    # -- derived quantities -------------------------------------------------

    @property
    def D(self) -> int:
        return sum(self.d)

    def D_upto(self, a: int) -> int:
        """D_a = d_1 + ... + d_a (a may be 0..n)."""
        return sum(self.d[:a])

    def n_of(self, i: int) -> int:
        """Invariant-factor degree of generator i (1-based, increasing)."""
        if not 1 <= i <= self.D:
            raise ValueError(f"generator index {i} out of range 1..{self.D}")
        acc = 0
        for a, da in enumerate(self.d, start=1):
            acc += da
            if i <= acc:
                return a
        raise AssertionError

    @property
    def dim_real(self) -> int:
        return self.delta * sum(a * da for a, da in enumerate(self.d, start=1))

    def sizes_increasing(self) -> tuple:
        """(n(1), ..., n(D)), nondecreasing."""
        out = []
        for a, da in enumerate(self.d, start=1):
            out.extend([a] * da)
        return tuple(out)

    def sizes_decreasing(self) -> tuple:
        return tuple(reversed(self.sizes_increasing()))

    def real_gen_sizes(self) -> tuple:
        """Block degrees of the delta*D realified generators, nondecreasing."""
        out = []
        for sz in self.sizes_increasing():
            out.extend([sz] * self.delta)
        return tuple(out)

    # -- serialization ------------------------------------------------------

    def to_json(self):
        return {"n": self.n, "d": list(self.d), "delta": self.delta}

    @staticmethod
    def from_json(obj) -> "ModuleShape":
        return ModuleShape(int(obj["n"]), tuple(obj["d"]), int(obj.get("delta", 1)))


@dataclass(frozen=True)
class RationalMatrix:
    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged matrix")
        object.__setattr__(self, "entries", rows)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def tolists(self):
        return [list(r) for r in self.entries]

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(_exact.mat_transpose(self.tolists()))

    def mul(self, other: "RationalMatrix") -> "RationalMatrix":
        return RationalMatrix(_exact.mat_mul(self.tolists(), other.tolists()))

    def add(self, other: "RationalMatrix") -> "RationalMatrix":
        return RationalMatrix(_exact.mat_add(self.tolists(), other.tolists()))

    def rank(self) -> int:
        return _exact.rank(self.tolists())

    def is_zero(self) -> bool:
        f = field_of(self.entries) if self.entries else QQ
        return all(f.is_zero(x) for r in self.entries for x in r)

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return _exact.mat_eq(self.tolists(), other.tolists())

    def __hash__(self):
        return hash(self.entries)

    @staticmethod
    def from_lists(rows) -> "RationalMatrix":
        return RationalMatrix(tuple(tuple(x for x in r) for r in rows))

    def to_json(self):
        return [[frac_str(x) for x in r] for r in self.entries]

    @staticmethod
    def from_json(obj) -> "RationalMatrix":
        return RationalMatrix(tuple(tuple(parse_frac(x) for x in r) for r in obj))


# -- notation matrices ------------------------------------------------------


def nilpotent_block(p: int, delta: int = 1):
    """N_p^(delta): identity cells of size delta on the superdiagonal."""
    size = p * delta
    m = _exact.mat_zero(size, size)
    one = Fraction(1)
    for r in range(p - 1):
        for s in range(delta):
            m[r * delta + s][(r + 1) * delta + s] = one
    return m


def anti_identity_block(p: int, delta: int = 1):
    """K_p^(delta): identity cells of size delta on the antidiagonal."""
    size = p * delta
    m = _exact.mat_zero(size, size)
    one = Fraction(1)
    for r in range(p):
        for s in range(delta):
            m[r * delta + s][(p - 1 - r) * delta + s] = one
    return m


def ipq(p: int, q: int):
    m = _exact.mat_identity(p + q)
    for i in range(p, p + q):
        m[i][i] = Fraction(-1)
    return m


def jmat(p: int):
    """[[0, -I_p], [I_p, 0]], square of size 2p, J^2 = -Id."""
    m = _exact.mat_zero(2 * p, 2 * p)
    for i in range(p):
        m[i][p + i] = Fraction(-1)
        m[p + i][i] = Fraction(1)
    return m


def lmat(p: int):
    """[[0, I_p], [I_p, 0]], square of size 2p, L^2 = Id."""
    m = _exact.mat_zero(2 * p, 2 * p)
    for i in range(p):
        m[i][p + i] = Fraction(1)
        m[p + i][i] = Fraction(1)
    return m


def block_diag(*blocks):
    size = sum(len(b) for b in blocks)
    out = _exact.mat_zero(size, size)
    off = 0
    for b in blocks:
        for i, row in enumerate(b):
            for j, v in enumerate(row):
                out[off + i][off + j] = v
        off += len(b)
    return out


# -- operators from shapes --------------------------------------------------


def jordan_matrix(shape: ModuleShape) -> RationalMatrix:
    """Block diagonal nilpotent with blocks N_{n_i}^(delta), sizes decreasing."""
    blocks = [nilpotent_block(p, shape.delta) for p in shape.sizes_decreasing()]
    if not blocks:
        raise ValueError("empty shape")
    return RationalMatrix.from_lists(block_diag(*blocks))


def invariant_factors(N: RationalMatrix, delta: int = 1) -> ModuleShape:
    """Shape of a nilpotent matrix from exact rank computations.

    Multiplicity of v^a is rank(N^(a-1)) - 2 rank(N^a) + rank(N^(a+1)).
    With delta > 1 the real multiplicities are divided by delta (they must
    be divisible; the realified cells of size delta contribute delta equal
    factors each).
    """
    if N.rows != N.cols:
        raise ValueError("matrix must be square")
    dim = N.rows
    ranks = [dim]  # rank of N^0
    power = N
    k = 1
    while True:
        r = power.rank()
        ranks.append(r)
        if r == 0:
            break
        if k >= dim:
            raise NotNilpotent("matrix is not nilpotent")
        power = power.mul(N)
        k += 1
    n = len(ranks) - 1  # smallest k with N^k = 0
    ranks = ranks + [0]
    d_real = [ranks[a - 1] - 2 * ranks[a] + ranks[a + 1] for a in range(1, n + 1)]
    if delta != 1:
        if any(x % delta for x in d_real):
            raise ValueError(f"multiplicities {d_real} not divisible by delta={delta}")
        d_real = [x // delta for x in d_real]
    return ModuleShape(n, tuple(d_real), delta)


def flag_dims(shape: ModuleShape, a: int, b: int) -> int:
    """dim(Im N^a intersect ker N^b) = delta * sum_c min(max(c-a,0), b) d_c."""
    if a < 0 or b < 0:
        raise ValueError("flag indices must be >= 0")
    total = 0
    for c, dc in enumerate(shape.d, start=1):
        total += min(max(c - a, 0), b) * dc
    return shape.delta * total


def _col_stack(*groups):
    """Columns (lists) concatenated into a matrix given as rows."""
    cols = [c for g in groups for c in g]
    if not cols:
        return []
    return [[col[i] for col in cols] for i in range(len(cols[0]))]


def _im_cols(N: RationalMatrix):
    # column space basis: the pivot columns of N are independent
    rows = N.tolists()
    _, piv_cols = _exact.rref(rows)
    return [[rows[i][c] for i in range(N.rows)] for c in piv_cols]


def _ker_cols(M):
    return _exact.nullspace(M)


def adapted_family_check(N: RationalMatrix, vectors) -> bool:
    """Whether the given generators form an adapted spanning family of N.

    vectors: list of D column vectors (lists of rationals), ordered so that
    the slice with indices D_{a-1} < i <= D_a consists of degree-a
    generators. Slice a must project to a basis of the degree-a graded piece
    modulo Im N and ker N^(a-1).
    """
    shape = invariant_factors(N)
    vecs = [list(v) for v in vectors]
    if len(vecs) != shape.D:
        raise CountMismatch(f"expected {shape.D} generators, got {len(vecs)}")
    if any(len(v) != N.rows for v in vecs):
        raise CountMismatch("generator length does not match the matrix size")

    im_cols = _im_cols(N)
    powers = [_exact.mat_identity(N.rows)]
    for _ in range(shape.n):
        powers.append(_exact.mat_mul(powers[-1], N.tolists()))
    ker_cols = [[] if a == 0 else _ker_cols(powers[a]) for a in range(shape.n + 1)]

    idx = 0
    for a in range(1, shape.n + 1):
        da = shape.d[a - 1]
        slice_vecs = vecs[idx : idx + da]
        idx += da
        base = _col_stack(ker_cols[a], im_cols)
        base_rank = _exact.rank(base) if base else 0
        with_slice = _col_stack(ker_cols[a], im_cols, slice_vecs)
        if _exact.rank(with_slice) != base_rank:
            return False  # some slice vector escapes ker N^a + Im N
        lower = _col_stack(ker_cols[a - 1], im_cols)
        lower_rank = _exact.rank(lower) if lower else 0
        with_lower = _col_stack(ker_cols[a - 1], im_cols, slice_vecs)
        if _exact.rank(with_lower) != lower_rank + da:
            return False  # not independent modulo the lower piece
    return True


def canonical_family(shape: ModuleShape):
    """Standard-basis adapted family for jordan_matrix(shape).

    Takes the trailing delta basis vectors of each Jordan block, ordered by
    increasing block size.
    """
    N = jordan_matrix(shape)
    dim = N.rows
    offsets = []
    off = 0
    for p in shape.sizes_decreasing():
        offsets.append((p, off))
        off += p * shape.delta
    vectors = []
    for p, off in reversed(offsets):  # increasing size
        for s in range(shape.delta):
            v = [Fraction(0)] * dim
            v[off + (p - 1) * shape.delta + s] = Fraction(1)
            vectors.append(v)
    return vectors


# -- coordinate naming ------------------------------------------------------


def x_names(shape: ModuleShape):
    return [f"x{i}" for i in range(1, len(shape.real_gen_sizes()) + 1)]


def y_name(i: int, a: int) -> str:
    return f"y{i}_{a}"


def germ_coordinates(shape: ModuleShape):
    """Coordinate names in germ row order.

    Layers of y's with a = n-1 down to 1 (within a layer, increasing
    generator index, only generators with n(i) > a), then the x block.
    """
    sizes = shape.real_gen_sizes()
    names = []
    for a in range(shape.n - 1, 0, -1):
        for i, sz in enumerate(sizes, start=1):
            if sz > a:
                names.append(y_name(i, a))
    names.extend(f"x{i}" for i in range(1, len(sizes) + 1))
    return names


def nilpotent_on_coordinates(shape: ModuleShape) -> RationalMatrix:
    """Matrix of N in the germ coordinate basis: N d/dx_i = d/dy_{i,1}, etc.

    N sends the coordinate vector of y_{i,a} to that of y_{i,a+1}
    (zero at the top layer), and d/dx_i to d/dy_{i,1}.
    """
    coords = germ_coordinates(shape)
    pos = {name: k for k, name in enumerate(coords)}
    sizes = shape.real_gen_sizes()
    dim = len(coords)
    m = _exact.mat_zero(dim, dim)
    one = Fraction(1)
    for i, sz in enumerate(sizes, start=1):
        chain = [f"x{i}"] + [y_name(i, a) for a in range(1, sz)]
        # N maps x -> y_{i,1} -> y_{i,2} -> ... -> y_{i,sz-1} -> 0
        for src, dst in zip(chain, chain[1:]):
            m[pos[dst]][pos[src]] = one
    return RationalMatrix.from_lists(m)
