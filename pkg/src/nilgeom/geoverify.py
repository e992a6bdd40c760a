"""Exact pointwise differential geometry on polynomial metric germs.

Connection, curvature, Ricci and covariant derivatives are evaluated at
rational points through degree-truncated jets: the metric is recentred at
the point, its inverse built as a finite Neumann series, and every tensor
value falls out by rational arithmetic. Verdicts are never floating point;
the finite-difference comparison used in tests is a sanity layer on top.

The Cartan character test lives here too. It rebuilds the tangent space of
the relevant matrix manifold as an exact nullspace, walks the tilted
integral flag, and counts characters and the integral-element variety by
rank over the rationals.
"""

import random
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from ._exact import CRat, det, frac_str, inverse, nullspace, rank
from .algebra_lab import solve_commutant
from .nilocalc import Poly
from .trunc_ring import REAL


class VerifyError(Exception):
    pass


class DegenerateAtPoint(VerifyError):
    pass


class TooLarge(VerifyError):
    pass


_F0 = Fraction(0)
_F1 = Fraction(1)
_PZ = Poly.zero(1, REAL)


# -- truncated jets -----------------------------------------------------------
#
# All series are plain order-1 Poly matrices in the germ coordinates,
# recentred so the study point is the origin. Each derived object is
# truncated at the lowest total degree that still determines the values
# finally read off, so the arithmetic stays small.


def _truncate(p, deg):
    kept = {m: c for m, c in p.terms.items() if sum(e for _, e in m) <= deg}
    if len(kept) == len(p.terms):
        return p
    return Poly(p.order, kept, p.base_field)


def _value(p):
    return p.constant_term().coeff(0)


def _mat_values(rows):
    return tuple(tuple(_value(p) for p in row) for row in rows)


def _pm_mul(a, b, deg):
    out = []
    for i in range(len(a)):
        row = []
        for j in range(len(b[0])):
            tot = _PZ
            for k in range(len(b)):
                p, q = a[i][k], b[k][j]
                if p.is_zero() or q.is_zero():
                    continue
                tot = tot + p * q
            row.append(_truncate(tot, deg))
        out.append(row)
    return out


def _pm_id(d):
    return [[Poly.one(1, REAL) if i == j else _PZ for j in range(d)] for i in range(d)]


def _check_point(germ, point):
    names = germ.coordinates
    if len(point) != len(names):
        raise ValueError(
            "point has %d coordinates, germ has %d" % (len(point), len(names))
        )
    return tuple(Fraction(c) for c in point)


def _recentred_metric(germ, point, deg):
    sub = {
        nm: Poly.var(nm, 1, REAL) + Poly.const(1, q, REAL)
        for nm, q in zip(germ.coordinates, point)
    }
    return [
        [_truncate(p.substitute_poly(sub), deg) for p in row]
        for row in germ.sym_matrix
    ]


def _series_inverse(g, deg):
    d = len(g)
    g0 = [[_value(p) for p in row] for row in g]
    g0_inv = inverse(g0)
    if g0_inv is None:
        raise DegenerateAtPoint("metric is singular at the sample point")
    # g = (I + E) g0 with E vanishing at the origin, so the Neumann series
    # for (I + E)^{-1} terminates at the truncation degree
    E = []
    for i in range(d):
        row = []
        for j in range(d):
            tot = _PZ
            for k in range(d):
                if not g[i][k].is_zero():
                    tot = tot + g[i][k].scale(g0_inv[k][j])
            if i == j:
                tot = tot - Poly.one(1, REAL)
            row.append(_truncate(tot, deg))
        E.append(row)
    acc = _pm_id(d)
    power = _pm_id(d)
    sign = _F1
    for _ in range(deg):
        power = _pm_mul(power, E, deg)
        sign = -sign
        acc = [
            [acc[i][j] + power[i][j].scale(sign) for j in range(d)]
            for i in range(d)
        ]
    return [
        [
            _truncate(
                sum((acc[k][j].scale(g0_inv[i][k]) for k in range(d)), _PZ), deg
            )
            for j in range(d)
        ]
        for i in range(d)
    ]


def _christoffel_series(g, g_inv, names, deg):
    d = len(names)
    half = Fraction(1, 2)
    dg = [[[g[i][j].diff(nm) for j in range(d)] for i in range(d)] for nm in names]
    Gamma = []
    for k in range(d):
        mat = []
        for a in range(d):
            row = []
            for i in range(d):
                tot = _PZ
                for b in range(d):
                    s = dg[k][b][i] + dg[i][b][k] - dg[b][k][i]
                    if s.is_zero() or g_inv[a][b].is_zero():
                        continue
                    tot = tot + g_inv[a][b] * s
                row.append(_truncate(tot, deg).scale(half))
            mat.append(row)
        Gamma.append(mat)
    return Gamma


def _curvature_series(Gamma, names, deg):
    # R[k][l] is the endomorphism R(e_k, e_l) in matrix form (row = upper index)
    d = len(names)
    R = [[None] * d for _ in range(d)]
    for k in range(d):
        R[k][k] = [[_PZ] * d for _ in range(d)]
    for k in range(d):
        for l in range(k + 1, d):
            prod_kl = _pm_mul(Gamma[k], Gamma[l], deg)
            prod_lk = _pm_mul(Gamma[l], Gamma[k], deg)
            mat = []
            for a in range(d):
                row = []
                for i in range(d):
                    p = (
                        Gamma[l][a][i].diff(names[k])
                        - Gamma[k][a][i].diff(names[l])
                        + prod_kl[a][i]
                        - prod_lk[a][i]
                    )
                    row.append(_truncate(p, deg))
                mat.append(row)
            R[k][l] = mat
            R[l][k] = [[-p for p in row] for row in mat]
    return R


def _cov_scalar_correction(Gamma, m, idx, deg, pick):
    # sum_b Gamma^b_{m idx} pick(b), accumulated entrywise
    d = len(Gamma)
    out = None
    for b in range(d):
        c = Gamma[m][b][idx]
        if c.is_zero():
            continue
        piece = pick(b)
        if out is None:
            out = [[_truncate(p * c, deg) for p in row] for row in piece]
        else:
            out = [
                [out[i][j] + _truncate(piece[i][j] * c, deg) for j in range(d)]
                for i in range(d)
            ]
    return out


def _endo_cov(mat, Gamma, m, names, deg):
    # derivative of the endomorphism slot: dT + [Gamma_m, T]
    d = len(mat)
    left = _pm_mul(Gamma[m], mat, deg)
    right = _pm_mul(mat, Gamma[m], deg)
    return [
        [
            _truncate(mat[i][j].diff(names[m]), deg) + left[i][j] - right[i][j]
            for j in range(d)
        ]
        for i in range(d)
    ]


def _cov_R(R, Gamma, names, deg):
    # DR[m][k][l] = (nabla_m R)(e_k, e_l) as an endomorphism matrix
    d = len(names)
    DR = [[[None] * d for _ in range(d)] for _ in range(d)]
    for m in range(d):
        for k in range(d):
            DR[m][k][k] = [[_PZ] * d for _ in range(d)]
        for k in range(d):
            for l in range(k + 1, d):
                mat = _endo_cov(R[k][l], Gamma, m, names, deg)
                for idx, pick in ((k, lambda b: R[b][l]), (l, lambda b: R[k][b])):
                    corr = _cov_scalar_correction(Gamma, m, idx, deg, pick)
                    if corr is not None:
                        mat = [
                            [mat[i][j] - corr[i][j] for j in range(d)]
                            for i in range(d)
                        ]
                DR[m][k][l] = mat
                DR[m][l][k] = [[-p for p in row] for row in mat]
    return DR


def _cov_DR(DR, Gamma, names, deg):
    d = len(names)
    DDR = [
        [[[None] * d for _ in range(d)] for _ in range(d)] for _ in range(d)
    ]
    for m2 in range(d):
        for m in range(d):
            for k in range(d):
                DDR[m2][m][k][k] = [[_PZ] * d for _ in range(d)]
            for k in range(d):
                for l in range(k + 1, d):
                    mat = _endo_cov(DR[m][k][l], Gamma, m2, names, deg)
                    picks = (
                        (m, lambda b: DR[b][k][l]),
                        (k, lambda b: DR[m][b][l]),
                        (l, lambda b: DR[m][k][b]),
                    )
                    for idx, pick in picks:
                        corr = _cov_scalar_correction(Gamma, m2, idx, deg, pick)
                        if corr is not None:
                            mat = [
                                [mat[i][j] - corr[i][j] for j in range(d)]
                                for i in range(d)
                            ]
                    DDR[m2][m][k][l] = mat
                    DDR[m2][m][l][k] = [[-p for p in row] for row in mat]
    return DDR


# -- point frames -------------------------------------------------------------


@dataclass(frozen=True)
class PointFrameData:
    """Exact values at one rational point.

    Gamma[k][a][i] is the Christoffel symbol with upper index a and lower
    pair (k, i); dGamma[l] holds its partial derivative in direction l.
    R[k][l] is the curvature endomorphism of the coordinate pair (k, l),
    antisymmetric in that pair, and DR[m][k][l] its first covariant
    derivative (None when not requested).
    """

    point: tuple
    g: tuple
    g_inv: tuple
    Gamma: tuple
    dGamma: tuple
    R: tuple
    DR: tuple = None

    @property
    def dim(self):
        return len(self.g)

    def ricci(self):
        # trace on the slots making ric(a, Ub) = (1/2) tr(U R(a,b)) come out
        # with a plus sign for parallel skew-adjoint U
        d = self.dim
        return tuple(
            tuple(
                sum((self.R[i][k][k][j] for k in range(d)), _F0)
                for j in range(d)
            )
            for i in range(d)
        )


def frame_at(germ, point, with_derivative=True):
    pt = _check_point(germ, point)
    K = 3 if with_derivative else 2
    names = germ.coordinates
    g = _recentred_metric(germ, pt, K)
    g_inv = _series_inverse(g, K - 1)
    Gamma = _christoffel_series(g, g_inv, names, K - 1)
    R = _curvature_series(Gamma, names, K - 2)
    d = len(names)
    gamma_vals = tuple(
        tuple(tuple(_value(Gamma[k][a][i]) for i in range(d)) for a in range(d))
        for k in range(d)
    )
    dgamma_vals = tuple(
        tuple(
            tuple(
                tuple(_value(Gamma[k][a][i].diff(names[l])) for i in range(d))
                for a in range(d)
            )
            for k in range(d)
        )
        for l in range(d)
    )
    r_vals = tuple(
        tuple(_mat_values(R[k][l]) for l in range(d)) for k in range(d)
    )
    dr_vals = None
    if with_derivative:
        DR = _cov_R(R, Gamma, names, 0)
        dr_vals = tuple(
            tuple(tuple(_mat_values(DR[m][k][l]) for l in range(d)) for k in range(d))
            for m in range(d)
        )
    return PointFrameData(
        point=pt,
        g=_mat_values(g),
        g_inv=_mat_values(g_inv),
        Gamma=gamma_vals,
        dGamma=dgamma_vals,
        R=r_vals,
        DR=dr_vals,
    )


def _gamma_values(germ, point):
    # light path used by the parallelism checks: values only
    names = germ.coordinates
    g = _recentred_metric(germ, point, 1)
    g_inv = _series_inverse(g, 0)
    Gamma = _christoffel_series(g, g_inv, names, 0)
    d = len(names)
    return [
        [[_value(Gamma[k][a][i]) for i in range(d)] for a in range(d)]
        for k in range(d)
    ]


# -- sample points ------------------------------------------------------------


def sample_points(dim, count, seed, box=3, max_den=4):
    """Deterministic rational points with small denominators in [-box, box]."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        pt = []
        for _ in range(dim):
            den = rng.randint(1, max_den)
            pt.append(Fraction(rng.randint(-box * den, box * den), den))
        out.append(tuple(pt))
    return out


def draw_regular_points(germ, count, seed, box=3, max_den=4):
    """Seeded point draw avoiding the degenerate locus of the germ."""
    rng = random.Random(seed)
    dim = len(germ.coordinates)
    out = []
    tries = 0
    while len(out) < count:
        if tries >= 40 * count:
            raise DegenerateAtPoint(
                "could not find %d regular points (seed %r)" % (count, seed)
            )
        tries += 1
        pt = []
        for _ in range(dim):
            den = rng.randint(1, max_den)
            pt.append(Fraction(rng.randint(-box * den, box * den), den))
        pt = tuple(pt)
        if det(germ.matrix_at(pt)) != 0:
            out.append(pt)
    return out


# -- parallelism --------------------------------------------------------------


def _structure_matrix(germ, structure):
    if isinstance(structure, str):
        structure = germ.structure(structure)
    return structure.name, [
        [Fraction(x) for x in row] for row in structure.matrix
    ]


def parallel_defect(germ, structure, points):
    """First failure of D S = 0, or None.

    The declared structures are constant in the forged coordinates, so the
    covariant derivative in direction k reduces to the commutator of
    Gamma_k with the structure matrix.
    """
    name, S = _structure_matrix(germ, structure)
    d = len(S)
    for p_idx, point in enumerate(points):
        pt = _check_point(germ, point)
        Gamma = _gamma_values(germ, pt)
        for k in range(d):
            for a in range(d):
                for i in range(d):
                    v = sum(
                        (Gamma[k][a][b] * S[b][i] - S[a][b] * Gamma[k][b][i]
                         for b in range(d)),
                        _F0,
                    )
                    if v != 0:
                        return {
                            "structure": name,
                            "point_index": p_idx,
                            "point": [frac_str(c) for c in pt],
                            "direction": k,
                            "entry": [a, i],
                            "value": frac_str(v),
                        }
    return None


def parallel_check(germ, structure, points):
    return parallel_defect(germ, structure, points) is None


# -- identity report ----------------------------------------------------------


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple
    points: tuple
    notes: tuple = ()

    @property
    def passed(self):
        return all(status == "pass" for _, status, _ in self.checks)

    def check(self, name):
        for nm, status, witness in self.checks:
            if nm == name:
                return status, witness
        raise KeyError(name)

    def to_json(self):
        return {
            "checks": [
                {"name": nm, "status": status, "witness": witness}
                for nm, status, witness in self.checks
            ],
            "points": [[frac_str(c) for c in pt] for pt in self.points],
            "notes": list(self.notes),
            "passed": self.passed,
        }


def _witness(p_idx, pt, indices, value):
    return {
        "point_index": p_idx,
        "point": [frac_str(c) for c in pt],
        "indices": list(indices),
        "value": frac_str(value),
    }


def _bianchi_witness(frames):
    for p_idx, fr in enumerate(frames):
        d = fr.dim
        for k in range(d):
            for l in range(k + 1, d):
                for i in range(d):
                    for a in range(d):
                        v = (
                            fr.R[k][l][a][i]
                            + fr.R[l][i][a][k]
                            + fr.R[i][k][a][l]
                        )
                        if v != 0:
                            return _witness(p_idx, fr.point, (k, l, i, a), v)
    return None


def _pair_symmetry_witness(frames):
    for p_idx, fr in enumerate(frames):
        d = fr.dim
        low = [
            [
                [
                    [
                        sum((fr.R[k][l][a][i] * fr.g[a][j] for a in range(d)), _F0)
                        for j in range(d)
                    ]
                    for i in range(d)
                ]
                for l in range(d)
            ]
            for k in range(d)
        ]
        for k in range(d):
            for l in range(d):
                for i in range(d):
                    for j in range(d):
                        v = low[k][l][i][j] - low[i][j][k][l]
                        if v != 0:
                            return _witness(p_idx, fr.point, (k, l, i, j), v)
    return None


def _mat_frac(rows):
    return [[Fraction(x) for x in row] for row in rows]


def _mm_frac(a, b):
    d = len(a)
    return [
        [sum((a[i][k] * b[k][j] for k in range(d)), _F0) for j in range(d)]
        for i in range(d)
    ]


def _is_nilpotent(mat):
    d = len(mat)
    power = mat
    for _ in range(d):
        if all(x == 0 for row in power for x in row):
            return True
        power = _mm_frac(power, mat)
    return all(x == 0 for row in power for x in row)


def identity_checks(germ, points):
    """Curvature identity report for one germ at the given sample points.

    Covers the declared-structure parallelism, the first Bianchi identity,
    the pair symmetry of the lowered tensor, and the Ricci consequences of
    each parallel structure. Every verdict is exact.
    """
    pts = [_check_point(germ, p) for p in points]
    checks = []
    for s in germ.structures:
        w = parallel_defect(germ, s, pts)
        checks.append(("D%s=0" % s.name, "pass" if w is None else "fail", w))
    frames = [frame_at(germ, p, with_derivative=False) for p in pts]
    d = len(germ.coordinates)

    w = _bianchi_witness(frames)
    checks.append(("bianchi-1", "pass" if w is None else "fail", w))
    w = _pair_symmetry_witness(frames)
    checks.append(("pair-symmetry", "pass" if w is None else "fail", w))

    mats = {s.name: _mat_frac(s.matrix) for s in germ.structures}
    selfadj = [s for s in germ.structures if s.adjoint == "self"]
    skewadj = [s for s in germ.structures if s.adjoint == "skew"]

    def over_frames(fn):
        for p_idx, fr in enumerate(frames):
            w = fn(p_idx, fr)
            if w is not None:
                return w
        return None

    for U in selfadj:
        MU = mats[U.name]
        for V in germ.structures:
            if V.name == U.name:
                continue
            MV = mats[V.name]
            comm = [
                [
                    sum(
                        (MU[i][k] * MV[k][j] - MV[i][k] * MU[k][j]
                         for k in range(d)),
                        _F0,
                    )
                    for j in range(d)
                ]
                for i in range(d)
            ]

            def chk(p_idx, fr, comm=comm):
                for k in range(d):
                    for l in range(k + 1, d):
                        for a in range(d):
                            for j in range(d):
                                v = sum(
                                    (fr.R[k][l][a][b] * comm[b][j]
                                     for b in range(d)),
                                    _F0,
                                )
                                if v != 0:
                                    return _witness(
                                        p_idx, fr.point, (k, l, a, j), v
                                    )
                return None

            w = over_frames(chk)
            checks.append(
                (
                    "R(x,y)[%s,%s]=0" % (U.name, V.name),
                    "pass" if w is None else "fail",
                    w,
                )
            )

        def chk_sym(p_idx, fr, MU=MU):
            ric = fr.ricci()
            for i in range(d):
                for j in range(d):
                    lhs = sum((ric[i][b] * MU[b][j] for b in range(d)), _F0)
                    rhs = sum((MU[b][i] * ric[b][j] for b in range(d)), _F0)
                    if lhs != rhs:
                        return _witness(p_idx, fr.point, (i, j), lhs - rhs)
            return None

        w = over_frames(chk_sym)
        checks.append(
            ("ric%s-symmetric" % U.name, "pass" if w is None else "fail", w)
        )

        if _is_nilpotent(MU):

            def chk_ker(p_idx, fr, MU=MU):
                ric = fr.ricci()
                for i in range(d):
                    for j in range(d):
                        v = sum((ric[i][b] * MU[b][j] for b in range(d)), _F0)
                        if v != 0:
                            return _witness(p_idx, fr.point, (i, j), v)
                return None

            w = over_frames(chk_ker)
            checks.append(
                (
                    "Im%s<=ker(ric)" % U.name,
                    "pass" if w is None else "fail",
                    w,
                )
            )

    for U in skewadj:
        MU = mats[U.name]

        def chk_half(p_idx, fr, MU=MU):
            ric = fr.ricci()
            half = Fraction(1, 2)
            for a in range(d):
                for b in range(d):
                    lhs = sum((ric[a][c] * MU[c][b] for c in range(d)), _F0)
                    tr = sum(
                        (
                            MU[c][e] * fr.R[a][b][e][c]
                            for c in range(d)
                            for e in range(d)
                        ),
                        _F0,
                    )
                    if lhs != half * tr:
                        return _witness(
                            p_idx, fr.point, (a, b), lhs - half * tr
                        )
            return None

        w = over_frames(chk_half)
        checks.append(
            ("ric%s=half-trace" % U.name, "pass" if w is None else "fail", w)
        )

    pair = _anticommuting_invertible_pair(germ, mats)
    if pair is not None:

        def chk_flat(p_idx, fr):
            ric = fr.ricci()
            for i in range(d):
                for j in range(d):
                    if ric[i][j] != 0:
                        return _witness(p_idx, fr.point, (i, j), ric[i][j])
            return None

        w = over_frames(chk_flat)
        checks.append(
            (
                "ric=0[%s,%s]" % pair,
                "pass" if w is None else "fail",
                w,
            )
        )

    degree = max(
        (p.degree() for row in germ.sym_matrix for p in row), default=0
    )
    notes = (
        "metric entry degree <= %d" % degree,
        "identities checked at %d rational points" % len(pts),
        "holonomy derivatives truncated at order <= 2 by design",
    )
    return VerificationReport(tuple(checks), tuple(pts), notes)


def _anticommuting_invertible_pair(germ, mats):
    names = [s.name for s in germ.structures]
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            A, B = mats[names[i]], mats[names[j]]
            anti = _mm_frac(A, B)
            BA = _mm_frac(B, A)
            d = len(A)
            if all(
                anti[r][c] == -BA[r][c] for r in range(d) for c in range(d)
            ):
                if det(A) != 0 and det(B) != 0:
                    return names[i], names[j]
    return None


# -- holonomy span ------------------------------------------------------------


def holonomy_span(germ, point, order=1):
    """Rank of the curvature span at one point, derivatives up to `order`.

    The span is truncated at covariant-derivative order 2 by design; the
    full holonomy algebra of an analytic germ may need higher orders, so
    the reported dimension is a lower bound certified exactly.
    """
    if order not in (0, 1, 2):
        raise ValueError("derivative order must be 0, 1 or 2")
    pt = _check_point(germ, point)
    names = germ.coordinates
    d = len(names)
    K = 2 + order
    g = _recentred_metric(germ, pt, K)
    g_inv = _series_inverse(g, K - 1)
    Gamma = _christoffel_series(g, g_inv, names, K - 1)
    R = _curvature_series(Gamma, names, K - 2)
    endos = []
    for k in range(d):
        for l in range(k + 1, d):
            endos.append(_mat_values(R[k][l]))
    if order >= 1:
        DR = _cov_R(R, Gamma, names, K - 3)
        for m in range(d):
            for k in range(d):
                for l in range(k + 1, d):
                    endos.append(_mat_values(DR[m][k][l]))
    if order >= 2:
        DDR = _cov_DR(DR, Gamma, names, K - 4)
        for m2 in range(d):
            for m in range(d):
                for k in range(d):
                    for l in range(k + 1, d):
                        endos.append(_mat_values(DDR[m2][m][k][l]))
    rows = [
        [e[i][j] for i in range(d) for j in range(d)]
        for e in endos
        if any(x != 0 for row in e for x in row)
    ]
    dim = rank(rows) if rows else 0
    g0 = [[Fraction(x) for x in row] for row in germ.matrix_at(pt)]
    basis = solve_commutant(g0, [s.matrix for s in germ.structures])
    crows = [
        [m.tolists()[i][j] for i in range(d) for j in range(d)] for m in basis
    ]
    if not rows:
        contained = True
    elif not crows:
        contained = False
    else:
        contained = rank(crows + rows) == rank(crows)
    return {"dim": dim, "contained_in_commutant": contained}


# -- Cartan characters --------------------------------------------------------
#
# The base machine lives on C^{2 delta} x {matrix manifold}: unknown matrix
# W = X + iY constrained by tW = conj(W) and the tangency relation at the
# chosen base matrix. The flag is tilted in its middle third so that the
# polar ranks grow one by one; every count is a rank over Q.


def _cartan_base_matrix(delta, eps):
    m = 2 * delta
    if eps == -1:
        return [[_F1 if i == j else _F0 for j in range(m)] for i in range(m)]
    return [
        [
            (_F1 if i < delta else -_F1) if i == j else _F0
            for j in range(m)
        ]
        for i in range(m)
    ]


def _cartan_w_basis(delta, eps):
    m = 2 * delta
    H0 = _cartan_base_matrix(delta, eps)
    Omega = [[_F0] * m for _ in range(m)]
    for i in range(delta):
        Omega[i][delta + i] = _F1
        Omega[delta + i][i] = -_F1
    n_u = 2 * m * m  # X then Y, row-major
    rows = []

    def xi(i, j):
        return i * m + j

    def yi(i, j):
        return m * m + i * m + j

    # tW = conj(W): X symmetric, Y antisymmetric
    for i in range(m):
        for j in range(i, m):
            if i != j:
                row = [_F0] * n_u
                row[xi(i, j)] = _F1
                row[xi(j, i)] = -_F1
                rows.append(row)
            row = [_F0] * n_u
            row[yi(i, j)] = _F1
            row[yi(j, i)] = row[yi(j, i)] + _F1
            rows.append(row)
    # conj(W) Omega H0 + conj(H0) Omega W = 0, split into real and imaginary
    A = _mm_frac(Omega, H0)
    B = _mm_frac(H0, Omega)  # H0 is real here
    for i in range(m):
        for j in range(m):
            re_row = [_F0] * n_u
            im_row = [_F0] * n_u
            for k in range(m):
                re_row[xi(i, k)] = re_row[xi(i, k)] + A[k][j]
                im_row[yi(i, k)] = im_row[yi(i, k)] - A[k][j]
                re_row[xi(k, j)] = re_row[xi(k, j)] + B[i][k]
                im_row[yi(k, j)] = im_row[yi(k, j)] + B[i][k]
            rows.append(re_row)
            rows.append(im_row)
    basis = []
    for v in nullspace(rows):
        mat = [
            [CRat(v[xi(i, j)], v[yi(i, j)]) for j in range(m)]
            for i in range(m)
        ]
        basis.append(mat)
    expected = 2 * delta * delta + delta
    if len(basis) != expected:
        raise VerifyError(
            "tangent space dimension %d, expected %d" % (len(basis), expected)
        )
    return basis


def _flag_vectors(delta):
    # The flag must be generic enough that the polar ranks climb one per
    # level through level 2*delta+1: the real directions get distinct
    # imaginary tilts, and the first imaginary direction is a weighted mix
    # so its polar pairs reach every matrix entry at once.
    m = 2 * delta
    iu = CRat(_F0, _F1)
    zero = CRat(_F0, _F0)
    one = CRat(_F1, _F0)

    def unit(j, scalar=one):
        return tuple(scalar if t == j else zero for t in range(m))

    out = []
    for j in range(delta):
        out.append(unit(j))
    for j in range(delta):
        tilt = CRat(_F1, Fraction(j, delta))
        out.append(unit(delta + j, tilt))
    out.append(tuple(iu * CRat(Fraction(t + 1), _F0) for t in range(m)))
    for j in range(1, m):
        out.append(unit(j, iu))
    return out


def _contract_im(u, B, v):
    # Im( tu . B . conj(v) )
    m = len(u)
    tot = CRat(_F0, _F0)
    for p in range(m):
        if u[p].is_zero():
            continue
        for q in range(m):
            if v[q].is_zero():
                continue
            tot = tot + u[p] * B[p][q] * v[q].conj()
    return tot.im


def _characters(delta, basis):
    flags = _flag_vectors(delta)
    rows = []
    s = []
    prev = 0
    for k in range(len(flags)):
        for i in range(k):
            rows.append([_contract_im(flags[i], B, flags[k]) for B in basis])
        rk = rank(rows) if rows else 0
        s.append(rk - prev)
        prev = rk
    return s


def _closure_rows(delta, basis):
    m = 2 * delta
    nb = len(basis)
    nparams = 4 * delta * nb
    iu = CRat(_F0, _F1)
    one = CRat(_F1, _F0)
    zero = CRat(_F0, _F0)

    def xi(r):
        # real coordinate index r -> complex vector
        if r < m:
            return tuple(one if t == r else zero for t in range(m))
        return tuple(iu if t == r - m else zero for t in range(m))

    def lam_row(u, v, w):
        xu, xv, xw = xi(u), xi(v), xi(w)
        row = [_F0] * nparams
        for r, B in enumerate(basis):
            row[v * nb + r] = row[v * nb + r] + _contract_im(xu, B, xw)
            row[w * nb + r] = row[w * nb + r] + _contract_im(xv, B, xu)
            row[u * nb + r] = row[u * nb + r] + _contract_im(xw, B, xv)
        return row

    members = list(range(delta)) + [m + t for t in range(delta)]

    def prime(r):
        return r + delta

    a_rows = []
    for x in range(len(members)):
        for y in range(x + 1, len(members)):
            for z in range(y + 1, len(members)):
                trip = (members[x], members[y], members[z])
                for bits in range(8):
                    args = tuple(
                        prime(t) if (bits >> pos) & 1 else t
                        for pos, t in enumerate(trip)
                    )
                    a_rows.append(lam_row(*args))
    b_rows = []
    for x in range(len(members)):
        for y in range(x + 1, len(members)):
            p, q = members[x], members[y]
            b_rows.append(lam_row(p, prime(p), q))
            b_rows.append(lam_row(p, prime(p), prime(q)))
            b_rows.append(lam_row(q, prime(q), p))
            b_rows.append(lam_row(q, prime(q), prime(p)))
    return a_rows, b_rows, nparams


def _base_cartan(delta, eps):
    basis = _cartan_w_basis(delta, eps)
    s = _characters(delta, basis)
    a_rows, b_rows, nparams = _closure_rows(delta, basis)
    rank_b = rank(b_rows) if b_rows else 0
    total = rank(b_rows + a_rows) if (a_rows or b_rows) else 0
    # redundancy of the triple equations: once the pair equations are in
    # force, the triples contribute at most half of their raw count
    if total - rank_b > 4 * comb(2 * delta, 3):
        raise VerifyError("closedness equations exceed the redundancy bound")
    dimV = nparams - total
    bound = sum((k + 1) * sk for k, sk in enumerate(s))
    return {"s": s, "dimV": dimV, "bound": bound, "ordinary": dimV == bound}


def _layer_delta(shape, a):
    floor = shape.n - 1 - a
    return sum(
        (b - floor) * db for b, db in enumerate(shape.d, 1) if b > floor
    )


def cartan_character_test(delta, epsilon, shape=None):
    """Characters, integral-variety dimension, and ordinarity.

    Without a shape this is the flat test on the matrix manifold for the
    invertible anti-commuting structure; with a shape it runs once per
    nu-layer on the corresponding quotient, where the layer equation
    reduces to the flat system of smaller size.
    """
    if epsilon not in (-1, 1, "complex"):
        raise ValueError("epsilon must be -1, 1 or 'complex'")
    # complexifying turns real parameters into complex ones inside the same
    # rational equations, so every rank (hence every count) is unchanged
    eps = -1 if epsilon == "complex" else epsilon
    if delta < 1:
        raise ValueError("delta must be positive")
    if delta > 3:
        raise TooLarge("delta > 3 is not tractable here")
    if shape is None:
        return _base_cartan(delta, eps)
    if shape.delta != 4:
        raise ValueError("layered test expects a quaternionic-type shape")
    total = sum((b + 1) * db for b, db in enumerate(shape.d))
    if total != delta:
        raise ValueError(
            "shape totals delta=%d, got delta=%d" % (total, delta)
        )
    layers = []
    s_lists = []
    dimV = 0
    bound = 0
    ordinary = True
    for a in range(shape.n):
        dla = _layer_delta(shape, a)
        sub = _base_cartan(dla, eps)
        layers.append({"nu_power": a, "delta": dla, **sub})
        s_lists.append(sub["s"])
        dimV += sub["dimV"]
        bound += sub["bound"]
        ordinary = ordinary and sub["ordinary"]
    return {
        "s": s_lists,
        "dimV": dimV,
        "bound": bound,
        "ordinary": ordinary,
        "layers": layers,
    }
