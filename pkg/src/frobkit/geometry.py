"""Contravariant-metric calculus.

Metrics are rank x rank symmetric matrices of exact rational expressions;
entries may depend on extra inert parameters (e.g. the pencil variable), so an
entry's variable count can exceed the rank.  All derivatives run over the
first `rank` slots only.  Inversion is by adjugate and determinant, flatness
is the vanishing of the full Riemann tensor of the covariant inverse, and a
pencil is checked identically in a symbolic parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .expr import Expr, RatExpr

Matrix = tuple[tuple[RatExpr, ...], ...]
VectorField = tuple[RatExpr, ...]


class SingularMetricError(ValueError):
    """The metric (or pencil) has identically vanishing determinant."""


class MapError(ValueError):
    """A coordinate map failed its round-trip identity check."""


# -- matrix helpers -----------------------------------------------------------


def mat(rows) -> Matrix:
    return tuple(tuple(RatExpr.lift(x) for x in row) for row in rows)


def mat_from_exprs(rows) -> Matrix:
    return tuple(tuple(RatExpr(x) if isinstance(x, Expr) else RatExpr.lift(x) for x in row)
                 for row in rows)


def zero_matrix(n: int, nvars: int) -> Matrix:
    z = RatExpr(Expr.zero(nvars))
    return tuple(tuple(z for _ in range(n)) for _ in range(n))


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_scale(a: Matrix, s) -> Matrix:
    return tuple(tuple(x * s for x in row) for row in a)


def mat_map(a: Matrix, f: Callable[[RatExpr], RatExpr]) -> Matrix:
    return tuple(tuple(f(x) for x in row) for row in a)


def mat_eq(a: Matrix, b: Matrix) -> bool:
    return all(x == y for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def mat_is_zero(a: Matrix) -> bool:
    return all(x.is_zero for row in a for x in row)


def mat_is_symmetric(a: Matrix) -> bool:
    n = len(a)
    return all(a[i][j] == a[j][i] for i in range(n) for j in range(i + 1, n))


def determinant(a: Matrix) -> RatExpr:
    n = len(a)
    if n == 1:
        return a[0][0]
    if n == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    total = None
    for j in range(n):
        if a[0][j].is_zero:
            continue
        minor = tuple(row[:j] + row[j + 1:] for row in a[1:])
        term = a[0][j] * determinant(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    if total is None:
        nv = a[0][0].nvars
        return RatExpr(Expr.zero(nv))
    return total


def adjugate(a: Matrix) -> Matrix:
    n = len(a)
    if n == 1:
        return ((RatExpr(Expr.const(a[0][0].nvars, 1)),),)
    cof = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = tuple(
                tuple(a[r][c] for c in range(n) if c != j) for r in range(n) if r != i
            )
            m = determinant(minor)
            cof[i][j] = -m if (i + j) % 2 else m
    # adjugate = transpose of the cofactor matrix
    return tuple(tuple(cof[j][i] for j in range(n)) for i in range(n))


# -- metrics -------------------------------------------------------------------


class ContraMetric:
    """Symmetric contravariant metric with cached inverse and connection."""

    def __init__(self, entries, rank: int | None = None):
        self.entries: Matrix = mat_from_exprs(entries)
        self.rank = rank if rank is not None else len(self.entries)
        if len(self.entries) != self.rank or any(len(r) != self.rank for r in self.entries):
            raise ValueError("metric matrix must be rank x rank")
        if not mat_is_symmetric(self.entries):
            raise ValueError("metric matrix must be symmetric")
        self.nvars = self.entries[0][0].nvars
        self._det: RatExpr | None = None
        self._cov: Matrix | None = None
        self._lc = None
        self._contra_gamma = None

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def det(self) -> RatExpr:
        if self._det is None:
            self._det = determinant(self.entries)
        return self._det

    def covariant(self) -> Matrix:
        """Inverse matrix (the covariant metric), adjugate over determinant."""
        if self._cov is None:
            d = self.det()
            if d.is_zero:
                raise SingularMetricError("metric determinant vanishes identically")
            self._cov = mat_map(adjugate(self.entries), lambda x: x / d)
        return self._cov

    def levi_civita(self):
        """Christoffel symbols G^j_{mk} of the covariant inverse metric."""
        if self._lc is not None:
            return self._lc
        g = self.covariant()
        n, nv = self.rank, self.nvars
        dg = [[[g[l][k].derive(m) for k in range(n)] for l in range(n)] for m in range(n)]
        half = Fraction(1, 2)
        gamma = [[[None] * n for _ in range(n)] for _ in range(n)]
        for j in range(n):
            for m in range(n):
                for k in range(m, n):
                    total = RatExpr(Expr.zero(nv))
                    for l in range(n):
                        if self.entries[j][l].is_zero:
                            continue
                        total = total + self.entries[j][l] * (
                            dg[m][l][k] + dg[k][l][m] - dg[l][m][k]
                        )
                    total = total * half
                    gamma[j][m][k] = total
                    gamma[j][k][m] = total
        self._lc = tuple(tuple(tuple(r) for r in plane) for plane in gamma)
        return self._lc

    def christoffels(self) -> "Christoffel":
        """Contravariant symbols G^{ij}_k = -Omega^{im} G^j_{mk}."""
        if self._contra_gamma is None:
            lc = self.levi_civita()
            n, nv = self.rank, self.nvars
            out = []
            for i in range(n):
                plane = []
                for j in range(n):
                    row = []
                    for k in range(n):
                        total = RatExpr(Expr.zero(nv))
                        for m in range(n):
                            if self.entries[i][m].is_zero:
                                continue
                            total = total + self.entries[i][m] * lc[j][m][k]
                        row.append(-total)
                    plane.append(tuple(row))
                out.append(tuple(plane))
            self._contra_gamma = Christoffel(tuple(out), self.rank)
        return self._contra_gamma

    def extend(self, extra: int = 1) -> "ContraMetric":
        return ContraMetric(mat_map(self.entries, lambda x: x.extend(extra)), self.rank)

    def __eq__(self, other):
        if isinstance(other, ContraMetric):
            other = other.entries
        return mat_eq(self.entries, other)

    __hash__ = None

    def render(self, names) -> str:
        rows = [", ".join(x.render(names) for x in row) for row in self.entries]
        return "[" + "; ".join(rows) + "]"


@dataclass(frozen=True)
class Christoffel:
    """Contravariant Christoffel symbols, indexed gamma[i][j][k] = G^{ij}_k."""

    gamma: tuple
    rank: int

    def __getitem__(self, ijk):
        i, j, k = ijk
        return self.gamma[i][j][k]

    def compatible_with(self, metric: ContraMetric) -> bool:
        """Omega^{is} G^{jk}_s symmetric in (i, j) for all k."""
        n = len(self.gamma)
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(n):
                    lhs = _sum(metric.entries[i][s] * self.gamma[j][k][s] for s in range(n))
                    rhs = _sum(metric.entries[j][s] * self.gamma[i][k][s] for s in range(n))
                    if not (lhs - rhs).is_zero:
                        return False
        return True


def _sum(items):
    total = None
    for x in items:
        total = x if total is None else total + x
    return total


def christoffels(metric: ContraMetric) -> Christoffel:
    return metric.christoffels()


def _expr_entries(entries: Matrix):
    """Entries as plain expressions when every denominator is 1, else None."""
    out = []
    for row in entries:
        erow = []
        for x in row:
            e = x.as_expr()
            if e is None:
                return None
            erow.append(e)
        out.append(erow)
    return out


def _expr_det(m) -> Expr:
    n = len(m)
    if n == 1:
        return m[0][0]
    total = Expr.zero(m[0][0].nvars)
    for j in range(n):
        if m[0][j].is_zero:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * _expr_det(minor)
        total = total - term if j % 2 else total + term
    return total


def _cleared_connection(metric: ContraMetric):
    """(N, det) with Levi-Civita symbols G^j_{mk} = N[j][m][k] / det^2,
    available when all metric entries are polynomial."""
    E = _expr_entries(metric.entries)
    if E is None:
        return None
    n, nv = metric.rank, metric.nvars
    det = _expr_det(E)
    if det.is_zero:
        raise SingularMetricError("metric determinant vanishes identically")
    adj = []
    for i in range(n):
        row = []
        for j in range(n):
            minor = [[E[r][c] for c in range(n) if c != i] for r in range(n) if r != j]
            m = _expr_det(minor) if n > 1 else Expr.const(nv, 1)
            row.append(-m if (i + j) % 2 else m)
        adj.append(row)
    ddet = [det.derive(m) for m in range(n)]
    # numerator of d_m g_{lk} over det^2
    dg = [[[adj[l][k].derive(m) * det - adj[l][k] * ddet[m] for k in range(n)]
           for l in range(n)] for m in range(n)]
    half = Fraction(1, 2)
    N = [[[None] * n for _ in range(n)] for _ in range(n)]
    for j in range(n):
        for m in range(n):
            for k in range(m, n):
                total = Expr.zero(nv)
                for l in range(n):
                    if E[j][l].is_zero:
                        continue
                    total = total + E[j][l] * (dg[m][l][k] + dg[k][l][m] - dg[l][m][k])
                total = total * half
                N[j][m][k] = total
                N[j][k][m] = total
    return N, det


def riemann_components(metric: ContraMetric) -> list:
    """All independent components R^l_{ijk} (i < j) of the covariant inverse.

    Zero components come back as exact zero rational expressions; nonzero ones
    carry their honest value (cleared numerator over det^4 where applicable).
    """
    n = metric.rank
    cleared = _cleared_connection(metric)
    if cleared is not None:
        N, det = cleared
        dN = [[[[N[l][j][k].derive(i) for k in range(n)] for j in range(n)]
               for l in range(n)] for i in range(n)]
        ddet = [det.derive(i) for i in range(n)]
        det4 = None
        comps = []
        for l in range(n):
            for i in range(n):
                for j in range(i + 1, n):
                    for k in range(n):
                        first = (dN[i][l][j][k] - dN[j][l][i][k]) * det - (
                            N[l][j][k] * ddet[i] - N[l][i][k] * ddet[j]
                        ) * 2
                        r = first * det
                        for s in range(n):
                            r = r + N[l][i][s] * N[s][j][k] - N[l][j][s] * N[s][i][k]
                        if r.is_zero:
                            comps.append(RatExpr(Expr.zero(metric.nvars)))
                        else:
                            if det4 is None:
                                det2 = det * det
                                det4 = det2 * det2
                            comps.append(RatExpr(r, det4))
        return comps
    lc = metric.levi_civita()
    dlc = [[[[lc[l][j][k].derive(i) for k in range(n)] for j in range(n)] for l in range(n)]
           for i in range(n)]
    comps = []
    for l in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(n):
                    r = dlc[i][l][j][k] - dlc[j][l][i][k]
                    for s in range(n):
                        r = r + lc[l][i][s] * lc[s][j][k] - lc[l][j][s] * lc[s][i][k]
                    comps.append(r)
    return comps


def is_flat(metric: ContraMetric) -> bool:
    return all(r.is_zero for r in riemann_components(metric))


def lie_metric(omega, X: Sequence[RatExpr], rank: int | None = None) -> Matrix:
    """delta'-coefficient of Lie_X applied to the bracket of omega:

    (Lie_X Omega)^{ij} = X^s d_s Omega^{ij} - Omega^{sj} d_s X^i - Omega^{is} d_s X^j
    """
    entries = omega.entries if isinstance(omega, ContraMetric) else mat(omega)
    n = rank if rank is not None else (omega.rank if isinstance(omega, ContraMetric) else len(entries))
    X = [RatExpr.lift(x) for x in X]
    dX = [[X[i].derive(s) for i in range(n)] for s in range(n)]
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            t = _sum(X[s] * entries[i][j].derive(s) for s in range(n))
            t = t - _sum(entries[s][j] * dX[s][i] for s in range(n))
            t = t - _sum(entries[i][s] * dX[s][j] for s in range(n))
            row.append(t)
        out.append(tuple(row))
    return tuple(out)


def lie_pbht(omega, gamma, X: Sequence[RatExpr], rank: int | None = None):
    """Both coefficient families of the Lie derivative of a hydrodynamic bracket.

    Returns (delta'-part, delta-part): the metric part as in lie_metric and

    X^s d_s G^{ij}_k - G^{sj}_k d_s X^i - G^{is}_k d_s X^j + G^{ij}_s d_k X^s
      - Omega^{is} d_s d_k X^j.
    """
    entries = omega.entries if isinstance(omega, ContraMetric) else mat(omega)
    g = gamma.gamma if isinstance(gamma, Christoffel) else gamma
    n = rank if rank is not None else len(entries)
    X = [RatExpr.lift(x) for x in X]
    dX = [[X[i].derive(s) for i in range(n)] for s in range(n)]
    ddX = [[[dX[s][i].derive(k) for i in range(n)] for s in range(n)] for k in range(n)]
    metric_part = lie_metric(entries, X, n)
    out = []
    for i in range(n):
        plane = []
        for j in range(n):
            row = []
            for k in range(n):
                t = _sum(X[s] * g[i][j][k].derive(s) for s in range(n))
                t = t - _sum(g[s][j][k] * dX[s][i] for s in range(n))
                t = t - _sum(g[i][s][k] * dX[s][j] for s in range(n))
                t = t + _sum(g[i][j][s] * dX[k][s] for s in range(n))
                t = t - _sum(entries[i][s] * ddX[k][s][j] for s in range(n))
                row.append(t)
            plane.append(tuple(row))
        out.append(tuple(plane))
    return metric_part, tuple(out)


@dataclass
class PencilReport:
    flat: bool
    additive: bool
    witness: str = ""
    residuals: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.flat and self.additive


def pencil_check(omega2: ContraMetric, omega1: ContraMetric) -> PencilReport:
    """Flatness of omega2 + lam*omega1 and additivity of its Christoffels,
    identically in the symbolic pencil parameter lam."""
    if omega2.rank != omega1.rank:
        raise ValueError("pencil of metrics with different ranks")
    extra2 = omega2.nvars - omega2.rank
    extra1 = omega1.nvars - omega1.rank
    if extra2 or extra1:
        raise ValueError("pencil metrics should not already carry parameters")
    n = omega2.rank
    m2 = omega2.extend(1)
    m1 = omega1.extend(1)
    lam = RatExpr(Expr.var(omega2.nvars + 1, omega2.nvars))
    pencil_entries = mat_add(m2.entries, mat_scale(m1.entries, lam))
    pencil = ContraMetric(pencil_entries, n)
    if pencil.det().is_zero:
        raise SingularMetricError("pencil determinant vanishes identically in the parameter")

    residuals = []
    witness = ""
    comps = riemann_components(pencil)
    flat = True
    for r in comps:
        residuals.append(r)
        if flat and not r.is_zero:
            flat = False
            witness = "pencil curvature does not vanish"

    gp = pencil.christoffels()
    g2 = m2.christoffels()
    g1 = m1.christoffels()
    additive = True
    for i in range(n):
        for j in range(n):
            for k in range(n):
                combined = g2[i, j, k] + lam * g1[i, j, k]
                diff = gp[i, j, k] - combined
                residuals.append(diff)
                residuals.append((gp[i, j, k], combined))
                if additive and not diff.is_zero:
                    additive = False
                    witness = f"pencil Christoffel symbol ({i+1},{j+1},{k+1}) is not additive"
    return PencilReport(flat, additive, witness, residuals)


def gradient(tau, metric: ContraMetric) -> VectorField:
    """Vector field Omega^{ij} d_j tau."""
    t = RatExpr.lift(tau) if not isinstance(tau, RatExpr) else tau
    dt = [t.derive(j) for j in range(metric.rank)]
    return tuple(
        _sum(metric.entries[i][j] * dt[j] for j in range(metric.rank))
        for i in range(metric.rank)
    )


# -- coordinate maps -----------------------------------------------------------


class CoordinateMap:
    """Invertible chart change with explicit forward and inverse expressions.

    forward[i] gives the i-th target coordinate as an expression in the source
    chart; inverse[i] the i-th source coordinate in the target chart.  Both
    compositions are verified symbolically at construction.
    """

    def __init__(self, source_names, target_names, forward, inverse):
        self.source_names = tuple(source_names)
        self.target_names = tuple(target_names)
        self.forward = tuple(forward)
        self.inverse = tuple(inverse)
        self.rank = len(self.forward)
        if not (len(self.inverse) == len(self.source_names) == len(self.target_names) == self.rank):
            raise MapError("coordinate map pieces have inconsistent lengths")
        inv_images = dict(enumerate(self.inverse))
        fwd_images = dict(enumerate(self.forward))
        for i in range(self.rank):
            if self.forward[i].substitute(inv_images) != Expr.var(self.rank, i):
                raise MapError(
                    f"forward o inverse is not the identity on {self.target_names[i]}"
                )
            if self.inverse[i].substitute(fwd_images) != Expr.var(self.rank, i):
                raise MapError(
                    f"inverse o forward is not the identity on {self.source_names[i]}"
                )
        self.jacobian = tuple(
            tuple(self.forward[i].derive(j) for j in range(self.rank))
            for i in range(self.rank)
        )

    @classmethod
    def identity(cls, names) -> "CoordinateMap":
        n = len(names)
        xs = [Expr.var(n, i) for i in range(n)]
        return cls(names, names, xs, xs)

    def inverted(self) -> "CoordinateMap":
        return CoordinateMap(self.target_names, self.source_names, self.inverse, self.forward)

    def __repr__(self):
        pairs = ", ".join(
            f"{t} = {f.render(self.source_names)}"
            for t, f in zip(self.target_names, self.forward)
        )
        return f"<CoordinateMap {pairs}>"


def pushforward_scalar(f, cmap: CoordinateMap):
    images = dict(enumerate(cmap.inverse))
    if isinstance(f, RatExpr):
        return f.substitute(images)
    return f.substitute(images)


def pushforward_vector(X: Sequence[RatExpr], cmap: CoordinateMap) -> VectorField:
    n = cmap.rank
    X = [RatExpr.lift(x) for x in X]
    J = [[RatExpr(e) for e in row] for row in cmap.jacobian]
    images = dict(enumerate(cmap.inverse))
    out = []
    for i in range(n):
        t = _sum(J[i][a] * X[a] for a in range(n))
        out.append(t.substitute(images))
    return tuple(out)


def pushforward_metric(omega: ContraMetric, cmap: CoordinateMap) -> ContraMetric:
    n = omega.rank
    J = [[RatExpr(e) for e in row] for row in cmap.jacobian]
    images = dict(enumerate(cmap.inverse))
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            t = _sum(
                J[i][a] * J[j][b] * omega.entries[a][b]
                for a in range(n)
                for b in range(n)
                if not omega.entries[a][b].is_zero and not (J[i][a].is_zero or J[j][b].is_zero)
            )
            if t is None:
                t = RatExpr(Expr.zero(omega.nvars))
            row.append(t.substitute(images))
        rows.append(tuple(row))
    return ContraMetric(tuple(rows), n)


def pushforward(obj, cmap: CoordinateMap):
    if isinstance(obj, ContraMetric):
        return pushforward_metric(obj, cmap)
    if isinstance(obj, (Expr, RatExpr)):
        return pushforward_scalar(obj, cmap)
    if isinstance(obj, (tuple, list)):
        return pushforward_vector(obj, cmap)
    raise TypeError(f"cannot push forward {type(obj).__name__}")
