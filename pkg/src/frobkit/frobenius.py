"""Frobenius-manifold data attached to a WDVV potential.

Builds the flat metric from third derivatives, checks associativity and
quasihomogeneity, assembles the quasihomogeneous flat pencil (intersection
form and flat metric with the distinguished function tau), and reports
regularity and degree duality.  Checks never abort on a near-miss; each one
returns a structured result so diagnostics survive in reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .expr import Expr, Monomial, RatExpr, format_expr, parse_expr
from .geometry import (
    Christoffel,
    ContraMetric,
    christoffels,
    determinant,
    gradient,
    lie_metric,
    mat_sub,
    pencil_check,
)


class SpecError(ValueError):
    """Invalid Frobenius structure data."""


@dataclass
class CheckResult:
    """Outcome of one verification step.

    ok is None when the check does not apply; residuals collects the exact
    quantities asserted to vanish, for later re-validation by sampling.
    """

    name: str
    ok: bool | None
    witness: str = ""
    residuals: list = field(default_factory=list, repr=False)

    @property
    def status(self) -> str:
        if self.ok is None:
            return "inapplicable"
        return "pass" if self.ok else "fail"


def antidiagonal(rank: int) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(
        tuple(Fraction(1) if i + j == rank - 1 else Fraction(0) for j in range(rank))
        for i in range(rank)
    )


def _const_matrix_inverse(m: Sequence[Sequence[Fraction]]) -> tuple[tuple[Fraction, ...], ...]:
    n = len(m)
    a = [[Fraction(m[i][j]) for j in range(n)] + [Fraction(1 if i == j else 0) for j in range(n)]
         for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col]), None)
        if pivot is None:
            raise SpecError("flat metric matrix is singular")
        a[col], a[pivot] = a[pivot], a[col]
        inv = Fraction(1) / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return tuple(tuple(row[n:]) for row in a)


@dataclass(frozen=True)
class FrobeniusSpec:
    """A potential together with its scaling data in flat coordinates.

    The Euler field is affine diagonal, E^i = d_i t^i + b^i; degrees satisfy
    d_r = 1 and d_1 = 1 - charge.  The covariant flat metric defaults to the
    antidiagonal one, which is the normalization every transform here assumes.
    """

    rank: int
    charge: Fraction
    degrees: tuple[Fraction, ...]
    potential: Expr
    variables: tuple[str, ...]
    euler_consts: tuple[Fraction, ...] = ()
    metric: tuple[tuple[Fraction, ...], ...] | None = None
    name: str = ""

    def __post_init__(self):
        if self.rank < 2:
            raise SpecError("rank must be at least 2")
        if len(self.variables) != self.rank or len(set(self.variables)) != self.rank:
            raise SpecError("need rank distinct variable names")
        if len(self.degrees) != self.rank:
            raise SpecError("need one degree per variable")
        if self.degrees[-1] != 1:
            raise SpecError("the last degree must equal 1")
        if self.degrees[0] != 1 - self.charge:
            raise SpecError("the first degree must equal 1 - charge")
        if self.potential.nvars != self.rank:
            raise SpecError("potential is over the wrong number of variables")
        if self.euler_consts and len(self.euler_consts) != self.rank:
            raise SpecError("need one Euler constant part per variable")
        for m in self.potential.terms:
            if any(r < 0 for r in m.rest):
                raise SpecError(
                    "potential may carry negative exponents only on the first variable"
                )
        if self.metric is not None:
            n = len(self.metric)
            if n != self.rank or any(len(row) != self.rank for row in self.metric):
                raise SpecError("metric must be rank x rank")
            if any(self.metric[i][j] != self.metric[j][i] for i in range(n) for j in range(n)):
                raise SpecError("metric must be symmetric")

    @property
    def is_diagonal_euler(self) -> bool:
        return not any(self.euler_consts)

    def pi(self) -> tuple[tuple[Fraction, ...], ...]:
        return self.metric if self.metric is not None else antidiagonal(self.rank)

    def euler_field(self) -> tuple[Expr, ...]:
        consts = self.euler_consts or (Fraction(0),) * self.rank
        return tuple(
            Expr.var(self.rank, i) * self.degrees[i] + Expr.const(self.rank, consts[i])
            for i in range(self.rank)
        )

    def identity_field(self) -> tuple[Expr, ...]:
        return tuple(
            Expr.const(self.rank, 1 if i == self.rank - 1 else 0) for i in range(self.rank)
        )

    def render(self, e: Expr) -> str:
        return format_expr(e, self.variables)


def make_spec(rank, charge, degrees, potential: str | Expr, variables, *,
              euler_consts=(), metric=None, name="") -> FrobeniusSpec:
    variables = tuple(variables)
    if isinstance(potential, str):
        potential = parse_expr(potential, variables)
    return FrobeniusSpec(
        rank=rank,
        charge=Fraction(charge),
        degrees=tuple(Fraction(d) for d in degrees),
        potential=potential,
        variables=variables,
        euler_consts=tuple(Fraction(b) for b in euler_consts),
        metric=None if metric is None else tuple(tuple(Fraction(x) for x in r) for r in metric),
        name=name,
    )


# -- the flat metric from third derivatives -------------------------------------


def third_derivatives(F: Expr) -> list[list[list[Expr]]]:
    n = F.nvars
    d1 = [F.derive(i) for i in range(n)]
    d2 = [[d1[i].derive(j) if j >= i else None for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i):
            d2[i][j] = d2[j][i]
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                v = d2[i][j].derive(k)
                for perm in ((i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)):
                    out[perm[0]][perm[1]][perm[2]] = v
    return out


def flat_metric_from_potential(F: Expr, rank: int):
    """Pi_ij = d_r d_i d_j F; every entry must be a rational constant."""
    if F.nvars != rank:
        raise SpecError("potential is over the wrong number of variables")
    dr = F.derive(rank - 1)
    rows = []
    for i in range(rank):
        di = dr.derive(i)
        row = []
        for j in range(rank):
            entry = di.derive(j)
            c = entry.as_constant()
            if c is None:
                raise SpecError(
                    f"third derivative along the last variable is not constant "
                    f"(entry {i+1},{j+1}): {entry}"
                )
            row.append(c)
        rows.append(tuple(row))
    pi = tuple(rows)
    _const_matrix_inverse(pi)  # raises if singular
    return pi


def standard_form_residual(F: Expr, rank: int) -> Expr:
    """d_r of (F minus its normalized last-variable head); zero iff the
    potential has the standard antidiagonal shape."""
    n = rank
    tr = Expr.var(n, n - 1)
    t1 = Expr.var(n, 0)
    head = tr * tr * t1 * Fraction(1, 2)
    for i in range(1, n - 1):  # middle indices 2..r-1 (1-based)
        head = head + tr * Expr.var(n, i) * Expr.var(n, n - 1 - i) * Fraction(1, 2)
    return (F - head).derive(n - 1)


# -- WDVV ------------------------------------------------------------------------


def wdvv_residual(F: Expr, pi) -> list:
    """residual[i][j][q][n] = F_ijk O^kp F_pqn - F_njk O^kp F_pqi (all indices)."""
    n = F.nvars
    omega1 = _const_matrix_inverse(pi)
    d3 = third_derivatives(F)
    # T[i][j][p] = F_ijk O^kp
    T = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for p in range(n):
                acc = Expr.zero(n)
                for k in range(n):
                    c = omega1[k][p]
                    if c:
                        acc = acc + d3[i][j][k] * c
                T[i][j][p] = acc
    res = [[[[None] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for q_ in range(n):
                for m in range(n):
                    acc = Expr.zero(n)
                    for p in range(n):
                        acc = acc + T[i][j][p] * d3[p][q_][m] - T[m][j][p] * d3[p][q_][i]
                    res[i][j][q_][m] = acc
    return res


def wdvv_check(F: Expr, pi) -> CheckResult:
    res = wdvv_residual(F, pi)
    n = F.nvars
    witness = ""
    ok = True
    residuals = []
    for i in range(n):
        for j in range(n):
            for q_ in range(n):
                for m in range(n):
                    r = res[i][j][q_][m]
                    residuals.append(r)
                    if ok and not r.is_zero:
                        ok = False
                        witness = f"first nonzero residual component ({i+1},{j+1},{q_+1},{m+1})"
    return CheckResult("wdvv", ok, witness, residuals)


# -- quasihomogeneity --------------------------------------------------------------


@dataclass
class QuasihomogeneityReport:
    strict: bool
    quadratic: bool
    A: tuple[tuple[Fraction, ...], ...]
    B: tuple[Fraction, ...]
    c: Fraction
    residual: Expr
    offending: Expr

    @property
    def anomaly(self) -> Expr:
        return self.residual


def quasihomogeneity_check(F: Expr, E: Sequence[Expr], d: Fraction) -> QuasihomogeneityReport:
    """Match E(F) - (3-d) F against the quadratic ansatz (1/2) A_ij t^i t^j + B_i t^i + c."""
    n = F.nvars
    EF = Expr.zero(n)
    for i in range(n):
        EF = EF + E[i] * F.derive(i)
    residual = EF - F * (3 - Fraction(d))
    offending = Expr(n, {m: c for m, c in residual.terms.items()
                         if not _quadratic_term(m)})
    quadratic = offending.is_zero
    A = [[Fraction(0)] * n for _ in range(n)]
    B = [Fraction(0)] * n
    c0 = Fraction(0)
    if quadratic:
        for m, coeff in residual.terms.items():
            idx = _poly_indices(m, n)
            if len(idx) == 0:
                c0 = coeff
            elif len(idx) == 1:
                B[idx[0]] = coeff
            elif idx[0] == idx[1]:
                A[idx[0]][idx[0]] = 2 * coeff
            else:
                A[idx[0]][idx[1]] = coeff
                A[idx[1]][idx[0]] = coeff
    strict = quadratic and residual.is_zero
    return QuasihomogeneityReport(
        strict, quadratic, tuple(tuple(r) for r in A), tuple(B), c0, residual, offending
    )


def _quadratic_term(m: Monomial) -> bool:
    if m.logpow or m.kpow:
        return False
    e1 = Fraction(m.exp1)
    if e1.denominator != 1 or e1 < 0 or any(r < 0 for r in m.rest):
        return False
    return e1 + sum(m.rest) <= 2


def _poly_indices(m: Monomial, n: int) -> list[int]:
    out = []
    exps = [int(m.exp1)] + list(m.rest)
    for i, e in enumerate(exps):
        out.extend([i] * e)
    return out


# -- intersection form ---------------------------------------------------------------


def intersection_form(F: Expr, pi, E: Sequence[Expr], degrees=None, charge=None,
                      strict: bool = False) -> tuple[ContraMetric, CheckResult | None]:
    """O_2^{ij} = O_1^{ia} O_1^{jb} F_abk E^k with O_1 the inverse of pi.

    Under strict quasihomogeneity the closed form
    (d - 1 + d_i + d_j) O_1^{ia} O_1^{jb} F_ab must agree; the comparison is
    returned as a check when requested.
    """
    n = F.nvars
    omega1 = _const_matrix_inverse(pi)
    d3 = third_derivatives(F)
    d2 = [[F.derive(i).derive(j) for j in range(n)] for i in range(n)]
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = Expr.zero(n)
            for a in range(n):
                ca = omega1[i][a]
                if not ca:
                    continue
                for b in range(n):
                    cb = omega1[j][b]
                    if not cb:
                        continue
                    for k in range(n):
                        acc = acc + d3[a][b][k] * E[k] * (ca * cb)
            row.append(acc)
        rows.append(row)
    metric = ContraMetric([[RatExpr(x) for x in row] for row in rows])
    check = None
    if strict:
        if degrees is None or charge is None:
            raise SpecError("strict shortcut needs degrees and charge")
        ok = True
        witness = ""
        residuals = []
        for i in range(n):
            for j in range(n):
                factor = Fraction(charge) - 1 + degrees[i] + degrees[j]
                acc = Expr.zero(n)
                for a in range(n):
                    ca = omega1[i][a]
                    if not ca:
                        continue
                    for b in range(n):
                        cb = omega1[j][b]
                        if cb:
                            acc = acc + d2[a][b] * (ca * cb * factor)
                diff = acc - rows[i][j]
                residuals.append(diff)
                residuals.append((acc, rows[i][j]))
                if ok and not diff.is_zero:
                    ok = False
                    witness = f"shortcut disagrees with the defining contraction at ({i+1},{j+1})"
        check = CheckResult("intersection_form_shortcut", ok, witness, residuals)
    return metric, check


# -- QFPM assembly ---------------------------------------------------------------------


@dataclass
class QfpmBundle:
    """Intersection form and flat metric with their distinguished function."""

    spec: FrobeniusSpec | None
    omega2: ContraMetric
    omega1: ContraMetric
    tau: Expr
    euler: tuple[RatExpr, ...]
    identity: tuple[RatExpr, ...]
    degree: Fraction
    gamma2: Christoffel
    checks: dict[str, CheckResult] = field(default_factory=dict)

    @property
    def eligible(self) -> bool:
        """Conjugation applies only away from degree 1."""
        return self.degree != 1

    @property
    def rank(self) -> int:
        return self.omega2.rank

    def all_ok(self) -> bool:
        return all(c.ok for c in self.checks.values() if c.ok is not None)


def _lift_vec(v, n) -> tuple[RatExpr, ...]:
    return tuple(RatExpr(x) if isinstance(x, Expr) else RatExpr.lift(x, n) for x in v)


def assemble_qfpm(spec: FrobeniusSpec, *, run_pencil: bool = True) -> QfpmBundle:
    n = spec.rank
    d = spec.charge
    checks: dict[str, CheckResult] = {}

    # flat metric from the potential, compared with the declared one
    try:
        pi_computed = flat_metric_from_potential(spec.potential, n)
        pi_ok = pi_computed == spec.pi()
        witness = "" if pi_ok else "third derivatives disagree with the declared flat metric"
    except SpecError as err:
        pi_computed = None
        pi_ok = False
        witness = str(err)
    checks["flat_metric"] = CheckResult("flat_metric", pi_ok, witness)
    pi = spec.pi()

    sf = standard_form_residual(spec.potential, n)
    checks["standard_form"] = CheckResult(
        "standard_form", sf.is_zero,
        "" if sf.is_zero else "potential is not in standard antidiagonal form", [sf])

    checks["wdvv"] = wdvv_check(spec.potential, pi)

    E_exprs = spec.euler_field()
    qh = quasihomogeneity_check(spec.potential, E_exprs, d)
    checks["quasihomogeneity"] = CheckResult(
        "quasihomogeneity",
        qh.quadratic,
        ("strict" if qh.strict else
         f"anomaly {format_expr(qh.residual, spec.variables)}") if qh.quadratic
        else f"non-quadratic residual {format_expr(qh.offending, spec.variables)}",
        [qh.offending],
    )

    omega1 = ContraMetric(
        [[Expr.const(n, x) for x in row] for row in _const_matrix_inverse(pi)]
    )
    omega2, shortcut = intersection_form(
        spec.potential, pi, E_exprs, spec.degrees, d, strict=qh.strict
    )
    if shortcut is not None:
        checks["intersection_form_shortcut"] = shortcut

    # tau is the flat coordinate dual to the identity field: d_j tau = pi_jr
    tau = Expr.zero(n)
    for j in range(n):
        if pi[j][n - 1]:
            tau = tau + Expr.var(n, j) * pi[j][n - 1]
    tau_alt = Expr.zero(n)
    for j in range(n):
        if pi[j][0]:
            tau_alt = tau_alt + Expr.var(n, j) * pi[j][0]

    E = _lift_vec(E_exprs, n)
    e = _lift_vec(spec.identity_field(), n)

    grad2 = gradient(tau, omega2)
    grad1 = gradient(tau, omega1)
    g_ok = all((grad2[i] - E[i]).is_zero for i in range(n)) and all(
        (grad1[i] - e[i]).is_zero for i in range(n)
    )
    checks["euler_gradients"] = CheckResult(
        "euler_gradients", g_ok,
        "" if g_ok else "tau gradients do not reproduce the declared vector fields",
        [grad2[i] - E[i] for i in range(n)] + [grad1[i] - e[i] for i in range(n)],
    )

    # [e, E] = e and the four Lie-derivative axioms
    bracket = tuple(
        _rat_sum(e[s] * E[i].derive(s) - E[s] * e[i].derive(s) for s in range(n)) - e[i]
        for i in range(n)
    )
    lie_E = mat_sub(lie_metric(omega2, E), mat_scale_entries(omega2.entries, d - 1))
    lie_e_2 = mat_sub(lie_metric(omega2, e), omega1.entries)
    lie_e_1 = lie_metric(omega1, e)
    ax_res = list(bracket)
    ax_res += [x for row in lie_E for x in row]
    ax_res += [x for row in lie_e_2 for x in row]
    ax_res += [x for row in lie_e_1 for x in row]
    ax_ok = all(x.is_zero for x in ax_res)
    checks["qfpm_axioms"] = CheckResult(
        "qfpm_axioms", ax_ok,
        "" if ax_ok else "a Lie-derivative axiom fails", ax_res)

    # e(tau) = 0 and E(tau) = (1-d) tau
    e_tau = _rat_sum(e[s] * RatExpr(tau.derive(s)) for s in range(n))
    E_tau = _rat_sum(E[s] * RatExpr(tau.derive(s)) for s in range(n)) - RatExpr(
        tau * (1 - d))
    nc_ok = e_tau.is_zero and E_tau.is_zero
    checks["tau_scaling"] = CheckResult(
        "tau_scaling", nc_ok,
        "" if nc_ok else "tau is not annihilated/scaled as required",
        [e_tau, E_tau])

    gamma2 = christoffels(omega2)
    gamma1 = christoffels(omega1)
    gid_res = []
    half = Fraction(1, 2)
    for i in range(n):
        for k in range(n):
            delta = RatExpr(Expr.const(n, (1 - d) * half if i == k else 0))
            gid_res.append(gamma2[i, 0, k] - delta)
    for j in range(n):
        for k in range(n):
            target = RatExpr(Expr.const(n, (d - 1) * half if j == k else 0)) + E[j].derive(k)
            gid_res.append(gamma2[0, j, k] - target)
    gid_res.append(E[0].derive(0) - RatExpr(Expr.const(n, 1 - d)))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                gid_res.append(gamma1[i, j, k])
    gid_ok = all(x.is_zero for x in gid_res)
    checks["gamma_identities"] = CheckResult(
        "gamma_identities", gid_ok,
        "" if gid_ok else "a flat-coordinate Christoffel identity fails", gid_res)

    if run_pencil:
        rep = pencil_check(omega2, omega1)
        checks["pencil"] = CheckResult("pencil", rep.ok, rep.witness, rep.residuals)

    checks["eligibility"] = CheckResult(
        "eligibility", None if d == 1 else True,
        "conjugation undefined at charge 1" if d == 1 else "",
    )
    checks["tau_convention"] = CheckResult(
        "tau_convention", True,
        f"tau = {format_expr(tau, spec.variables)}; "
        f"first-column convention would give {format_expr(tau_alt, spec.variables)}",
    )

    return QfpmBundle(
        spec=spec,
        omega2=omega2,
        omega1=omega1,
        tau=tau,
        euler=E,
        identity=e,
        degree=d,
        gamma2=gamma2,
        checks=checks,
    )


def mat_scale_entries(entries, q: Fraction):
    return tuple(tuple(x * q for x in row) for row in entries)


def _rat_sum(items):
    total = None
    for x in items:
        total = x if total is None else total + x
    return total


# -- regularity and degree duality ------------------------------------------------------


@dataclass
class RegularityTensor:
    matrix: tuple
    determinant: RatExpr
    regular: bool
    diagonal: tuple[Fraction, ...] | None
    note: str = ""

    def render(self, names) -> str:
        rows = [", ".join(x.render(names) for x in row) for row in self.matrix]
        return "[" + "; ".join(rows) + "]"


def regularity(bundle: QfpmBundle) -> RegularityTensor:
    """R_i^j = (d-1)/2 delta_i^j + grad_i E^j, with the flat connection of
    omega1 (zero symbols in these coordinates)."""
    n = bundle.rank
    d = bundle.degree
    half = Fraction(d - 1, 2)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            entry = bundle.euler[j].derive(i)
            if i == j:
                entry = entry + RatExpr(Expr.const(n, half))
            row.append(entry)
        rows.append(tuple(row))
    matrix = tuple(rows)
    det = determinant(matrix)
    regular = not det.is_zero
    diagonal = None
    spec = bundle.spec
    note = ""
    if spec is not None and spec.is_diagonal_euler:
        diagonal = tuple(spec.degrees[i] - spec.degrees[0] / 2 for i in range(n))
        zero_idx = [i + 1 for i, v in enumerate(diagonal) if v == 0]
        if zero_idx:
            note = (
                f"singular: degree index {zero_idx} hits half the first degree; "
                "the pencil is still conjugable whenever tau scales correctly"
            )
    return RegularityTensor(matrix, det, regular, diagonal, note)


@dataclass
class DegreeDualityReport:
    ok: bool
    violations: tuple


def degree_duality(spec: FrobeniusSpec) -> DegreeDualityReport:
    """Wherever O_1^{ij} != 0, the degrees must satisfy d_i + d_j = 2 - d."""
    omega1 = _const_matrix_inverse(spec.pi())
    target = 2 - spec.charge
    violations = []
    for i in range(spec.rank):
        for j in range(spec.rank):
            if omega1[i][j] and spec.degrees[i] + spec.degrees[j] != target:
                violations.append((i + 1, j + 1, spec.degrees[i] + spec.degrees[j]))
    return DegreeDualityReport(not violations, tuple(violations))
