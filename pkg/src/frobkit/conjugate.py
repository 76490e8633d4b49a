"""Conjugate pencils, conjugate potentials and the inversion transform.

Given an assembled bundle (intersection form, flat metric, tau) of degree
d != 1, the conjugate flat metric is the Lie derivative of the intersection
form along e_tilde = f(tau) e with f = tau^(2/(1-d)).  The power is computed
as (tau^2)^(1/(1-d)), i.e. on the branch where f is positive; this is what
makes conjugation an exact involution (the honest odd-root branch would flip
the sign of e after a double conjugation whenever 2/(1-d) has an odd
numerator).

The coordinate-level transforms produce the conjugate potential in its own
flat chart and, independently, the inversion-symmetry image; for strictly
quasihomogeneous structures the two potentials agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .expr import Expr, RatExpr, equals_mod_quadratic, format_expr
from .frobenius import (
    CheckResult,
    FrobeniusSpec,
    QfpmBundle,
    antidiagonal,
    assemble_qfpm,
    flat_metric_from_potential,
    intersection_form,
    quasihomogeneity_check,
    regularity,
    wdvv_check,
)
from .geometry import (
    ContraMetric,
    CoordinateMap,
    determinant,
    lie_metric,
    lie_pbht,
    mat_sub,
    pencil_check,
    pushforward_metric,
)


class InapplicableError(ValueError):
    """The requested transform does not apply to this structure."""


def conjugate_degrees(degrees) -> tuple[Fraction, ...]:
    """Degree transform: first negated, last pinned to 1, middles shifted."""
    d1 = degrees[0]
    out = [-d1]
    for di in degrees[1:-1]:
        out.append(di - d1)
    out.append(Fraction(1))
    return tuple(out)


@dataclass
class ConjugationData:
    """Conjugate pencil data produced from a bundle of degree d != 1."""

    f: Expr
    e_tilde: tuple[RatExpr, ...]
    omega1_tilde: ContraMetric
    tau_tilde: Expr
    euler_tilde: tuple[RatExpr, ...]
    degree: Fraction
    degrees: tuple[Fraction, ...] | None
    checks: dict[str, CheckResult] = field(default_factory=dict)

    def all_ok(self) -> bool:
        return all(c.ok for c in self.checks.values() if c.ok is not None)

    def as_bundle(self, bundle: QfpmBundle) -> QfpmBundle:
        """The conjugate pair packaged as a bundle in the same chart."""
        return QfpmBundle(
            spec=None,
            omega2=bundle.omega2,
            omega1=self.omega1_tilde,
            tau=self.tau_tilde,
            euler=self.euler_tilde,
            identity=self.e_tilde,
            degree=self.degree,
            gamma2=bundle.gamma2,
            checks={},
        )


def conjugate_pencil(bundle: QfpmBundle, *, run_pencil: bool = True) -> ConjugationData:
    """Build the conjugate flat metric along e_tilde = f(tau) e and verify it.

    Requires tau = +-(first flat coordinate), e(tau) = 0 and
    E(tau) = (1-d) tau; raises InapplicableError at degree 1.
    """
    n = bundle.rank
    d = bundle.degree
    if d == 1:
        raise InapplicableError("conjugation undefined at degree 1")
    st = bundle.tau.single_term()
    if st is None or abs(st[0]) != 1 or st[1].exp1 != 1 or any(st[1].rest) or st[1].logpow:
        raise InapplicableError("tau must be a signed first coordinate")
    tau_sign = st[0]
    nv = bundle.omega2.nvars
    tau_r = RatExpr(bundle.tau)
    e_tau = _rsum(bundle.identity[s] * tau_r.derive(s) for s in range(n))
    E_tau = _rsum(bundle.euler[s] * tau_r.derive(s) for s in range(n)) - tau_r * (1 - d)
    if not (e_tau.is_zero and E_tau.is_zero):
        raise InapplicableError(
            "tau must be annihilated by e and scale with weight 1 - d under E")
    exponent = Fraction(2, 1) / (1 - d)

    # f = (tau^2)^(1/(1-d)): the positive branch, a pure power of x1
    f = Expr.x1pow(nv, exponent)
    f_prime = Expr.x1pow(nv, exponent - 1) * (exponent * tau_sign)

    e, E = bundle.identity, bundle.euler
    e_tilde = tuple(RatExpr(f) * e[i] for i in range(n))

    closed = []
    for i in range(n):
        row = []
        for j in range(n):
            entry = RatExpr(f) * bundle.omega1.entries[i][j] - RatExpr(f_prime) * (
                E[i] * e[j] + e[i] * E[j]
            )
            row.append(entry)
        closed.append(tuple(row))
    via_lie = lie_metric(bundle.omega2, e_tilde, n)

    checks: dict[str, CheckResult] = {}
    diff = mat_sub(closed, via_lie)
    res = [x for row in diff for x in row]
    ok = all(x.is_zero for x in res)
    pairs = [(closed[i][j], via_lie[i][j]) for i in range(n) for j in range(n)]
    checks["closed_form_vs_lie"] = CheckResult(
        "closed_form_vs_lie", ok,
        "" if ok else "closed formula disagrees with the Lie derivative",
        res + pairs)

    omega1_tilde = ContraMetric(via_lie, n)

    # second Lie derivative of the metric coefficients vanishes
    lie2 = lie_metric(omega1_tilde.entries, e_tilde, n)
    res = [x for row in lie2 for x in row]
    ok = all(x.is_zero for x in res)
    checks["lie_squared_metric"] = CheckResult(
        "lie_squared_metric", ok, "" if ok else "second Lie derivative of the metric", res)

    # both coefficient families of the bracket vanish after two Lie derivatives
    m1, c1 = lie_pbht(bundle.omega2, bundle.gamma2, e_tilde, n)
    m2, c2 = lie_pbht(m1, c1, e_tilde, n)
    res = [x for row in m2 for x in row]
    res += [x for plane in c2 for row in plane for x in row]
    ok = all(x.is_zero for x in res)
    checks["lie_squared_bracket"] = CheckResult(
        "lie_squared_bracket", ok,
        "" if ok else "second Lie derivative of the bracket coefficients", res)

    # first column: omega1_tilde^{i1} = -f delta^i_r
    res = []
    for i in range(n):
        target = RatExpr(-f) if i == n - 1 else RatExpr(Expr.zero(nv))
        res.append(omega1_tilde.entries[i][0] - target)
    ok = all(x.is_zero for x in res)
    checks["first_column"] = CheckResult(
        "first_column", ok, "" if ok else "conjugate metric first column", res)

    det_diff = determinant(omega1_tilde.entries) - RatExpr(f.mpow(n)) * bundle.omega1.det()
    checks["determinant_scaling"] = CheckResult(
        "determinant_scaling", det_diff.is_zero,
        "" if det_diff.is_zero else "det(conjugate) != f^r det(original)", [det_diff])

    tau_tilde = -bundle.tau
    E_tilde = tuple(-E[i] for i in range(n))

    # conjugate QFPM axioms of degree 2 - d
    d_t = 2 - d
    res = []
    grad1 = _gradient(tau_tilde, omega1_tilde)
    for i in range(n):
        res.append(grad1[i] - e_tilde[i])
    bracket = tuple(
        _rsum(e_tilde[s] * E_tilde[i].derive(s) - E_tilde[s] * e_tilde[i].derive(s)
              for s in range(n)) - e_tilde[i]
        for i in range(n)
    )
    res += list(bracket)
    lie_Et = mat_sub(lie_metric(bundle.omega2, E_tilde, n),
                     tuple(tuple(x * (d_t - 1) for x in row) for row in bundle.omega2.entries))
    res += [x for row in lie_Et for x in row]
    lie_et = mat_sub(lie_metric(bundle.omega2, e_tilde, n), omega1_tilde.entries)
    res += [x for row in lie_et for x in row]
    lie_e1 = lie_metric(omega1_tilde.entries, e_tilde, n)
    res += [x for row in lie_e1 for x in row]
    e_tau = _rsum(e_tilde[s] * RatExpr(tau_tilde.derive(s)) for s in range(n))
    E_tau = _rsum(E_tilde[s] * RatExpr(tau_tilde.derive(s)) for s in range(n)) - RatExpr(
        tau_tilde * (1 - d_t))
    res += [e_tau, E_tau]
    ok = all(x.is_zero for x in res)
    checks["conjugate_qfpm_axioms"] = CheckResult(
        "conjugate_qfpm_axioms", ok,
        "" if ok else "a conjugate QFPM axiom fails", res)

    if run_pencil:
        rep = pencil_check(bundle.omega2, omega1_tilde)
        checks["conjugate_pencil"] = CheckResult(
            "conjugate_pencil", rep.ok, rep.witness, rep.residuals)

    # flat-chart regularity rule: negating the Euler field negates the tensor
    if bundle.spec is not None:
        reg = regularity(bundle)
        rule = []
        for i in range(n):
            for j in range(n):
                entry = E_tilde[j].derive(i)
                if i == j:
                    entry = entry + RatExpr(Expr.const(nv, Fraction(d_t - 1, 2)))
                rule.append(entry + reg.matrix[i][j])
        ok = all(x.is_zero for x in rule)
        intrinsic = None
        if bundle.spec.is_diagonal_euler:
            dg = conjugate_degrees(bundle.spec.degrees)
            intrinsic = tuple(di - dg[0] / 2 for di in dg)
        witness = "negated-tensor rule holds"
        if intrinsic is not None:
            witness += (
                "; intrinsic conjugate-chart diagonal "
                + "(" + ", ".join(str(x) for x in intrinsic) + ")"
            )
        checks["regularity_rule"] = CheckResult("regularity_rule", ok, witness, rule)

    degrees = conjugate_degrees(bundle.spec.degrees) if bundle.spec is not None else None
    return ConjugationData(
        f=f,
        e_tilde=e_tilde,
        omega1_tilde=omega1_tilde,
        tau_tilde=tau_tilde,
        euler_tilde=E_tilde,
        degree=d_t,
        degrees=degrees,
        checks=checks,
    )


def _gradient(tau: Expr, metric: ContraMetric):
    n = metric.rank
    dt = [RatExpr(tau.derive(j)) for j in range(n)]
    return tuple(
        _rsum(metric.entries[i][j] * dt[j] for j in range(n)) for i in range(n)
    )


def _rsum(items):
    total = None
    for x in items:
        total = x if total is None else total + x
    return total


# -- conjugate coordinates -------------------------------------------------------


def _require_conjugatable(spec: FrobeniusSpec, formal: bool):
    if spec.charge == 1:
        raise InapplicableError("conjugation undefined at charge 1")
    if not spec.is_diagonal_euler:
        raise InapplicableError("conjugate coordinates need a diagonal Euler field")
    if spec.metric is not None and spec.metric != antidiagonal(spec.rank):
        raise InapplicableError("conjugate coordinates need the antidiagonal flat metric")
    if formal:
        return
    qh = quasihomogeneity_check(spec.potential, spec.euler_field(), spec.charge)
    if not qh.strict:
        raise InapplicableError(
            "conjugate transform requires strict quasihomogeneity "
            "(apply the inversion transform instead)"
        )
    d1 = spec.degrees[0]
    for i, di in enumerate(spec.degrees):
        if di == d1 / 2:
            raise InapplicableError(
                f"degree {i+1} equals half the first degree; the structure is not regular"
            )


def target_names(spec: FrobeniusSpec, prefix: str) -> tuple[str, ...]:
    names = tuple(f"{prefix}{i+1}" for i in range(spec.rank))
    if set(names) & set(spec.variables):
        names = tuple(f"{prefix}{prefix}{i+1}" for i in range(spec.rank))
    return names


def conjugate_coordinates(spec: FrobeniusSpec, *, formal: bool = False) -> CoordinateMap:
    """Flat coordinates of the conjugate structure.

    s1 = -t1, s_i = t_i t1^((d1-2 d_i)/d1) for the middle indices, and s_r
    collects the full antidiagonal quadratic over t1^(2/d1 + 1).  The inverse
    is closed-form; signs of fractional powers of -s1 follow the odd-root
    rule.
    """
    _require_conjugatable(spec, formal)
    n = spec.rank
    d1 = spec.degrees[0]
    if d1 == 0:
        raise InapplicableError("first degree vanishes; the coordinate change degenerates")
    t = [Expr.var(n, i) for i in range(n)]

    forward = [-t[0]]
    for i in range(1, n - 1):
        forward.append(t[i] * Expr.x1pow(n, (d1 - 2 * spec.degrees[i]) / d1))
    sr = Expr.zero(n)
    for i in range(n):
        sr = sr + t[i] * t[n - 1 - i]
    sr = sr * Expr.x1pow(n, -2 / d1 - 1) * Fraction(1, 2)
    forward.append(sr)

    s = [Expr.var(n, i) for i in range(n)]
    inverse = [-s[0]]
    for i in range(1, n - 1):
        power = 2 * spec.degrees[i] / d1 - 1
        inverse.append(s[i] * (-s[0]).mpow(power))
    prefactor = (-s[0]).mpow(2 / d1)
    tr = s[n - 1] * prefactor
    for i in range(1, n - 1):
        tr = tr + s[i] * s[n - 1 - i] * prefactor * Expr.x1pow(n, -1) * Fraction(1, 2)
    inverse.append(tr)

    return CoordinateMap(spec.variables, target_names(spec, "s"), forward, inverse)


def jacobian_closed_forms(spec: FrobeniusSpec, cmap: CoordinateMap) -> CheckResult:
    """Compare the derived Jacobian with the closed-form entries."""
    n = spec.rank
    d1 = spec.degrees[0]
    t = [Expr.var(n, i) for i in range(n)]
    expected = [[Expr.zero(n) for _ in range(n)] for _ in range(n)]
    expected[0][0] = Expr.const(n, -1)
    for i in range(1, n - 1):
        di = spec.degrees[i]
        expected[i][0] = t[i] * Expr.x1pow(n, -2 * di / d1) * ((d1 - 2 * di) / d1)
        expected[i][i] = Expr.x1pow(n, (d1 - 2 * di) / d1)
    mid = Expr.zero(n)
    for i in range(1, n - 1):
        mid = mid + t[i] * t[n - 1 - i]
    expected[n - 1][0] = (
        mid * Expr.x1pow(n, -2 / d1 - 2) * Fraction(-2 - d1, 2 * d1)
        - t[n - 1] * Expr.x1pow(n, -2 / d1 - 1) * (2 / d1)
    )
    for i in range(1, n - 1):
        expected[n - 1][i] = t[n - 1 - i] * Expr.x1pow(n, -2 / d1 - 1)
    expected[n - 1][n - 1] = Expr.x1pow(n, -2 / d1)
    res = []
    for i in range(n):
        for j in range(n):
            res.append(cmap.jacobian[i][j] - expected[i][j])
    ok = all(x.is_zero for x in res)
    return CheckResult(
        "jacobian_closed_forms", ok,
        "" if ok else "derived Jacobian disagrees with the closed forms",
        [RatExpr(x) for x in res])


# -- the two potential-level transforms --------------------------------------------


@dataclass
class TransformResult:
    """A potential-level transform: target chart, potential, degrees, charge."""

    map: CoordinateMap
    potential: Expr
    metric: ContraMetric
    degrees: tuple[Fraction, ...]
    charge: Fraction
    variables: tuple[str, ...]
    checks: dict[str, CheckResult] = field(default_factory=dict)

    def spec(self, name: str = "") -> FrobeniusSpec:
        return FrobeniusSpec(
            rank=len(self.variables),
            charge=self.charge,
            degrees=self.degrees,
            potential=self.potential,
            variables=self.variables,
            name=name,
        )

    def all_ok(self) -> bool:
        return all(c.ok for c in self.checks.values() if c.ok is not None)


def _bracket_potential(spec: FrobeniusSpec) -> Expr:
    """F minus half the last variable times the full antidiagonal quadratic."""
    n = spec.rank
    t = [Expr.var(n, i) for i in range(n)]
    quad = Expr.zero(n)
    for i in range(n):
        quad = quad + t[i] * t[n - 1 - i]
    return spec.potential - t[n - 1] * quad * Fraction(1, 2)


def _verify_transform(result: TransformResult, *, strict_expected: bool):
    """Shared verification: target flat metric, WDVV and scaling behaviour."""
    n = len(result.variables)
    checks = result.checks
    F_t = result.potential

    try:
        pi_t = flat_metric_from_potential(F_t, n)
        ok = pi_t == antidiagonal(n)
        witness = "" if ok else "transformed flat metric is not antidiagonal"
    except Exception as err:  # noqa: BLE001 - diagnostic path
        ok = False
        witness = str(err)
    checks["target_flat_metric"] = CheckResult("target_flat_metric", ok, witness)

    wd = wdvv_check(F_t, antidiagonal(n))
    wd.name = "target_wdvv"
    checks["target_wdvv"] = wd

    E_t = tuple(Expr.var(n, i) * result.degrees[i] for i in range(n))
    qh = quasihomogeneity_check(F_t, E_t, result.charge)
    if strict_expected:
        ok = qh.strict
        witness = "" if ok else (
            "anomaly " + format_expr(qh.residual, result.variables) if qh.quadratic
            else "non-quadratic residual")
    else:
        ok = qh.quadratic
        witness = ("strict" if qh.strict else
                   "anomaly " + format_expr(qh.residual, result.variables)) if ok else \
            "non-quadratic residual"
    checks["target_quasihomogeneity"] = CheckResult(
        "target_quasihomogeneity", ok, witness,
        [qh.offending if not qh.quadratic else (qh.residual if strict_expected else Expr.zero(n))])

    hat, _ = intersection_form(F_t, antidiagonal(n), E_t)
    result.metric = hat
    return E_t


def conjugate_potential(spec: FrobeniusSpec, *, formal: bool = False,
                        bundle: QfpmBundle | None = None) -> TransformResult:
    """Potential of the conjugate structure in its flat chart.

    The transform multiplies the bracketed potential by t1^(-4/d1) and
    rewrites it through the conjugate coordinates.  Strict quasihomogeneity is
    required unless formal=True (used for diagnostic comparisons only).
    """
    cmap = conjugate_coordinates(spec, formal=formal)
    n = spec.rank
    d1 = spec.degrees[0]
    F_t = (_bracket_potential(spec) * Expr.x1pow(n, -4 / d1)).substitute(
        dict(enumerate(cmap.inverse))
    )
    degrees_t = conjugate_degrees(spec.degrees)
    result = TransformResult(
        map=cmap,
        potential=F_t,
        metric=None,
        degrees=degrees_t,
        charge=2 - spec.charge,
        variables=cmap.target_names,
    )
    result.checks["jacobian_closed_forms"] = jacobian_closed_forms(spec, cmap)
    if bundle is None:
        bundle = assemble_qfpm(spec, run_pencil=False)
    _verify_transform(result, strict_expected=not formal)

    # the intersection form pushed along the map must equal the one computed
    # from the transformed potential (they share the same second metric)
    pushed = pushforward_metric(bundle.omega2, cmap)
    diff = mat_sub(pushed.entries, result.metric.entries)
    res = [x for row in diff for x in row]
    ok = all(x.is_zero for x in res)
    pairs = [(pushed.entries[i][j], result.metric.entries[i][j])
             for i in range(n) for j in range(n)]
    result.checks["pushed_intersection_form"] = CheckResult(
        "pushed_intersection_form", ok,
        "" if ok else "pushed intersection form disagrees with the transformed one",
        res + pairs)
    result.metric = pushed

    # the conjugate flat metric lands antidiagonal in the new chart
    cd = conjugate_pencil(bundle, run_pencil=False)
    pushed1 = pushforward_metric(cd.omega1_tilde, cmap)
    target = ContraMetric([[Expr.const(n, x) for x in row] for row in antidiagonal(n)])
    diff = mat_sub(pushed1.entries, target.entries)
    res = [x for row in diff for x in row]
    ok = all(x.is_zero for x in res)
    result.checks["conjugate_metric_antidiagonal"] = CheckResult(
        "conjugate_metric_antidiagonal", ok,
        "" if ok else "conjugate flat metric is not antidiagonal in its chart", res)
    return result


def inversion_symmetry(spec: FrobeniusSpec) -> TransformResult:
    """Inversion-symmetry image of the potential.

    z1 = -1/t1, the middle coordinates divide by t1, and the last coordinate
    is the antidiagonal quadratic over 2 t1.  Applies to non-strict structures
    as well; log branch constants are tracked exactly as log(-1) terms.
    """
    if spec.metric is not None and spec.metric != antidiagonal(spec.rank):
        raise InapplicableError("inversion requires the antidiagonal flat metric")
    n = spec.rank
    t = [Expr.var(n, i) for i in range(n)]
    z = [Expr.var(n, i) for i in range(n)]

    quad = Expr.zero(n)
    for i in range(n):
        quad = quad + t[i] * t[n - 1 - i]
    forward = [Expr.x1pow(n, -1) * Fraction(-1)]
    for k in range(1, n - 1):
        forward.append(t[k] * Expr.x1pow(n, -1))
    forward.append(quad * Expr.x1pow(n, -1) * Fraction(1, 2))

    inverse = [Expr.x1pow(n, -1) * Fraction(-1)]
    for k in range(1, n - 1):
        inverse.append(-z[k] * Expr.x1pow(n, -1))
    tr = z[n - 1]
    for i in range(1, n - 1):
        tr = tr + z[i] * z[n - 1 - i] * Expr.x1pow(n, -1) * Fraction(1, 2)
    inverse.append(tr)

    cmap = CoordinateMap(spec.variables, target_names(spec, "z"), forward, inverse)
    F_t = (_bracket_potential(spec) * Expr.x1pow(n, -2)).substitute(
        dict(enumerate(cmap.inverse))
    )
    degrees_t = conjugate_degrees(spec.degrees)
    result = TransformResult(
        map=cmap,
        potential=F_t,
        metric=None,
        degrees=degrees_t,
        charge=2 - spec.charge,
        variables=cmap.target_names,
    )
    if F_t.has_branch_constant():
        no_k = Expr(n, {m: c for m, c in F_t.terms.items() if not m.kpow})
        result.checks["branch_constant"] = CheckResult(
            "branch_constant", True,
            "log branch constants retained: potential = "
            + format_expr(no_k, cmap.target_names) + " plus "
            + format_expr(F_t - no_k, cmap.target_names),
        )
    qh = quasihomogeneity_check(spec.potential, spec.euler_field(), spec.charge)
    _verify_transform(result, strict_expected=qh.strict)
    return result


# -- top-level comparisons -----------------------------------------------------------


@dataclass
class EqualityReport:
    mode: str
    equal: bool
    residual: Expr | None
    detail: str = ""


def potential_equality_check(spec: FrobeniusSpec,
                             conj: TransformResult | None = None,
                             inv: TransformResult | None = None) -> EqualityReport:
    """Compare the conjugate potential with the inversion image, chart renamed.

    Strict structures must agree exactly.  Non-strict ones are compared up to
    quadratic terms and reported as equivalent structures with distinct
    potentials; log-bearing residuals always count as a genuine difference.
    """
    qh = quasihomogeneity_check(spec.potential, spec.euler_field(), spec.charge)
    if inv is None:
        inv = inversion_symmetry(spec)
    if conj is None:
        conj = conjugate_potential(spec, formal=not qh.strict)
    residual = conj.potential - inv.potential
    if qh.strict:
        equal = residual.is_zero
        return EqualityReport(
            "strict", equal, residual,
            "exactly equal" if equal else "strict structures must agree exactly")
    ok, residual = equals_mod_quadratic(conj.potential, inv.potential)
    if residual.is_zero:
        return EqualityReport("non-strict", True, residual, "exactly equal")
    detail = "equivalent-structure, potentials differ"
    if residual.has_log() or residual.has_branch_constant():
        detail += "; log-term discrepancy: residual " + format_expr(
            residual, conj.variables)
    return EqualityReport("non-strict", False, residual, detail)


@dataclass
class InvolutionReport:
    checks: dict[str, CheckResult]

    def all_ok(self) -> bool:
        return all(c.ok for c in self.checks.values() if c.ok is not None)


def involution_check(spec: FrobeniusSpec, *, bundle: QfpmBundle | None = None) -> InvolutionReport:
    """Apply each transform twice and verify the original data returns."""
    checks: dict[str, CheckResult] = {}
    qh = quasihomogeneity_check(spec.potential, spec.euler_field(), spec.charge)

    degrees2 = conjugate_degrees(conjugate_degrees(spec.degrees))
    checks["degrees_involution"] = CheckResult(
        "degrees_involution", degrees2 == spec.degrees,
        "" if degrees2 == spec.degrees else "degree transform applied twice moved the degrees")

    if qh.strict and spec.charge != 1:
        first = conjugate_potential(spec)
        second = conjugate_potential(first.spec(name=spec.name + "~"))
        diff = second.potential - spec.potential
        checks["conjugate_involution"] = CheckResult(
            "conjugate_involution", diff.is_zero,
            "" if diff.is_zero else "double conjugation does not recover the potential",
            [diff, (second.potential, spec.potential)])
    else:
        checks["conjugate_involution"] = CheckResult(
            "conjugate_involution", None, "requires a strict structure away from charge 1")

    inv1 = inversion_symmetry(spec)
    inv2 = inversion_symmetry(inv1.spec(name=spec.name + "^"))
    ok, residual = equals_mod_quadratic(inv2.potential, spec.potential)
    checks["inversion_involution"] = CheckResult(
        "inversion_involution", ok,
        ("exact" if residual.is_zero else
         "recovered up to the quadratic residual " + format_expr(residual, spec.variables))
        if ok else "double inversion leaves a non-quadratic residual",
        [residual if not ok else Expr.zero(spec.rank)])

    if spec.charge != 1:
        if bundle is None:
            bundle = assemble_qfpm(spec, run_pencil=False)
        cd1 = conjugate_pencil(bundle, run_pencil=False)
        cd2 = conjugate_pencil(cd1.as_bundle(bundle), run_pencil=False)
        res = []
        diffm = mat_sub(cd2.omega1_tilde.entries, bundle.omega1.entries)
        res += [x for row in diffm for x in row]
        res += [cd2.e_tilde[i] - bundle.identity[i] for i in range(spec.rank)]
        res += [cd2.euler_tilde[i] - bundle.euler[i] for i in range(spec.rank)]
        res.append(RatExpr(cd2.tau_tilde - bundle.tau))
        ok = all(x.is_zero for x in res)
        checks["pencil_involution"] = CheckResult(
            "pencil_involution", ok,
            "" if ok else "double pencil conjugation does not recover the flat metric", res)
    else:
        checks["pencil_involution"] = CheckResult(
            "pencil_involution", None, "conjugation undefined at charge 1")

    return InvolutionReport(checks)
