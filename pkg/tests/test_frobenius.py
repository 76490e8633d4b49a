import random
from fractions import Fraction

import pytest

from frobkit.expr import Expr, RatExpr, parse_expr
from frobkit.frobenius import (
    FrobeniusSpec,
    SpecError,
    antidiagonal,
    assemble_qfpm,
    degree_duality,
    flat_metric_from_potential,
    intersection_form,
    make_spec,
    quasihomogeneity_check,
    regularity,
    standard_form_residual,
    third_derivatives,
    wdvv_check,
    wdvv_residual,
)
from frobkit.geometry import ContraMetric

T2 = ("t1", "t2")
T3 = ("t1", "t2", "t3")


def q(s):
    return Fraction(s)


# ---------------------------------------------------------------------------
# flat metric


def test_flat_metric_log_example(log_spec):
    pi = flat_metric_from_potential(log_spec.potential, 2)
    assert pi == ((q(0), q(1)), (q(1), q(0)))


def test_flat_metric_rank3(rank3_spec):
    pi = flat_metric_from_potential(rank3_spec.potential, 3)
    assert pi == antidiagonal(3)


def test_flat_metric_cubic_in_last_variable_rejected():
    # third derivatives of t2^3 are constant but the matrix is singular
    F = parse_expr("t2^3", T2)
    with pytest.raises(SpecError, match="singular"):
        flat_metric_from_potential(F, 2)


def test_flat_metric_nonconstant_rejected():
    F = parse_expr("t2^4", T2)
    with pytest.raises(SpecError, match="not constant"):
        flat_metric_from_potential(F, 2)


def test_standard_form_residual(rank3_spec, log_spec):
    assert standard_form_residual(rank3_spec.potential, 3).is_zero
    assert standard_form_residual(log_spec.potential, 2).is_zero
    bad = parse_expr("1/2*t2^2*t1 + t2^4", T2)
    assert not standard_form_residual(bad, 2).is_zero


# ---------------------------------------------------------------------------
# WDVV


def test_wdvv_log_example(log_spec):
    assert wdvv_check(log_spec.potential, log_spec.pi()).ok


def test_wdvv_rank3(rank3_spec):
    assert wdvv_check(rank3_spec.potential, rank3_spec.pi()).ok


def test_wdvv_rank2_automatic():
    rng = random.Random(11)
    for _ in range(5):
        terms = []
        for _ in range(4):
            a = rng.randint(0, 3)
            b = rng.randint(0, 3)
            c = rng.randint(1, 5)
            terms.append(f"{c}*t1^{a}*t2^{b}")
        F = parse_expr("1/2*t2^2*t1 + " + " + ".join(terms), T2)
        pi = flat_metric_from_potential(F, 2) if _constant_third(F) else None
        if pi is None:
            continue
        assert wdvv_check(F, pi).ok


def _constant_third(F):
    dr = F.derive(1)
    for i in range(2):
        for j in range(2):
            if dr.derive(i).derive(j).as_constant() is None:
                return False
    return True


def test_wdvv_failure_detected():
    # associativity genuinely fails for this cubic-in-the-middle potential
    F = parse_expr("1/2*t3^2*t1 + 1/2*t2^2*t3 + t1*t2^3", T3)
    pi = flat_metric_from_potential(F, 3)
    check = wdvv_check(F, pi)
    assert not check.ok
    # brute-force expansion, written independently of the library contraction
    res = wdvv_residual(F, pi)
    d3 = third_derivatives(F)
    omega1 = [[q(0), q(0), q(1)], [q(0), q(1), q(0)], [q(1), q(0), q(0)]]
    found_nonzero = False
    for i in range(3):
        for j in range(3):
            for qq in range(3):
                for n in range(3):
                    brute = Expr.zero(3)
                    for k in range(3):
                        for p in range(3):
                            w = omega1[k][p]
                            if w:
                                brute = brute + d3[i][j][k] * d3[p][qq][n] * w
                                brute = brute - d3[n][j][k] * d3[p][qq][i] * w
                    assert brute == res[i][j][qq][n]
                    if not brute.is_zero:
                        found_nonzero = True
    assert found_nonzero


def test_wdvv_residual_antisymmetry(log_spec, rank3_spec):
    for spec in (log_spec, rank3_spec):
        res = wdvv_residual(spec.potential, spec.pi())
        n = spec.rank
        for i in range(n):
            for j in range(n):
                for qq in range(n):
                    for m in range(n):
                        assert res[i][j][qq][m] == -res[m][j][qq][i]


# ---------------------------------------------------------------------------
# quasihomogeneity


def test_quasihomogeneity_log_example(log_spec):
    rep = quasihomogeneity_check(log_spec.potential, log_spec.euler_field(), log_spec.charge)
    assert rep.quadratic and not rep.strict
    assert rep.residual == parse_expr("2*t1^2", T2)
    assert rep.A[0][0] == 4
    assert rep.B == (0, 0) and rep.c == 0


def test_quasihomogeneity_rank3_strict(rank3_spec):
    rep = quasihomogeneity_check(rank3_spec.potential, rank3_spec.euler_field(),
                                 rank3_spec.charge)
    assert rep.strict


def test_quasihomogeneity_single_monomial():
    F = parse_expr("t1^3", T2)
    E = (Expr.var(2, 0), Expr.var(2, 1))
    rep = quasihomogeneity_check(F, E, q(0))
    assert rep.strict


def test_quasihomogeneity_nonquadratic_residual_reported():
    F = parse_expr("1/2*t2^2*t1 + t1^3", T2)
    spec = make_spec(2, "-1", ["2", "1"], F, T2)
    rep = quasihomogeneity_check(F, spec.euler_field(), spec.charge)
    assert not rep.quadratic
    assert rep.offending == parse_expr("2*t1^3", T2)


# ---------------------------------------------------------------------------
# intersection form


def test_intersection_form_log_example(log_spec):
    omega2, _ = intersection_form(log_spec.potential, log_spec.pi(), log_spec.euler_field())
    expected = ContraMetric([[parse_expr("2*t1", T2), parse_expr("t2", T2)],
                             [parse_expr("t2", T2), parse_expr("4", T2)]])
    assert omega2 == expected


def test_intersection_form_rank3(rank3_spec):
    omega2, shortcut = intersection_form(
        rank3_spec.potential, rank3_spec.pi(), rank3_spec.euler_field(),
        rank3_spec.degrees, rank3_spec.charge, strict=True)
    rows = [["t1", "t2", "t3"], ["t2", "t3 - t1", "-t2"], ["t3", "-t2", "t1"]]
    expected = ContraMetric([[parse_expr(x, T3) for x in row] for row in rows])
    assert omega2 == expected
    assert shortcut.ok


def test_intersection_form_shortcut_family(family_k4_spec):
    spec = family_k4_spec
    _, shortcut = intersection_form(spec.potential, spec.pi(), spec.euler_field(),
                                    spec.degrees, spec.charge, strict=True)
    assert shortcut.ok


# ---------------------------------------------------------------------------
# QFPM assembly


def test_assemble_log_example(log_spec):
    bundle = assemble_qfpm(log_spec)
    assert bundle.all_ok()
    assert bundle.tau == parse_expr("t1", T2)
    assert bundle.eligible
    # E(tau) = (1 - d) tau = 2 t1
    assert bundle.checks["tau_scaling"].ok
    assert bundle.checks["pencil"].ok
    assert "first-column convention" in bundle.checks["tau_convention"].witness


def test_assemble_rank3(rank3_spec):
    bundle = assemble_qfpm(rank3_spec)
    assert bundle.all_ok()
    assert bundle.tau == parse_expr("t1", T3)


def test_assemble_family(family_k4_spec):
    bundle = assemble_qfpm(family_k4_spec)
    assert bundle.all_ok()


def test_assemble_charge_one_ineligible():
    spec = make_spec(2, "1", ["0", "1"], "1/2*t2^2*t1", T2)
    bundle = assemble_qfpm(spec, run_pencil=False)
    assert not bundle.eligible
    assert bundle.checks["eligibility"].ok is None


# ---------------------------------------------------------------------------
# regularity and degree duality


def test_regularity_rank3(rank3_spec):
    reg = regularity(assemble_qfpm(rank3_spec, run_pencil=False))
    assert reg.regular
    assert reg.diagonal == (q("1/2"), q("1/2"), q("1/2"))


def test_regularity_log_example_singular(log_spec):
    reg = regularity(assemble_qfpm(log_spec, run_pencil=False))
    assert not reg.regular
    assert reg.diagonal == (q(1), q(0))
    assert "singular" in reg.note and "conjugable" in reg.note


def test_regularity_family(family_k4_spec):
    reg = regularity(assemble_qfpm(family_k4_spec, run_pencil=False))
    assert reg.regular
    assert reg.diagonal == (q("1/3"), q("2/3"))


def test_degree_duality_passes(log_spec, rank3_spec):
    assert degree_duality(log_spec).ok
    assert degree_duality(rank3_spec).ok


def test_degree_duality_violation():
    # middle degree pairs with itself on the antidiagonal: 1/4 + 1/4 != 2
    spec = make_spec(3, "0", ["1", "1/4", "1"],
                     "1/2*t3^2*t1 + 1/2*t2^2*t3", T3)
    rep = degree_duality(spec)
    assert not rep.ok
    assert rep.violations == ((2, 2, q("1/2")),)


# ---------------------------------------------------------------------------
# spec validation


def test_spec_rejects_rank_one():
    with pytest.raises(SpecError):
        make_spec(1, "0", ["1"], "t1", ("t1",))


def test_spec_rejects_wrong_last_degree():
    with pytest.raises(SpecError, match="last degree"):
        make_spec(2, "0", ["1", "2"], "1/2*t2^2*t1", T2)


def test_spec_rejects_degree_charge_mismatch():
    with pytest.raises(SpecError, match="1 - charge"):
        make_spec(2, "0", ["2", "1"], "1/2*t2^2*t1", T2)


def test_spec_rejects_negative_middle_exponent():
    with pytest.raises(SpecError, match="negative exponents"):
        make_spec(2, "0", ["1", "1"], "t2^(-1)", T2)
