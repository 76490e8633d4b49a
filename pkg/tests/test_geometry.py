from fractions import Fraction

import pytest

from frobkit.expr import Expr, RatExpr, parse_expr
from frobkit.geometry import (
    ContraMetric,
    CoordinateMap,
    MapError,
    SingularMetricError,
    christoffels,
    gradient,
    is_flat,
    lie_metric,
    lie_pbht,
    mat_eq,
    mat_is_zero,
    pencil_check,
    pushforward,
    pushforward_metric,
    riemann_components,
    zero_matrix,
)

T2 = ("t1", "t2")
S2 = ("s1", "s2")


def metric(rows, names):
    return ContraMetric([[parse_expr(x, names) for x in row] for row in rows])


@pytest.fixture
def omega2():
    # intersection form of the rank-2 logarithmic structure
    return metric([["2*t1", "t2"], ["t2", "4"]], T2)


@pytest.fixture
def omega1():
    return metric([["0", "1"], ["1", "0"]], T2)


def vec(components, names):
    return tuple(RatExpr(parse_expr(x, names)) for x in components)


# ---------------------------------------------------------------------------
# Christoffel symbols


def test_christoffels_constant_metric_vanish(omega1):
    g = christoffels(omega1)
    n = omega1.rank
    assert all(g[i, j, k].is_zero for i in range(n) for j in range(n) for k in range(n))


def test_christoffels_first_upper_index_identity(omega2):
    # G^{i1}_k = (1-d)/2 * delta^i_k with d = -1
    g = christoffels(omega2)
    for i in range(2):
        for k in range(2):
            expected = Fraction(1) if i == k else Fraction(0)
            assert g[i, 0, k] == RatExpr(Expr.const(2, expected))


def test_christoffels_mixed_entry(omega2):
    # G^{11}_1 = (d-1)/2 + d_1 = -1 + 2 = 1
    g = christoffels(omega2)
    assert g[0, 0, 0] == RatExpr(Expr.const(2, 1))


def test_christoffels_compatibility(omega2):
    assert christoffels(omega2).compatible_with(omega2)


def test_christoffels_singular_metric():
    m = metric([["t1", "t1"], ["t1", "t1"]], T2)
    with pytest.raises(SingularMetricError):
        christoffels(m)


# ---------------------------------------------------------------------------
# flatness


def test_constant_metric_is_flat(omega1):
    assert is_flat(omega1)


def test_log_example_intersection_form_is_flat(omega2):
    assert is_flat(omega2)


def test_diag_metric_not_flat():
    m = metric([["1", "0"], ["0", "t1"]], T2)
    assert not is_flat(m)
    # independent check: for covariant metric diag(1, B(x)) with B = 1/x the
    # component R^1_{122} = -B''/2 + B'^2/(4B) = -(3/4) * x^(-3)
    comps = riemann_components(m)
    expected = RatExpr(parse_expr("-3/4*t1^(-3)", T2))
    assert any(r == expected for r in comps)


# ---------------------------------------------------------------------------
# Lie derivatives


def test_lie_metric_identity_field_recovers_flat_metric(omega2, omega1):
    e = vec(["0", "1"], T2)
    assert mat_eq(lie_metric(omega2, e), omega1.entries)


def test_lie_metric_scaling_field(omega2):
    E = vec(["2*t1", "t2"], T2)
    expected = [[parse_expr("-4*t1", T2), parse_expr("-2*t2", T2)],
                [parse_expr("-2*t2", T2), parse_expr("-8", T2)]]
    assert mat_eq(lie_metric(omega2, E), ContraMetric(expected).entries)


def test_lie_metric_conjugate_field(omega2):
    e_tilde = vec(["0", "t1"], T2)
    expected = metric([["0", "-t1"], ["-t1", "-2*t2"]], T2)
    assert mat_eq(lie_metric(omega2, e_tilde), expected.entries)


def test_lie_metric_zero_field(omega2):
    z = vec(["0", "0"], T2)
    assert mat_is_zero(lie_metric(omega2, z))


def test_lie_pbht_zero_field(omega2):
    z = vec(["0", "0"], T2)
    m, c = lie_pbht(omega2, christoffels(omega2), z)
    assert mat_is_zero(m)
    assert all(x.is_zero for plane in c for row in plane for x in row)


def test_lie_pbht_identity_field_gives_constant_bracket(omega2):
    # delta-part along e equals d_r G_2 = 0, the symbols of the constant metric
    e = vec(["0", "1"], T2)
    m, c = lie_pbht(omega2, christoffels(omega2), e)
    assert all(x.is_zero for plane in c for row in plane for x in row)
    assert mat_eq(m, metric([["0", "1"], ["1", "0"]], T2).entries)


def test_lie_pbht_twice_along_conjugate_field_vanishes(omega2):
    e_tilde = vec(["0", "t1"], T2)
    m1, c1 = lie_pbht(omega2, christoffels(omega2), e_tilde)
    m2, c2 = lie_pbht(m1, c1, e_tilde)
    assert mat_is_zero(m2)
    assert all(x.is_zero for plane in c2 for row in plane for x in row)


# ---------------------------------------------------------------------------
# pencils


def test_pencil_check_log_example(omega2, omega1):
    report = pencil_check(omega2, omega1)
    assert report.flat and report.additive


def test_pencil_check_same_flat_metric(omega1):
    report = pencil_check(omega1, omega1)
    assert report.flat and report.additive


def test_pencil_check_flatness_failure(omega1):
    bad = metric([["1", "0"], ["0", "t1"]], T2)
    report = pencil_check(bad, omega1)
    assert not report.flat


# ---------------------------------------------------------------------------
# gradients


def test_gradient_euler_field(omega2):
    E = gradient(parse_expr("t1", T2), omega2)
    assert E[0] == RatExpr(parse_expr("2*t1", T2))
    assert E[1] == RatExpr(parse_expr("t2", T2))


def test_gradient_identity_field(omega1):
    e = gradient(parse_expr("t1", T2), omega1)
    assert e[0].is_zero
    assert e[1] == RatExpr(Expr.const(2, 1))


def test_gradient_of_constant(omega2):
    z = gradient(Expr.const(2, 5), omega2)
    assert all(x.is_zero for x in z)


# ---------------------------------------------------------------------------
# coordinate maps and pushforwards


@pytest.fixture
def log_example_map():
    forward = [parse_expr("-t1", T2), parse_expr("t2*t1^(-1)", T2)]
    inverse = [parse_expr("-s1", S2), parse_expr("-s1*s2", S2)]
    return CoordinateMap(T2, S2, forward, inverse)


def test_map_round_trip_enforced():
    forward = [parse_expr("-t1", T2), parse_expr("t2*t1^(-1)", T2)]
    wrong = [parse_expr("-s1", S2), parse_expr("s1*s2", S2)]
    with pytest.raises(MapError):
        CoordinateMap(T2, S2, forward, wrong)


def test_pushforward_identity_map(omega2):
    ident = CoordinateMap.identity(T2)
    assert pushforward(omega2, ident) == omega2


def test_pushforward_log_example_metric(omega2, log_example_map):
    pushed = pushforward_metric(omega2, log_example_map)
    expected = metric([["-2*s1", "s2"], ["s2", "4*s1^(-2)"]], S2)
    assert pushed == expected


def test_pushforward_round_trip(omega2, log_example_map):
    there = pushforward_metric(omega2, log_example_map)
    back = pushforward_metric(there, log_example_map.inverted())
    assert back == omega2


def test_pushforward_vector(log_example_map):
    E = vec(["2*t1", "t2"], T2)
    out = pushforward(E, log_example_map)
    assert out[0] == RatExpr(parse_expr("2*s1", S2))
    assert out[1] == RatExpr(parse_expr("-s2", S2))


def test_pushforward_scalar(log_example_map):
    tau = parse_expr("t1", T2)
    assert pushforward(tau, log_example_map) == parse_expr("-s1", S2)


def test_zero_matrix_shape():
    z = zero_matrix(2, 2)
    assert mat_is_zero(z)
