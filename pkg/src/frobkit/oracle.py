"""Exact-point re-validation of symbolic zeros.

Every identity the symbolic pipeline asserts is a rational expression that
must vanish identically.  This module re-checks them numerically but exactly:
the distinguished variable is evaluated at rho^L, where L clears every
fractional exponent appearing in the identity and rho is a random nonzero
rational, the remaining variables at random nonzero rationals, and log(x1)
and log(-1) at random rationals (they act as free transcendental symbols, so
an identity holds iff it holds coefficient-wise).  All arithmetic stays in
the rationals; there is no tolerance.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .expr import EvaluationError, Expr, RatExpr


def _lcm_exponents(item) -> int:
    if isinstance(item, tuple):
        return math.lcm(*(_lcm_exponents(side) for side in item))
    if isinstance(item, RatExpr):
        return math.lcm(item.num.exp1_denominator_lcm(), item.den.exp1_denominator_lcm())
    return item.exp1_denominator_lcm()


def _nvars(item) -> int:
    return item[0].nvars if isinstance(item, tuple) else item.nvars


def _random_fraction(rng: random.Random, lo=-6, hi=6, max_den=4, nonzero=True) -> Fraction:
    while True:
        value = Fraction(rng.randint(lo, hi), rng.randint(1, max_den))
        if not nonzero or value != 0:
            return value


@dataclass
class OracleResult:
    identities: int
    points: int
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def check_zeros(residuals, *, samples: int = 20, seed: int = 0,
                max_retries: int = 60) -> OracleResult:
    """Evaluate each identity at `samples` exact points.

    An item is either a single expression asserted to vanish, or a pair
    (lhs, rhs) of expressions computed along different routes whose values
    must agree; evaluating the two sides separately exercises the evaluator
    rather than the symbolic cancellation that produced the zero.  Points
    where a denominator vanishes (or an exact root does not exist) are
    resampled deterministically.
    """
    failures = []
    count = 0
    for idx, item in enumerate(residuals):
        count += 1
        rng = random.Random(seed * 1_000_003 + idx)
        L = _lcm_exponents(item)
        n = _nvars(item)
        done = 0
        attempts = 0
        while done < samples and attempts < samples + max_retries:
            attempts += 1
            rho = _random_fraction(rng, lo=2, hi=7, max_den=3)
            if rho == 1:
                continue
            point = [rho**L] + [
                _random_fraction(rng) for _ in range(n - 1)
            ]
            logval = _random_fraction(rng, nonzero=False)
            kval = _random_fraction(rng, nonzero=False)
            try:
                if isinstance(item, tuple):
                    lhs, rhs = item
                    value = lhs.evaluate(point, logval=logval, kval=kval) - rhs.evaluate(
                        point, logval=logval, kval=kval)
                else:
                    value = item.evaluate(point, logval=logval, kval=kval)
            except (EvaluationError, ZeroDivisionError):
                continue  # pole or inexact root at this sample; try the next
            if value != 0:
                failures.append((idx, point, value))
                break
            done += 1
        if done < samples and not any(f[0] == idx for f in failures):
            failures.append((idx, None, "could not find enough regular sample points"))
    return OracleResult(count, samples, failures)


def collect_residuals(checks: dict) -> list:
    """Flatten the residual lists of the passing checks (the asserted zeros
    and the dual-route pairs)."""
    out = []
    for check in checks.values():
        if not check.ok:  # failed or inapplicable checks assert nothing
            continue
        for item in check.residuals:
            if isinstance(item, (Expr, RatExpr)):
                out.append(item)
            elif isinstance(item, tuple) and len(item) == 2:
                out.append(item)
    return out
