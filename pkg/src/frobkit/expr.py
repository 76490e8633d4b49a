"""Exact expression kernel over the rationals.

An expression is a finite sum of terms

    c * x1^a * x2^e2 * ... * xn^en * log(x1)^p * log(-1)^b

where the coefficient c and the exponent a of the first (distinguished)
variable are rationals, the remaining exponents are integers (possibly
negative), and p, b are nonnegative integers.  Only the first variable may
carry a fractional exponent or sit inside a logarithm; that restriction keeps
every operation closed and lets identities be re-checked by exact evaluation
at rational points (the distinguished variable is evaluated at a perfect
power, log(x1) and the branch constant log(-1) act as free transcendental
symbols).

Sign rule for rational powers of negative quantities: (-x)^(p/q) = (-1)^p *
x^(p/q) when q is odd; an even q is a branch ambiguity and raises
BranchError.  log(-x) rewrites to log(x) + log(-1) with the branch constant
kept as an explicit generator, never silently dropped.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class ParseError(ValueError):
    """Grammar or identifier error, carrying a position in the input."""

    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.pos = pos
        self.line = text.count("\n", 0, pos) + 1
        self.col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} (line {self.line}, column {self.col})")


class SubstitutionError(ValueError):
    """A substitution image is incompatible with how the variable occurs."""


class BranchError(SubstitutionError):
    """Sign of a rational power cannot be resolved (even root of a negative)."""


class EvaluationError(ValueError):
    """Exact evaluation impossible (inexact root, missing log value, pole)."""


def _norm_exp(q):
    """Store integral exponents as int so mixed int/Fraction keys compare."""
    if isinstance(q, Fraction):
        return int(q) if q.denominator == 1 else q
    return q


def iroot(n: int, k: int):
    """Exact nonnegative integer k-th root of n >= 0, or None."""
    if n < 0:
        raise ValueError("iroot of negative")
    if n < 2 or k == 1:
        return n
    x = 1 << -(-n.bit_length() // k)  # upper bound on the root
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    return x if x**k == n else None


def frac_pow(base: Fraction, exp) -> Fraction:
    """base**exp exactly; odd-denominator sign convention for base < 0."""
    base = Fraction(base)
    exp = Fraction(exp)
    if exp.denominator == 1:
        e = int(exp)
        if base == 0 and e < 0:
            raise EvaluationError("0 raised to a negative power")
        return base**e
    p, q = exp.numerator, exp.denominator
    if base == 0:
        if p < 0:
            raise EvaluationError("0 raised to a negative power")
        return Fraction(0)
    sign = 1
    if base < 0:
        if q % 2 == 0:
            raise BranchError(f"({base})^({exp}): even root of a negative value")
        sign = -1 if p % 2 else 1
        base = -base
    rn = iroot(base.numerator, q)
    rd = iroot(base.denominator, q)
    if rn is None or rd is None:
        raise EvaluationError(f"({base})^(1/{q}) is not rational")
    return sign * Fraction(rn, rd) ** p


class Monomial:
    """Exponent data of one term: (exp1, rest, logpow, kpow).

    exp1 is the (rational) exponent of the distinguished variable, rest holds
    the integer exponents of the remaining variables, logpow the power of
    log(x1) and kpow the power of the branch constant log(-1).
    """

    __slots__ = ("exp1", "rest", "logpow", "kpow", "_h")

    def __init__(self, exp1=0, rest: Iterable[int] = (), logpow: int = 0, kpow: int = 0):
        if not isinstance(exp1, int):
            exp1 = _norm_exp(Fraction(exp1))
        if not isinstance(rest, tuple):
            rest = tuple(int(e) for e in rest)
        if logpow < 0 or kpow < 0:
            raise ValueError("log powers must be nonnegative")
        self.exp1 = exp1
        self.rest = rest
        self.logpow = logpow
        self.kpow = kpow
        self._h = hash((exp1, rest, logpow, kpow))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        return (
            isinstance(other, Monomial)
            and self._h == other._h
            and self.exp1 == other.exp1
            and self.rest == other.rest
            and self.logpow == other.logpow
            and self.kpow == other.kpow
        )

    def __repr__(self):
        return f"Monomial({self.exp1!r}, {self.rest!r}, {self.logpow}, {self.kpow})"

    def total_degree(self):
        return self.exp1 + sum(self.rest)

    def mul(self, other: "Monomial") -> "Monomial":
        e1 = self.exp1 + other.exp1
        if not isinstance(e1, int) and e1.denominator == 1:
            e1 = int(e1)
        m = Monomial.__new__(Monomial)
        m.exp1 = e1
        m.rest = tuple(a + b for a, b in zip(self.rest, other.rest))
        m.logpow = self.logpow + other.logpow
        m.kpow = self.kpow + other.kpow
        m._h = hash((m.exp1, m.rest, m.logpow, m.kpow))
        return m

    def sort_key(self):
        # descending total degree, then descending exponent vector
        return (
            -Fraction(self.total_degree()),
            -Fraction(self.exp1),
            tuple(-e for e in self.rest),
            -self.logpow,
            -self.kpow,
        )


def _term_pow(coeff: Fraction, mono: Monomial, exp) -> tuple[Fraction, Monomial]:
    """Raise a single term coeff*mono to a rational power, resolving signs."""
    exp = Fraction(exp)
    if exp == 0:
        return Fraction(1), Monomial(0, (0,) * len(mono.rest))
    if exp.denominator == 1:
        e = int(exp)
        if mono.logpow * e < 0 or mono.kpow * e < 0:
            raise SubstitutionError("negative power of a log-bearing term")
        return coeff**e, Monomial(
            mono.exp1 * e, tuple(r * e for r in mono.rest), mono.logpow * e, mono.kpow * e
        )
    if mono.logpow or mono.kpow:
        raise SubstitutionError("fractional power of a log-bearing term")
    rest = []
    for r in mono.rest:
        re_ = Fraction(r) * exp
        if re_.denominator != 1:
            raise SubstitutionError(
                "fractional exponent on a non-distinguished variable"
            )
        rest.append(int(re_))
    return frac_pow(coeff, exp), Monomial(Fraction(mono.exp1) * exp, rest)


class Expr:
    """Canonical sum of terms: mapping Monomial -> nonzero Fraction."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Monomial, Fraction] | None = None):
        if nvars < 1:
            raise ValueError("need at least the distinguished variable")
        self.nvars = nvars
        clean: dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                if c:
                    if len(m.rest) != nvars - 1:
                        raise ValueError("monomial width does not match nvars")
                    clean[m] = Fraction(c)
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Expr":
        return cls(nvars)

    @classmethod
    def const(cls, nvars: int, value) -> "Expr":
        value = Fraction(value)
        if not value:
            return cls(nvars)
        return cls(nvars, {Monomial(0, (0,) * (nvars - 1)): value})

    @classmethod
    def var(cls, nvars: int, index: int) -> "Expr":
        if not 0 <= index < nvars:
            raise ValueError("variable index out of range")
        if index == 0:
            return cls(nvars, {Monomial(1, (0,) * (nvars - 1)): Fraction(1)})
        rest = [0] * (nvars - 1)
        rest[index - 1] = 1
        return cls(nvars, {Monomial(0, rest): Fraction(1)})

    @classmethod
    def term(cls, nvars: int, coeff, exp1=0, rest: Sequence[int] = (), logpow=0, kpow=0) -> "Expr":
        coeff = Fraction(coeff)
        if not coeff:
            return cls(nvars)
        rest = tuple(rest) if rest else (0,) * (nvars - 1)
        return cls(nvars, {Monomial(exp1, rest, logpow, kpow): coeff})

    @classmethod
    def x1pow(cls, nvars: int, exponent) -> "Expr":
        """Power of the distinguished variable, x1^exponent."""
        return cls(nvars, {Monomial(exponent, (0,) * (nvars - 1)): Fraction(1)})

    # -- basic queries ------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def as_constant(self):
        """The value of a constant expression, else None."""
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1:
            m, c = next(iter(self.terms.items()))
            if m.exp1 == 0 and not any(m.rest) and m.logpow == 0 and m.kpow == 0:
                return c
        return None

    def single_term(self):
        """(coeff, monomial) if the expression has exactly one term, else None."""
        if len(self.terms) == 1:
            m, c = next(iter(self.terms.items()))
            return c, m
        return None

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda mc: mc[0].sort_key())

    def coefficient(self, exp1=0, rest: Sequence[int] = (), logpow=0, kpow=0) -> Fraction:
        rest = tuple(rest) if rest else (0,) * (self.nvars - 1)
        return self.terms.get(Monomial(exp1, rest, logpow, kpow), Fraction(0))

    def exp1_denominator_lcm(self) -> int:
        """lcm of the denominators of all exponents of the distinguished variable."""
        L = 1
        for m in self.terms:
            L = math.lcm(L, Fraction(m.exp1).denominator)
        return L

    def has_log(self) -> bool:
        return any(m.logpow for m in self.terms)

    def has_branch_constant(self) -> bool:
        return any(m.kpow for m in self.terms)

    # -- ring operations ----------------------------------------------------

    def _check(self, other: "Expr"):
        if self.nvars != other.nvars:
            raise ValueError("expressions over different variable sets")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Expr.const(self.nvars, other)
        if not isinstance(other, Expr):
            return NotImplemented
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, Fraction(0)) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        e = Expr.__new__(Expr)
        e.nvars = self.nvars
        e.terms = out
        return e

    __radd__ = __add__

    def __neg__(self):
        e = Expr.__new__(Expr)
        e.nvars = self.nvars
        e.terms = {m: -c for m, c in self.terms.items()}
        return e

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Expr.const(self.nvars, other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            q = Fraction(other)
            e = Expr.__new__(Expr)
            e.nvars = self.nvars
            e.terms = {m: c * q for m, c in self.terms.items()} if q else {}
            return e
        if not isinstance(other, Expr):
            return NotImplemented
        self._check(other)
        out: dict[Monomial, Fraction] = {}
        if len(self.terms) > len(other.terms):
            a, b = other, self
        else:
            a, b = self, other
        for ma, ca in a.terms.items():
            for mb, cb in b.terms.items():
                m = ma.mul(mb)
                s = out.get(m, Fraction(0)) + ca * cb
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        e = Expr.__new__(Expr)
        e.nvars = self.nvars
        e.terms = out
        return e

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("Expr**n needs a nonnegative integer; use mpow for rationals")
        result = Expr.const(self.nvars, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def mpow(self, exponent) -> "Expr":
        """Raise a single-term expression to a rational power (sign-resolved)."""
        st = self.single_term()
        if st is None:
            raise SubstitutionError("rational power of a non-monomial expression")
        c, m = _term_pow(st[0], st[1], exponent)
        return Expr(self.nvars, {m: c})

    # -- calculus -----------------------------------------------------------

    def derive(self, index: int) -> "Expr":
        """Partial derivative with respect to variable `index` (0-based)."""
        if not 0 <= index < self.nvars:
            raise ValueError("variable index out of range")
        out: dict[Monomial, Fraction] = {}

        def put(m, c):
            if c:
                s = out.get(m, Fraction(0)) + c
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)

        for m, c in self.terms.items():
            if index == 0:
                if m.exp1 != 0:
                    put(Monomial(m.exp1 - 1, m.rest, m.logpow, m.kpow), c * m.exp1)
                if m.logpow:
                    put(Monomial(m.exp1 - 1, m.rest, m.logpow - 1, m.kpow), c * m.logpow)
            else:
                r = m.rest[index - 1]
                if r:
                    rest = list(m.rest)
                    rest[index - 1] = r - 1
                    put(Monomial(m.exp1, rest, m.logpow, m.kpow), c * r)
        e = Expr.__new__(Expr)
        e.nvars = self.nvars
        e.terms = out
        return e

    def extend(self, extra: int = 1) -> "Expr":
        """Append `extra` fresh variables with exponent zero (e.g. a pencil parameter)."""
        pad = (0,) * extra
        return Expr(
            self.nvars + extra,
            {Monomial(m.exp1, m.rest + pad, m.logpow, m.kpow): c for m, c in self.terms.items()},
        )

    # -- substitution -------------------------------------------------------

    def substitute(self, images: Mapping[int, "Expr"]) -> "Expr":
        """Exact substitution of per-variable images.

        An image may be a single signed term (valid for any occurring
        exponent, with the odd-denominator sign rule) or a general expression
        (valid only where the variable occurs with nonnegative integer
        exponents and outside log).  log(x1) accepts only images +-x1^a and
        rewrites log(-y) as log(y) + log(-1).
        """
        if not images:
            return self
        width = None
        for i, img in images.items():
            if not 0 <= i < self.nvars:
                raise SubstitutionError("image given for an unknown variable")
            if width is None:
                width = img.nvars
            elif img.nvars != width:
                raise SubstitutionError("substitution images over different variable sets")
        if width != self.nvars:
            raise SubstitutionError("substitution must preserve the number of variables")

        singles: dict[int, tuple[Fraction, Monomial]] = {}
        generals: dict[int, Expr] = {}
        for i, img in images.items():
            st = img.single_term()
            if st is not None:
                singles[i] = st
            else:
                generals[i] = img

        log_image = None  # (a, kshift): log(x1) -> a*log(x1) + kshift*log(-1)
        if self.has_log() and 0 in images:
            img = images[0]
            st = img.single_term()
            if st is None:
                raise SubstitutionError("log argument must map to a signed power of x1")
            c, m = st
            if any(m.rest) or m.logpow or m.kpow or abs(c) != 1:
                raise SubstitutionError("log argument must map to a signed power of x1")
            log_image = (Fraction(m.exp1), 1 if c < 0 else 0)

        out = Expr.zero(self.nvars)
        for m, c in self.terms.items():
            exps = [m.exp1] + list(m.rest)
            part = Expr.const(self.nvars, c)
            for i in range(self.nvars):
                e = exps[i]
                if e == 0:
                    continue
                if i in singles:
                    ci, mi = _term_pow(*singles[i], e)
                    part = part * Expr(self.nvars, {mi: ci})
                elif i in generals:
                    ef = Fraction(e)
                    if ef.denominator != 1 or ef < 0:
                        raise SubstitutionError(
                            "general image where the variable has a fractional or negative exponent"
                        )
                    part = part * generals[i] ** int(ef)
                elif i == 0:
                    part = part * Expr.x1pow(self.nvars, e)
                else:
                    rest = tuple(e if j == i - 1 else 0 for j in range(self.nvars - 1))
                    part = part * Expr(self.nvars, {Monomial(0, rest): Fraction(1)})
            if m.logpow:
                if 0 in generals:
                    raise SubstitutionError("log argument must map to a signed power of x1")
                if log_image is None:
                    lg = Expr.term(self.nvars, 1, logpow=1)
                else:
                    a, kshift = log_image
                    lg = Expr.term(self.nvars, a, logpow=1)
                    if kshift:
                        lg = lg + Expr.term(self.nvars, 1, kpow=1)
                part = part * lg**m.logpow
            if m.kpow:
                part = part * Expr.term(self.nvars, 1, kpow=m.kpow)
            out = out + part
        return out

    # -- exact evaluation ----------------------------------------------------

    def evaluate(self, point: Sequence, logval=None, kval=None) -> Fraction:
        """Exact value at rational `point`; log(x1) and log(-1) read from
        logval/kval (required only when the expression contains them)."""
        if len(point) != self.nvars:
            raise EvaluationError("point has the wrong number of coordinates")
        vals = [Fraction(v) for v in point]
        total = Fraction(0)
        for m, c in self.terms.items():
            v = c * frac_pow(vals[0], m.exp1)
            for x, e in zip(vals[1:], m.rest):
                if e:
                    if x == 0 and e < 0:
                        raise EvaluationError("pole: zero raised to a negative power")
                    v *= x**e
            if m.logpow:
                if logval is None:
                    raise EvaluationError("expression contains log(x1); logval required")
                v *= Fraction(logval) ** m.logpow
            if m.kpow:
                if kval is None:
                    raise EvaluationError("expression contains log(-1); kval required")
                v *= Fraction(kval) ** m.kpow
            total += v
        return total

    # -- comparison / rendering ----------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.as_constant() == Fraction(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    __hash__ = None  # mutable-dict backed

    def render(self, names: Sequence[str]) -> str:
        return format_expr(self, names)

    def __str__(self):
        return format_expr(self, _default_names(self.nvars))

    def __repr__(self):
        return f"<Expr {self}>"


def _default_names(nvars: int) -> tuple[str, ...]:
    return tuple(f"t{i+1}" for i in range(nvars))


def _format_exponent(e) -> str:
    e = Fraction(e)
    if e.denominator == 1 and e >= 0:
        return str(int(e))
    return f"({e})"


def _format_coeff(q: Fraction) -> str:
    return str(q)


def format_expr(expr: Expr, names: Sequence[str]) -> str:
    """Deterministic rendering; parse_expr(format_expr(e)) == e."""
    if len(names) != expr.nvars:
        raise ValueError("name list does not match the number of variables")
    if expr.is_zero:
        return "0"
    pieces: list[str] = []
    for m, c in expr.sorted_terms():
        factors: list[str] = []
        mag = abs(c)
        for i, e in enumerate([m.exp1] + list(m.rest)):
            if e == 0:
                continue
            if e == 1:
                factors.append(names[i])
            else:
                factors.append(f"{names[i]}^{_format_exponent(e)}")
        if m.logpow:
            base = f"log({names[0]})"
            factors.append(base if m.logpow == 1 else f"{base}^{m.logpow}")
        if m.kpow:
            factors.append("log(-1)" if m.kpow == 1 else f"log(-1)^{m.kpow}")
        if not factors or mag != 1:
            factors.insert(0, _format_coeff(mag))
        body = "*".join(factors)
        if not pieces:
            pieces.append(body if c > 0 else f"-{body}")
        else:
            pieces.append(f" + {body}" if c > 0 else f" - {body}")
    return "".join(pieces)


# -- parser -------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|([()+\-*^/]))")


class _Parser:
    def __init__(self, text: str, names: Sequence[str]):
        self.text = text
        self.names = list(names)
        self.index = {n: i for i, n in enumerate(names)}
        self.pos = 0
        self.tok = None
        self.tok_pos = 0
        self._advance()

    def _advance(self):
        m = _TOKEN_RE.match(self.text, self.pos)
        if m is None:
            rest = self.text[self.pos:].strip()
            if rest:
                raise ParseError(f"unexpected character {rest[0]!r}", self.text, self.pos)
            self.tok = None
            self.tok_pos = len(self.text)
            return
        self.tok_pos = m.start(1) if m.group(1) else m.start(2) if m.group(2) else m.start(3)
        self.tok = m.group(1) or m.group(2) or m.group(3)
        self.pos = m.end()

    def _expect(self, symbol: str):
        if self.tok != symbol:
            raise ParseError(f"expected {symbol!r}, found {self.tok!r}", self.text, self.tok_pos)
        self._advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok is not None:
            raise ParseError(f"unexpected token {self.tok!r}", self.text, self.tok_pos)
        return e

    def expr(self) -> Expr:
        negate = False
        if self.tok in ("+", "-"):
            negate = self.tok == "-"
            self._advance()
        e = self.term()
        if negate:
            e = -e
        while self.tok in ("+", "-"):
            op = self.tok
            self._advance()
            t = self.term()
            e = e + t if op == "+" else e - t
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.tok == "*":
            self._advance()
            e = e * self.factor()
        return e

    def factor(self) -> Expr:
        base = self.base()
        if self.tok == "^":
            self._advance()
            exp = self.exponent()
            if exp.denominator == 1 and exp >= 0:
                return base**int(exp)
            st = base.single_term()
            if st is None:
                raise ParseError(
                    "fractional or negative power of a non-monomial expression",
                    self.text,
                    self.tok_pos,
                )
            try:
                return base.mpow(exp)
            except SubstitutionError as err:
                raise ParseError(str(err), self.text, self.tok_pos) from err
        return base

    def base(self) -> Expr:
        nvars = len(self.names)
        if self.tok is None:
            raise ParseError("unexpected end of input", self.text, self.tok_pos)
        if self.tok.isdigit():
            value = self.rational()
            return Expr.const(nvars, value)
        if self.tok == "(":
            self._advance()
            e = self.expr()
            self._expect(")")
            return e
        if self.tok == "log":
            self._advance()
            self._expect("(")
            if self.tok == "-":  # the branch constant log(-1)
                self._advance()
                if self.tok != "1":
                    raise ParseError("log accepts the distinguished variable or -1",
                                     self.text, self.tok_pos)
                self._advance()
                self._expect(")")
                return Expr.term(nvars, 1, kpow=1)
            name_pos = self.tok_pos
            if self.tok is None or not self.tok[0].isalpha() and self.tok[0] != "_":
                raise ParseError("log expects a variable name", self.text, self.tok_pos)
            name = self.tok
            self._advance()
            self._expect(")")
            if name not in self.index:
                raise ParseError(f"unknown identifier {name!r}", self.text, name_pos)
            if self.index[name] != 0:
                raise ParseError(
                    f"log is only defined on the distinguished variable, not {name!r}",
                    self.text, name_pos,
                )
            return Expr.term(nvars, 1, logpow=1)
        if self.tok[0].isalpha() or self.tok[0] == "_":
            name = self.tok
            if name not in self.index:
                raise ParseError(f"unknown identifier {name!r}", self.text, self.tok_pos)
            self._advance()
            return Expr.var(nvars, self.index[name])
        raise ParseError(f"unexpected token {self.tok!r}", self.text, self.tok_pos)

    def exponent(self) -> Fraction:
        if self.tok == "-":
            self._advance()
            if self.tok is None or not self.tok.isdigit():
                raise ParseError("expected an integer exponent", self.text, self.tok_pos)
            value = -int(self.tok)
            self._advance()
            return Fraction(value)
        if self.tok == "(":
            self._advance()
            value = self.signed_rational()
            self._expect(")")
            return value
        if self.tok is not None and self.tok.isdigit():
            value = int(self.tok)
            self._advance()
            return Fraction(value)
        raise ParseError("expected an exponent", self.text, self.tok_pos)

    def signed_rational(self) -> Fraction:
        sign = 1
        if self.tok == "-":
            sign = -1
            self._advance()
        if self.tok is None or not self.tok.isdigit():
            raise ParseError("expected a rational number", self.text, self.tok_pos)
        return sign * self.rational()

    def rational(self) -> Fraction:
        num = int(self.tok)
        self._advance()
        if self.tok == "/":
            self._advance()
            if self.tok is None or not self.tok.isdigit():
                raise ParseError("expected a positive integer denominator",
                                 self.text, self.tok_pos)
            den = int(self.tok)
            if den == 0:
                raise ParseError("zero denominator", self.text, self.tok_pos)
            self._advance()
            return Fraction(num, den)
        return Fraction(num)


def parse_expr(text: str, names: Sequence[str]) -> Expr:
    """Parse `text` over the declared variables (first one distinguished)."""
    if len(set(names)) != len(names):
        raise ValueError("variable names must be distinct")
    return _Parser(text, names).parse()


def evaluate_exact(f, point: Sequence, logval=None, kval=None) -> Fraction:
    """Exact rational value of an expression (or quotient) at `point`."""
    return f.evaluate(point, logval=logval, kval=kval)


# -- exact polynomial trial division -------------------------------------------


def _lattice(f: Expr, scale: int):
    """Terms of f as integer exponent vectors (exp1*scale, rest..., logpow, kpow)."""
    out = {}
    for m, c in f.terms.items():
        e1 = Fraction(m.exp1) * scale
        out[(int(e1),) + m.rest + (m.logpow, m.kpow)] = c
    return out


def try_divide(f: Expr, d: Expr, max_steps: int = 4000):
    """Exact quotient f/d as an Expr, or None when d does not divide f.

    Works on the Laurent/Puiseux lattice by rescaling the distinguished
    exponent and shifting both operands to the nonnegative orthant.
    """
    if d.is_zero:
        raise ZeroDivisionError("division by the zero expression")
    if f.is_zero:
        return Expr.zero(f.nvars)
    if f.nvars != d.nvars:
        raise ValueError("expressions over different variable sets")
    dc = d.as_constant()
    if dc is not None:
        return f * (Fraction(1) / dc)
    scale = math.lcm(f.exp1_denominator_lcm(), d.exp1_denominator_lcm())
    fl = _lattice(f, scale)
    dl = _lattice(d, scale)
    width = f.nvars + 2
    fmin = [min(v[i] for v in fl) for i in range(width)]
    dmin = [min(v[i] for v in dl) for i in range(width)]
    fl = {tuple(a - b for a, b in zip(v, fmin)): c for v, c in fl.items()}
    dl = {tuple(a - b for a, b in zip(v, dmin)): c for v, c in dl.items()}

    def key(v):
        return (sum(v), v)

    dlead = max(dl, key=key)
    dlead_c = dl[dlead]
    quot: dict[tuple, Fraction] = {}
    steps = 0
    while fl:
        steps += 1
        if steps > max_steps:
            return None
        flead = max(fl, key=key)
        qv = tuple(a - b for a, b in zip(flead, dlead))
        if any(x < 0 for x in qv):
            return None
        qc = fl[flead] / dlead_c
        quot[qv] = qc
        for v, c in dl.items():
            t = tuple(a + b for a, b in zip(qv, v))
            s = fl.get(t, Fraction(0)) - qc * c
            if s:
                fl[t] = s
            else:
                fl.pop(t, None)
    shift = [a - b for a, b in zip(fmin, dmin)]
    terms = {}
    for v, c in quot.items():
        w = [a + b for a, b in zip(v, shift)]
        if w[-2] < 0 or w[-1] < 0:  # quotient would need a negative log power
            return None
        terms[Monomial(Fraction(w[0], scale), w[1:-2], w[-2], w[-1])] = c
    return Expr(f.nvars, terms)


# -- quadratic-residual comparison ----------------------------------------------


def _is_quadratic_term(m: Monomial) -> bool:
    if m.logpow or m.kpow:
        return False
    e1 = Fraction(m.exp1)
    if e1.denominator != 1 or e1 < 0:
        return False
    if any(r < 0 for r in m.rest):
        return False
    return e1 + sum(m.rest) <= 2


def equals_mod_quadratic(f: Expr, g: Expr) -> tuple[bool, Expr]:
    """True iff f - g is a polynomial of total degree <= 2 (no log factors).

    The residual f - g is returned either way.
    """
    residual = f - g
    ok = all(_is_quadratic_term(m) for m in residual.terms)
    return ok, residual


# -- rational expressions --------------------------------------------------------


class RatExpr:
    """Quotient of two expressions with nonzero denominator.

    Only monomial content and rational constants are cancelled (plus an exact
    trial division when it succeeds); equality is decided by cross
    multiplication, never by a gcd computation.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Expr, den: Expr | None = None):
        if den is None:
            den = Expr.const(num.nvars, 1)
        if den.is_zero:
            raise ZeroDivisionError("zero denominator")
        if num.nvars != den.nvars:
            raise ValueError("numerator and denominator over different variable sets")
        if num.is_zero:
            self.num = num
            self.den = Expr.const(num.nvars, 1)
            return
        dc = den.as_constant()
        if dc is not None:
            self.num = num * (Fraction(1) / dc)
            self.den = Expr.const(num.nvars, 1)
            return
        num, den = _cancel_content(num, den)
        q = try_divide(num, den)
        if q is not None:
            self.num = q
            self.den = Expr.const(num.nvars, 1)
            return
        # scale so the canonically-first denominator term has coefficient 1
        lead_c = den.terms[min(den.terms, key=lambda m: m.sort_key())]
        inv = Fraction(1) / lead_c
        self.num = num * inv
        self.den = den * inv

    @classmethod
    def lift(cls, value, nvars: int | None = None) -> "RatExpr":
        if isinstance(value, RatExpr):
            return value
        if isinstance(value, Expr):
            return cls(value)
        if nvars is None:
            raise ValueError("nvars required to lift a scalar")
        return cls(Expr.const(nvars, value))

    @property
    def nvars(self) -> int:
        return self.num.nvars

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def as_expr(self):
        """The numerator when the denominator is 1, else None."""
        if self.den.as_constant() == 1:
            return self.num
        return None

    def __add__(self, other):
        other = RatExpr.lift(other, self.nvars)
        if self.den == other.den:
            return RatExpr(self.num + other.num, self.den)
        return RatExpr(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        r = RatExpr.__new__(RatExpr)
        r.num = -self.num
        r.den = self.den
        return r

    def __sub__(self, other):
        other = RatExpr.lift(other, self.nvars)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = RatExpr.lift(other, self.nvars)
        if self.is_zero or other.is_zero:
            return RatExpr(Expr.zero(self.nvars))
        return RatExpr(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = RatExpr.lift(other, self.nvars)
        if other.is_zero:
            raise ZeroDivisionError("division by a zero expression")
        return RatExpr(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return RatExpr.lift(other, self.nvars) / self

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Expr)):
            other = RatExpr.lift(other, self.nvars)
        if not isinstance(other, RatExpr):
            return NotImplemented
        return (self.num * other.den - other.num * self.den).is_zero

    __hash__ = None

    def derive(self, index: int) -> "RatExpr":
        if self.den.as_constant() == 1:
            return RatExpr(self.num.derive(index))
        return RatExpr(
            self.num.derive(index) * self.den - self.num * self.den.derive(index),
            self.den * self.den,
        )

    def substitute(self, images) -> "RatExpr":
        return RatExpr(self.num.substitute(images), self.den.substitute(images))

    def extend(self, extra: int = 1) -> "RatExpr":
        return RatExpr(self.num.extend(extra), self.den.extend(extra))

    def evaluate(self, point, logval=None, kval=None) -> Fraction:
        d = self.den.evaluate(point, logval, kval)
        if d == 0:
            raise EvaluationError("denominator vanishes at the sample point")
        return self.num.evaluate(point, logval, kval) / d

    def render(self, names) -> str:
        if self.den.as_constant() == 1:
            return format_expr(self.num, names)
        return f"({format_expr(self.num, names)})/({format_expr(self.den, names)})"

    def __str__(self):
        return self.render(_default_names(self.nvars))

    def __repr__(self):
        return f"<RatExpr {self}>"


def _cancel_content(num: Expr, den: Expr) -> tuple[Expr, Expr]:
    """Divide out the common monomial factor of num and den."""
    mins: list = [None] * (num.nvars + 2)
    for e in (num, den):
        for m in e.terms:
            vec = [Fraction(m.exp1), *m.rest, m.logpow, m.kpow]
            for i, v in enumerate(vec):
                if mins[i] is None or v < mins[i]:
                    mins[i] = v
    if not any(mins):
        return num, den

    def shift(e: Expr) -> Expr:
        terms = {}
        for m, c in e.terms.items():
            terms[Monomial(
                Fraction(m.exp1) - mins[0],
                tuple(r - mins[1 + i] for i, r in enumerate(m.rest)),
                m.logpow - mins[-2],
                m.kpow - mins[-1],
            )] = c
        return Expr(e.nvars, terms)

    return shift(num), shift(den)
