"""Complex polynomials, rational functions and vector-valued rational maps.

Coefficients are double-precision complex numbers stored densely in
ascending order.  Normal forms are reached by cancelling common roots of
numerator and denominator, found by clustering polynomial roots.
"""

from __future__ import annotations

import math
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, PoleHit

MAX_ORDER = 16
POLE_TOL = 1e-8
GCD_RESIDUAL_TOL = 1e-10
_CLUSTER_RTOL = 1e-4
_MATCH_RTOL = 1e-6
_TRIM_RTOL = 1e-14


def _as_coeffs(coeffs) -> np.ndarray:
    c = np.array(coeffs, dtype=complex).ravel()
    if c.size == 0:
        return np.zeros(1, dtype=complex)
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return np.zeros(1, dtype=complex)
    keep = np.nonzero(np.abs(c) > _TRIM_RTOL * scale)[0]
    c = c[: keep[-1] + 1].copy()
    c.setflags(write=False)
    return c


class Polynomial:
    """Dense complex polynomial in ``w`` with ascending coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        object.__setattr__(self, "coeffs", _as_coeffs(coeffs))

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @classmethod
    def monomial(cls, degree: int, coeff: complex = 1.0) -> "Polynomial":
        c = np.zeros(degree + 1, dtype=complex)
        c[degree] = coeff
        return cls(c)

    @classmethod
    def from_roots(cls, roots: Iterable[complex]) -> "Polynomial":
        out = cls([1.0])
        for r in roots:
            out = out * cls([-r, 1.0])
        return out

    @property
    def degree(self) -> int:
        return -1 if self.is_zero() else len(self.coeffs) - 1

    @property
    def lead(self) -> complex:
        return complex(self.coeffs[-1])

    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    def is_constant(self) -> bool:
        return len(self.coeffs) == 1

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(
            np.all(self.coeffs == other.coeffs)
        )

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)})"

    def _binary(self, other):
        if isinstance(other, Polynomial):
            return other
        return Polynomial([other])

    def __add__(self, other):
        other = self._binary(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(n, dtype=complex)
        a[: len(self.coeffs)] += self.coeffs
        a[: len(other.coeffs)] += other.coeffs
        return Polynomial(a)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def __sub__(self, other):
        return self + (-self._binary(other))

    def __rsub__(self, other):
        return self._binary(other) - self

    def __mul__(self, other):
        other = self._binary(other)
        return Polynomial(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        return reduce(lambda a, b: a * b, [self] * k, Polynomial([1.0]))

    def scale(self, c: complex) -> "Polynomial":
        return Polynomial(self.coeffs * c)

    def derivative(self, order: int = 1) -> "Polynomial":
        c = self.coeffs
        for _ in range(order):
            if len(c) == 1:
                return Polynomial([0.0])
            c = c[1:] * np.arange(1, len(c))
        return Polynomial(c)

    def taylor_poly(self, order: int) -> "Polynomial":
        """Coefficients of P^(order)/order! as a polynomial."""
        c = self.coeffs
        if order >= len(c):
            return Polynomial([0.0])
        d = np.arange(len(c) - order)
        binom = np.array([math.comb(int(k) + order, order) for k in d], dtype=float)
        return Polynomial(c[order:] * binom)

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        out = np.full(w.shape, self.coeffs[-1], dtype=complex)
        for c in self.coeffs[-2::-1]:
            out = out * w + c
        return out if out.ndim else complex(out)

    def abs_scale(self, w):
        """Sum of |a_i| |w|^i, the natural size bound for |P(w)|."""
        r = np.abs(np.asarray(w, dtype=complex))
        out = np.zeros(r.shape)
        for c in self.coeffs[::-1]:
            out = out * r + abs(c)
        return out

    def divmod(self, other: "Polynomial"):
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        num = self.coeffs.astype(complex).copy()
        den = other.coeffs
        dn = len(den) - 1
        if len(num) - 1 < dn:
            return Polynomial([0.0]), Polynomial(num)
        q = np.zeros(len(num) - dn, dtype=complex)
        for i in range(len(q) - 1, -1, -1):
            q[i] = num[i + dn] / den[-1]
            num[i : i + dn + 1] -= q[i] * den
        return Polynomial(q), Polynomial(num[:dn] if dn else [0.0])

    def monic(self) -> "Polynomial":
        if self.is_zero():
            return self
        return Polynomial(self.coeffs / self.coeffs[-1])

    def roots(self) -> np.ndarray:
        if self.degree <= 0:
            return np.zeros(0, dtype=complex)
        return np.roots(self.coeffs[::-1]).astype(complex)


def _clusters(roots: np.ndarray):
    """Group numerically repeated roots; return (center, multiplicity) pairs."""
    remaining = list(roots)
    out = []
    while remaining:
        r = remaining.pop(0)
        group = [r]
        rest = []
        for s in remaining:
            if abs(s - r) <= _CLUSTER_RTOL * (1 + abs(r)):
                group.append(s)
            else:
                rest.append(s)
        remaining = rest
        out.append((complex(np.mean(group)), len(group)))
    return out


def _vanishes(p: Polynomial, c: complex) -> bool:
    return abs(p(c)) <= GCD_RESIDUAL_TOL * max(p.abs_scale(c), 1e-300)


def poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    """Monic gcd over C[w] by root clustering."""
    if a.is_zero():
        return b.monic() if not b.is_zero() else Polynomial([1.0])
    if b.is_zero():
        return a.monic()
    if a.degree == 0 or b.degree == 0:
        return Polynomial([1.0])
    ca = _clusters(a.roots())
    cb = _clusters(b.roots())
    common = []
    used = set()
    for c1, m1 in ca:
        for idx, (c2, m2) in enumerate(cb):
            if idx in used:
                continue
            if abs(c1 - c2) <= _MATCH_RTOL * (1 + abs(c1)):
                c = 0.5 * (c1 + c2)
                if _vanishes(a, c) and _vanishes(b, c):
                    common.extend([c] * min(m1, m2))
                    used.add(idx)
                    break
    return Polynomial.from_roots(common)


def poly_lcm(a: Polynomial, b: Polynomial) -> Polynomial:
    g = poly_gcd(a, b)
    q, _ = (a * b).divmod(g)
    return q.monic()


def _exact_div(a: Polynomial, b: Polynomial) -> Polynomial:
    q, _ = a.divmod(b)
    return q


class RationalFunction:
    """Scalar rational function ``num/den`` kept in normal form."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, normalize: bool = True):
        num = num if isinstance(num, Polynomial) else Polynomial(np.atleast_1d(num))
        den = Polynomial([1.0]) if den is None else den
        den = den if isinstance(den, Polynomial) else Polynomial(np.atleast_1d(den))
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if normalize:
            if num.is_zero():
                den = Polynomial([1.0])
            else:
                g = poly_gcd(num, den)
                if g.degree > 0:
                    num = _exact_div(num, g)
                    den = _exact_div(den, g)
                lead = den.lead
                if lead != 1:
                    num = num.scale(1 / lead)
                    den = den.scale(1 / lead)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, name, value):
        raise AttributeError("RationalFunction is immutable")

    @classmethod
    def constant(cls, c: complex) -> "RationalFunction":
        return cls(Polynomial([c]))

    @classmethod
    def identity(cls) -> "RationalFunction":
        return cls(Polynomial([0.0, 1.0]))

    def __eq__(self, other):
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RationalFunction({format_rational(self)!r})"

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.degree == 0

    def _coerce(self, other):
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, Polynomial):
            return RationalFunction(other)
        return RationalFunction.constant(other)

    def __add__(self, other):
        o = self._coerce(other)
        if self.den == o.den:
            return RationalFunction(self.num + o.num, self.den)
        return RationalFunction(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den, normalize=False)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return RationalFunction(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.is_zero():
            raise ZeroDivisionError("division by the zero function")
        return RationalFunction(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return RationalFunction.constant(1.0) / (self ** (-k))
        return RationalFunction(self.num**k, self.den**k, normalize=False)

    def pole_mask(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        return np.abs(self.den(w)) <= POLE_TOL * (1 + np.abs(w)) ** max(self.den.degree, 0)

    def __call__(self, w):
        return rat_eval(self, w)


def rat_eval(f: RationalFunction, w):
    """Evaluate ``f`` at ``w`` (scalar or array); raise PoleHit on a pole."""
    w_arr = np.asarray(w, dtype=complex)
    if f.den.degree > 0 and np.any(f.pole_mask(w_arr)):
        raise PoleHit(f"pole of {format_rational(f)} hit")
    out = f.num(w_arr) / f.den(w_arr)
    return out


def rat_eval_masked(f: RationalFunction, w) -> np.ndarray:
    """Like rat_eval but returns nan at poles instead of raising."""
    w = np.asarray(w, dtype=complex)
    mask = f.pole_mask(w) if f.den.degree > 0 else np.zeros(w.shape, bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.asarray(f.num(w) / f.den(w), dtype=complex)
    out = np.where(mask, np.nan + 0j, out)
    return out


def rat_arith(a: RationalFunction, b: RationalFunction, kind: str) -> RationalFunction:
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "div":
        return a / b
    raise ValueError(f"unknown arithmetic kind {kind!r}")


def _derivative_parts(nums: Sequence[Polynomial], den: Polynomial, order: int):
    """Numerators and denominator of the order-th derivative of nums/den.

    With den in normal form and s its radical, one step maps n/d to
    (n' s - n e)/(d s) where e = d' s / d = sum_i mu_i s/(w - r_i).  The
    result is again in normal form, so no gcd of the rapidly growing
    intermediate polynomials is ever needed.
    """
    if den.degree <= 0:
        c = den.coeffs[0]
        return [p.derivative(order).scale(1 / c) for p in nums], Polynomial([1.0])
    clusters = _clusters(den.roots())
    s = Polynomial.from_roots([r for r, _ in clusters])
    cofactors = [_exact_div(s, Polynomial([-r, 1.0])) for r, _ in clusters]
    mult = [m for _, m in clusters]
    d = den.monic()
    nums = [p.scale(1 / den.lead) for p in nums]
    for _ in range(order):
        e = reduce(lambda a, b: a + b, [c.scale(m) for c, m in zip(cofactors, mult)], Polynomial([0.0]))
        nums = [p.derivative() * s - p * e for p in nums]
        d = d * s
        mult = [m + 1 for m in mult]
    return nums, d


def rat_derivative(f: RationalFunction, order: int = 1) -> RationalFunction:
    """Exact derivative of the given order, in normal form."""
    if order < 0 or order > MAX_ORDER:
        raise ValueError(f"derivative order must be in [0, {MAX_ORDER}]")
    if order == 0:
        return f
    (num,), den = _derivative_parts([f.num], f.den, order)
    if num.is_zero():
        return RationalFunction(Polynomial([0.0]))
    return RationalFunction(num, den, normalize=False)


class ScalarJet:
    """Truncated Taylor series sum_j coeffs[j] (s - center)^j.

    ``coeffs`` has shape (order + 1, *batch) so one jet can hold the
    expansions at many base points at once.
    """

    __slots__ = ("center", "coeffs")

    def __init__(self, center, coeffs):
        self.center = center
        self.coeffs = np.asarray(coeffs, dtype=complex)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    def __add__(self, other: "ScalarJet") -> "ScalarJet":
        k = min(self.order, other.order) + 1
        return ScalarJet(self.center, self.coeffs[:k] + other.coeffs[:k])

    def __mul__(self, other) -> "ScalarJet":
        if not isinstance(other, ScalarJet):
            return ScalarJet(self.center, self.coeffs * other)
        k = min(self.order, other.order) + 1
        return ScalarJet(self.center, series_mul(self.coeffs[:k], other.coeffs[:k]))

    __rmul__ = __mul__

    def __call__(self, h):
        out = np.zeros(self.coeffs.shape[1:], dtype=complex)
        for c in self.coeffs[::-1]:
            out = out * h + c
        return out


def series_mul(a: np.ndarray, b: np.ndarray, order: int | None = None) -> np.ndarray:
    """Cauchy product of coefficient stacks (leading axis = power)."""
    k = min(len(a), len(b)) if order is None else order + 1
    out = np.zeros((k,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]), dtype=complex)
    for i in range(min(k, len(a))):
        for j in range(min(k - i, len(b))):
            out[i + j] += a[i] * b[j]
    return out


def series_div(n: np.ndarray, d: np.ndarray) -> np.ndarray:
    k = min(len(n), len(d))
    q = np.zeros((k,) + np.broadcast_shapes(n.shape[1:], d.shape[1:]), dtype=complex)
    for i in range(k):
        acc = n[i].copy() if np.ndim(n[i]) else n[i]
        for j in range(1, i + 1):
            acc = acc - d[j] * q[i - j]
        q[i] = acc / d[0]
    return q


def poly_taylor(p: Polynomial, w0, order: int) -> np.ndarray:
    """Stack of P^(l)(w0)/l! for l = 0..order."""
    w0 = np.asarray(w0, dtype=complex)
    return np.stack([np.asarray(p.taylor_poly(l)(w0)) for l in range(order + 1)])


def taylor_jet(f: RationalFunction, w0, order: int) -> ScalarJet:
    """Taylor coefficients f^(l)(w0)/l! for l = 0..order (w0 may be an array)."""
    if order < 0 or order > MAX_ORDER:
        raise ValueError(f"jet order must be in [0, {MAX_ORDER}]")
    w0 = np.asarray(w0, dtype=complex)
    if f.den.degree > 0 and np.any(f.pole_mask(w0)):
        raise PoleHit("taylor_jet centred on a pole")
    n = poly_taylor(f.num, w0, order)
    if f.den.degree == 0:
        return ScalarJet(w0, n / f.den.coeffs[0])
    d = poly_taylor(f.den, w0, order)
    return ScalarJet(w0, series_div(n, d))


class RationalMap:
    """A C^n-valued rational map: polynomial numerators over one denominator."""

    __slots__ = ("numerators", "den")

    def __init__(self, numerators: Sequence, den=None, normalize: bool = True):
        nums = [p if isinstance(p, Polynomial) else Polynomial(np.atleast_1d(p)) for p in numerators]
        den = Polynomial([1.0]) if den is None else den
        den = den if isinstance(den, Polynomial) else Polynomial(np.atleast_1d(den))
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if normalize:
            g = den.monic()
            for p in nums:
                if g.degree <= 0:
                    break
                if not p.is_zero():
                    g = poly_gcd(g, p)
            if all(p.is_zero() for p in nums):
                g = den.monic()
            if g.degree > 0:
                nums = [_exact_div(p, g) for p in nums]
                den = _exact_div(den, g)
            lead = den.lead
            if lead != 1:
                nums = [p.scale(1 / lead) for p in nums]
                den = den.scale(1 / lead)
        object.__setattr__(self, "numerators", tuple(nums))
        object.__setattr__(self, "den", den)

    def __setattr__(self, name, value):
        raise AttributeError("RationalMap is immutable")

    @classmethod
    def from_functions(cls, funcs: Sequence[RationalFunction]) -> "RationalMap":
        funcs = [f if isinstance(f, RationalFunction) else RationalFunction.constant(f) for f in funcs]
        den = reduce(poly_lcm, [f.den for f in funcs], Polynomial([1.0]))
        nums = [f.num * _exact_div(den, f.den) for f in funcs]
        return cls(nums, den)

    @classmethod
    def parse(cls, texts: Sequence[str]) -> "RationalMap":
        return cls.from_functions([parse_rational(t) for t in texts])

    @property
    def n(self) -> int:
        return len(self.numerators)

    def __eq__(self, other):
        if not isinstance(other, RationalMap):
            return NotImplemented
        return self.numerators == other.numerators and self.den == other.den

    def __hash__(self):
        return hash((self.numerators, self.den))

    def __repr__(self):
        return f"RationalMap({[format_rational(f) for f in self.components()]})"

    def components(self) -> list[RationalFunction]:
        return [RationalFunction(p, self.den) for p in self.numerators]

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.numerators)

    def cleared(self) -> "RationalMap":
        """The polynomial map obtained by dropping the denominator."""
        return RationalMap(self.numerators, Polynomial([1.0]), normalize=False)

    def derivative(self, order: int = 1) -> "RationalMap":
        if order == 0:
            return self
        if order < 0 or order > MAX_ORDER:
            raise ValueError(f"derivative order must be in [0, {MAX_ORDER}]")
        nums, den = _derivative_parts(self.numerators, self.den, order)
        return RationalMap(nums, den, normalize=False)

    def __add__(self, other: "RationalMap") -> "RationalMap":
        return RationalMap.from_functions([a + b for a, b in zip(self.components(), other.components())])

    def scale(self, c) -> "RationalMap":
        if isinstance(c, RationalFunction):
            return RationalMap.from_functions([c * f for f in self.components()])
        return RationalMap([p.scale(c) for p in self.numerators], self.den, normalize=False)

    def pole_mask(self, w) -> np.ndarray:
        return RationalFunction(Polynomial([1.0]), self.den, normalize=False).pole_mask(w)

    def numerator_values(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        return np.stack([np.broadcast_to(p(w), w.shape) for p in self.numerators], axis=-1)

    def __call__(self, w, cleared: bool = False) -> np.ndarray:
        """Values with shape (*w.shape, n)."""
        w = np.asarray(w, dtype=complex)
        vals = self.numerator_values(w)
        if cleared:
            return vals
        if self.den.degree == 0:
            return vals / self.den.coeffs[0]
        if np.any(self.pole_mask(w)):
            raise PoleHit("rational map evaluated on a pole")
        return vals / np.asarray(self.den(w))[..., None]


def map_eval(V, w, cleared: bool = False) -> list[np.ndarray]:
    """Column vectors of ``V`` (a RationalMap or a list of them) at ``w``."""
    cols = [V] if isinstance(V, RationalMap) else list(V)
    return [c(w, cleared=cleared) for c in cols]


def maps_lcm_clear(maps: Sequence[RationalMap]) -> list[RationalMap]:
    """Multiply every map by the lcm of their denominators, giving polynomials.

    The common scalar factor keeps sums of the maps proportional to the
    uncleared sums, which the limiting construction relies on.
    """
    den = reduce(poly_lcm, [m.den for m in maps], Polynomial([1.0]))
    return [RationalMap([p * _exact_div(den, m.den) for p in m.numerators], Polynomial([1.0]), normalize=False) for m in maps]


# ---------------------------------------------------------------------------
# expression grammar


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self._skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def error(self, msg):
        raise ParseError(msg, self.pos)

    def parse(self) -> RationalFunction:
        if not self.text.strip():
            self.error("empty expression")
        out = self.expr()
        if self.peek():
            self.error(f"unexpected character {self.peek()!r}")
        return out

    def expr(self):
        out = self.term()
        while self.peek() in ("+", "-") and self.peek():
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self):
        out = self.signed()
        while self.peek() in ("*", "/") and self.peek():
            op = self.text[self.pos]
            where = self.pos
            self.pos += 1
            rhs = self.signed()
            if op == "*":
                out = out * rhs
            else:
                if rhs.is_zero():
                    raise ParseError("division by the zero polynomial", where)
                out = out / rhs
        return out

    def signed(self):
        c = self.peek()
        if c in ("-", "+") and c:
            self.pos += 1
            inner = self.signed()
            return -inner if c == "-" else inner
        return self.factor()

    def factor(self):
        base = self.base()
        if self.peek() == "^":
            self.pos += 1
            self._skip()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if start == self.pos:
                self.error("expected non-negative integer exponent")
            k = int(self.text[start : self.pos])
            if k > 64:
                raise ParseError("exponent too large", start)
            base = base**k
        return base

    def base(self):
        c = self.peek()
        if c == "w":
            self.pos += 1
            return RationalFunction.identity()
        if c == "i":
            self.pos += 1
            return RationalFunction.constant(1j)
        if c == "(":
            self.pos += 1
            out = self.expr()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return out
        if c.isdigit() or c == ".":
            value = self.decimal()
            if self.peek() == "i":
                self.pos += 1
                return RationalFunction.constant(complex(0.0, value))
            return RationalFunction.constant(complex(value, 0.0))
        if not c:
            self.error("unexpected end of expression")
        self.error(f"unexpected character {c!r}")

    def decimal(self) -> float:
        t = self.text
        start = self.pos
        while self.pos < len(t) and t[self.pos].isdigit():
            self.pos += 1
        if self.pos < len(t) and t[self.pos] == ".":
            self.pos += 1
            while self.pos < len(t) and t[self.pos].isdigit():
                self.pos += 1
        if t[start : self.pos] in (".", ""):
            raise ParseError("malformed number", start)
        if self.pos < len(t) and t[self.pos] in "eE":
            j = self.pos + 1
            if j < len(t) and t[j] in "+-":
                j += 1
            k = j
            while k < len(t) and t[k].isdigit():
                k += 1
            if k > j:
                self.pos = k
        return float(t[start : self.pos])


def parse_rational(text: str) -> RationalFunction:
    """Parse an expression in ``w`` such as ``"(1+2i)*w^2/(w-1)"``."""
    return _Parser(text).parse()


def parse_complex(text: str) -> complex:
    """Parse a constant expression (no ``w``) to a complex number."""
    f = parse_rational(text)
    if f.num.degree > 0 or f.den.degree > 0:
        raise ParseError(f"expected a constant, got {text!r}")
    return complex(f.num.coeffs[0] / f.den.coeffs[0])


def _fmt_real(x: float) -> str:
    return repr(float(x))


def format_complex(c: complex) -> str:
    c = complex(c)
    sign = "-" if math.copysign(1.0, c.imag) < 0 else "+"
    return f"({_fmt_real(c.real)}{sign}{_fmt_real(abs(c.imag))}i)"


def format_polynomial(p: Polynomial) -> str:
    if p.is_zero():
        return "0"
    terms = []
    for d, c in enumerate(p.coeffs):
        if c == 0:
            continue
        coef = format_complex(c)
        if d == 0:
            terms.append(coef)
        elif d == 1:
            terms.append(f"{coef}*w")
        else:
            terms.append(f"{coef}*w^{d}")
    return "+".join(terms)


def format_rational(f: RationalFunction) -> str:
    """Printable form that parses back to the same normal form."""
    return f"({format_polynomial(f.num)})/({format_polynomial(f.den)})"
