"""Exact truncated series arithmetic over duck typed coefficient rings.

Everything downstream (pairing sums, spectral curves, recursion
kernels) runs on the two containers defined here:

* ``TruncatedSeries``: a power series known through its first ``order``
  coefficients, stored densely.
* ``LSeries``: a Laurent series known on an exponent window
  ``[val, order)``; exponents below ``val`` are exact zeros, exponents
  at or past ``order`` are unknown.

Coefficients are duck typed.  Anything supporting ``+``, ``-``, ``*``
with itself and with ``int`` / ``Fraction`` scalars works: Fraction,
Laurent polynomials in the matrix size, coupling polynomials, quadratic
extension elements.  The plain integers 0 and 1 act as neutral
elements, so coefficient rings must absorb them (Fraction does, and so
do all the rings in this package).

Binary operations track how far the result is reliable and always keep
the pessimistic bound.
"""

from __future__ import annotations

from fractions import Fraction

__all__ = [
    "TruncatedSeries",
    "LSeries",
    "LaurentPolyN",
    "BivariatePoly",
    "Jet",
    "series_mul",
    "series_log",
    "series_exp",
    "newton_branch",
    "newton_system",
]


def _invert(c):
    if isinstance(c, int):
        return Fraction(1, c)
    inv = getattr(c, "inv", None)
    if inv is not None:
        return inv()
    return 1 / c


def _outranks(obj, other):
    """True when `other` sits higher in the container tower than `obj`.

    Containers treat lower ranked operands as coefficient scalars and
    return NotImplemented for higher ranked ones, so mixed arithmetic
    always lands in the outermost container's method.
    """
    return getattr(other, "_TOWER", 0) > type(obj)._TOWER


class TruncatedSeries:
    """Power series known through the first ``order`` coefficients.

    The invariant ``len(coeffs) == order`` holds at all times; missing
    entries are padded with integer zeros.
    """

    __slots__ = ("coeffs", "order")
    _TOWER = 10

    def __init__(self, coeffs=(), order=None):
        coeffs = tuple(coeffs)
        if order is None:
            order = len(coeffs)
        if order < 0:
            raise ValueError("order must be nonnegative")
        if len(coeffs) > order:
            coeffs = coeffs[:order]
        elif len(coeffs) < order:
            coeffs = coeffs + (0,) * (order - len(coeffs))
        self.coeffs = coeffs
        self.order = order

    @classmethod
    def constant(cls, c, order):
        return cls((c,), order)

    def coefficient(self, n):
        if not 0 <= n < self.order:
            raise ValueError(f"coefficient {n} is outside the known range [0, {self.order})")
        return self.coeffs[n]

    def valuation(self):
        for n, c in enumerate(self.coeffs):
            if not c == 0:
                return n
        return None

    def is_zero(self):
        return all(c == 0 for c in self.coeffs)

    def truncate(self, order):
        if order >= self.order:
            return self
        return TruncatedSeries(self.coeffs[:order], order)

    def shift(self, k):
        """Multiply by t**k, k >= 0; the new low coefficients are exact zeros."""
        if k < 0:
            raise ValueError("shift amount must be nonnegative")
        if k == 0:
            return self
        return TruncatedSeries((0,) * k + self.coeffs, self.order + k)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.order == other.order and all(
            a == b for a, b in zip(self.coeffs, other.coeffs))

    def __neg__(self):
        return TruncatedSeries(tuple(-c for c in self.coeffs), self.order)

    def __add__(self, other):
        if isinstance(other, TruncatedSeries):
            n = min(self.order, other.order)
            return TruncatedSeries(
                tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), n)
        if isinstance(other, LSeries) or _outranks(self, other):
            return NotImplemented
        if self.order == 0:
            return self
        return TruncatedSeries((self.coeffs[0] + other,) + self.coeffs[1:], self.order)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, TruncatedSeries):
            return self + (-other)
        if isinstance(other, LSeries) or _outranks(self, other):
            return NotImplemented
        return self + (-1 * other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            n = min(self.order, other.order)
            a, b = self.coeffs, other.coeffs
            out = []
            for k in range(n):
                acc = a[0] * b[k]
                for i in range(1, k + 1):
                    acc = acc + a[i] * b[k - i]
                out.append(acc)
            return TruncatedSeries(tuple(out), n)
        if isinstance(other, LSeries) or _outranks(self, other):
            return NotImplemented
        return TruncatedSeries(tuple(c * other for c in self.coeffs), self.order)

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("series powers must be integers")
        if n < 0:
            return self.inverse() ** (-n)
        result = TruncatedSeries.constant(1, self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def inverse(self):
        if self.order == 0:
            return self
        c0 = self.coeffs[0]
        if c0 == 0:
            raise ZeroDivisionError("constant term is zero, series is not invertible")
        inv0 = _invert(c0)
        a = self.coeffs
        out = [inv0]
        for n in range(1, self.order):
            acc = a[1] * out[n - 1]
            for m in range(2, n + 1):
                acc = acc + a[m] * out[n - m]
            out.append(-(inv0 * acc))
        return TruncatedSeries(tuple(out), self.order)

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self * other.inverse()
        return self * _invert(other)

    def log(self):
        """Logarithm of a series with constant term 1.

        Uses n*l_n = n*a_n - sum_{m<n} m*l_m*a_{n-m}, which needs no
        divisions in the coefficient ring beyond rational scalars.
        """
        if self.order == 0:
            return self
        a = self.coeffs
        if not a[0] == 1:
            raise ValueError("log needs constant term 1")
        out = [a[0] - a[0]]
        for n in range(1, self.order):
            acc = a[n] * n
            for m in range(1, n):
                acc = acc - (out[m] * m) * a[n - m]
            out.append(acc * Fraction(1, n))
        return TruncatedSeries(tuple(out), self.order)

    def exp(self):
        """Exponential of a series with constant term 0."""
        if self.order == 0:
            return self
        a = self.coeffs
        if not a[0] == 0:
            raise ValueError("exp needs constant term 0")
        out = [a[0] + 1]
        for n in range(1, self.order):
            acc = a[1] * out[n - 1]
            for m in range(2, n + 1):
                acc = acc + (a[m] * m) * out[n - m]
            out.append(acc * Fraction(1, n))
        return TruncatedSeries(tuple(out), self.order)

    def to_json(self):
        return {"order": self.order, "coeffs": [str(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, data):
        return cls(tuple(Fraction(s) for s in data["coeffs"]), int(data["order"]))

    def __repr__(self):
        return f"TruncatedSeries({list(self.coeffs)}, order={self.order})"


def series_mul(a, b):
    return a * b


def series_log(a):
    return a.log()


def series_exp(a):
    return a.exp()


class LSeries:
    """Laurent series with window semantics.

    ``coeffs[i]`` is the coefficient of exponent ``val + i``.  The
    constructor strips leading zeros (raising ``val``) so that the
    first stored coefficient is the valuation term whenever one is
    known; an all zero window collapses to ``val == order``.
    """

    __slots__ = ("val", "coeffs", "order")
    _TOWER = 10

    def __init__(self, val, coeffs=(), order=None):
        coeffs = tuple(coeffs)
        if order is None:
            order = val + len(coeffs)
        if order < val + len(coeffs):
            coeffs = coeffs[: order - val] if order > val else ()
        elif order > val + len(coeffs):
            coeffs = coeffs + (0,) * (order - val - len(coeffs))
        while coeffs and coeffs[0] == 0:
            coeffs = coeffs[1:]
            val += 1
        if not coeffs:
            val = order
        self.val = val
        self.coeffs = coeffs
        self.order = order

    @classmethod
    def zero(cls, order):
        return cls(order, (), order)

    @classmethod
    def constant(cls, c, order):
        return cls(0, (c,), order)

    @classmethod
    def monomial(cls, c, e, order):
        return cls(e, (c,), order)

    def coefficient(self, e):
        if e >= self.order:
            raise ValueError(f"exponent {e} is at or past the window end {self.order}")
        if e < self.val:
            return 0
        return self.coeffs[e - self.val]

    def residue(self):
        return self.coefficient(-1)

    def valuation(self):
        return self.val if self.coeffs else None

    def is_zero(self):
        return not self.coeffs

    def truncate(self, order):
        if order >= self.order:
            return self
        return LSeries(self.val, self.coeffs[: max(0, order - self.val)], order)

    def shift(self, k):
        return LSeries(self.val + k, self.coeffs, self.order + k)

    def __eq__(self, other):
        if not isinstance(other, LSeries):
            return NotImplemented
        return (self.val == other.val and self.order == other.order
                and all(a == b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self):
        return LSeries(self.val, tuple(-c for c in self.coeffs), self.order)

    def _add_scalar(self, c):
        if c == 0 or self.order <= 0:
            return self
        v = min(self.val, 0)
        out = [self.coefficient(e) for e in range(v, self.order)]
        out[-v] = out[-v] + c
        return LSeries(v, tuple(out), self.order)

    def __add__(self, other):
        if not isinstance(other, LSeries):
            if isinstance(other, TruncatedSeries) or _outranks(self, other):
                return NotImplemented
            return self._add_scalar(other)
        order = min(self.order, other.order)
        val = min(self.val, other.val)
        if order <= val:
            return LSeries(order, (), order)
        out = tuple(self.coefficient(e) + other.coefficient(e)
                    for e in range(val, order))
        return LSeries(val, out, order)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, LSeries):
            return self + (-other)
        if isinstance(other, TruncatedSeries) or _outranks(self, other):
            return NotImplemented
        return self._add_scalar(-1 * other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, LSeries):
            if isinstance(other, TruncatedSeries) or _outranks(self, other):
                return NotImplemented
            if other == 0:
                return LSeries(self.order, (), self.order)
            return LSeries(self.val, tuple(c * other for c in self.coeffs), self.order)
        val = self.val + other.val
        order = min(self.order + other.val, other.order + self.val)
        n = order - val
        if n <= 0:
            return LSeries(order, (), order)
        a, b = self.coeffs, other.coeffs
        out = [0] * n
        for i, ai in enumerate(a):
            if i >= n:
                break
            for j, bj in enumerate(b):
                k = i + j
                if k >= n:
                    break
                out[k] = out[k] + ai * bj
        return LSeries(val, tuple(out), order)

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("series powers must be integers")
        if n < 0:
            return self.inv() ** (-n)
        if n == 0:
            return LSeries(0, (1,), self.order - self.val)
        result = self
        for _ in range(n - 1):
            result = result * self
        return result

    def inv(self):
        if not self.coeffs:
            raise ZeroDivisionError("no known nonzero coefficient to invert")
        a = self.coeffs
        inv0 = _invert(a[0])
        out = [inv0]
        for n in range(1, len(a)):
            acc = a[1] * out[n - 1]
            for m in range(2, n + 1):
                acc = acc + a[m] * out[n - m]
            out.append(-(inv0 * acc))
        return LSeries(-self.val, tuple(out), -self.val + len(a))

    def __truediv__(self, other):
        if isinstance(other, LSeries):
            return self * other.inv()
        return self * _invert(other)

    def derivative(self):
        out = tuple(c * (self.val + i) for i, c in enumerate(self.coeffs))
        return LSeries(self.val - 1, out, self.order - 1)

    def antiderivative(self):
        """Term by term primitive with zero constant; rejects a residue term."""
        out = []
        for i, c in enumerate(self.coeffs):
            e = self.val + i
            if e == -1:
                if not c == 0:
                    raise ValueError("nonzero residue term, primitive is not a Laurent series")
                out.append(0)
            else:
                out.append(c * Fraction(1, e + 1))
        return LSeries(self.val + 1, tuple(out), self.order + 1)

    def log_unit(self):
        if self.val != 0 or not self.coeffs or not self.coeffs[0] == 1:
            raise ValueError("log needs a unit with constant term 1")
        body = TruncatedSeries(self.coeffs).log()
        return LSeries(0, body.coeffs, self.order)

    def __repr__(self):
        return f"LSeries(val={self.val}, {list(self.coeffs)}, order={self.order})"


class LaurentPolyN:
    """Exact Laurent polynomial in a single size symbol.

    Used to keep the full size dependence of a quantity before reading
    off the genus grading.  Terms are a sparse power -> coefficient map
    with zero coefficients dropped.
    """

    __slots__ = ("terms",)
    _TOWER = 5

    def __init__(self, terms=()):
        src = terms.items() if isinstance(terms, dict) else terms
        d = {}
        for p, c in src:
            if p in d:
                c = d[p] + c
            d[p] = c
        self.terms = {p: c for p, c in d.items() if not c == 0}

    @classmethod
    def constant(cls, c):
        return cls({0: c})

    def coefficient(self, p):
        return self.terms.get(p, 0)

    def powers(self):
        return sorted(self.terms)

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, LaurentPolyN):
            if set(self.terms) != set(other.terms):
                return False
            return all(self.terms[p] == other.terms[p] for p in self.terms)
        if other == 0:
            return not self.terms
        return self == LaurentPolyN({0: other})

    def __neg__(self):
        return LaurentPolyN({p: -c for p, c in self.terms.items()})

    def __add__(self, other):
        if not isinstance(other, LaurentPolyN):
            if _outranks(self, other):
                return NotImplemented
            other = LaurentPolyN({0: other})
        d = dict(self.terms)
        for p, c in other.terms.items():
            d[p] = d.get(p, 0) + c
        return LaurentPolyN(d)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, LaurentPolyN) and _outranks(self, other):
            return NotImplemented
        return self + (-(other if isinstance(other, LaurentPolyN)
                         else LaurentPolyN({0: other})))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, LaurentPolyN):
            d = {}
            for p, c in self.terms.items():
                for q, e in other.terms.items():
                    d[p + q] = d.get(p + q, 0) + c * e
            return LaurentPolyN(d)
        if _outranks(self, other):
            return NotImplemented
        return LaurentPolyN({p: c * other for p, c in self.terms.items()})

    __rmul__ = __mul__

    def __repr__(self):
        return f"LaurentPolyN({self.terms})"


class BivariatePoly:
    """Polynomial in one unknown u and the series variable t.

    Terms map (u_power, t_power) to a rational coefficient.
    """

    __slots__ = ("terms",)

    def __init__(self, terms):
        src = terms.items() if isinstance(terms, dict) else terms
        self.terms = {}
        for (i, j), c in src:
            c = Fraction(c) + self.terms.get((i, j), 0)
            if c:
                self.terms[(i, j)] = c
            else:
                self.terms.pop((i, j), None)

    def d_du(self):
        return BivariatePoly({(i - 1, j): c * i
                              for (i, j), c in self.terms.items() if i > 0})

    def eval_at_zero(self, u0):
        u0 = Fraction(u0)
        return sum((c * u0 ** i for (i, j), c in self.terms.items() if j == 0),
                   Fraction(0))

    def eval_series(self, u):
        order = u.order
        top = max((i for i, _ in self.terms), default=0)
        pows = [TruncatedSeries.constant(1, order)]
        for _ in range(top):
            pows.append(pows[-1] * u)
        acc = TruncatedSeries((), order)
        for (i, j), c in self.terms.items():
            acc = acc + (pows[i] * c).shift(j).truncate(order)
        return acc


def newton_branch(poly, seed, order):
    """Power series root u(t) of poly(u, t) = 0 with u(0) = seed.

    Precision doubling iteration.  The seed must be a simple root of
    poly(u, 0); a vanishing u-derivative there raises ValueError since
    the branch is then not an ordinary power series in t.
    """
    seed = Fraction(seed)
    if poly.eval_at_zero(seed) != 0:
        raise ValueError("seed is not a root at t = 0")
    dpoly = poly.d_du()
    if dpoly.eval_at_zero(seed) == 0:
        raise ValueError("derivative vanishes at the seed, root is not simple")
    u = TruncatedSeries((seed,), 1)
    prec = 1
    while prec < order:
        prec = min(2 * prec, order)
        u = TruncatedSeries(u.coeffs, prec)
        u = u - poly.eval_series(u) / dpoly.eval_series(u)
    residual = poly.eval_series(u)
    if not residual.is_zero():
        raise ArithmeticError("iteration failed to cancel the residual")
    return u


class Jet:
    """Forward mode derivative carrier: a value plus a gradient tuple.

    Gradient slots hold the same kind of object as the value (or plain
    0/1 integers before any arithmetic has touched them).
    """

    __slots__ = ("val", "grad")
    _TOWER = 20

    def __init__(self, val, grad):
        self.val = val
        self.grad = tuple(grad)

    def __neg__(self):
        return Jet(-self.val, tuple(-g for g in self.grad))

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val,
                       tuple(a + b for a, b in zip(self.grad, other.grad)))
        if _outranks(self, other):
            return NotImplemented
        return Jet(self.val + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val * other.val,
                       tuple(self.val * h + g * other.val
                             for g, h in zip(self.grad, other.grad)))
        if _outranks(self, other):
            return NotImplemented
        return Jet(self.val * other, tuple(g * other for g in self.grad))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            raise TypeError("divide jets by scalars only")
        return self * _invert(other)

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise TypeError("jet powers must be nonnegative integers")
        if n == 0:
            return Jet(1, (0,) * len(self.grad))
        result = self
        for _ in range(n - 1):
            result = result * self
        return result


def _as_series(v, order):
    if isinstance(v, TruncatedSeries):
        if v.order < order:
            raise ArithmeticError("equation lost precision below the working order")
        return v.truncate(order)
    return TruncatedSeries.constant(v, order)


def _solve_linear_series(a, b, order):
    """Gauss-Jordan over truncated series; pivots need a unit constant term."""
    n = len(b)
    a = [row[:] for row in a]
    b = b[:]
    for col in range(n):
        piv = None
        for r in range(col, n):
            c = a[r][col]
            if c.order > 0 and not c.coeffs[0] == 0:
                piv = r
                break
        if piv is None:
            raise ArithmeticError("jacobian is singular at t = 0")
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        inv = a[col][col].inverse()
        a[col] = [inv * e for e in a[col]]
        b[col] = inv * b[col]
        for r in range(n):
            if r == col:
                continue
            f = a[r][col]
            if f.is_zero():
                continue
            a[r] = [e - f * p for e, p in zip(a[r], a[col])]
            b[r] = b[r] - f * b[col]
    return b


def newton_system(equations, seeds, order):
    """Solve a square polynomial system over power series in t.

    ``equations(vars)`` must return one Jet per unknown when handed Jet
    valued unknowns; ``seeds`` are the exact t = 0 values.  The
    Jacobian has to be invertible at t = 0 for the series Gauss
    elimination to find unit pivots.
    """
    n = len(seeds)
    xs = [TruncatedSeries((Fraction(s),), order) for s in seeds]
    for _ in range(max(4, order.bit_length() + 3)):
        jets = [Jet(x, tuple(1 if j == i else 0 for j in range(n)))
                for i, x in enumerate(xs)]
        out = equations(jets)
        if len(out) != n:
            raise ValueError("system is not square")
        resid = [_as_series(jet.val, order) for jet in out]
        if all(r.is_zero() for r in resid):
            return xs
        jac = [[_as_series(out[i].grad[j], order) for j in range(n)]
               for i in range(n)]
        delta = _solve_linear_series(jac, [-r for r in resid], order)
        xs = [x + d for x, d in zip(xs, delta)]
    raise ArithmeticError("iteration did not converge to a series solution")
