"""Trace invariants of colored matrix collections.

A single trace factor is a cyclic word in the colors 1..R; a product of
trace factors is the general invariant observable.  Canonical rotations,
cyclic symmetry orders and the automorphism bookkeeping they induce live
here, together with the small symbolic coupling ring used when coupling
constants stay letters instead of numbers.
"""

from __future__ import annotations

import re
from fractions import Fraction
from math import factorial

__all__ = ["TraceWord", "Invariant", "CouplingPoly"]

_WORD_RE = re.compile(r"tr\(([0-9,\s]+)\)\Z")


class TraceWord:
    """A single trace factor, stored as its minimal cyclic rotation."""

    __slots__ = ("colors",)

    def __init__(self, colors):
        colors = tuple(int(c) for c in colors)
        if not colors:
            raise ValueError("a trace word needs at least one letter")
        if any(c < 1 for c in colors):
            raise ValueError("colors are numbered from 1")
        self.colors = min(colors[i:] + colors[:i] for i in range(len(colors)))

    @classmethod
    def parse(cls, text):
        m = _WORD_RE.match(text.strip())
        if m is None:
            raise ValueError(f"cannot parse trace word {text!r}")
        return cls(int(p) for p in m.group(1).split(","))

    @property
    def degree(self):
        return len(self.colors)

    def symmetry(self):
        """Order of the rotation group fixing the cyclic word."""
        w = self.colors
        return sum(1 for i in range(len(w)) if w[i:] + w[:i] == w)

    def max_color(self):
        return max(self.colors)

    def format(self):
        return "tr(" + ",".join(str(c) for c in self.colors) + ")"

    def __eq__(self, other):
        return isinstance(other, TraceWord) and self.colors == other.colors

    def __hash__(self):
        return hash(self.colors)

    def __lt__(self, other):
        return (len(self.colors), self.colors) < (len(other.colors), other.colors)

    def __repr__(self):
        return f"TraceWord({self.format()})"


class Invariant:
    """A product of trace factors, kept sorted for canonical identity."""

    __slots__ = ("words",)

    def __init__(self, words):
        words = tuple(sorted(words))
        if not words:
            raise ValueError("an invariant needs at least one trace factor")
        self.words = words

    @classmethod
    def parse(cls, text):
        parts = text.split("*")
        return cls(TraceWord.parse(p) for p in parts)

    @classmethod
    def single(cls, colors):
        return cls((TraceWord(colors),))

    @property
    def degree(self):
        return sum(w.degree for w in self.words)

    @property
    def trace_count(self):
        return len(self.words)

    def max_color(self):
        return max(w.max_color() for w in self.words)

    def multiplicities(self):
        out = {}
        for w in self.words:
            out[w] = out.get(w, 0) + 1
        return out

    def aut_order(self):
        """Order of the group permuting equal factors and rotating each.

        This is the denominator group whose orbits turn raw pairing
        counts into weighted map counts.
        """
        n = 1
        for w, m in self.multiplicities().items():
            n *= factorial(m) * w.symmetry() ** m
        return n

    def format(self):
        return "*".join(w.format() for w in self.words)

    def __eq__(self, other):
        return isinstance(other, Invariant) and self.words == other.words

    def __hash__(self):
        return hash(self.words)

    def __lt__(self, other):
        return self.words < other.words

    def __repr__(self):
        return f"Invariant({self.format()})"


class CouplingPoly:
    """Polynomial in named coupling symbols with rational coefficients.

    Terms map a sorted tuple of (name, exponent) pairs to a Fraction.
    The empty tuple keys the constant term.
    """

    __slots__ = ("terms",)
    _TOWER = 2

    def __init__(self, terms=()):
        src = terms.items() if isinstance(terms, dict) else terms
        d = {}
        for mono, c in src:
            mono = tuple(sorted(mono))
            c = Fraction(c) + d.get(mono, 0)
            if c:
                d[mono] = c
            else:
                d.pop(mono, None)
        self.terms = d

    @classmethod
    def constant(cls, c):
        return cls({(): Fraction(c)})

    @classmethod
    def symbol(cls, name, power=1):
        return cls({((name, power),): Fraction(1)})

    def is_zero(self):
        return not self.terms

    def evaluate(self, values):
        """Substitute rationals for every symbol; raises on a missing one."""
        total = Fraction(0)
        for mono, c in self.terms.items():
            for name, p in mono:
                c = c * Fraction(values[name]) ** p
            total += c
        return total

    def symbols(self):
        return sorted({name for mono in self.terms for name, _ in mono})

    def __eq__(self, other):
        if isinstance(other, CouplingPoly):
            return self.terms == other.terms
        if other == 0:
            return not self.terms
        return self.terms == {(): Fraction(other)}

    def __neg__(self):
        return CouplingPoly({m: -c for m, c in self.terms.items()})

    def __add__(self, other):
        if not isinstance(other, CouplingPoly):
            if _outranks_coupling(other):
                return NotImplemented
            other = CouplingPoly.constant(other)
        d = dict(self.terms)
        for m, c in other.terms.items():
            d[m] = d.get(m, 0) + c
        return CouplingPoly(d)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, CouplingPoly):
            if _outranks_coupling(other):
                return NotImplemented
            other = CouplingPoly.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, CouplingPoly):
            d = {}
            for m1, c1 in self.terms.items():
                for m2, c2 in other.terms.items():
                    mono = _merge_monomials(m1, m2)
                    d[mono] = d.get(mono, 0) + c1 * c2
            return CouplingPoly(d)
        if _outranks_coupling(other):
            return NotImplemented
        return CouplingPoly({m: c * other for m, c in self.terms.items()})

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise TypeError("coupling powers must be nonnegative integers")
        out = CouplingPoly.constant(1)
        for _ in range(n):
            out = out * self
        return out

    def __repr__(self):
        if not self.terms:
            return "CouplingPoly(0)"
        bits = []
        for mono in sorted(self.terms):
            c = self.terms[mono]
            sym = "*".join(f"{n}^{p}" if p != 1 else n for n, p in mono)
            bits.append(f"{c}" + (f"*{sym}" if sym else ""))
        return "CouplingPoly(" + " + ".join(bits) + ")"


def _merge_monomials(m1, m2):
    d = dict(m1)
    for name, p in m2:
        d[name] = d.get(name, 0) + p
    return tuple(sorted(d.items()))


def _outranks_coupling(other):
    return getattr(other, "_TOWER", 0) > CouplingPoly._TOWER
