"""Model files: the quadratic form and the interaction couplings.

A model is a finite collection of Hermitian matrices tied together by a
symmetric positive quadratic form C and a list of interaction couplings
attached to trace invariants.  Files are JSON with an explicit format
version; coupling values are either rational strings ("1/3") or bare
symbol names ("g3") that stay symbolic through every computation.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction

from .invariants import CouplingPoly, Invariant

__all__ = ["Model", "MODEL_FORMAT", "load_model", "save_model", "model_from_dict"]

MODEL_FORMAT = "formalmaps-model/1"

_SYMBOL_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


def _invert_matrix(rows):
    """Exact inverse of a small rational matrix by Gauss-Jordan."""
    n = len(rows)
    a = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)]
         for i, r in enumerate(rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ValueError("quadratic form is singular")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [inv * x for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return tuple(tuple(row[n:]) for row in a)


@dataclass(frozen=True)
class Model:
    """An R color model: quadratic form C plus interaction couplings.

    ``potential`` maps an Invariant to its coupling, a Fraction or a
    CouplingPoly when the coupling is kept symbolic.  Quadratic terms
    belong in C, so every interaction must have degree at least 3.
    """

    colors: int
    quadratic: tuple
    potential: tuple

    def __post_init__(self):
        r = self.colors
        if r < 1:
            raise ValueError("need at least one color")
        q = self.quadratic
        if len(q) != r or any(len(row) != r for row in q):
            raise ValueError("quadratic form must be colors x colors")
        for i in range(r):
            for j in range(r):
                if q[i][j] != q[j][i]:
                    raise ValueError("quadratic form must be symmetric")
        seen = set()
        for inv, _ in self.potential:
            if inv.degree < 3:
                raise ValueError(f"interaction {inv.format()} has degree < 3; "
                                 "quadratic terms belong in the quadratic form")
            if inv.max_color() > r:
                raise ValueError(f"interaction {inv.format()} uses an unknown color")
            if inv in seen:
                raise ValueError(f"duplicate interaction {inv.format()}")
            seen.add(inv)

    @classmethod
    def build(cls, colors, quadratic, potential):
        q = tuple(tuple(Fraction(x) for x in row) for row in quadratic)
        pot = []
        for inv, val in (potential.items() if isinstance(potential, dict) else potential):
            if isinstance(inv, str):
                inv = Invariant.parse(inv)
            if not isinstance(val, CouplingPoly):
                val = Fraction(val)
            pot.append((inv, val))
        pot.sort(key=lambda p: p[0].words)
        return cls(colors, q, tuple(pot))

    def cinv(self):
        return _invert_matrix(self.quadratic)

    def is_symbolic(self):
        return any(isinstance(v, CouplingPoly) for _, v in self.potential)

    def coupling(self, invariant):
        for inv, val in self.potential:
            if inv == invariant:
                return val
        raise KeyError(invariant.format())

    def to_dict(self):
        pot = {}
        for inv, val in self.potential:
            if isinstance(val, CouplingPoly):
                syms = val.symbols()
                if len(syms) == 1 and val == CouplingPoly.symbol(syms[0]):
                    pot[inv.format()] = syms[0]
                else:
                    raise ValueError("only bare symbols serialize as couplings")
            else:
                pot[inv.format()] = str(val)
        return {
            "format": MODEL_FORMAT,
            "colors": self.colors,
            "quadratic": [[str(x) for x in row] for row in self.quadratic],
            "potential": pot,
        }


def model_from_dict(data):
    if data.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {data.get('format')!r}, "
                         f"expected {MODEL_FORMAT}")
    pot = {}
    for key, val in data.get("potential", {}).items():
        try:
            value = Fraction(val)
        except ValueError:
            if not _SYMBOL_RE.match(val):
                raise ValueError(f"coupling {val!r} is neither a rational "
                                 "nor a symbol name") from None
            value = CouplingPoly.symbol(val)
        pot[key] = value
    return Model.build(int(data["colors"]), data["quadratic"], pot)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
