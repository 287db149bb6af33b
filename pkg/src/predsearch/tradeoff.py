"""Closed-form evaluation of the optimal predecessor search time.

Every inner logarithm is the rounded ``lg x = ceil(log2(x + 2))``, which is
at least 1 for every ``x >= 0``, so no expression divides by zero.  Outer
ratios are real valued.  Evaluation is exact: inputs become
:class:`fractions.Fraction` before ``lg`` is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .core import ParameterError

Number = int | float | Fraction

CSV_HEADER = ("n", "key_bits", "w", "S", "a", "b1", "b2", "b3", "b4", "min", "argmin")


def lg_paper(x: Number) -> int:
    """ceil(log2(x + 2)), computed without floating-point rounding."""
    if isinstance(x, float) and not math.isfinite(x):
        raise ParameterError(f"lg of non-finite value {x}")
    x = Fraction(x)
    if x < 0:
        raise ParameterError(f"lg of negative value {x}")
    # smallest k with 2**k >= x + 2, i.e. 2**k >= ceil(x) + 2
    return (math.ceil(x) + 1).bit_length()


@dataclass(frozen=True)
class TradeoffParams:
    n: int
    key_bits: int
    w: int
    S: int

    def __post_init__(self):
        if self.n < 1 or self.key_bits < 1:
            raise ParameterError("n and key_bits must be positive")
        if self.w < self.key_bits:
            raise ParameterError(f"word size {self.w} below key length {self.key_bits}")
        if self.S < self.n:
            raise ParameterError(f"space {self.S} below n = {self.n}")

    @property
    def a(self) -> int:
        return space_exponent(self.n, self.w, self.S)


def space_exponent(n: int, w: int, S: int) -> int:
    """a = lg(S/n) + lg w."""
    return lg_paper(Fraction(S, max(n, 1))) + lg_paper(w)


def branches(p: TradeoffParams) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """The four candidate search times, in order."""
    l, a = p.key_bits, p.a
    lg_n = lg_paper(p.n)
    b1 = Fraction(lg_n, lg_paper(p.w))
    b2 = Fraction(lg_paper(Fraction(max(0, l - lg_n), a)))
    lg_la = lg_paper(Fraction(l, a))
    b3 = Fraction(lg_la, lg_paper(Fraction(a, lg_n) * lg_la))
    b4 = Fraction(lg_la, lg_paper(Fraction(lg_la, lg_paper(Fraction(lg_n, a)))))
    return b1, b2, b3, b4


def optimal(p: TradeoffParams) -> tuple[Fraction, int]:
    """(minimum, 1-based argmin); ties go to the lower branch."""
    vals = branches(p)
    best = min(vals)
    return best, vals.index(best) + 1


def csv_row(p: TradeoffParams) -> list[str]:
    b = branches(p)
    best, arg = optimal(p)
    return [str(p.n), str(p.key_bits), str(p.w), str(p.S), str(p.a),
            *(_fmt(v) for v in b), _fmt(best), str(arg)]


def _fmt(v: Fraction) -> str:
    return f"{float(v):.6g}"


def sweep(base: TradeoffParams, param: str, values: Iterable[int]) -> list[TradeoffParams]:
    names = {"n": "n", "key_bits": "key_bits", "l": "key_bits", "w": "w", "S": "S"}
    if param not in names:
        raise ParameterError(f"cannot sweep {param!r}; choose one of n, key_bits, w, S")
    out = []
    for v in values:
        kw = {"n": base.n, "key_bits": base.key_bits, "w": base.w, "S": base.S}
        kw[names[param]] = v
        out.append(TradeoffParams(**kw))
    return out
