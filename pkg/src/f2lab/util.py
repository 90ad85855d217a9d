"""Small shared helpers: bit twiddling, binomial sums, exact rational comparisons."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

__all__ = [
    "binom_sum",
    "bits_of",
    "bitstring_to_int",
    "frac_str",
    "int_to_bitstring",
    "iter_subsets",
    "leq_pow2",
    "parse_frac",
    "parity_of_and",
]


def binom_sum(n: int, r: int) -> int:
    """Number of subsets of an n-element set with size at most r (0 if r < 0)."""
    if r < 0:
        return 0
    return sum(math.comb(n, i) for i in range(0, min(r, n) + 1))


def iter_subsets(mask: int) -> Iterator[int]:
    """Yield every submask of ``mask`` exactly once, in descending order, ending at 0."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def bits_of(mask: int) -> Iterator[int]:
    """Yield the set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def parity_of_and(a: int, b: int) -> int:
    """Parity of the bitwise AND of two masks (the F2 inner product)."""
    return (a & b).bit_count() & 1


def int_to_bitstring(x: int, width: int) -> str:
    """Render ``x`` as a little-endian bitstring: character j is bit j of ``x``."""
    if x < 0 or x >> width:
        raise ValueError(f"value {x} does not fit in {width} bits")
    return "".join("1" if (x >> j) & 1 else "0" for j in range(width))


def bitstring_to_int(s: str, width: int | None = None) -> int:
    """Parse a little-endian bitstring; enforces ``width`` when given."""
    if width is not None and len(s) != width:
        raise ValueError(f"expected a bitstring of length {width}, got {len(s)}")
    x = 0
    for j, ch in enumerate(s):
        if ch == "1":
            x |= 1 << j
        elif ch != "0":
            raise ValueError(f"invalid bitstring character {ch!r} at position {j}")
    return x


def frac_str(q: Fraction | int) -> str:
    """Render a rational as ``num/den`` (always with an explicit denominator)."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_frac(s: str) -> Fraction:
    """Parse ``num/den`` (or a bare integer) into an exact Fraction."""
    s = s.strip()
    if "/" in s:
        num, den = s.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(s))


def leq_pow2(x: Fraction | int, log2_bound: Fraction | int) -> bool:
    """Exact test of ``x <= 2**log2_bound`` for rational x and rational exponent.

    Works entirely in integers: for x = a/b > 0 and exponent p/q (q > 0) the
    comparison is a**q <= b**q * 2**p, with the power of two moved to whichever
    side keeps both integers.
    """
    x = Fraction(x)
    if x <= 0:
        return True
    e = Fraction(log2_bound)
    p, q = e.numerator, e.denominator
    a, b = x.numerator, x.denominator
    lhs = a**q
    rhs = b**q
    if p >= 0:
        rhs <<= p
    else:
        lhs <<= -p
    return lhs <= rhs
