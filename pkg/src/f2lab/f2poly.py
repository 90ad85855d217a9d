"""Multilinear polynomials over F2 with exact, canonical arithmetic.

Representation: a polynomial over variables x1..xn is a frozenset of monomial
masks. Bit i-1 of a mask means the monomial contains x_i; the empty mask is the
constant monomial 1, and the empty set is the zero polynomial. Points of F2^n
are ints with the same little-endian convention (bit i-1 of a point is the
value of x_i), and truth tables are single big ints whose bit at position x is
the value at point x.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .config import DEFAULT_CAPS, Caps, check_cap
from .util import bits_of, iter_subsets

__all__ = [
    "MultilinearPoly",
    "TruthTable",
    "PolySyntaxError",
    "add",
    "bias",
    "correlation",
    "degree",
    "directional_derivative",
    "evaluate",
    "f2_matrix_rank",
    "from_truth_table",
    "hits_degree",
    "hits_degree_at_most",
    "multiply",
    "one",
    "parse_poly",
    "poly_to_text",
    "random_poly",
    "split_at_degree",
    "substitute",
    "truth_table",
    "zero",
]


@dataclass(frozen=True)
class MultilinearPoly:
    """A multilinear polynomial over F2 in ``n_vars`` variables."""

    n_vars: int
    monomials: frozenset[int]

    def __post_init__(self) -> None:
        if self.n_vars < 0:
            raise ValueError(f"n_vars must be non-negative, got {self.n_vars}")
        if not isinstance(self.monomials, frozenset):
            object.__setattr__(self, "monomials", frozenset(self.monomials))
        limit = 1 << self.n_vars
        for m in self.monomials:
            if m < 0 or m >= limit:
                raise ValueError(f"monomial mask {m:#b} out of range for {self.n_vars} variables")

    @property
    def is_zero(self) -> bool:
        return not self.monomials

    def degree(self) -> int:
        """Maximum monomial size; the zero polynomial reports -1 so bounds hold vacuously."""
        if not self.monomials:
            return -1
        return max(m.bit_count() for m in self.monomials)

    def evaluate(self, point: int) -> int:
        return evaluate(self, point)

    def __add__(self, other: "MultilinearPoly") -> "MultilinearPoly":
        return add(self, other)

    def __mul__(self, other: "MultilinearPoly") -> "MultilinearPoly":
        return multiply(self, other)

    def __str__(self) -> str:
        return poly_to_text(self)


@dataclass(frozen=True)
class TruthTable:
    """All 2**n_vars values of a boolean function packed into one int (bit x = value at x)."""

    n_vars: int
    bits: int

    def __post_init__(self) -> None:
        if self.n_vars < 0:
            raise ValueError(f"n_vars must be non-negative, got {self.n_vars}")
        if self.bits < 0 or self.bits >> (1 << self.n_vars):
            raise ValueError("truth-table bits out of range for the variable count")

    @property
    def size(self) -> int:
        return 1 << self.n_vars

    def value(self, point: int) -> int:
        if point < 0 or point >= self.size:
            raise ValueError(f"point {point} out of range for {self.n_vars} variables")
        return (self.bits >> point) & 1

    def ones(self) -> int:
        return self.bits.bit_count()


def zero(n_vars: int) -> MultilinearPoly:
    """The zero polynomial."""
    return MultilinearPoly(n_vars, frozenset())


def one(n_vars: int) -> MultilinearPoly:
    """The constant-1 polynomial."""
    return MultilinearPoly(n_vars, frozenset({0}))


def degree(f: MultilinearPoly) -> int:
    return f.degree()


def add(f: MultilinearPoly, g: MultilinearPoly) -> MultilinearPoly:
    """Sum over F2: the symmetric difference of monomial sets."""
    if f.n_vars != g.n_vars:
        raise ValueError(f"variable counts differ: {f.n_vars} vs {g.n_vars}")
    return MultilinearPoly(f.n_vars, f.monomials ^ g.monomials)


def multiply(f: MultilinearPoly, g: MultilinearPoly) -> MultilinearPoly:
    """Product with multilinear reduction x_i**2 = x_i: pairwise unions with parity."""
    if f.n_vars != g.n_vars:
        raise ValueError(f"variable counts differ: {f.n_vars} vs {g.n_vars}")
    parity: dict[int, int] = {}
    for mf in f.monomials:
        for mg in g.monomials:
            m = mf | mg
            parity[m] = parity.get(m, 0) ^ 1
    return MultilinearPoly(f.n_vars, frozenset(m for m, p in parity.items() if p))


def evaluate(f: MultilinearPoly, point: int) -> int:
    """Value at a point: parity of monomials entirely inside the point's support."""
    if point < 0 or point >> f.n_vars:
        raise ValueError(f"point {point} out of range for {f.n_vars} variables")
    acc = 0
    for m in f.monomials:
        if m & point == m:
            acc ^= 1
    return acc


@lru_cache(maxsize=None)
def _low_block_mask(n_vars: int, v: int) -> int:
    """2**n_vars-bit mask of the positions whose v-th bit is clear."""
    m = (1 << (1 << v)) - 1
    width = 1 << (v + 1)
    total = 1 << n_vars
    while width < total:
        m |= m << width
        width <<= 1
    return m


def _subset_parity_transform(bits: int, n_vars: int) -> int:
    """Self-inverse transform between coefficient and evaluation bit vectors.

    out[x] = XOR of in[s] over all s that are submasks of x. Applying it to the
    monomial indicator vector yields the truth table, and vice versa.
    """
    for v in range(n_vars):
        bits ^= (bits & _low_block_mask(n_vars, v)) << (1 << v)
    return bits


def truth_table(f: MultilinearPoly, caps: Caps = DEFAULT_CAPS) -> TruthTable:
    """Materialize all 2**n_vars values (guarded by the table cap)."""
    check_cap("truth table on this many variables", f.n_vars, caps.table)
    coeff = 0
    for m in f.monomials:
        coeff |= 1 << m
    return TruthTable(f.n_vars, _subset_parity_transform(coeff, f.n_vars))


def from_truth_table(table: TruthTable) -> MultilinearPoly:
    """Interpolate the unique multilinear polynomial with the given values."""
    coeff = _subset_parity_transform(table.bits, table.n_vars)
    return MultilinearPoly(table.n_vars, frozenset(bits_of(coeff)))


def bias(f: MultilinearPoly | TruthTable, caps: Caps = DEFAULT_CAPS) -> Fraction:
    """|#zeros - #ones| / 2**n_vars, exactly."""
    tt = truth_table(f, caps) if isinstance(f, MultilinearPoly) else f
    size = tt.size
    ones = tt.ones()
    return Fraction(abs(size - 2 * ones), size)


def correlation(
    f: MultilinearPoly | TruthTable, g: MultilinearPoly | TruthTable, caps: Caps = DEFAULT_CAPS
) -> Fraction:
    """|#agreements - #disagreements| / 2**n_vars, exactly."""
    tf = truth_table(f, caps) if isinstance(f, MultilinearPoly) else f
    tg = truth_table(g, caps) if isinstance(g, MultilinearPoly) else g
    if tf.n_vars != tg.n_vars:
        raise ValueError(f"variable counts differ: {tf.n_vars} vs {tg.n_vars}")
    disagree = (tf.bits ^ tg.bits).bit_count()
    return Fraction(abs(tf.size - 2 * disagree), tf.size)


def _shift_by_point(f: MultilinearPoly, v: int) -> MultilinearPoly:
    """The polynomial x -> f(x + v), expanded monomial by monomial."""
    parity: dict[int, int] = {}
    for m in f.monomials:
        fixed = m & ~v
        moving = m & v
        for sub in iter_subsets(moving):
            t = fixed | sub
            parity[t] = parity.get(t, 0) ^ 1
    return MultilinearPoly(f.n_vars, frozenset(m for m, p in parity.items() if p))


def directional_derivative(f: MultilinearPoly, directions: Iterable[int]) -> MultilinearPoly:
    """Iterated finite difference along a set of direction vectors.

    One direction v maps f to f(x) + f(x+v); repeated directions collapse to a
    set first (applying the same direction twice gives 0, which the set
    semantics here deliberately avoids).
    """
    dirs = sorted(set(directions))
    g = f
    for v in dirs:
        if v < 0 or v >> f.n_vars:
            raise ValueError(f"direction {v} out of range for {f.n_vars} variables")
        g = add(g, _shift_by_point(g, v))
    return g


def substitute(f: MultilinearPoly, replacements: Sequence[MultilinearPoly]) -> MultilinearPoly:
    """Plug replacement polynomials (all over a shared variable set) into f's variables."""
    if len(replacements) != f.n_vars:
        raise ValueError(f"need {f.n_vars} replacement polynomials, got {len(replacements)}")
    if replacements:
        k = replacements[0].n_vars
        for r in replacements:
            if r.n_vars != k:
                raise ValueError("replacement polynomials must share one variable count")
    else:
        k = 0
    acc = zero(k)
    for m in f.monomials:
        term = one(k)
        for i in bits_of(m):
            term = multiply(term, replacements[i])
            if term.is_zero:
                break
        acc = add(acc, term)
    return acc


def split_at_degree(f: MultilinearPoly, r: int) -> tuple[MultilinearPoly, MultilinearPoly]:
    """Split into (monomials of size <= r, monomials of size > r); the parts sum to f."""
    low = frozenset(m for m in f.monomials if m.bit_count() <= r)
    return (
        MultilinearPoly(f.n_vars, low),
        MultilinearPoly(f.n_vars, f.monomials - low),
    )


def hits_degree(f: MultilinearPoly, r: int) -> bool:
    """Whether some monomial has size exactly r (size 0 is the constant 1)."""
    if r < 0:
        raise ValueError(f"degree to hit must be non-negative, got {r}")
    return any(m.bit_count() == r for m in f.monomials)


def hits_degree_at_most(f: MultilinearPoly, r: int) -> bool:
    """Whether some monomial has size at most r."""
    if r < 0:
        raise ValueError(f"degree bound must be non-negative, got {r}")
    return any(m.bit_count() <= r for m in f.monomials)


def random_poly(n_vars: int, r: int, rng: int | random.Random) -> MultilinearPoly:
    """Uniformly random polynomial of degree <= r: a fair coin per monomial of size <= r.

    Monomials are enumerated in canonical (size, then lexicographic) order so a
    seed pins the polynomial exactly. Passing a ``random.Random`` draws from an
    existing stream instead of a fresh seed.
    """
    if r < 0:
        raise ValueError(f"degree bound must be non-negative, got {r}")
    gen = rng if isinstance(rng, random.Random) else random.Random(rng)
    monos: set[int] = set()
    for size in range(0, min(r, n_vars) + 1):
        for combo in itertools.combinations(range(n_vars), size):
            if gen.getrandbits(1):
                mask = 0
                for i in combo:
                    mask |= 1 << i
                monos.add(mask)
    return MultilinearPoly(n_vars, frozenset(monos))


def f2_matrix_rank(rows: Iterable[int | str | Sequence[int]], n_cols: int | None = None) -> int:
    """Rank over F2. Rows may be int masks, little-endian '0'/'1' strings, or 0/1 sequences.

    String/sequence rows must all share one length (ragged input is rejected).
    """
    masks: list[int] = []
    seen_len: int | None = None
    for row in rows:
        if isinstance(row, int):
            masks.append(row)
            continue
        if isinstance(row, str):
            bits = [1 if ch == "1" else 0 if ch == "0" else -1 for ch in row]
            if -1 in bits:
                raise ValueError(f"invalid bitstring row {row!r}")
        else:
            bits = [int(b) for b in row]
            if any(b not in (0, 1) for b in bits):
                raise ValueError("matrix entries must be 0 or 1")
        if seen_len is None:
            seen_len = len(bits)
        elif len(bits) != seen_len:
            raise ValueError(f"ragged rows: expected length {seen_len}, got {len(bits)}")
        mask = 0
        for j, b in enumerate(bits):
            if b:
                mask |= 1 << j
        masks.append(mask)
    if n_cols is not None:
        for m in masks:
            if m >> n_cols:
                raise ValueError(f"row {m:#b} wider than {n_cols} columns")
    pivots: dict[int, int] = {}
    rank = 0
    for row in masks:
        while row:
            lead = row.bit_length() - 1
            if lead in pivots:
                row ^= pivots[lead]
            else:
                pivots[lead] = row
                rank += 1
                break
    return rank


class PolySyntaxError(ValueError):
    """A malformed polynomial expression; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


_TOK_PLUS = "+"
_TOK_STAR = "*"
_TOK_ZERO = "0"
_TOK_ONE = "1"
_TOK_VAR = "x"
_TOK_END = "end"


def _tokenize(text: str) -> list[tuple[str, int, int]]:
    """Tokens as (kind, value, position); kinds: + * 0 1 x end."""
    out: list[tuple[str, int, int]] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "+*":
            out.append((ch, 0, i))
            i += 1
        elif ch in "01":
            out.append((ch, 0, i))
            i += 1
        elif ch == "x":
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            if j == i + 1:
                raise PolySyntaxError("expected a variable index after 'x'", i)
            out.append((_TOK_VAR, int(text[i + 1 : j]), i))
            i = j
        else:
            raise PolySyntaxError(f"unexpected character {ch!r}", i)
    out.append((_TOK_END, 0, n))
    return out


def parse_poly(text: str, n_vars: int) -> MultilinearPoly:
    """Parse ``term (+ term)*`` where a term is 0, 1, or a product of variables.

    Repeated monomials cancel (F2 addition) and repeated variables in one term
    collapse (multilinearity), so the result is always canonical.
    """
    tokens = _tokenize(text)
    pos = 0

    def peek() -> tuple[str, int, int]:
        return tokens[pos]

    def take() -> tuple[str, int, int]:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def parse_factor_mask() -> int:
        kind, value, at = take()
        if kind != _TOK_VAR:
            raise PolySyntaxError("expected a variable like x3", at)
        if value < 1 or value > n_vars:
            raise PolySyntaxError(f"variable x{value} out of range 1..{n_vars}", at)
        return 1 << (value - 1)

    def parse_term() -> frozenset[int] | None:
        """None encodes the zero term."""
        kind, _, at = peek()
        if kind == _TOK_ZERO:
            take()
            return None
        if kind == _TOK_ONE:
            take()
            return frozenset({0})
        if kind != _TOK_VAR:
            raise PolySyntaxError("expected a term (0, 1, or a product of variables)", at)
        mask = parse_factor_mask()
        while peek()[0] == _TOK_STAR:
            take()
            mask |= parse_factor_mask()
        return frozenset({mask})

    acc: frozenset[int] = frozenset()
    term = parse_term()
    if term is not None:
        acc ^= term
    while peek()[0] == _TOK_PLUS:
        take()
        term = parse_term()
        if term is not None:
            acc ^= term
    kind, _, at = peek()
    if kind != _TOK_END:
        raise PolySyntaxError("unexpected trailing input", at)
    return MultilinearPoly(n_vars, acc)


def poly_to_text(f: MultilinearPoly) -> str:
    """Canonical text: monomials sorted by (size, mask), '0'/'1' for the constants."""
    if not f.monomials:
        return "0"
    parts = []
    for m in sorted(f.monomials, key=lambda m: (m.bit_count(), m)):
        if m == 0:
            parts.append("1")
        else:
            parts.append("*".join(f"x{i + 1}" for i in bits_of(m)))
    return " + ".join(parts)
