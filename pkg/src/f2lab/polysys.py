"""Systems of multilinear F2 polynomials: exact common solutions, solution-count
and low-weight bounds, support-restricted and sumset solution searches, and the
symmetric-composition rank check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .config import (
    DEFAULT_CAPS,
    Caps,
    SearchCapExceeded,
    UnsatisfiableSystemError,
    check_cap,
)
from .f2poly import MultilinearPoly, f2_matrix_rank, truth_table
from .util import binom_sum, bits_of

__all__ = [
    "ClpRankCheck",
    "CountCheck",
    "LowWeightCheck",
    "PolySystem",
    "SumsetSearch",
    "clp_rank_check",
    "common_solutions",
    "cw_count_check",
    "low_weight_bound",
    "low_weight_cw_check",
    "min_weight_nontrivial_solution",
    "sumset_solution_search",
]


@dataclass(frozen=True)
class PolySystem:
    """A finite set of polynomials over one variable set.

    Constant 0 members are dropped (they constrain nothing); constant 1 makes
    the system unsatisfiable and is rejected outright. Duplicates collapse.
    """

    n_vars: int
    polys: tuple[MultilinearPoly, ...]

    def __post_init__(self) -> None:
        kept: list[MultilinearPoly] = []
        seen: set[frozenset[int]] = set()
        for f in self.polys:
            if f.n_vars != self.n_vars:
                raise ValueError(f"polynomial over {f.n_vars} variables in a {self.n_vars}-variable system")
            if f.is_zero:
                continue
            if f.monomials == frozenset({0}):
                raise UnsatisfiableSystemError("the constant 1 admits no solutions")
            if f.monomials in seen:
                continue
            seen.add(f.monomials)
            kept.append(f)
        object.__setattr__(self, "polys", tuple(kept))

    @property
    def linear_degree(self) -> int:
        """Sum of degrees over the degree-exactly-1 members."""
        return sum(1 for f in self.polys if f.degree() == 1)

    @property
    def nonlinear_degree(self) -> int:
        """Sum of degrees over the degree-at-least-2 members."""
        return sum(f.degree() for f in self.polys if f.degree() >= 2)

    @property
    def total_degree(self) -> int:
        return self.linear_degree + self.nonlinear_degree

    def evaluates_to_zero(self, point: int) -> bool:
        for f in self.polys:
            acc = 0
            for m in f.monomials:
                if m & point == m:
                    acc ^= 1
            if acc:
                return False
        return True


def _solution_bits(sys: PolySystem, caps: Caps) -> int:
    """Truth-table indicator of the common-solution set, as one big int."""
    check_cap("exhaustive solution enumeration", sys.n_vars, caps.table)
    full = (1 << (1 << sys.n_vars)) - 1
    acc = full
    for f in sys.polys:
        acc &= truth_table(f, caps).bits ^ full
        if acc == 0:
            break
    return acc


def common_solutions(sys: PolySystem, caps: Caps = DEFAULT_CAPS) -> list[int]:
    """All common zeros, ascending, by exhaustive evaluation."""
    return list(bits_of(_solution_bits(sys, caps)))


@dataclass(frozen=True)
class CountCheck:
    count: int
    bound: Fraction
    holds: bool
    precondition_ok: bool


def cw_count_check(sys: PolySystem, caps: Caps = DEFAULT_CAPS) -> CountCheck:
    """Check count >= 2**(n - total degree). Requires 0 to be a solution.

    When the total degree reaches n the counting theorem's precondition fails;
    the record reports that instead of asserting.
    """
    if not sys.evaluates_to_zero(0):
        raise ValueError("0 must be a common solution (no polynomial may have a constant term)")
    count = _solution_bits(sys, caps).bit_count()
    total = sys.total_degree
    n = sys.n_vars
    bound = Fraction(1 << (n - total)) if total <= n else Fraction(1, 1 << (total - n))
    return CountCheck(
        count=count,
        bound=bound,
        holds=count >= bound,
        precondition_ok=total < n,
    )


def min_weight_nontrivial_solution(
    sys: PolySystem,
    allowed_support: Iterable[int] | None = None,
    max_weight: int | None = None,
    caps: Caps = DEFAULT_CAPS,
) -> tuple[int, int] | None:
    """First common solution in (weight, lexicographic-support) candidate order.

    Returns (vector, weight), or None once every candidate up to the weight
    limit is exhausted. Raises SearchCapExceeded if the candidate budget runs
    out first — that outcome is *not* evidence of absence.
    """
    if allowed_support is None:
        allowed = list(range(sys.n_vars))
    else:
        allowed = sorted(set(allowed_support))
        if allowed and (allowed[0] < 0 or allowed[-1] >= sys.n_vars):
            raise ValueError(f"allowed support {allowed} outside 0..{sys.n_vars - 1}")
    top = len(allowed) if max_weight is None else min(max_weight, len(allowed))
    tried = 0
    for weight in range(1, top + 1):
        for combo in itertools.combinations(allowed, weight):
            tried += 1
            if tried > caps.weight:
                raise SearchCapExceeded(
                    f"weight-ordered search exhausted its budget of {caps.weight} candidates",
                    candidates_tried=tried - 1,
                )
            vector = 0
            for c in combo:
                vector |= 1 << c
            if sys.evaluates_to_zero(vector):
                return vector, weight
    return None


def low_weight_bound(D: int, delta: int, s: int) -> float:
    """8*delta + 8*D/log2(s/D) + 8, with the middle term 0 when D = 0."""
    if D < 0 or delta < 0:
        raise ValueError("degrees must be non-negative")
    if s < 1:
        raise ValueError(f"support size must be at least 1, got {s}")
    if D == 0:
        middle = 0.0
    else:
        if s <= D:
            raise ValueError(f"the bound needs s > D, got s={s}, D={D}")
        middle = 8 * D / math.log2(s / D)
    return 8 * delta + middle + 8


@dataclass(frozen=True)
class LowWeightCheck:
    min_weight: int
    witness: int
    bound: float
    holds: bool


def low_weight_cw_check(sys: PolySystem, caps: Caps = DEFAULT_CAPS) -> LowWeightCheck:
    """Exhaustively find the lightest nontrivial solution and compare to the bound."""
    if not sys.evaluates_to_zero(0):
        raise ValueError("0 must be a common solution (no polynomial may have a constant term)")
    D, delta = sys.linear_degree, sys.nonlinear_degree
    if D + delta >= sys.n_vars:
        raise ValueError(f"total degree {D + delta} must be below n = {sys.n_vars}")
    bits = _solution_bits(sys, caps) & ~1  # drop the trivial solution at 0
    if bits == 0:
        raise RuntimeError("no nontrivial solution found despite total degree < n")
    best_w = sys.n_vars + 1
    best_x = 0
    for x in bits_of(bits):
        w = x.bit_count()
        if w < best_w:
            best_w, best_x = w, x
    bound = low_weight_bound(D, delta, sys.n_vars)
    return LowWeightCheck(min_weight=best_w, witness=best_x, bound=bound, holds=best_w <= bound)


@dataclass(frozen=True)
class SumsetSearch:
    solution: int | None
    witnesses: tuple[int, int] | None
    threshold: int
    applicable: bool


def sumset_solution_search(
    sys: PolySystem, A: Iterable[int], caps: Caps = DEFAULT_CAPS
) -> SumsetSearch:
    """Scan unordered pairs of A for a nontrivial common solution a + a'.

    The threshold 2*binom(n, <= floor(delta/2)) marks where such a solution is
    guaranteed to exist; the scan itself runs regardless.
    """
    points = sorted(set(A))
    for a in points:
        if not sys.evaluates_to_zero(a):
            raise ValueError(f"A contains {a}, which is not a common solution")
    if not sys.evaluates_to_zero(0):
        raise ValueError("0 must be a common solution")
    threshold = 2 * binom_sum(sys.n_vars, sys.nonlinear_degree // 2)
    applicable = len(points) > threshold
    check_cap("sumset pair scan", len(points) * (len(points) - 1) // 2, caps.family)
    for i, x in enumerate(points):
        for y in points[i + 1 :]:
            z = x ^ y
            if sys.evaluates_to_zero(z):
                return SumsetSearch(solution=z, witnesses=(x, y), threshold=threshold, applicable=applicable)
    return SumsetSearch(solution=None, witnesses=None, threshold=threshold, applicable=applicable)


@dataclass(frozen=True)
class ClpRankCheck:
    rank: int
    bound: int
    holds: bool


def clp_rank_check(f: MultilinearPoly, r: int, caps: Caps = DEFAULT_CAPS) -> ClpRankCheck:
    """Rank of the 2^n x 2^n matrix M[x][y] = f(x+y) against 2*binom(n, <= floor(r/2))."""
    if f.degree() > r:
        raise ValueError(f"degree {f.degree()} exceeds the claimed bound r = {r}")
    if f.n_vars > 12:
        raise ValueError(f"matrix would be 2^{f.n_vars} square; n is limited to 12")
    check_cap("symmetric composition matrix", f.n_vars, caps.table)
    n = f.n_vars
    size = 1 << n
    tt = truth_table(f, caps).bits
    values = np.zeros(size, dtype=np.uint8)
    for x in bits_of(tt):
        values[x] = 1
    indices = np.arange(size)
    rows = []
    for x in range(size):
        row_bits = np.packbits(values[indices ^ x], bitorder="little").tobytes()
        rows.append(int.from_bytes(row_bits, "little"))
    rank = f2_matrix_rank(rows)
    bound = 2 * binom_sum(n, r // 2)
    return ClpRankCheck(rank=rank, bound=bound, holds=rank <= bound)
