"""Growing a column-sparse subspace on which a polynomial is constant.

The growth loop repeatedly finds a lowest-weight common zero of all directional
derivatives taken so far, supported away from used-up coordinates, and adds it
to the basis. Auxiliary ops: derivative closures, the span-vanishing criterion,
verification oracles, and a branch-and-bound optimum for gap reporting.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .config import DEFAULT_CAPS, Caps, SearchCapExceeded, check_cap
from .f2poly import (
    MultilinearPoly,
    add,
    directional_derivative,
    evaluate,
    f2_matrix_rank,
    one,
    truth_table,
)
from .polysys import PolySystem, min_weight_nontrivial_solution
from .util import binom_sum, bits_of

__all__ = [
    "CriterionCheck",
    "GrowthResult",
    "GrowthState",
    "TraceEntry",
    "derivative_closure",
    "derivative_criterion_check",
    "exhaustive_best_dimension",
    "grow_local_subspace",
    "verify_d_local",
    "verify_monochromatic",
]


def derivative_closure(
    f: MultilinearPoly, B: Sequence[int], r: int, caps: Caps = DEFAULT_CAPS
) -> PolySystem:
    """All directional derivatives f_S over subsets S of B with |S| <= r (including f)."""
    check_cap("derivative closure", binom_sum(len(B), r), caps.family)
    polys: list[MultilinearPoly] = []
    for size in range(0, min(r, len(B)) + 1):
        for combo in itertools.combinations(range(len(B)), size):
            polys.append(directional_derivative(f, [B[i] for i in combo]))
    return PolySystem(f.n_vars, tuple(polys))


@dataclass(frozen=True)
class CriterionCheck:
    vanishes_on_coset: bool
    derivatives_vanish: bool

    @property
    def agree(self) -> bool:
        return self.vanishes_on_coset == self.derivatives_vanish


def derivative_criterion_check(
    f: MultilinearPoly, x: int, B: Sequence[int], r: int, caps: Caps = DEFAULT_CAPS
) -> CriterionCheck:
    """Compare 'f = 0 on x + span(B)' against 'every f_S(x) = 0, |S| <= r', both exhaustively."""
    if f.degree() > r:
        raise ValueError(f"degree {f.degree()} exceeds the criterion's bound r = {r}")
    check_cap("coset enumeration", len(B), caps.dist)
    lhs = True
    for pick in range(1 << len(B)):
        point = x
        for j in bits_of(pick):
            point ^= B[j]
        if evaluate(f, point) != 0:
            lhs = False
            break
    rhs = True
    for size in range(0, min(r, len(B)) + 1):
        for combo in itertools.combinations(range(len(B)), size):
            g = directional_derivative(f, [B[i] for i in combo])
            if evaluate(g, x) != 0:
                rhs = False
                break
        if not rhs:
            break
    return CriterionCheck(vanishes_on_coset=lhs, derivatives_vanish=rhs)


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    vector: int
    weight: int
    alpha: int
    column_weights: tuple[int, ...]
    linear_degree: int
    nonlinear_degree: int
    linear_degree_bound: int
    nonlinear_degree_bound: int


@dataclass(frozen=True)
class GrowthState:
    basis: tuple[int, ...]
    unique: frozenset[int]
    saturated: frozenset[int]
    system: PolySystem
    trace: tuple[TraceEntry, ...]


@dataclass(frozen=True)
class GrowthResult:
    constant_value: int
    basis: tuple[int, ...]
    state: GrowthState
    truncated: bool

    @property
    def dimension(self) -> int:
        return len(self.basis)


def grow_local_subspace(
    f: MultilinearPoly, d: int, r: int, caps: Caps = DEFAULT_CAPS
) -> GrowthResult:
    """Grow a maximal column-sparse basis on which f is constant.

    Normalizes so the constant at 0 is 0 (flipping to 1+f when needed and
    reporting constant_value accordingly). Each iteration adds the lowest-weight
    nontrivial common zero of every derivative so far, supported off the
    consumed coordinates; coordinates retire once their column weight reaches d.
    A weight-search cap aborts cleanly with the partial basis flagged truncated.
    """
    if d < 1:
        raise ValueError(f"column-weight bound d must be at least 1, got {d}")
    if f.degree() > r:
        raise ValueError(f"degree bound r = {r} is below deg(f) = {f.degree()}")
    n = f.n_vars
    constant_value = evaluate(f, 0)
    g = f if constant_value == 0 else add(f, one(n))

    basis: list[int] = []
    unique: set[int] = set()
    saturated: set[int] = set()
    derivs: dict[frozenset[int], MultilinearPoly] = {frozenset(): g}
    system = PolySystem(n, (g,))
    trace: list[TraceEntry] = []
    truncated = False

    while True:
        allowed = [i for i in range(n) if i not in unique and i not in saturated]
        if not allowed:
            break
        try:
            found = min_weight_nontrivial_solution(system, allowed_support=allowed, caps=caps)
        except SearchCapExceeded:
            truncated = True
            break
        if found is None:
            break
        b, weight = found
        alpha = (b & -b).bit_length() - 1
        if alpha in unique:
            raise RuntimeError("chosen vector touches a consumed coordinate")
        basis.append(b)
        unique.add(alpha)
        t = len(basis)

        # Extend the derivative closure with every subset that includes b.
        for subset, poly in list(derivs.items()):
            if len(subset) <= r - 1:
                derivs[frozenset(subset | {t - 1})] = directional_derivative(poly, [b])
        system = PolySystem(n, tuple(derivs.values()))

        col = [sum((v >> i) & 1 for v in basis) for i in range(n)]
        saturated = {i for i in range(n) if col[i] >= d}
        if any(c > d for c in col):
            raise RuntimeError("column weight exceeded the locality bound")

        lin, nonlin = system.linear_degree, system.nonlinear_degree
        lin_bound = r * binom_sum(t, r - 1)
        nonlin_bound = r * binom_sum(t, r - 2)
        if lin > lin_bound or nonlin > nonlin_bound:
            raise RuntimeError(
                f"derivative system degrees D={lin}, delta={nonlin} exceed the growth bounds "
                f"{lin_bound}, {nonlin_bound} at iteration {t}"
            )
        trace.append(
            TraceEntry(
                iteration=t,
                vector=b,
                weight=weight,
                alpha=alpha,
                column_weights=tuple(col),
                linear_degree=lin,
                nonlinear_degree=nonlin,
                linear_degree_bound=lin_bound,
                nonlinear_degree_bound=nonlin_bound,
            )
        )

    if basis and f2_matrix_rank(basis) != len(basis):
        raise RuntimeError("grown basis lost linear independence")
    state = GrowthState(
        basis=tuple(basis),
        unique=frozenset(unique),
        saturated=frozenset(saturated),
        system=system,
        trace=tuple(trace),
    )
    return GrowthResult(constant_value=constant_value, basis=tuple(basis), state=state, truncated=truncated)


def verify_monochromatic(
    f: MultilinearPoly, shift: int, basis: Sequence[int], caps: Caps = DEFAULT_CAPS
) -> bool:
    """Whether f takes one value on all 2^dim points of shift + span(basis)."""
    check_cap("span enumeration", len(basis), caps.dist)
    want = evaluate(f, shift)
    for pick in range(1, 1 << len(basis)):
        point = shift
        for j in bits_of(pick):
            point ^= basis[j]
        if evaluate(f, point) != want:
            return False
    return True


def verify_d_local(basis: Sequence[int], d: int) -> bool:
    """Whether every coordinate carries a 1 in at most d basis vectors."""
    if not basis:
        return True
    width = max(v.bit_length() for v in basis)
    return all(sum((v >> i) & 1 for v in basis) <= d for i in range(width))


def exhaustive_best_dimension(
    f: MultilinearPoly, d: int, max_dim: int = 4, caps: Caps = DEFAULT_CAPS
) -> int:
    """Branch-and-bound maximum dimension of a column-sparse span (through 0) on
    which f is constant. Gap-reporting oracle only; limited to n <= 8.
    """
    if f.n_vars > 8:
        raise ValueError(f"exhaustive search is limited to 8 variables, got {f.n_vars}")
    if d < 1:
        raise ValueError(f"column-weight bound d must be at least 1, got {d}")
    if max_dim < 0:
        raise ValueError("dimension limit must be non-negative")
    n = f.n_vars
    tt = truth_table(f, caps)
    c = tt.value(0)
    best = 0
    nodes = 0

    def extend(span_pts: list[int], col: list[int], cands: list[int], depth: int) -> None:
        nonlocal best, nodes
        best = max(best, depth)
        if depth >= max_dim or best >= max_dim:
            return
        span_set = set(span_pts)
        for idx, v in enumerate(cands):
            nodes += 1
            if nodes > caps.weight:
                raise SearchCapExceeded(
                    f"dimension search exhausted its budget of {caps.weight} nodes", nodes - 1
                )
            if v in span_set:
                continue
            if any(col[i] + 1 > d for i in bits_of(v)):
                continue
            new_col = list(col)
            for i in bits_of(v):
                new_col[i] += 1
            mirrored = [v ^ s for s in span_pts]
            new_span = span_pts + mirrored
            new_span_set = span_set | set(mirrored)
            new_cands = []
            for u in cands[idx + 1 :]:
                if u in new_span_set:
                    continue
                if all(tt.value(u ^ m) == c for m in mirrored):
                    new_cands.append(u)
            extend(new_span, new_col, new_cands, depth + 1)
            if best >= max_dim:
                return

    initial = [v for v in range(1, 1 << n) if tt.value(v) == c]
    extend([0], [0] * n, initial, 0)
    return best
