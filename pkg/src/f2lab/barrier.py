"""Hardness witnesses for affine approximation: clique encodings and evasive sets.

The clique encoding maps a vertex subset of the complete graph on k vertices
to k vertex bits followed by all C(k, 2) pairwise-AND edge bits.  The 2^k
valid encodings form a set that meets every low-dimensional affine subspace in
very few points; this module builds the set, certifies the combinatorial
property behind that claim (every nonzero vector has at most one unordered
representation as a sum of two distinct set elements), scans affine subspaces
for the worst-case overlap fraction, and turns per-subspace overlap fractions
into a lower bound on the statistical distance from any convex combination of
affine sources.
"""

from __future__ import annotations

import concurrent.futures
import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

from .config import Caps, DEFAULT_CAPS, check_cap
from .f2poly import f2_matrix_rank
from .sources import (
    AffineSubspace,
    ConvexCombination,
    clique_source,
    exact_distribution,
    mixture,
    statistical_distance,
)
from .util import leq_pow2

__all__ = [
    "CliqueSet",
    "EvasivenessScan",
    "SidonCheck",
    "affine_mixture_distance_bound",
    "clique_membership",
    "edge_position",
    "encode_vertex_set",
    "evasiveness_scan",
    "linear_subspace_count",
    "random_affine_subspace",
    "rref_bases",
    "sidon_check",
    "subspace_overlap_fraction",
]


def edge_position(k: int, i: int, j: int) -> int:
    """Bit position of the (i, j) edge, after the k vertex bits, pairs in lex order."""
    if not 0 <= i < j < k:
        raise ValueError(f"need 0 <= i < j < k, got i={i}, j={j}, k={k}")
    return k + i * (k - 1) - i * (i - 1) // 2 + (j - i - 1)


def encode_vertex_set(k: int, vertices: int) -> int:
    """Encode a vertex subset as vertex bits plus the full edge closure."""
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if vertices < 0 or vertices >> k:
        raise ValueError("vertex set out of range")
    point = vertices
    for i in range(k):
        if not (vertices >> i) & 1:
            continue
        for j in range(i + 1, k):
            if (vertices >> j) & 1:
                point |= 1 << edge_position(k, i, j)
    return point


def clique_membership(x: int, k: int) -> bool:
    """True iff the edge bits of x are exactly the pairwise ANDs of its vertex bits."""
    n = k + k * (k - 1) // 2
    if x < 0 or x >> n:
        raise ValueError(f"point needs exactly {n} bits for k={k}")
    return x == encode_vertex_set(k, x & ((1 << k) - 1))


@dataclass(frozen=True)
class CliqueSet:
    """All 2^k valid clique encodings in {0,1}^(k + C(k,2))."""

    k: int
    points: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        expected = frozenset(encode_vertex_set(self.k, vs) for vs in range(1 << self.k))
        if not self.points:
            object.__setattr__(self, "points", expected)
        elif self.points != expected:
            raise ValueError("points are not the closure encodings of all vertex sets")

    @property
    def n(self) -> int:
        return self.k + self.k * (self.k - 1) // 2

    def __contains__(self, x: int) -> bool:
        return x in self.points

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.points))

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SidonCheck:
    """Pair-sum statistics of a point set.

    ``pairs_scanned`` counts ordered pairs (x, y) with x != y.  For each
    nonzero sum z the ordered representation count is twice the unordered one;
    the set passes iff every ordered count is at most 2 (every unordered count
    at most 1).  ``violating_sum`` is the smallest sum exceeding that, if any.
    """

    is_sidon: bool
    violating_sum: int | None
    max_ordered_pairs: int
    max_unordered_pairs: int
    pairs_scanned: int


def sidon_check(points: Iterable[int]) -> SidonCheck:
    """Check that no nonzero vector is a sum of two distinct points in two ways."""
    pts = sorted(set(points))
    counts: dict[int, int] = {}
    for x, y in itertools.combinations(pts, 2):
        z = x ^ y
        counts[z] = counts.get(z, 0) + 1
    max_unordered = max(counts.values(), default=0)
    violating = min((z for z, c in counts.items() if c > 1), default=None)
    return SidonCheck(
        is_sidon=max_unordered <= 1,
        violating_sum=violating,
        max_ordered_pairs=2 * max_unordered,
        max_unordered_pairs=max_unordered,
        pairs_scanned=len(pts) * (len(pts) - 1),
    )


def subspace_overlap_fraction(points: Iterable[int], sub: AffineSubspace, caps: Caps = DEFAULT_CAPS) -> Fraction:
    """Exact |points ∩ sub| / |sub|."""
    check_cap("enumerating subspace points", sub.dimension, caps.dist)
    member = points.points if isinstance(points, CliqueSet) else frozenset(points)
    inside = sum(1 for p in sub.points() if p in member)
    return Fraction(inside, 1 << sub.dimension)


def linear_subspace_count(n: int, t: int) -> int:
    """Number of t-dimensional linear subspaces of {0,1}^n."""
    if not 0 <= t <= n:
        return 0
    num = den = 1
    for i in range(t):
        num *= (1 << n) - (1 << i)
        den *= (1 << t) - (1 << i)
    return num // den


def rref_bases(n: int, t: int) -> Iterator[tuple[int, ...]]:
    """Canonical bases (reduced row echelon form) of all t-dim linear subspaces."""
    for pivots in itertools.combinations(range(n), t):
        pivot_set = set(pivots)
        free: list[list[int]] = [
            [j for j in range(p + 1, n) if j not in pivot_set] for p in pivots
        ]
        cells = [(row, col) for row, cols in enumerate(free) for col in cols]
        for bits in range(1 << len(cells)):
            rows = [1 << p for p in pivots]
            for idx, (row, col) in enumerate(cells):
                if (bits >> idx) & 1:
                    rows[row] |= 1 << col
            yield tuple(rows)


def random_affine_subspace(
    n: int,
    t: int,
    rng: random.Random,
    affine_shift: bool = False,
    max_retries: int = 1000,
) -> AffineSubspace:
    """Sample a uniform rank-t basis by rejection; shift 0 unless ``affine_shift``."""
    if not 1 <= t <= n:
        raise ValueError(f"need 1 <= t <= n, got t={t}, n={n}")
    for _ in range(max_retries):
        rows = tuple(rng.getrandbits(n) for _ in range(t))
        if f2_matrix_rank(rows, n) == t:
            shift = rng.getrandbits(n) if affine_shift else 0
            return AffineSubspace(n, shift, rows)
    raise RuntimeError(f"no rank-{t} basis found in {max_retries} attempts")


@dataclass(frozen=True)
class EvasivenessScan:
    """Worst-case overlap of the clique set with scanned dimension-t subspaces.

    ``holds`` compares the exact maximum fraction against 2^bound_log2 (the
    exponent may be half-integral; the comparison squares both sides, so it is
    exact).  The two ``*_everywhere`` flags record that every scanned
    intersection passed the pair-sum check and the count inequality
    |Q ∩ S| * (|Q ∩ S| - 1) / 2 <= |S| - 1.
    """

    k: int
    t: int
    mode: str
    max_fraction: Fraction
    worst_subspace: AffineSubspace
    bound_log2: Fraction
    holds: bool
    scanned: int
    sidon_everywhere: bool
    pair_bound_everywhere: bool


def _subspace_report(qpoints: frozenset[int], sub: AffineSubspace) -> tuple[Fraction, bool, bool]:
    inside = [p for p in sub.points() if p in qpoints]
    fraction = Fraction(len(inside), 1 << sub.dimension)
    pair_ok = len(inside) * (len(inside) - 1) // 2 <= (1 << sub.dimension) - 1
    return fraction, sidon_check(inside).is_sidon, pair_ok


def _subspace_report_star(args: tuple[frozenset[int], AffineSubspace]) -> tuple[Fraction, bool, bool]:
    return _subspace_report(*args)


def evasiveness_scan(
    k: int,
    t: int,
    mode: str = "exhaustive",
    trials: int = 0,
    seed: int = 0,
    affine_shifts: bool = False,
    workers: int = 1,
    caps: Caps = DEFAULT_CAPS,
) -> EvasivenessScan:
    """Measure max |Q ∩ S| / |S| over dimension-t subspaces S.

    ``exhaustive`` enumerates every linear subspace once via canonical bases;
    ``random`` draws ``trials`` seeded rank-t bases (plus random shifts when
    ``affine_shifts`` is set).  Reports are folded in scan order, so results
    are deterministic for any worker count.
    """
    cset = CliqueSet(k)
    n = cset.n
    if not 1 <= t <= n:
        raise ValueError(f"need 1 <= t <= n={n}, got t={t}")
    check_cap("enumerating subspace points", t, caps.dist)
    if mode == "exhaustive":
        if affine_shifts:
            raise ValueError("exhaustive mode scans linear subspaces only")
        expected = linear_subspace_count(n, t)
        check_cap("enumerating subspaces", expected, caps.family)
        subs = [AffineSubspace(n, 0, basis) for basis in rref_bases(n, t)]
        if len(subs) != expected:
            raise RuntimeError(
                f"canonical enumeration produced {len(subs)} subspaces, expected {expected}"
            )
    elif mode == "random":
        if trials < 1:
            raise ValueError(f"random mode needs at least one trial, got {trials}")
        check_cap("enumerating subspaces", trials, caps.family)
        rng = random.Random(seed)
        subs = [random_affine_subspace(n, t, rng, affine_shift=affine_shifts) for _ in range(trials)]
    else:
        raise ValueError(f"unknown mode {mode!r}")

    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(subs) // (4 * workers))
            reports = list(
                pool.map(_subspace_report_star, ((cset.points, s) for s in subs), chunksize=chunk)
            )
    else:
        reports = [_subspace_report(cset.points, s) for s in subs]

    max_fraction = Fraction(-1)
    worst = subs[0]
    sidon_all = True
    pair_all = True
    for sub, (fraction, sidon_ok, pair_ok) in zip(subs, reports):
        sidon_all = sidon_all and sidon_ok
        pair_all = pair_all and pair_ok
        if fraction > max_fraction:
            max_fraction = fraction
            worst = sub
    bound_log2 = Fraction(3 - t, 2)
    return EvasivenessScan(
        k=k,
        t=t,
        mode=mode,
        max_fraction=max_fraction,
        worst_subspace=worst,
        bound_log2=bound_log2,
        holds=leq_pow2(max_fraction, bound_log2),
        scanned=len(subs),
        sidon_everywhere=sidon_all,
        pair_bound_everywhere=pair_all,
    )


def affine_mixture_distance_bound(
    k: int,
    components: Iterable[AffineSubspace],
    verify: bool = False,
    caps: Caps = DEFAULT_CAPS,
) -> Fraction:
    """Lower-bound the distance from the clique source to any mixture of the components.

    Mass the mixture places on a component's subspace caps the mass it shares
    with the clique set by that subspace's overlap fraction, so the distance is
    at least 1 - max over components of |Q ∩ S_i| / |S_i|, for every choice of
    mixture weights.  With ``verify`` the bound is checked against the exact
    distance to the equal-weight mixture (it must never exceed it).
    """
    comps = tuple(components)
    if not comps:
        raise ValueError("need at least one component")
    cset = CliqueSet(k)
    for sub in comps:
        if sub.ambient != cset.n:
            raise ValueError(
                f"component ambient {sub.ambient} does not match clique encoding length {cset.n}"
            )
    bound = 1 - max(subspace_overlap_fraction(cset, sub, caps) for sub in comps)
    if verify:
        weight = Fraction(1, len(comps))
        mixed = mixture(ConvexCombination(tuple((weight, c) for c in comps)), caps)
        true_distance = statistical_distance(exact_distribution(clique_source(k), caps), mixed)
        if bound > true_distance:
            raise RuntimeError(
                f"bound {bound} exceeds the exact distance {true_distance} to the uniform mixture"
            )
    return bound
