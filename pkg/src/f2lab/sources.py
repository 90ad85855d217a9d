"""Source models: local sampling maps, bit-fixing sources with visible good bits,
affine subspaces, exact distributions, and convex combinations.

Every probability is an exact Fraction. Points and truth tables use the same
little-endian int encoding as f2poly.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .config import DEFAULT_CAPS, Caps, check_cap
from .f2poly import f2_matrix_rank
from .util import bits_of

__all__ = [
    "AffineSubspace",
    "CanonicalAffineForm",
    "ConvexCombination",
    "ExactDistribution",
    "LocalSource",
    "NobfSource",
    "SourceLike",
    "affine_canonical_form",
    "clique_source",
    "drop_unused_seed_bits",
    "exact_distribution",
    "min_entropy",
    "minimize_supports",
    "mixture",
    "nobf_as_local",
    "sample",
    "statistical_distance",
]


@dataclass(frozen=True)
class LocalSource:
    """n output bits, each a function of at most a few of the m uniform seed bits.

    outputs[i] = (support, table): support is a strictly increasing tuple of
    seed indices; table bit j is the output value when the support bits spell j
    little-endian.
    """

    m: int
    outputs: tuple[tuple[tuple[int, ...], int], ...]

    def __post_init__(self) -> None:
        if self.m < 0:
            raise ValueError(f"seed bit count must be non-negative, got {self.m}")
        canon = []
        for support, table in self.outputs:
            support = tuple(support)
            if any(c < 0 or c >= self.m for c in support):
                raise ValueError(f"support {support} references seed bits outside 0..{self.m - 1}")
            if any(a >= b for a, b in zip(support, support[1:])):
                raise ValueError(f"support {support} must be strictly increasing")
            if table < 0 or table >> (1 << len(support)):
                raise ValueError(f"table {table:#x} too wide for support of size {len(support)}")
            canon.append((support, table))
        object.__setattr__(self, "outputs", tuple(canon))

    @property
    def n(self) -> int:
        return len(self.outputs)

    @property
    def locality(self) -> int:
        return max((len(s) for s, _ in self.outputs), default=0)

    def output_value(self, index: int, seed: int) -> int:
        support, table = self.outputs[index]
        idx = 0
        for j, c in enumerate(support):
            idx |= ((seed >> c) & 1) << j
        return (table >> idx) & 1

    def evaluate(self, seed: int) -> int:
        point = 0
        for i in range(self.n):
            point |= self.output_value(i, seed) << i
        return point


@dataclass(frozen=True)
class NobfSource:
    """k independent (possibly biased) good bits in plain sight; every other bit
    is a function of at most d good bits.

    biases[i] = (p_i, favored_i): the i-th good bit equals favored_i with
    probability p_i in [1/2, 1]. bad_functions lists every non-good position
    exactly once, ascending, as (position, support of good *ordinals*, table).
    """

    n: int
    good_positions: tuple[int, ...]
    biases: tuple[tuple[Fraction, int], ...]
    bad_functions: tuple[tuple[int, tuple[int, ...], int], ...]

    def __post_init__(self) -> None:
        k = len(self.good_positions)
        if len(self.biases) != k:
            raise ValueError(f"{k} good positions but {len(self.biases)} biases")
        if any(p < 0 or p >= self.n for p in self.good_positions):
            raise ValueError("good positions out of range")
        if any(a >= b for a, b in zip(self.good_positions, self.good_positions[1:])):
            raise ValueError("good positions must be strictly increasing")
        canon_biases = []
        for p, fav in self.biases:
            p = Fraction(p)
            if not (Fraction(1, 2) <= p <= 1):
                raise ValueError(f"bias {p} outside [1/2, 1]")
            if fav not in (0, 1):
                raise ValueError(f"favored value must be 0 or 1, got {fav}")
            canon_biases.append((p, fav))
        object.__setattr__(self, "biases", tuple(canon_biases))
        expected_bad = [j for j in range(self.n) if j not in set(self.good_positions)]
        if [j for j, _, _ in self.bad_functions] != expected_bad:
            raise ValueError("bad_functions must list every non-good position exactly once, ascending")
        canon_bad = []
        for j, support, table in self.bad_functions:
            support = tuple(support)
            if any(o < 0 or o >= k for o in support):
                raise ValueError(f"bad support {support} references good ordinals outside 0..{k - 1}")
            if any(a >= b for a, b in zip(support, support[1:])):
                raise ValueError(f"bad support {support} must be strictly increasing")
            if table < 0 or table >> (1 << len(support)):
                raise ValueError(f"bad table {table:#x} too wide for support of size {len(support)}")
            canon_bad.append((j, support, table))
        object.__setattr__(self, "bad_functions", tuple(canon_bad))

    @property
    def k(self) -> int:
        return len(self.good_positions)

    @property
    def locality(self) -> int:
        return max((len(s) for _, s, _ in self.bad_functions), default=0)

    @property
    def is_unbiased(self) -> bool:
        return all(p == Fraction(1, 2) for p, _ in self.biases)

    def point_from_good_bits(self, assignment: int) -> int:
        """The full output when the good bits (in ordinal order) spell ``assignment``."""
        point = 0
        for ordinal, pos in enumerate(self.good_positions):
            point |= ((assignment >> ordinal) & 1) << pos
        for j, support, table in self.bad_functions:
            idx = 0
            for t, ordinal in enumerate(support):
                idx |= ((assignment >> ordinal) & 1) << t
            point |= ((table >> idx) & 1) << j
        return point


@dataclass(frozen=True)
class AffineSubspace:
    """shift + span(basis) inside {0,1}^ambient, with an independent basis."""

    ambient: int
    shift: int
    basis: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.ambient < 0:
            raise ValueError("ambient dimension must be non-negative")
        if self.shift < 0 or self.shift >> self.ambient:
            raise ValueError("shift out of range")
        basis = tuple(self.basis)
        for v in basis:
            if v < 0 or v >> self.ambient:
                raise ValueError(f"basis vector {v:#b} out of range")
        if f2_matrix_rank(basis) != len(basis):
            raise ValueError("basis vectors are linearly dependent")
        object.__setattr__(self, "basis", basis)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def points(self) -> list[int]:
        """All 2^dim points, in subset-enumeration order of the basis."""
        out = []
        for pick in range(1 << len(self.basis)):
            x = self.shift
            for j in bits_of(pick):
                x ^= self.basis[j]
            out.append(x)
        return out

    def column_weight(self, coordinate: int) -> int:
        return sum((v >> coordinate) & 1 for v in self.basis)

    @property
    def max_column_weight(self) -> int:
        return max((self.column_weight(i) for i in range(self.ambient)), default=0)


@dataclass(frozen=True)
class ExactDistribution:
    """Probability mass function over {0,1}^n with positive rational masses summing to 1."""

    n: int
    mass: Mapping[int, Fraction]

    def __post_init__(self) -> None:
        canon: dict[int, Fraction] = {}
        total = Fraction(0)
        for point, w in self.mass.items():
            w = Fraction(w)
            if point < 0 or point >> self.n:
                raise ValueError(f"point {point} out of range for {self.n} bits")
            if w <= 0:
                raise ValueError(f"mass at {point} must be positive, got {w}")
            canon[point] = w
            total += w
        if total != 1:
            raise ValueError(f"masses sum to {total}, not 1")
        object.__setattr__(self, "mass", canon)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.mass)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExactDistribution):
            return NotImplemented
        return self.n == other.n and dict(self.mass) == dict(other.mass)


@dataclass(frozen=True)
class ConvexCombination:
    """Weighted components (any source type or a distribution); weights sum to exactly 1."""

    components: tuple[tuple[Fraction, "SourceLike"], ...]

    def __post_init__(self) -> None:
        canon = []
        total = Fraction(0)
        for w, comp in self.components:
            w = Fraction(w)
            if w <= 0:
                raise ValueError(f"component weight must be positive, got {w}")
            total += w
            canon.append((w, comp))
        if total != 1:
            raise ValueError(f"component weights sum to {total}, not 1")
        object.__setattr__(self, "components", tuple(canon))


SourceLike = Union[LocalSource, NobfSource, AffineSubspace, ExactDistribution, ConvexCombination]


def exact_distribution(source: SourceLike, caps: Caps = DEFAULT_CAPS) -> ExactDistribution:
    """Materialize the output distribution exactly (guarded by the dist cap)."""
    if isinstance(source, ExactDistribution):
        return source
    if isinstance(source, ConvexCombination):
        return mixture(source, caps)
    mass: dict[int, Fraction] = {}
    if isinstance(source, LocalSource):
        check_cap("enumerating seeds", source.m, caps.dist)
        w = Fraction(1, 1 << source.m)
        for seed in range(1 << source.m):
            point = source.evaluate(seed)
            mass[point] = mass.get(point, Fraction(0)) + w
        return ExactDistribution(source.n, mass)
    if isinstance(source, NobfSource):
        check_cap("enumerating good-bit assignments", source.k, caps.dist)
        for assignment in range(1 << source.k):
            w = Fraction(1)
            for ordinal, (p, fav) in enumerate(source.biases):
                bit = (assignment >> ordinal) & 1
                w *= p if bit == fav else 1 - p
                if w == 0:
                    break
            if w == 0:
                continue
            point = source.point_from_good_bits(assignment)
            mass[point] = mass.get(point, Fraction(0)) + w
        return ExactDistribution(source.n, mass)
    if isinstance(source, AffineSubspace):
        check_cap("enumerating subspace points", source.dimension, caps.dist)
        w = Fraction(1, 1 << source.dimension)
        for point in source.points():
            mass[point] = w
        return ExactDistribution(source.ambient, mass)
    raise TypeError(f"unsupported source type {type(source).__name__}")


def min_entropy(dist: ExactDistribution) -> float:
    """-log2 of the largest mass, in bits."""
    if not dist.mass:
        raise ValueError("empty distribution has no min-entropy")
    top = max(dist.mass.values())
    return -math.log2(top)


def statistical_distance(d1: ExactDistribution, d2: ExactDistribution) -> Fraction:
    """Exact half-L1 distance."""
    if d1.n != d2.n:
        raise ValueError(f"bit counts differ: {d1.n} vs {d2.n}")
    total = Fraction(0)
    for point in set(d1.mass) | set(d2.mass):
        total += abs(d1.mass.get(point, Fraction(0)) - d2.mass.get(point, Fraction(0)))
    return total / 2


def mixture(combo: ConvexCombination, caps: Caps = DEFAULT_CAPS) -> ExactDistribution:
    """Weighted sum of the component distributions, exactly."""
    mass: dict[int, Fraction] = {}
    n = None
    for w, comp in combo.components:
        dist = exact_distribution(comp, caps)
        if n is None:
            n = dist.n
        elif dist.n != n:
            raise ValueError(f"component bit counts differ: {dist.n} vs {n}")
        for point, q in dist.mass.items():
            mass[point] = mass.get(point, Fraction(0)) + w * q
    if n is None:
        raise ValueError("a convex combination needs at least one component")
    return ExactDistribution(n, mass)


def clique_source(k: int) -> LocalSource:
    """k vertex bits followed by all pairwise ANDs in lexicographic (i, j) order."""
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    outputs: list[tuple[tuple[int, ...], int]] = []
    for i in range(k):
        outputs.append(((i,), 0b10))
    for i in range(k):
        for j in range(i + 1, k):
            outputs.append(((i, j), 0b1000))
    return LocalSource(k, tuple(outputs))


def _sample_from_distribution(dist: ExactDistribution, rng: random.Random) -> int:
    den = 1
    for w in dist.mass.values():
        den = math.lcm(den, w.denominator)
    r = rng.randrange(den)
    acc = 0
    for point in sorted(dist.mass):
        acc += int(dist.mass[point] * den)
        if r < acc:
            return point
    raise AssertionError("masses summed to 1 but no point was selected")


def sample(source: SourceLike, rng: int | random.Random, caps: Caps = DEFAULT_CAPS) -> int:
    """Draw one output point; deterministic given an int seed."""
    gen = rng if isinstance(rng, random.Random) else random.Random(rng)
    if isinstance(source, LocalSource):
        return source.evaluate(gen.getrandbits(source.m) if source.m else 0)
    if isinstance(source, NobfSource):
        assignment = 0
        for ordinal, (p, fav) in enumerate(source.biases):
            hit = gen.randrange(p.denominator) < p.numerator
            bit = fav if hit else 1 - fav
            assignment |= bit << ordinal
        return source.point_from_good_bits(assignment)
    if isinstance(source, AffineSubspace):
        x = source.shift
        if source.dimension:
            pick = gen.getrandbits(source.dimension)
            for j in bits_of(pick):
                x ^= source.basis[j]
        return x
    if isinstance(source, ExactDistribution):
        return _sample_from_distribution(source, gen)
    if isinstance(source, ConvexCombination):
        den = 1
        for w, _ in source.components:
            den = math.lcm(den, w.denominator)
        r = gen.randrange(den)
        acc = 0
        for w, comp in source.components:
            acc += int(w * den)
            if r < acc:
                return sample(comp, gen, caps)
        raise AssertionError("weights summed to 1 but no component was selected")
    raise TypeError(f"unsupported source type {type(source).__name__}")


@dataclass(frozen=True)
class CanonicalAffineForm:
    """Row-reduced description: pivot coordinates carry free bits, the rest are affine in them.

    expressions[t] = (coordinate, constant, pivot_terms) for each non-pivot
    coordinate in ascending order; the coordinate's value is
    constant + sum of the pivot coordinates listed.
    """

    ambient: int
    pivots: tuple[int, ...]
    expressions: tuple[tuple[int, int, tuple[int, ...]], ...]

    def point_from_pivots(self, assignment: int) -> int:
        """Rebuild the full point whose pivot coordinates spell ``assignment``."""
        value = {}
        for j, p in enumerate(self.pivots):
            value[p] = (assignment >> j) & 1
        point = 0
        for p, b in value.items():
            point |= b << p
        for coord, const, terms in self.expressions:
            b = const
            for p in terms:
                b ^= value[p]
            point |= b << coord
        return point


def affine_canonical_form(sub: AffineSubspace) -> CanonicalAffineForm:
    """Row-reduce the basis; pivots are the leading (lowest-index) coordinates."""
    pivot_rows: dict[int, int] = {}
    for row in sub.basis:
        cur = row
        while cur:
            low = (cur & -cur).bit_length() - 1
            if low in pivot_rows:
                cur ^= pivot_rows[low]
            else:
                pivot_rows[low] = cur
                break
        else:
            raise ValueError("basis vectors are linearly dependent")
    for p in sorted(pivot_rows, reverse=True):
        for q in list(pivot_rows):
            if q != p and (pivot_rows[q] >> p) & 1:
                pivot_rows[q] ^= pivot_rows[p]
    pivots = tuple(sorted(pivot_rows))
    pivot_set = set(pivots)
    expressions = []
    for coord in range(sub.ambient):
        if coord in pivot_set:
            continue
        terms = tuple(p for p in pivots if (pivot_rows[p] >> coord) & 1)
        const = (sub.shift >> coord) & 1
        for p in terms:
            const ^= (sub.shift >> p) & 1
        expressions.append((coord, const, terms))
    return CanonicalAffineForm(sub.ambient, pivots, tuple(expressions))


def nobf_as_local(source: NobfSource) -> LocalSource:
    """View an unbiased source as a local sampling map seeded by its own good bits."""
    if not source.is_unbiased:
        raise ValueError("only an unbiased source is a local sampling map of its good bits")
    good_ordinal = {pos: i for i, pos in enumerate(source.good_positions)}
    bad_by_pos = {j: (support, table) for j, support, table in source.bad_functions}
    outputs: list[tuple[tuple[int, ...], int]] = []
    for pos in range(source.n):
        if pos in good_ordinal:
            outputs.append(((good_ordinal[pos],), 0b10))
        else:
            outputs.append(bad_by_pos[pos])
    return LocalSource(source.k, tuple(outputs))


def _essential_output(support: tuple[int, ...], table: int) -> tuple[tuple[int, ...], int]:
    """Drop support coordinates the table never actually reads."""
    s = len(support)
    essential = []
    for j in range(s):
        step = 1 << j
        for idx in range(1 << s):
            if not idx & step and ((table >> idx) & 1) != ((table >> (idx | step)) & 1):
                essential.append(j)
                break
    if len(essential) == s:
        return support, table
    new_support = tuple(support[j] for j in essential)
    new_table = 0
    for new_idx in range(1 << len(essential)):
        idx = 0
        for t, j in enumerate(essential):
            idx |= ((new_idx >> t) & 1) << j
        new_table |= ((table >> idx) & 1) << new_idx
    return new_support, new_table


def minimize_supports(source: LocalSource) -> LocalSource:
    """Shrink every output to its essential support; the sampling map is unchanged."""
    return LocalSource(source.m, tuple(_essential_output(s, t) for s, t in source.outputs))


def drop_unused_seed_bits(source: LocalSource) -> LocalSource:
    """Renumber the seed so that bits no output reads disappear."""
    used = sorted({c for support, _ in source.outputs for c in support})
    renumber = {c: i for i, c in enumerate(used)}
    outputs = tuple(
        (tuple(renumber[c] for c in support), table) for support, table in source.outputs
    )
    return LocalSource(len(used), outputs)
