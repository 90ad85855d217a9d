"""Desk-scale experiment drivers.

Enumerates small families of locally-determined bit-fixing-style sources,
censuses polynomials against them (extraction = low bias on every member,
dispersion = hitting a low-degree monomial after substitution), surveys the
bias/correlation of random low-degree polynomials, and materializes small
punctured-evaluation (Reed-Muller) codes for list-size experiments.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .config import DEFAULT_CAPS, Caps, check_cap
from .f2poly import (
    MultilinearPoly,
    TruthTable,
    add,
    bias,
    correlation,
    evaluate,
    f2_matrix_rank,
    hits_degree,
    random_poly,
    substitute,
    truth_table,
)
from .sources import (
    AffineSubspace,
    NobfSource,
    SourceLike,
    affine_canonical_form,
    exact_distribution,
)
from .util import binom_sum, bits_of

__all__ = [
    "AffineCensus",
    "DisperserCensus",
    "ExtractorCensus",
    "ExtractorSearch",
    "FamilySpec",
    "SurveyReport",
    "affine_extractor_census",
    "code_min_distance",
    "correlation_survey",
    "disjoint_support_subspaces",
    "disperser_census_via_hitting",
    "enumerate_generating_tuples",
    "enumerate_nobf_family",
    "extractor_census",
    "extractor_search",
    "hamming_bound_holds",
    "hitting_lemma_check",
    "random_bias_survey",
    "rm_code",
    "rm_list_size",
    "source_output_bias",
    "subspace_bias",
]


# ---------------------------------------------------------------------------
# Family enumeration.


@dataclass(frozen=True)
class FamilySpec:
    """Shape of a family of sources on n bits: k fair good bits, every other bit
    reading exactly min(d, k) of them; r optionally caps the degree of the bad
    functions for generating-tuple enumeration."""

    n: int
    k: int
    d: int
    r: int | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.k <= self.n:
            raise ValueError(f"need 0 <= k <= n, got k={self.k}, n={self.n}")
        if self.d < 0:
            raise ValueError(f"locality must be non-negative, got {self.d}")
        if self.r is not None and self.r < 0:
            raise ValueError(f"degree bound must be non-negative, got {self.r}")

    @property
    def effective_locality(self) -> int:
        return min(self.d, self.k)

    def family_size(self) -> int:
        """Descriptors with arbitrary bad functions on exactly min(d,k) good bits."""
        dd = self.effective_locality
        per_bad = math.comb(self.k, dd) * (1 << (1 << dd))
        return math.comb(self.n, self.k) * per_bad ** (self.n - self.k)

    def degree_restricted_size(self) -> int:
        """Generating tuples whose bad entries are degree-<=r polynomials."""
        if self.r is None:
            raise ValueError("degree-restricted enumeration needs r")
        dd = self.effective_locality
        per_bad = math.comb(self.k, dd) * (1 << binom_sum(dd, self.r))
        return math.comb(self.n, self.k) * per_bad ** (self.n - self.k)


def enumerate_nobf_family(spec: FamilySpec, caps: Caps = DEFAULT_CAPS):
    """All descriptors (good positions ascending, then per-bad support/table
    choices in lexicographic order). Distinct descriptors may describe the same
    distribution; enumerating descriptors over-counts, which is the safe
    direction for for-all-sources claims."""
    check_cap("family enumeration", spec.family_size(), caps.family)
    dd = spec.effective_locality
    biases = tuple((Fraction(1, 2), 1) for _ in range(spec.k))
    choices = [
        (support, table)
        for support in itertools.combinations(range(spec.k), dd)
        for table in range(1 << (1 << dd))
    ]
    for good in itertools.combinations(range(spec.n), spec.k):
        bad_positions = [j for j in range(spec.n) if j not in good]
        for picks in itertools.product(choices, repeat=len(bad_positions)):
            bads = tuple(
                (j, support, table)
                for j, (support, table) in zip(bad_positions, picks)
            )
            yield NobfSource(spec.n, good, biases, bads)


def _local_polynomials(k: int, support: Sequence[int], r: int) -> list[MultilinearPoly]:
    """All polynomials on k variables of degree <= r using only the given ordinals."""
    masks = []
    for size in range(0, min(r, len(support)) + 1):
        for combo in itertools.combinations(support, size):
            mask = 0
            for o in combo:
                mask |= 1 << o
            masks.append(mask)
    polys = []
    for pick in range(1 << len(masks)):
        polys.append(
            MultilinearPoly(k, frozenset(masks[j] for j in bits_of(pick)))
        )
    return polys


def enumerate_generating_tuples(spec: FamilySpec, caps: Caps = DEFAULT_CAPS):
    """Degree-restricted generating tuples: position i gets the projection onto
    its good ordinal when good, else a degree-<=r polynomial over min(d,k)
    chosen good ordinals."""
    estimate = spec.degree_restricted_size()
    check_cap("generating-tuple enumeration", estimate, caps.family)
    dd = spec.effective_locality
    for good in itertools.combinations(range(spec.n), spec.k):
        ordinal = {pos: q for q, pos in enumerate(good)}
        bad_positions = [j for j in range(spec.n) if j not in good]
        choices = [
            poly
            for support in itertools.combinations(range(spec.k), dd)
            for poly in _local_polynomials(spec.k, support, spec.r)
        ]
        for picks in itertools.product(choices, repeat=len(bad_positions)):
            entries: list[MultilinearPoly] = []
            next_bad = 0
            for pos in range(spec.n):
                if pos in ordinal:
                    entries.append(
                        MultilinearPoly(spec.k, frozenset({1 << ordinal[pos]}))
                    )
                else:
                    entries.append(picks[next_bad])
                    next_bad += 1
            yield tuple(entries)


# ---------------------------------------------------------------------------
# Extractor census and search.


def source_output_bias(
    f: MultilinearPoly, source: SourceLike, caps: Caps = DEFAULT_CAPS
) -> Fraction:
    """Exact |P[f=0] - P[f=1]| under the source's output distribution."""
    dist = exact_distribution(source, caps)
    p_one = sum(
        (w for point, w in dist.mass.items() if evaluate(f, point)), Fraction(0)
    )
    return abs(1 - 2 * p_one)


def _tt_array(tt: TruthTable) -> np.ndarray:
    raw = tt.bits.to_bytes((tt.size + 7) // 8, "little")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[
        : tt.size
    ]


def _family_points(sources: Sequence[NobfSource]) -> np.ndarray:
    k = sources[0].k
    rows = [
        [src.point_from_good_bits(a) for a in range(1 << k)] for src in sources
    ]
    return np.asarray(rows, dtype=np.int64)


@dataclass(frozen=True)
class ExtractorCensus:
    max_bias: Fraction
    worst_source: NobfSource | None
    worst_index: int
    scanned: int


def _census_from_points(
    tt_arr: np.ndarray, points: np.ndarray, k: int
) -> tuple[int, int]:
    ones = tt_arr[points].sum(axis=1, dtype=np.int64)
    numerators = np.abs((1 << k) - 2 * ones)
    idx = int(np.argmax(numerators))
    return int(numerators[idx]), idx


def extractor_census(
    f: MultilinearPoly,
    family: Union[FamilySpec, Iterable[NobfSource]],
    caps: Caps = DEFAULT_CAPS,
) -> ExtractorCensus:
    """Exact max bias of f over the family, with the first worst source as witness.

    All family members must be unbiased and share one good-bit count; the fast
    path batches every member's output points through one table lookup.
    """
    if isinstance(family, FamilySpec):
        sources = list(enumerate_nobf_family(family, caps))
    else:
        sources = list(family)
    if not sources:
        raise ValueError("census over an empty family")
    k = sources[0].k
    if any(src.k != k or not src.is_unbiased for src in sources):
        raise ValueError("census requires unbiased sources with a common good-bit count")
    tt_arr = _tt_array(truth_table(f, caps))
    numerator, idx = _census_from_points(tt_arr, _family_points(sources), k)
    return ExtractorCensus(
        max_bias=Fraction(numerator, 1 << k),
        worst_source=sources[idx],
        worst_index=idx,
        scanned=len(sources),
    )


@dataclass(frozen=True)
class ExtractorSearch:
    best_poly: MultilinearPoly
    best_bias: Fraction
    success_fraction: Fraction
    successes: int
    trials: int
    seed: int


def extractor_search(
    spec: FamilySpec,
    r: int,
    trials: int,
    seed: int,
    epsilon_target: Fraction,
    caps: Caps = DEFAULT_CAPS,
) -> ExtractorSearch:
    """Sample random degree-<=r polynomials and census each; success means the
    max bias stays within 2*epsilon_target. Deterministic given the seed."""
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    sources = list(enumerate_nobf_family(spec, caps))
    points = _family_points(sources)
    threshold = 2 * Fraction(epsilon_target)
    rng = random.Random(seed)
    best_poly = None
    best_bias = None
    successes = 0
    for _ in range(trials):
        f = random_poly(spec.n, r, rng)
        numerator, _ = _census_from_points(_tt_array(truth_table(f, caps)), points, spec.k)
        max_bias = Fraction(numerator, 1 << spec.k)
        if max_bias <= threshold:
            successes += 1
        if best_bias is None or max_bias < best_bias:
            best_poly, best_bias = f, max_bias
    return ExtractorSearch(
        best_poly=best_poly,
        best_bias=best_bias,
        success_fraction=Fraction(successes, trials),
        successes=successes,
        trials=trials,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Disperser census via the hitting route.


@dataclass(frozen=True)
class DisperserCensus:
    all_hit: bool
    failing_tuple: tuple[MultilinearPoly, ...] | None
    scanned: int


def disperser_census_via_hitting(
    f: MultilinearPoly, spec: FamilySpec, caps: Caps = DEFAULT_CAPS
) -> DisperserCensus:
    """For every generating tuple, substitute into f and require a surviving
    monomial of some size in [1, r]; the first failure (in enumeration order)
    is reported."""
    if spec.r is None:
        raise ValueError("the hitting census needs the degree bound r")
    scanned = 0
    for entries in enumerate_generating_tuples(spec, caps):
        scanned += 1
        g = substitute(f, entries)
        if not any(hits_degree(g, rp) for rp in range(1, spec.r + 1)):
            return DisperserCensus(all_hit=False, failing_tuple=entries, scanned=scanned)
    return DisperserCensus(all_hit=True, failing_tuple=None, scanned=scanned)


def hitting_lemma_check(
    f: MultilinearPoly,
    a: Sequence[MultilinearPoly],
    b: Sequence[MultilinearPoly],
    r: int,
) -> bool:
    """Whether substituting a+b into f still leaves a monomial of size exactly r.

    Preconditions (violations raise ValueError with distinct messages, since
    they mark harness bugs rather than property failures): substituting a alone
    must hit size r, and every b entry may only contain monomials of size > r.
    """
    if len(a) != f.n_vars or len(b) != f.n_vars:
        raise ValueError(
            f"need {f.n_vars} substitution entries, got {len(a)} and {len(b)}"
        )
    for i, poly in enumerate(b):
        if any(mask.bit_count() <= r for mask in poly.monomials):
            raise ValueError(
                f"shift entry {i} carries a monomial of size <= {r}"
            )
    base = substitute(f, tuple(a))
    if not hits_degree(base, r):
        raise ValueError(f"base substitution does not hit size {r}")
    shifted = substitute(f, tuple(add(x, y) for x, y in zip(a, b)))
    return hits_degree(shifted, r)


# ---------------------------------------------------------------------------
# Random-polynomial surveys.


@dataclass(frozen=True)
class SurveyReport:
    parameters: dict
    values: tuple[Fraction, ...]
    quantiles: dict
    seed: int


_QUANTILE_POINTS = (("p50", Fraction(1, 2)), ("p90", Fraction(9, 10)),
                    ("p95", Fraction(19, 20)), ("p99", Fraction(99, 100)))


def _summarize(values: Sequence[Fraction]) -> dict:
    ordered = sorted(values)
    out = {}
    for name, q in _QUANTILE_POINTS:
        out[name] = ordered[math.ceil(q * len(ordered)) - 1]
    out["max"] = ordered[-1]
    return out


def random_bias_survey(
    n: int, r: int, trials: int, seed: int, caps: Caps = DEFAULT_CAPS
) -> SurveyReport:
    """Exact bias of `trials` random degree-<=r polynomials on n variables."""
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    check_cap("bias survey table", n, caps.table)
    rng = random.Random(seed)
    values = tuple(bias(random_poly(n, r, rng), caps) for _ in range(trials))
    return SurveyReport(
        parameters={"kind": "bias", "n": n, "r": r, "trials": trials},
        values=values,
        quantiles=_summarize(values),
        seed=seed,
    )


def correlation_survey(
    g: MultilinearPoly | TruthTable,
    n: int,
    r: int,
    trials: int,
    seed: int,
    caps: Caps = DEFAULT_CAPS,
) -> SurveyReport:
    """Exact correlation of random degree-<=r polynomials against a fixed g.

    The trial stream depends only on (n, r, seed), never on g, so surveys
    against different references are comparable point by point.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    check_cap("correlation survey table", n, caps.table)
    g_table = g if isinstance(g, TruthTable) else truth_table(g, caps)
    if g_table.n_vars != n:
        raise ValueError(f"reference is on {g_table.n_vars} variables, survey on {n}")
    rng = random.Random(seed)
    values = tuple(
        correlation(random_poly(n, r, rng), g_table, caps) for _ in range(trials)
    )
    return SurveyReport(
        parameters={"kind": "correlation", "n": n, "r": r, "trials": trials},
        values=values,
        quantiles=_summarize(values),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Punctured low-degree evaluation codes.


def rm_code(m: int, r: int, caps: Caps = DEFAULT_CAPS) -> list[TruthTable]:
    """All truth tables of degree-<=r polynomials on m variables, as codewords
    of block length 2^m, in monomial-subset order."""
    if m < 0 or r < 0:
        raise ValueError("code parameters must be non-negative")
    dim = binom_sum(m, min(r, m))
    check_cap("code size", 1 << dim, caps.family)
    masks = []
    for size in range(0, min(r, m) + 1):
        for combo in itertools.combinations(range(m), size):
            mask = 0
            for v in combo:
                mask |= 1 << v
            masks.append(mask)
    rows = [truth_table(MultilinearPoly(m, frozenset({mask})), caps).bits for mask in masks]
    words = [0] * (1 << dim)
    for i in range(1, 1 << dim):
        low = (i & -i).bit_length() - 1
        words[i] = words[i & (i - 1)] ^ rows[low]
    return [TruthTable(m, bits) for bits in words]


def code_min_distance(code: Sequence[TruthTable]) -> int:
    """Minimum weight of a nonzero codeword (= min distance for a linear code)."""
    weights = [tt.bits.bit_count() for tt in code if tt.bits]
    if not weights:
        raise ValueError("the code has no nonzero codeword")
    return min(weights)


def rm_list_size(code: Sequence[TruthTable], center: TruthTable, radius: int) -> int:
    """How many codewords sit within Hamming distance `radius` of the center."""
    block = code[0].size
    if center.size != block:
        raise ValueError(f"center has block length {center.size}, code has {block}")
    if radius < 0 or radius > block:
        raise ValueError(f"radius {radius} outside 0..{block}")
    return sum(1 for tt in code if (tt.bits ^ center.bits).bit_count() <= radius)


def hamming_bound_holds(
    code_size: int, block_length: int, radius: int, list_size: int
) -> bool:
    """Packing direction: |code| * binom(block, <=radius) <= 2^block * list_size."""
    return code_size * binom_sum(block_length, radius) <= (1 << block_length) * list_size


# ---------------------------------------------------------------------------
# Affine-source census.


def subspace_bias(
    f: MultilinearPoly | TruthTable,
    sub: AffineSubspace,
    caps: Caps = DEFAULT_CAPS,
) -> Fraction:
    """Exact bias of f restricted to the subspace, via its pivot parametrization."""
    tt = f if isinstance(f, TruthTable) else truth_table(f, caps)
    form = affine_canonical_form(sub)
    size = 1 << sub.dimension
    ones = sum(tt.value(form.point_from_pivots(a)) for a in range(size))
    return Fraction(abs(size - 2 * ones), size)


def disjoint_support_subspaces(n: int, k: int, caps: Caps = DEFAULT_CAPS):
    """All linear subspaces spanned by k vectors with pairwise-disjoint nonzero
    supports (every 1-local dimension-k basis looks like this), one canonical
    basis each: blocks ordered by their lowest coordinate."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    check_cap("support labelings", (k + 1) ** n, caps.family)
    for labels in itertools.product(range(k + 1), repeat=n):
        masks = [0] * k
        for coord, label in enumerate(labels):
            if label:
                masks[label - 1] |= 1 << coord
        if any(not mask for mask in masks):
            continue
        lows = [mask & -mask for mask in masks]
        if any(lows[i] >= lows[i + 1] for i in range(k - 1)):
            continue
        yield AffineSubspace(n, 0, tuple(masks))


def _random_local_basis(
    n: int, k: int, d: int, rng: random.Random, affine_shift: bool
) -> AffineSubspace:
    for _ in range(1000):
        capacity = [d] * n
        basis: list[int] = []
        ok = True
        for _ in range(k):
            found = 0
            for _ in range(100):
                mask = 0
                for c in range(n):
                    if capacity[c] > 0 and rng.randrange(2):
                        mask |= 1 << c
                if mask and f2_matrix_rank(basis + [mask]) == len(basis) + 1:
                    found = mask
                    break
            if not found:
                ok = False
                break
            basis.append(found)
            for c in bits_of(found):
                capacity[c] -= 1
        if ok:
            shift = rng.randrange(1 << n) if affine_shift else 0
            return AffineSubspace(n, shift, tuple(basis))
    raise RuntimeError(f"could not sample an independent {d}-local basis of size {k}")


@dataclass(frozen=True)
class AffineCensus:
    max_bias: Fraction
    worst_subspace: AffineSubspace | None
    scanned: int


def affine_extractor_census(
    f: MultilinearPoly,
    d: int,
    k: int,
    mode: str = "exhaustive",
    samples: int = 0,
    seed: int = 0,
    affine_shifts: bool = False,
    caps: Caps = DEFAULT_CAPS,
) -> AffineCensus:
    """Max bias of f over column-sparse subspaces of dimension k.

    mode "exhaustive" (d must be 1) scans every disjoint-support linear
    subspace; mode "random" draws `samples` independent d-local bases from the
    seed, optionally with random shifts.
    """
    tt = truth_table(f, caps)
    if mode == "exhaustive":
        if d != 1:
            raise ValueError("exhaustive scanning is implemented for column weight 1 only")
        subspaces = disjoint_support_subspaces(f.n_vars, k, caps)
    elif mode == "random":
        if samples < 1:
            raise ValueError(f"random mode needs at least one sample, got {samples}")
        rng = random.Random(seed)
        subspaces = (
            _random_local_basis(f.n_vars, k, d, rng, affine_shifts)
            for _ in range(samples)
        )
    else:
        raise ValueError(f"unknown census mode {mode!r}")
    best: Fraction | None = None
    worst = None
    scanned = 0
    for sub in subspaces:
        scanned += 1
        value = subspace_bias(tt, sub, caps)
        if best is None or value > best:
            best, worst = value, sub
    if best is None:
        raise ValueError("no subspace was scanned")
    return AffineCensus(max_bias=best, worst_subspace=worst, scanned=scanned)
