"""Rewriting a locally-sampled source as an exact mixture of bit-fixing-style sources.

The decomposition is a recursion on the sampler's locality. At each node,
outputs with pairwise-disjoint supports are collected greedily. When enough of
them exist they become the independent good bits of a leaf: conditioning on a
uniform fiber index turns every other output into a function of the good values
alone. Otherwise the seed bits under the collected supports are pinned to all
of their values, which strictly lowers the locality of every child.

Biased good bits are then split into a frozen part and a fair part
(``debias_nobf``), and the composite pipeline tracks exact rational weights so
the mixture reproduces the source distribution with statistical distance zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence, Union

from .config import DEFAULT_CAPS, Caps, check_cap
from .serialize import source_from_json, source_to_json
from .sources import (
    ConvexCombination,
    ExactDistribution,
    LocalSource,
    NobfSource,
    drop_unused_seed_bits,
    exact_distribution,
    minimize_supports,
    mixture,
    statistical_distance,
)
from .util import frac_str, parse_frac

__all__ = [
    "DebiasGuarantee",
    "FixingLeaf",
    "FixingNode",
    "FixingTree",
    "LocalToNobfResult",
    "debias_nobf",
    "find_maximal_disjoint_set",
    "local_to_biased_nobf",
    "local_to_nobf",
    "nobf_form_check",
    "nobf_witness_for_disperser",
    "tree_from_json",
    "tree_leaves",
    "tree_mixture",
    "tree_to_json",
    "verify_decomposition",
]


@dataclass(frozen=True)
class FixingLeaf:
    """A terminal branch: an absolute mixture weight and the source it emits."""

    weight: Fraction
    source: NobfSource


@dataclass(frozen=True)
class FixingNode:
    """An internal branch point.

    case "fix": detail lists the seed coordinates pinned here; child ``a`` gets
    coordinate detail[j] pinned to bit j of ``a``.
    case "fiber": detail lists the output positions exposed as good bits; the
    children are the leaves, one per (fiber-index vector, leftover-seed value).
    """

    case: str
    detail: tuple[int, ...]
    children: tuple["FixingTree", ...]

    def __post_init__(self) -> None:
        if self.case not in ("fix", "fiber"):
            raise ValueError(f"unknown branch case {self.case!r}")


FixingTree = Union[FixingNode, FixingLeaf]


def tree_leaves(tree: FixingTree) -> tuple[FixingLeaf, ...]:
    """All leaves, left to right; weights are absolute and sum to 1 at the root."""
    if isinstance(tree, FixingLeaf):
        return (tree,)
    out: list[FixingLeaf] = []
    for child in tree.children:
        out.extend(tree_leaves(child))
    return tuple(out)


def tree_mixture(tree: FixingTree) -> ConvexCombination:
    return ConvexCombination(tuple((leaf.weight, leaf.source) for leaf in tree_leaves(tree)))


def find_maximal_disjoint_set(source: LocalSource) -> tuple[int, ...]:
    """Greedy (ascending-index) maximal set of non-constant outputs whose
    essential supports are pairwise disjoint."""
    source = minimize_supports(source)
    chosen: list[int] = []
    used: set[int] = set()
    for i, (support, _) in enumerate(source.outputs):
        if not support:
            continue
        if used.isdisjoint(support):
            chosen.append(i)
            used.update(support)
    return tuple(chosen)


def _restrict_seed(source: LocalSource, fixed: dict[int, int]) -> LocalSource:
    """Pin the given seed coordinates; supports shrink, the seed keeps its width."""
    outputs = []
    for support, table in source.outputs:
        kept = [c for c in support if c not in fixed]
        new_table = 0
        for a in range(1 << len(kept)):
            idx = 0
            pos = 0
            for j, c in enumerate(support):
                if c in fixed:
                    idx |= fixed[c] << j
                else:
                    idx |= ((a >> pos) & 1) << j
                    pos += 1
            new_table |= ((table >> idx) & 1) << a
        outputs.append((tuple(kept), new_table))
    return LocalSource(source.m, tuple(outputs))


def _make_leaf(
    source: NobfSource, weight: Fraction, caps: Caps, counter: list[int]
) -> FixingLeaf:
    counter[0] += 1
    check_cap("decomposition leaves", counter[0], caps.family)
    return FixingLeaf(weight=weight, source=source)


def _point_leaf(
    source: LocalSource, weight: Fraction, caps: Caps, counter: list[int]
) -> FixingLeaf:
    bads = tuple((j, (), table) for j, (_, table) in enumerate(source.outputs))
    return _make_leaf(NobfSource(source.n, (), (), bads), weight, caps, counter)


def _one_local_leaf(
    source: LocalSource, weight: Fraction, caps: Caps, counter: list[int]
) -> FixingLeaf:
    """A 1-local sampler is already in the target form: per seed bit, the first
    output reading it is a fair good bit, and everything else composes through it.
    """
    first_for: dict[int, int] = {}
    for j, (support, _) in enumerate(source.outputs):
        if support and support[0] not in first_for:
            first_for[support[0]] = j
    good = tuple(sorted(first_for.values()))
    ordinal = {pos: q for q, pos in enumerate(good)}
    coord_ordinal = {c: ordinal[j] for c, j in first_for.items()}
    bads = []
    for j, (support, table) in enumerate(source.outputs):
        if j in ordinal:
            continue
        if not support:
            bads.append((j, (), table))
            continue
        c = support[0]
        lead_table = source.outputs[first_for[c]][1]
        composed = 0
        for v in (0, 1):
            u = 0 if (lead_table & 1) == v else 1
            composed |= ((table >> u) & 1) << v
        bads.append((j, (coord_ordinal[c],), composed))
    nobf = NobfSource(
        source.n,
        good,
        tuple((Fraction(1, 2), 1) for _ in good),
        tuple(bads),
    )
    return _make_leaf(nobf, weight, caps, counter)


def _fiber_node(
    source: LocalSource,
    chosen: Sequence[int],
    weight: Fraction,
    caps: Caps,
    counter: list[int],
) -> FixingNode:
    """Expose the chosen outputs as good bits by conditioning on fiber indices.

    A uniform point of a support block is the same thing as the output value
    (biased toward the bigger fiber) together with a uniform index modulo the
    fiber size; drawing the index uniformly below lcm(|fiber0|, |fiber1|) makes
    it independent of the value, so within each branch every remaining output
    is a deterministic function of the good values.
    """
    good = tuple(chosen)
    fibers: list[tuple[list[int], list[int]]] = []
    sizes: list[int] = []
    biases: list[tuple[Fraction, int]] = []
    coord_home: dict[int, tuple[int, int]] = {}
    for q, i in enumerate(good):
        support, table = source.outputs[i]
        f0, f1 = [], []
        for idx in range(1 << len(support)):
            (f1 if (table >> idx) & 1 else f0).append(idx)
        fibers.append((f0, f1))
        sizes.append(lcm(len(f0), len(f1)))
        favored = 1 if len(f1) >= len(f0) else 0
        biases.append((Fraction(max(len(f0), len(f1)), 1 << len(support)), favored))
        for pos, c in enumerate(support):
            coord_home[c] = (q, pos)
    leftover = sorted(set(range(source.m)) - set(coord_home))
    leftover_index = {c: j for j, c in enumerate(leftover)}

    count = (1 << len(leftover)) * math.prod(sizes)
    check_cap("decomposition leaves", counter[0] + count, caps.family)

    good_set = set(good)
    bad_plan = []  # (position, support table, good-ordinal support, per-coord recipe)
    for j in range(source.n):
        if j in good_set:
            continue
        support, table = source.outputs[j]
        ordinals = sorted({coord_home[c][0] for c in support if c in coord_home})
        slot = {q: s for s, q in enumerate(ordinals)}
        recipe = []
        for pos, c in enumerate(support):
            if c in coord_home:
                q, pos_in_home = coord_home[c]
                recipe.append((pos, q, slot[q], pos_in_home))
            else:
                recipe.append((pos, None, leftover_index[c], None))
        bad_plan.append((j, support, table, tuple(ordinals), recipe))

    leaves: list[FixingTree] = []
    branch_weight = weight / count
    for index_vec in itertools.product(*(range(L) for L in sizes)):
        for z in range(1 << len(leftover)):
            bads = []
            for j, support, table, ordinals, recipe in bad_plan:
                new_table = 0
                for a in range(1 << len(ordinals)):
                    idx = 0
                    for pos, q, slot_or_z, pos_in_home in recipe:
                        if q is None:
                            bit = (z >> slot_or_z) & 1
                        else:
                            v = (a >> slot_or_z) & 1
                            fiber = fibers[q][v]
                            point = fiber[index_vec[q] % len(fiber)]
                            bit = (point >> pos_in_home) & 1
                        idx |= bit << pos
                    new_table |= ((table >> idx) & 1) << a
                bads.append((j, ordinals, new_table))
            nobf = NobfSource(source.n, good, tuple(biases), tuple(bads))
            leaves.append(_make_leaf(nobf, branch_weight, caps, counter))
    return FixingNode(case="fiber", detail=good, children=tuple(leaves))


def _decompose(
    source: LocalSource, t: int, weight: Fraction, caps: Caps, counter: list[int]
) -> FixingTree:
    source = drop_unused_seed_bits(minimize_supports(source))
    if all(not support for support, _ in source.outputs):
        return _point_leaf(source, weight, caps, counter)
    if source.locality <= 1:
        return _one_local_leaf(source, weight, caps, counter)
    chosen = find_maximal_disjoint_set(source)
    if len(chosen) >= t:
        return _fiber_node(source, chosen, weight, caps, counter)

    pinned = sorted({c for i in chosen for c in source.outputs[i][0]})
    check_cap("pinned seed bits", len(pinned), caps.dist)
    locality = source.locality
    children = []
    for a in range(1 << len(pinned)):
        fixed = {c: (a >> j) & 1 for j, c in enumerate(pinned)}
        child = minimize_supports(_restrict_seed(source, fixed))
        if child.locality > locality - 1:
            raise RuntimeError("pinning the disjoint supports failed to lower the locality")
        children.append(_decompose(child, t, weight / (1 << len(pinned)), caps, counter))
    return FixingNode(case="fix", detail=tuple(pinned), children=tuple(children))


def local_to_biased_nobf(
    source: LocalSource, t: int, caps: Caps = DEFAULT_CAPS
) -> FixingTree:
    """Exact mixture of biased bit-fixing-style sources, aiming for t good bits
    per branch (branches may end with fewer only through the 1-local shortcut
    or by running out of non-constant outputs)."""
    if t < 1:
        raise ValueError(f"good-bit target must be at least 1, got {t}")
    counter = [0]
    return _decompose(source, t, Fraction(1), caps, counter)


def verify_decomposition(
    tree: FixingTree, source: LocalSource, caps: Caps = DEFAULT_CAPS
) -> Fraction:
    """Exact statistical distance between the mixture and the original output law."""
    return statistical_distance(
        mixture(tree_mixture(tree), caps), exact_distribution(source, caps)
    )


# ---------------------------------------------------------------------------
# Trading bias for a frozen part.


@dataclass(frozen=True)
class DebiasGuarantee:
    """At most mass 2**epsilon_log2 sits on components with fewer than k_prime
    surviving good bits (k_prime = mu/4, epsilon_log2 = -mu/4)."""

    mu: Fraction
    k_prime: Fraction
    epsilon_log2: Fraction


def debias_nobf(source: NobfSource) -> tuple[ConvexCombination, DebiasGuarantee]:
    """Split every biased good bit into frozen-at-favored (weight 2p-1) and
    perfectly fair (weight 2-2p) parts. The resulting mixture of unbiased
    sources equals the input exactly; mu sums the fair weights."""
    k = source.k
    mu = sum((2 - 2 * p for p, _ in source.biases), Fraction(0))
    components: list[tuple[Fraction, NobfSource]] = []
    for b in range(1 << k):
        w = Fraction(1)
        for i, (p, _) in enumerate(source.biases):
            w *= (2 - 2 * p) if (b >> i) & 1 else (2 * p - 1)
            if w == 0:
                break
        if w == 0:
            continue
        survivors = [i for i in range(k) if (b >> i) & 1]
        remap = {old: new for new, old in enumerate(survivors)}
        new_good = tuple(source.good_positions[i] for i in survivors)
        new_biases = tuple((Fraction(1, 2), source.biases[i][1]) for i in survivors)
        new_bads: dict[int, tuple[tuple[int, ...], int]] = {}
        for i in range(k):
            if not (b >> i) & 1:
                new_bads[source.good_positions[i]] = ((), source.biases[i][1])
        for j, support, table in source.bad_functions:
            kept = [o for o in support if o in remap]
            new_table = 0
            for a in range(1 << len(kept)):
                idx = 0
                pos = 0
                for slot, o in enumerate(support):
                    if o in remap:
                        idx |= ((a >> pos) & 1) << slot
                        pos += 1
                    else:
                        idx |= source.biases[o][1] << slot
                new_table |= ((table >> idx) & 1) << a
            new_bads[j] = (tuple(remap[o] for o in kept), new_table)
        bad_tuple = tuple(
            (j, sup, tab) for j, (sup, tab) in sorted(new_bads.items())
        )
        components.append(
            (w, NobfSource(source.n, new_good, new_biases, bad_tuple))
        )
    combo = ConvexCombination(tuple(components))
    return combo, DebiasGuarantee(mu=mu, k_prime=mu / 4, epsilon_log2=-mu / 4)


# ---------------------------------------------------------------------------
# The composite pipeline.


@dataclass(frozen=True)
class LocalToNobfResult:
    """Mixture of unbiased bit-fixing-style sources approximating the input.

    Untruncated, the mixture is exact. k_prime is the smallest mu/4 over the
    branches, and epsilon bounds (as an exact dyadic) the mass on components
    with fewer than k_prime fair bits; truncation removes exactly that mass.
    """

    tree: FixingTree
    mixture: ConvexCombination
    k_prime: Fraction
    epsilon: Fraction
    truncated: bool
    dropped_weight: Fraction


def local_to_nobf(
    source: LocalSource, t: int, truncate: bool = False, caps: Caps = DEFAULT_CAPS
) -> LocalToNobfResult:
    tree = local_to_biased_nobf(source, t, caps)
    leaves = tree_leaves(tree)
    flat: list[tuple[Fraction, NobfSource]] = []
    epsilon = Fraction(0)
    k_prime = None
    for leaf in leaves:
        combo, guarantee = debias_nobf(leaf.source)
        epsilon += leaf.weight * Fraction(1, 1 << math.floor(guarantee.mu / 4))
        k_prime = guarantee.k_prime if k_prime is None else min(k_prime, guarantee.k_prime)
        for w, comp in combo.components:
            flat.append((leaf.weight * w, comp))
    dropped = Fraction(0)
    if truncate:
        kept = [(w, c) for w, c in flat if c.k >= k_prime]
        dropped = sum((w for w, c in flat if c.k < k_prime), Fraction(0))
        remaining = 1 - dropped
        flat = [(w / remaining, c) for w, c in kept]
    return LocalToNobfResult(
        tree=tree,
        mixture=ConvexCombination(tuple(flat)),
        k_prime=k_prime,
        epsilon=epsilon,
        truncated=truncate,
        dropped_weight=dropped,
    )


def nobf_witness_for_disperser(
    source: LocalSource, t: int, caps: Caps = DEFAULT_CAPS
) -> NobfSource:
    """First branch exposing at least t good bits, with its biases flattened to
    fair coins; its support provably stays inside the source's support."""
    tree = local_to_biased_nobf(source, t, caps)
    original = exact_distribution(source, caps).support
    for leaf in tree_leaves(tree):
        if leaf.source.k >= t:
            witness = NobfSource(
                leaf.source.n,
                leaf.source.good_positions,
                tuple((Fraction(1, 2), fav) for _, fav in leaf.source.biases),
                leaf.source.bad_functions,
            )
            escaped = exact_distribution(witness, caps).support - original
            if escaped:
                raise RuntimeError(
                    f"witness support escaped the source support at {sorted(escaped)}"
                )
            return witness
    raise ValueError(f"no branch of the decomposition exposes {t} independent bits")


# ---------------------------------------------------------------------------
# Independent structural check.


def nobf_form_check(
    dist: ExactDistribution,
    good_positions: Sequence[int],
    d: int,
    caps: Caps = DEFAULT_CAPS,
) -> bool:
    """Whether a distribution is a product of independent bits at good_positions
    with every other bit a function of at most d of them.

    Checks, from the raw mass function alone: (a) the full point is determined
    by its good bits, (b) the good-bit marginal factorizes into independent
    per-bit marginals, (c) each remaining position has at most d good
    coordinates that are essential over the observed assignments.
    """
    good = tuple(good_positions)
    k = len(good)
    check_cap("good-assignment enumeration", k, caps.dist)
    by_goods: dict[int, int] = {}
    marginal: dict[int, Fraction] = {}
    for point, w in dist.mass.items():
        a = 0
        for q, pos in enumerate(good):
            a |= ((point >> pos) & 1) << q
        if by_goods.setdefault(a, point) != point:
            return False
        marginal[a] = marginal.get(a, Fraction(0)) + w
    per_bit = [
        sum((w for a, w in marginal.items() if (a >> q) & 1), Fraction(0))
        for q in range(k)
    ]
    for a, w in marginal.items():
        expected = Fraction(1)
        for q in range(k):
            expected *= per_bit[q] if (a >> q) & 1 else 1 - per_bit[q]
        if w != expected:
            return False
    good_set = set(good)
    for j in range(dist.n):
        if j in good_set:
            continue
        essential = 0
        for q in range(k):
            step = 1 << q
            for a, point in by_goods.items():
                other = by_goods.get(a ^ step)
                if other is not None and ((point >> j) & 1) != ((other >> j) & 1):
                    essential += 1
                    break
        if essential > d:
            return False
    return True


# ---------------------------------------------------------------------------
# Serialization.


def tree_to_json(tree: FixingTree) -> dict:
    if isinstance(tree, FixingLeaf):
        return {
            "kind": "leaf",
            "weight": frac_str(tree.weight),
            "source": source_to_json(tree.source),
        }
    return {
        "kind": tree.case,
        "detail": list(tree.detail),
        "children": [tree_to_json(child) for child in tree.children],
    }


def tree_from_json(data: dict) -> FixingTree:
    if data["kind"] == "leaf":
        source = source_from_json(data["source"])
        if not isinstance(source, NobfSource):
            raise ValueError("a decomposition leaf must hold a bit-fixing-style source")
        return FixingLeaf(weight=parse_frac(data["weight"]), source=source)
    return FixingNode(
        case=data["kind"],
        detail=tuple(data["detail"]),
        children=tuple(tree_from_json(child) for child in data["children"]),
    )
