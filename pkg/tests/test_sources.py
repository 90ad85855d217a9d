"""Source models: exact distributions, entropy, distance, canonical forms, JSON round trips."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from f2lab import f2poly as fp
from f2lab import sources as src
from f2lab.config import CapExceeded, Caps
from f2lab.serialize import source_from_json, source_to_json

F = Fraction

IDENTITY_1 = src.LocalSource(1, (((0,), 0b10),))


def uniform_bit() -> src.ExactDistribution:
    return src.ExactDistribution(1, {0: F(1, 2), 1: F(1, 2)})


def point_mass(n: int, x: int) -> src.ExactDistribution:
    return src.ExactDistribution(n, {x: F(1)})


# ---------------------------------------------------------------------------
# Construction validation


def test_local_source_rejects_bad_support():
    with pytest.raises(ValueError):
        src.LocalSource(2, (((0, 0), 0b0000),))
    with pytest.raises(ValueError):
        src.LocalSource(2, (((2,), 0b10),))
    with pytest.raises(ValueError):
        src.LocalSource(2, (((0,), 0b100),))


def test_nobf_source_validation():
    with pytest.raises(ValueError):
        src.NobfSource(2, (0,), ((F(1, 4), 1),), ((1, (), 0),))  # bias below 1/2
    with pytest.raises(ValueError):
        src.NobfSource(2, (0,), ((F(1, 2), 1),), ())  # missing bad position
    with pytest.raises(ValueError):
        src.NobfSource(2, (0,), ((F(1, 2), 1),), ((1, (1,), 0b10),))  # ordinal out of range


def test_affine_rejects_dependent_basis():
    with pytest.raises(ValueError):
        src.AffineSubspace(3, 0, (0b011, 0b110, 0b101))


def test_exact_distribution_mass_must_sum_to_one():
    with pytest.raises(ValueError):
        src.ExactDistribution(1, {0: F(1, 2)})
    with pytest.raises(ValueError):
        src.ExactDistribution(1, {0: F(1, 2), 1: F(1, 3)})


def test_convex_combination_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        src.ConvexCombination(((F(1, 2), uniform_bit()),))


# ---------------------------------------------------------------------------
# exact_distribution


def test_identity_source_uniform():
    dist = src.exact_distribution(IDENTITY_1)
    assert dist == uniform_bit()


def test_clique_2_distribution():
    # Oracle: enumerate the 4 seeds of (y1, y2, y1&y2) by hand.
    dist = src.exact_distribution(src.clique_source(2))
    assert dist == src.ExactDistribution(
        3, {0b000: F(1, 4), 0b001: F(1, 4), 0b010: F(1, 4), 0b111: F(1, 4)}
    )


def test_constant_source_point_mass():
    constant = src.LocalSource(1, (((), 1), ((), 0)))
    assert src.exact_distribution(constant) == point_mass(2, 0b01)


def test_nobf_distribution_with_bias():
    # One good bit at position 0 with Pr[1] = 3/4; position 1 copies it.
    source = src.NobfSource(2, (0,), ((F(3, 4), 1),), ((1, (0,), 0b10),))
    dist = src.exact_distribution(source)
    assert dist == src.ExactDistribution(2, {0b00: F(1, 4), 0b11: F(3, 4)})


def test_nobf_distribution_drops_zero_weight_assignments():
    source = src.NobfSource(1, (0,), ((F(1), 1),), ())
    assert src.exact_distribution(source) == point_mass(1, 1)


def test_affine_distribution():
    sub = src.AffineSubspace(3, 0b100, (0b011,))
    dist = src.exact_distribution(sub)
    assert dist == src.ExactDistribution(3, {0b100: F(1, 2), 0b111: F(1, 2)})


def test_distribution_cap():
    with pytest.raises(CapExceeded):
        src.exact_distribution(src.clique_source(6), caps=Caps(dist=5))


# ---------------------------------------------------------------------------
# min_entropy / statistical_distance / mixture


def test_min_entropy_uniform():
    assert src.min_entropy(src.exact_distribution(src.clique_source(2))) == 2.0


def test_min_entropy_point_mass():
    assert src.min_entropy(point_mass(3, 5)) == 0.0


def test_min_entropy_clique_3():
    # Oracle: 8 seeds map injectively, so the max mass is 1/8.
    assert src.min_entropy(src.exact_distribution(src.clique_source(3))) == 3.0


def test_min_entropy_at_most_log_support():
    import math

    rng = random.Random(5)
    for _ in range(10):
        pts = rng.sample(range(16), rng.randrange(1, 6))
        weights = [rng.randrange(1, 5) for _ in pts]
        total = sum(weights)
        dist = src.ExactDistribution(4, {p: F(w, total) for p, w in zip(pts, weights)})
        assert src.min_entropy(dist) <= math.log2(len(pts)) + 1e-12


def test_statistical_distance_self():
    d = src.exact_distribution(src.clique_source(2))
    assert src.statistical_distance(d, d) == 0


def test_statistical_distance_disjoint():
    assert src.statistical_distance(point_mass(2, 0), point_mass(2, 3)) == 1


def test_statistical_distance_uniform_vs_point():
    assert src.statistical_distance(uniform_bit(), point_mass(1, 0)) == F(1, 2)


def test_statistical_distance_metric_properties():
    rng = random.Random(17)

    def random_dist() -> src.ExactDistribution:
        pts = rng.sample(range(8), rng.randrange(1, 5))
        weights = [rng.randrange(1, 6) for _ in pts]
        total = sum(weights)
        return src.ExactDistribution(3, {p: F(w, total) for p, w in zip(pts, weights)})

    for _ in range(25):
        a, b, c = random_dist(), random_dist(), random_dist()
        assert src.statistical_distance(a, b) == src.statistical_distance(b, a)
        assert (src.statistical_distance(a, b) == 0) == (a == b)
        assert src.statistical_distance(a, c) <= src.statistical_distance(a, b) + src.statistical_distance(b, c)


def test_mixture_single_component():
    combo = src.ConvexCombination(((F(1), src.clique_source(2)),))
    assert src.mixture(combo) == src.exact_distribution(src.clique_source(2))


def test_mixture_two_point_masses():
    combo = src.ConvexCombination(((F(1, 2), point_mass(1, 0)), (F(1, 2), point_mass(1, 1))))
    assert src.mixture(combo) == uniform_bit()


# ---------------------------------------------------------------------------
# Lifting facts: bias and non-constancy transfer through convex combinations


def bias_under(dist: src.ExactDistribution, f: fp.MultilinearPoly) -> Fraction:
    acc = Fraction(0)
    for point, w in dist.mass.items():
        acc += w if fp.evaluate(f, point) == 0 else -w
    return abs(acc)


def test_extractor_lifting_exact():
    rng = random.Random(29)
    for _ in range(10):
        comps = []
        remaining = F(1)
        count = rng.randrange(2, 5)
        for i in range(count):
            w = remaining if i == count - 1 else remaining * F(1, rng.randrange(2, 4))
            remaining -= 0 if i == count - 1 else w
            pts = rng.sample(range(8), rng.randrange(1, 5))
            ws = [rng.randrange(1, 4) for _ in pts]
            tot = sum(ws)
            comps.append((w, src.ExactDistribution(3, {p: F(q, tot) for p, q in zip(pts, ws)})))
        combo = src.ConvexCombination(tuple(comps))
        mixed = src.mixture(combo)
        for seed in range(5):
            f = fp.random_poly(3, 3, rng)
            assert bias_under(mixed, f) <= max(bias_under(src.exact_distribution(c), f) for _, c in comps)


def test_disperser_lifting_support_monotone():
    rng = random.Random(31)
    for _ in range(20):
        small = rng.sample(range(16), rng.randrange(2, 6))
        extra = [p for p in range(16) if p not in small]
        big = small + rng.sample(extra, rng.randrange(1, 4))
        f = fp.random_poly(4, 4, rng)
        values_small = {fp.evaluate(f, p) for p in small}
        values_big = {fp.evaluate(f, p) for p in big}
        if len(values_small) == 2:
            assert len(values_big) == 2


# ---------------------------------------------------------------------------
# clique_source


def test_clique_2_shape():
    s = src.clique_source(2)
    assert s.m == 2 and s.n == 3
    assert s.outputs[0] == ((0,), 0b10)
    assert s.outputs[1] == ((1,), 0b10)
    assert s.outputs[2] == ((0, 1), 0b1000)
    assert s.locality == 2


def test_clique_4_size():
    assert src.clique_source(4).n == 10


# ---------------------------------------------------------------------------
# sample


def test_sample_deterministic():
    s = src.clique_source(3)
    assert src.sample(s, 77) == src.sample(s, 77)


def test_sample_constant_source():
    constant = src.LocalSource(1, (((), 1),))
    assert all(src.sample(constant, s) == 1 for s in range(5))


def test_sample_frequencies_clique_2():
    s = src.clique_source(2)
    rng = random.Random(123)
    counts: dict[int, int] = {}
    trials = 100_000
    for _ in range(trials):
        x = src.sample(s, rng)
        counts[x] = counts.get(x, 0) + 1
    sd = (trials * 0.25 * 0.75) ** 0.5
    for point in (0b000, 0b001, 0b010, 0b111):
        assert abs(counts.get(point, 0) - trials / 4) <= 3 * sd


def test_sample_nobf_bias_smoke():
    source = src.NobfSource(2, (0,), ((F(3, 4), 1),), ((1, (0,), 0b10),))
    rng = random.Random(55)
    trials = 40_000
    ones = sum(1 for _ in range(trials) if src.sample(source, rng) == 0b11)
    sd = (trials * 0.75 * 0.25) ** 0.5
    assert abs(ones - trials * 0.75) <= 3 * sd


def test_sample_matches_support():
    s = src.clique_source(3)
    support = src.exact_distribution(s).support
    rng = random.Random(9)
    for _ in range(200):
        assert src.sample(s, rng) in support


# ---------------------------------------------------------------------------
# affine_canonical_form


def test_canonical_form_standard_basis():
    sub = src.AffineSubspace(3, 0, (0b001, 0b010))
    form = src.affine_canonical_form(sub)
    assert form.pivots == (0, 1)
    assert form.expressions == ((2, 0, ()),)


def test_canonical_form_sum_coordinate():
    # Oracle: span{110, 011} = {000, 110, 011, 101}; on every point x3 = x1 + x2.
    sub = src.AffineSubspace(3, 0, (0b011, 0b110))
    form = src.affine_canonical_form(sub)
    assert form.pivots == (0, 1)
    assert form.expressions == ((2, 0, (0, 1)),)
    assert {form.point_from_pivots(a) for a in range(4)} == set(sub.points())


def test_canonical_form_with_shift():
    sub = src.AffineSubspace(3, 0b001, (0b010,))
    form = src.affine_canonical_form(sub)
    assert form.pivots == (1,)
    assert form.expressions == ((0, 1, ()), (2, 0, ()))


def test_canonical_form_reconstructs_subspace():
    rng = random.Random(61)
    for _ in range(20):
        n = rng.randrange(2, 7)
        dim = rng.randrange(1, n + 1)
        vectors = []
        while len(vectors) < dim:
            v = rng.randrange(1, 1 << n)
            if fp.f2_matrix_rank(vectors + [v]) == len(vectors) + 1:
                vectors.append(v)
        sub = src.AffineSubspace(n, rng.randrange(1 << n), tuple(vectors))
        form = src.affine_canonical_form(sub)
        assert {form.point_from_pivots(a) for a in range(1 << dim)} == set(sub.points())


# ---------------------------------------------------------------------------
# nobf_as_local


def test_nobf_as_local_identity():
    source = src.NobfSource(1, (0,), ((F(1, 2), 1),), ())
    assert src.nobf_as_local(source) == IDENTITY_1


def test_nobf_as_local_preserves_distribution():
    rng = random.Random(71)
    for _ in range(15):
        n = rng.randrange(1, 6)
        k = rng.randrange(1, n + 1)
        good = tuple(sorted(rng.sample(range(n), k)))
        bad = []
        for j in range(n):
            if j in good:
                continue
            size = rng.randrange(0, min(k, 2) + 1)
            support = tuple(sorted(rng.sample(range(k), size)))
            bad.append((j, support, rng.getrandbits(1 << size)))
        source = src.NobfSource(n, good, tuple((F(1, 2), 1) for _ in range(k)), tuple(bad))
        assert src.exact_distribution(src.nobf_as_local(source)) == src.exact_distribution(source)


def test_nobf_as_local_rejects_biased():
    source = src.NobfSource(1, (0,), ((F(3, 4), 1),), ())
    with pytest.raises(ValueError):
        src.nobf_as_local(source)


# ---------------------------------------------------------------------------
# support minimization / seed normalization


def test_minimize_supports_drops_dummy_coordinate():
    # Output reads seeds {0,1} but only depends on seed 1 (table 0b1100 = y2).
    source = src.LocalSource(2, (((0, 1), 0b1100),))
    reduced = src.minimize_supports(source)
    assert reduced.outputs == (((1,), 0b10),)
    assert src.exact_distribution(reduced) == src.exact_distribution(source)


def test_minimize_supports_keeps_essential():
    source = src.clique_source(3)
    assert src.minimize_supports(source) == source


def test_minimize_supports_constant_table():
    source = src.LocalSource(2, (((0, 1), 0b1111),))
    assert src.minimize_supports(source).outputs == (((), 1),)


def test_drop_unused_seed_bits():
    source = src.LocalSource(4, (((2,), 0b10), ((2, 3), 0b0110)))
    slim = src.drop_unused_seed_bits(source)
    assert slim.m == 2
    assert slim.outputs == (((0,), 0b10), ((0, 1), 0b0110))
    assert src.exact_distribution(slim) == src.exact_distribution(source)


# ---------------------------------------------------------------------------
# invariants


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_distribution_masses_sum_to_one(data):
    m = data.draw(st.integers(1, 4))
    n = data.draw(st.integers(1, 3))
    outputs = []
    for _ in range(n):
        size = data.draw(st.integers(0, min(m, 2)))
        support = tuple(sorted(data.draw(st.permutations(range(m)))[:size]))
        table = data.draw(st.integers(0, (1 << (1 << size)) - 1))
        outputs.append((support, table))
    dist = src.exact_distribution(src.LocalSource(m, tuple(outputs)))
    assert sum(dist.mass.values()) == 1


# ---------------------------------------------------------------------------
# JSON round trips


def test_json_round_trip_local():
    s = src.clique_source(3)
    assert source_from_json(source_to_json(s)) == s


def test_json_round_trip_nobf():
    source = src.NobfSource(
        3, (0, 2), ((F(3, 4), 1), (F(1, 2), 0)), ((1, (0, 1), 0b0110),)
    )
    assert source_from_json(source_to_json(source)) == source


def test_json_round_trip_affine():
    sub = src.AffineSubspace(4, 0b1010, (0b0011, 0b1100))
    assert source_from_json(source_to_json(sub)) == sub


def test_json_clique_expands():
    assert source_from_json({"type": "clique", "k": 2}) == src.clique_source(2)


def test_json_unknown_type():
    with pytest.raises(ValueError):
        source_from_json({"type": "mystery"})
