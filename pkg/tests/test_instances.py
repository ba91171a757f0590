import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gsqc import instances as ins
from gsqc.errors import CapacityError, ConfigurationError, ValidationError
from gsqc.instances import ExactCoverInstance


def test_generate_examples():
    assert ins.generate(3, 1, seed=0).clauses == ((0, 1, 2),)
    a, b = ins.generate(9, 6, seed=42), ins.generate(9, 6, seed=42)
    assert a == b and len(set(a.clauses)) == 6
    assert all(len(set(c)) == 3 for c in a.clauses)
    with pytest.raises(CapacityError):
        ins.generate(5, 11, seed=0)
    assert len(set(ins.generate(5, 10, seed=0).clauses)) == 10
    with pytest.raises(ConfigurationError):
        ins.generate(2, 0)


def test_instance_validation():
    with pytest.raises(ConfigurationError):
        ExactCoverInstance(3, ((0, 0, 1),))
    with pytest.raises(ConfigurationError):
        ExactCoverInstance(3, ((0, 1, 3),))
    assert ExactCoverInstance(6, ((0, 1, 2),) * 3).alpha == 0.5


def test_brute_force_examples():
    one = ExactCoverInstance(3, ((0, 1, 2),))
    assert [ins.bitstring(s, 3) for s in ins.brute_force(one)] == ["001", "010", "100"]
    assert len(ins.brute_force(ExactCoverInstance(4, ((0, 1, 2),)))) == 6
    assert ins.brute_force(ExactCoverInstance(3, ((0, 1, 2), (0, 1, 2)))) == ins.brute_force(one)
    with pytest.raises(CapacityError):
        ins.brute_force(ExactCoverInstance(31))


def test_brute_force_agrees_with_filter():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(3, 13))
        m = int(rng.integers(0, min(2 * n, math.comb(n, 3)) + 1))
        inst = ins.generate(n, m, seed=int(rng.integers(2**31)))
        sols = ins.brute_force(inst)
        assert sols == ins.brute_force_filtered(inst)
        assert all(ins.satisfies(inst, s) for s in sols)


def test_backbone():
    inst = ExactCoverInstance(4, ((0, 1, 2), (1, 2, 3)))
    sols = ins.brute_force(inst)
    assert sorted(ins.bitstring(s, 4) for s in sols) == ["0010", "0100", "1001"]
    assert ins.backbone(sols, 4) == {}
    # the first two clauses force x2 = x3, the third then forces x2 = 0 and x0 = 1
    unique = ExactCoverInstance(4, ((0, 1, 2), (0, 1, 3), (0, 2, 3)))
    sols = ins.brute_force(unique)
    assert [ins.bitstring(s, 4) for s in sols] == ["0001"]
    assert ins.backbone(sols, 4) == {0: 1, 1: 0, 2: 0, 3: 0}
    assert ins.backbone([0b0101, 0b0111], 4) == {0: 1, 2: 1, 3: 0}
    assert ins.backbone([], 4) == {}


@pytest.mark.parametrize("n", [3, 4, 7, 10])
def test_single_clause_ratio(n):
    prof = ins.ratio_profile(ExactCoverInstance(n, ((0, 1, 2),)))
    assert prof.counts == [2**n, 3 * 2 ** (n - 3)]
    assert prof.ratios == [Fraction(8, 3)]


def test_ratio_profile_examples():
    prof = ins.ratio_profile(ExactCoverInstance(6, ((0, 1, 2), (3, 4, 5))))
    assert prof.counts[2] == 9 and prof.ratios == [Fraction(8, 3)] * 2
    assert not prof.truncated and prof.max_ratio == Fraction(8, 3)
    # x0+x1+x2 = 1, x0+x1+x3 = 1 and x2+x3+x0 = 1 with x0=0 forces x2=x3 and x2+x3=1
    dead = ExactCoverInstance(4, ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)))
    prof = ins.ratio_profile(dead)
    assert prof.counts[-1] == 0 and prof.truncated
    assert len(prof.ratios) == prof.counts.index(0)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 9), st.integers(0, 8), st.integers(0, 2**31))
def test_ratio_profile_monotone(n, m, seed):
    inst = ins.generate(n, min(m, math.comb(n, 3)), seed=seed)
    counts = ins.ratio_profile(inst).counts
    assert counts[0] == 2**n
    assert all(a >= b >= 0 for a, b in zip(counts, counts[1:]))
    assert counts[-1] == len(ins.brute_force(inst))


def exhaustive_greedy_order(inst):
    """Order whose (ratio, index) sequence is lexicographically smallest over all permutations."""
    best = None
    for perm in itertools.permutations(range(inst.n_clauses)):
        counts = ins.ratio_profile(inst.reordered(perm)).counts
        key = []
        for j, idx in enumerate(perm):
            r = Fraction(counts[j], counts[j + 1]) if counts[j + 1] else math.inf
            key.append((r, idx))
            if counts[j + 1] == 0:
                # once empty, every later ratio is undefined; order the rest by index
                key += [(math.inf, i) for i in perm[j + 1:]]
                break
        if best is None or key < best[0]:
            best = (key, perm)
    return best[1]


def test_greedy_matches_exhaustive_search():
    rng = np.random.default_rng(3)
    for _ in range(25):
        n = int(rng.integers(4, 9))
        m = min(int(rng.integers(1, 6)), math.comb(n, 3))
        inst = ins.generate(n, m, seed=int(rng.integers(2**31)))
        greedy = ins.order_clauses(inst, "greedy-min-ratio")
        want = inst.reordered(exhaustive_greedy_order(inst))
        assert greedy.clauses == want.clauses
        assert ins.brute_force(greedy) == ins.brute_force(inst)


def test_greedy_examples():
    one = ExactCoverInstance(5, ((1, 2, 3),))
    assert ins.order_clauses(one, "greedy-min-ratio") == one
    # after (0,1,2), the overlapping (0,1,3) cuts 24 -> 12 while the disjoint (3,4,5) cuts by 8/3
    inst = ExactCoverInstance(6, ((0, 1, 2), (3, 4, 5), (0, 1, 3)))
    got = ins.order_clauses(inst, "greedy-min-ratio")
    assert got.clauses == ((0, 1, 2), (0, 1, 3), (3, 4, 5))
    prof = ins.ratio_profile(got)
    assert prof.ratios[:2] == [Fraction(8, 3), Fraction(2)]
    assert ins.ratio_profile(ins.order_clauses(got, "greedy-min-ratio")).ratios == prof.ratios
    assert ins.order_clauses(inst) is inst
    with pytest.raises(ConfigurationError):
        ins.order_clauses(inst, "random")


def test_required_lambda():
    assert ins.required_lambda(1, 40).lambda_sq == 40
    r = ins.required_lambda(Fraction(8, 3), 30)
    assert r.lambda_sq == pytest.approx(80, rel=1e-15)
    assert r.gap_penalty == pytest.approx((3 / 8) ** 4)
    # unique solution after a single step from 2^N candidates
    n = 10
    assert ins.required_lambda(2**n, 1).lam == pytest.approx(2 ** (n / 2))
    with pytest.raises(ValidationError):
        ins.required_lambda(0.5, 30)
    with pytest.raises(ValidationError):
        ins.required_lambda(2, 0)


def test_dimacs_and_json_roundtrip(tmp_path):
    inst = ins.generate(8, 5, seed=1)
    path = tmp_path / "a.cnf"
    ins.write_dimacs(inst, path)
    assert ins.load_instance(path) == inst
    jpath = tmp_path / "a.json"
    jpath.write_text(inst.to_json())
    assert ins.load_instance(jpath) == inst
    path.write_text("c comment\np ec3 4 1\n0 1 2 0\n")
    assert ins.read_dimacs(path).clauses == ((0, 1, 2),)
    path.write_text("p ec3 4 2\n0 1 2\n")
    with pytest.raises(ConfigurationError):
        ins.read_dimacs(path)
    path.write_text("0 1 2\n")
    with pytest.raises(ConfigurationError):
        ins.read_dimacs(path)
