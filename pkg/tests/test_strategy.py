import random

import pytest

from predsearch.core import EMPTY, NEG_INF, BudgetError, Leaf, ParameterError
from predsearch.oracle import KeySet, exhaustive_equiv, sampled_equiv
from predsearch.strategy import (
    BuildConfig, SpaceAmp, amplify_space, audit_breakdown, build, plan, recount_bits,
    representatives,
)
from predsearch.tabulation import FullTable
from predsearch.veb import build_veb


def random_set(rng, n, l):
    return KeySet(sorted({rng.randrange(1 << l) for _ in range(n)}), l)


def test_plan_large_universe_prefers_reduction():
    for lg_n in (32, 64):
        l = lg_n ** 3
        cfg = BuildConfig(2**lg_n, l, l, 2**(2 * lg_n))
        assert plan(cfg).branch == 3


def test_plan_polynomial_universe_prefers_veb():
    for j in (12, 16, 20):
        n = 2**j
        cfg = BuildConfig(n, j, 64, n * j)
        assert plan(cfg).branch == 2


def test_plan_huge_word_prefers_btree():
    cfg = BuildConfig(8, 8, 128, 8)
    assert plan(cfg).branch == 1


def test_plan_override_and_validation():
    cfg = BuildConfig(100, 16, 64, 400)
    p = plan(cfg, 4)
    assert p.branch == 4 and p.forced and p.family == "beame_fich_small"
    with pytest.raises(ParameterError):
        plan(cfg, 5)


@pytest.mark.parametrize("args", [(-1, 8, 64, 8), (10, 0, 64, 10), (10, 64, 32, 10),
                                  (10, 8, 64, 9), (300, 8, 64, 300)])
def test_config_invariants(args):
    with pytest.raises(ParameterError):
        BuildConfig(*args)


def test_config_rounding():
    cfg = BuildConfig(1000, 20, 48, 4000)
    assert (cfg.key_bits_rounded, cfg.w_rounded) == (32, 64)
    assert cfg.a_raw == 3 + 6
    assert cfg.a == 8


def test_caps_checked_at_build():
    cfg = BuildConfig(1, 100, 128, 1)
    with pytest.raises(ParameterError):
        build(KeySet([5], 100), cfg)


def test_representatives_arithmetic():
    pos = representatives(1024, 64)
    assert len(pos) == 16
    gaps = [b - a - 1 for a, b in zip(pos, [*pos[1:], 1024])]
    assert all(g < 64 for g in gaps) and len(gaps) == 16


def test_amplify_small_set_is_single_segment():
    Y = KeySet([1, 5, 9], 16)
    root = amplify_space(Y, 64, lambda keys: pytest.fail("no top structure expected"))
    assert root.kind == "btree"


def test_amplified_veb_sweep():
    rng = random.Random(1)
    Y = random_set(rng, 1 << 14, 32)
    cfg = BuildConfig(len(Y), 32, 64, 4 * len(Y))
    root = amplify_space(Y, cfg, lambda keys: build_veb(keys, cfg.a, rng, key_bits=32), rng)
    assert isinstance(root, SpaceAmp)
    assert len(root.segments) == -(-len(Y) // 64)
    assert sampled_equiv(root, Y, 100_000, seed=2).ok


@pytest.mark.parametrize("branch,kinds", [(1, {"btree"}), (2, {"veb", "prefix_split"}),
                                          (3, {"reduction"}), (4, {"reduction"})])
@pytest.mark.parametrize("n", [3000, 1 << 14])
def test_forced_dispatch(branch, kinds, n):
    rng = random.Random(branch)
    Y = random_set(rng, n, 32)
    s = build(Y, BuildConfig(len(Y), 32, 64, 4 * len(Y)), seed=3, branch=branch)
    assert s.branch == branch and s.plan.forced
    assert s.root_kind in kinds


def test_empty_set_every_branch():
    for b in (None, 1, 2, 3, 4):
        s = build(KeySet([], 16), BuildConfig(0, 16, 64, 1), branch=b)
        assert s.root is EMPTY
        assert s.query(123)[0] is NEG_INF


def test_cross_branch_consistency():
    rng = random.Random(4)
    Y = random_set(rng, 5000, 64)
    cfg = BuildConfig(len(Y), 64, 64, 4 * len(Y))
    for b in (1, 2, 3, 4):
        s = build(Y, cfg, seed=5, branch=b)
        report = sampled_equiv(s, Y, 100_000, seed=6)
        assert report.ok, (b, report.mismatches[:3])
        assert report.max_depth <= s.predicted_depth()


def test_query_probe_examples():
    leaf = Leaf(7, 8)
    ans, st = leaf.lookup(9)
    assert (ans, st.probes) == (7, 1)
    t = FullTable.build([3, 200], 8)
    assert all(t.lookup(x)[1].probes == 1 for x in range(256))


def test_veb_depth_example():
    rng = random.Random(7)
    Y = random_set(rng, 2, 64)
    root = build_veb(Y, 4, rng)
    report = sampled_equiv(root, Y, 2000, seed=1)
    assert report.ok and report.max_depth <= 5


def test_space_accounting():
    rng = random.Random(8)
    Y = random_set(rng, 2000, 32)
    cfg = BuildConfig(len(Y), 32, 64, 4 * len(Y))
    for b in (1, 2, 3, 4):
        s = build(Y, cfg, seed=1, branch=b)
        assert recount_bits(s.root) == s.bits_used == s.metadata["bits_used"]
        assert sum(audit_breakdown(s.root).values()) == s.bits_used
        assert s.bits_used <= cfg.budget_bits


def test_budget_error_carries_audit():
    rng = random.Random(9)
    Y = KeySet(sorted(rng.sample(range(256), 20)), 8)
    cfg = BuildConfig(len(Y), 8, 8, len(Y))
    with pytest.raises(BudgetError) as info:
        build(Y, cfg, branch=3)
    assert info.value.audit["bits_used"] > cfg.budget_bits
    assert "reduction" in info.value.audit
    s = build(Y, cfg, branch=3, enforce_budget=False)
    assert exhaustive_equiv(s, Y).ok


def test_determinism():
    rng = random.Random(10)
    Y = random_set(rng, 3000, 32)
    cfg = BuildConfig(len(Y), 32, 64, 4 * len(Y))
    from predsearch.structfile import serialize
    for b in (2, 3):
        assert serialize(build(Y, cfg, seed=11, branch=b)) == serialize(build(Y, cfg, seed=11, branch=b))


def test_query_rejects_out_of_range():
    s = build(KeySet([1, 2], 8), BuildConfig(2, 8, 64, 2))
    with pytest.raises(ParameterError):
        s.query(256)
    with pytest.raises(ParameterError):
        s.query(-1)


def test_exhaustive_small_universe_all_branches():
    rng = random.Random(12)
    Y = random_set(rng, 700, 12)
    cfg = BuildConfig(len(Y), 12, 64, 16 * len(Y))
    for b in (1, 2, 3, 4):
        assert exhaustive_equiv(build(Y, cfg, seed=0, branch=b), Y).ok
