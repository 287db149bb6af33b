import random

import pytest

from predsearch.core import NEG_INF, Leaf, ParameterError
from predsearch.oracle import KeySet, exhaustive_equiv, sampled_equiv
from predsearch.tabulation import FullTable, PrefixSplit
from predsearch.veb import (
    VebNode, build_veb, build_veb_core, choose_prefix_bits, query_veb, reduced_key_bits,
    veb_depth_bound,
)


def test_two_key_example():
    root = build_veb(KeySet([1, 0x8000], 16), 4)
    assert query_veb(root, 0x7FFF) == 1
    assert query_veb(root, 0) is NEG_INF
    assert query_veb(root, 0x8000) == 0x8000


def test_singleton_is_leaf():
    root = build_veb(KeySet([300], 16), 4)
    assert isinstance(root, Leaf)
    assert query_veb(root, 299) is NEG_INF
    assert query_veb(root, 301) == 300


def test_short_keys_tabulate():
    root = build_veb(KeySet([1, 5, 9], 4), 4)
    assert isinstance(root, FullTable)


def test_rejects_bad_a():
    with pytest.raises(ParameterError):
        build_veb(KeySet([1, 2], 16), 3)


def test_prefix_bits_choice():
    assert choose_prefix_bits(256, 16) == 8
    assert choose_prefix_bits(300, 16) == 8
    assert choose_prefix_bits(1000, 16) == 8
    assert choose_prefix_bits(2, 64) == 0
    assert choose_prefix_bits(1 << 16, 16) == 15


def test_depth_bound_values():
    assert veb_depth_bound(64, 4) == 5
    assert veb_depth_bound(4, 4) == 1
    assert veb_depth_bound(8, 2) == 3


def _max_key_hit_fires(root, keys):
    """A stored group maximum is answered before descending into the child."""
    for k in keys:
        ans, _ = root.lookup(k)
        assert ans == k


@pytest.mark.parametrize("l", [4, 8, 16])
@pytest.mark.parametrize("n", [2, 37, 256, 4096])
@pytest.mark.parametrize("a", [2, 4])
def test_exhaustive_equivalence(l, n, a):
    n = min(n, 1 << l)
    rng = random.Random(l * 7919 + n * 31 + a)
    Y = KeySet(sorted(rng.sample(range(1 << l), n)), l)
    root = build_veb(Y, a, random.Random(1))
    report = exhaustive_equiv(root, Y)
    assert report.ok, report.mismatches[:5]
    _max_key_hit_fires(root, Y.keys)


def _gap_set(l):
    # prefixes 0x00, 0x10 and 0xF0 occur; 0x20..0xEF do not
    return KeySet([0x0012, 0x0034, 0x1000, 0x10FF, 0xF001], l)


def test_prefix_miss_maps_through_max():
    Y = _gap_set(16)
    root = build_veb_core(Y.keys, 16, 4, random.Random(0))
    assert isinstance(root, VebNode)
    assert query_veb(root, 0x5555) == 0x10FF
    assert query_veb(root, 0x0011) is NEG_INF
    assert exhaustive_equiv(root, Y).ok


def test_key_conservation_every_node():
    rng = random.Random(9)
    keys = sorted(rng.sample(range(1 << 32), 3000))
    root = build_veb(KeySet(keys, 32), 4, random.Random(2))
    for node in root.walk():
        if isinstance(node, VebNode):
            assert len(node.kids) + sum(k.n_keys for k in node.kids) == node.n_keys
        if isinstance(node, PrefixSplit):
            assert sum(k.n_keys for k in node.kids) == node.n_keys


def test_sampled_depth_bound_wide_keys():
    rng = random.Random(10)
    for l, n in ((32, 1024), (64, 1024), (64, 5000)):
        Y = KeySet(sorted({rng.randrange(1 << l) for _ in range(n)}), l)
        root = build_veb(Y, 4, random.Random(3))
        report = sampled_equiv(root, Y, 5000, seed=l)
        assert report.ok
        assert report.max_depth <= veb_depth_bound(reduced_key_bits(root), 4)
