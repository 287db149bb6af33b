import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from predsearch.core import EMPTY, NEG_INF, BuildError, ParameterError
from predsearch.oracle import KeySet, exhaustive_equiv, sampled_equiv
from predsearch.tabulation import FullTable
from predsearch.beame_fich import (
    ReductionNode, Schedule, audit_reductions, build_beame_fich, build_reduction,
    build_signature, comm_pref_plus, depth_formula_large, node_violations, predicted_depth,
    prefix_code, query_reduction, query_signature, sample_indices, schedule_large, schedule_small,
)
from predsearch.wordops import WordSpec, lcp_chars_raw


def brute_lcp(zkeys, x, l, c):
    return max(lcp_chars_raw(x, z, l, c) for z in zkeys)


def tab(sub, bits):
    return FullTable.build(sub, bits) if bits <= 16 else build_beame_fich(
        sub, bits, Schedule("large", 8, 2, 4), random.Random(0))


# ---------------------------------------------------------------- signature

def test_identity_fallback_example():
    sig = build_signature(KeySet([0x05, 0xF0, 0xFF], 8), WordSpec.with_chars(64, 8, 2))
    assert sig.hash_bits == 4 == sig.char_bits
    assert sig.identity
    assert len(sig.table) == 256


def test_sample_key_has_full_lcp():
    rng = random.Random(1)
    zkeys = sorted(rng.sample(range(1 << 32), 16))
    sig = build_signature(zkeys, 2, rng, key_bits=32)
    for z in zkeys:
        r, wit = query_signature(sig, z)
        assert r == 2 and zkeys[wit] == z


def test_sixteen_keys_32_bits_brute_force():
    # two 16-bit characters: 8-bit hashes, a 2**16-entry table
    rng = random.Random(2)
    zkeys = sorted(rng.sample(range(1 << 32), 16))
    sig = build_signature(KeySet(zkeys, 32), WordSpec.with_chars(64, 32, 2), rng)
    assert not sig.identity and sig.injective()
    for _ in range(100_000):
        z = zkeys[rng.randrange(16)]
        x = rng.choice((rng.randrange(1 << 32), z ^ rng.randrange(1 << 16)))
        r, wit = query_signature(sig, x)
        assert r == brute_lcp(zkeys, x, 32, 16)
        assert lcp_chars_raw(x, zkeys[wit], 32, 16) == r


def test_witness_shares_first_character():
    zkeys = [0x1000, 0xF000, 0xF0AB]
    sig = build_signature(zkeys, 4, random.Random(3), key_bits=16)
    r, wit = query_signature(sig, 0xF100)
    assert r >= 1 and zkeys[wit] >> 12 == 0xF
    r, _ = query_signature(sig, 0x2000)
    assert r == 0


def test_comm_pref_plus():
    zkeys = [0x1234, 0x5678]
    sig = build_signature(zkeys, 4, random.Random(0), key_bits=16)
    assert comm_pref_plus(sig, 0x9000) == (0x9, 1)
    assert comm_pref_plus(sig, 0x1235) == (0x1235, 4)
    with pytest.raises(ParameterError):
        comm_pref_plus(sig, 0x5678)


@settings(max_examples=200)
@given(st.lists(st.integers(0, (1 << 16) - 1), min_size=1, max_size=20, unique=True),
       st.integers(0, (1 << 16) - 1))
def test_comm_pref_plus_is_longer_prefix(zkeys, x):
    zkeys.sort()
    sig = build_signature(zkeys, 4, random.Random(len(zkeys)), key_bits=16)
    if x in zkeys:
        return
    value, length = comm_pref_plus(sig, x)
    assert length == brute_lcp(zkeys, x, 16, 4) + 1
    assert value == x >> (16 - 4 * length)


def test_prefix_codes_distinguish_lengths():
    assert prefix_code(0x0F, 8, 4, 0) == 1
    assert prefix_code(0x0F, 8, 4, 1) == 0b10000
    assert prefix_code(0x0F, 8, 4, 2) == 0x10F


# ---------------------------------------------------------------- reduction

def test_sample_indices_hit_every_window():
    for n in range(1, 200):
        for q in (2, 3, 4, 7, 16, 300):
            idx = sample_indices(n, q)
            window = -(-n // q)
            assert idx[0] == 0 and len(idx) <= q
            gaps = [b - a for a, b in zip([-1, *idx], [*idx, n])]
            assert max(gaps) <= window


def test_sixty_four_keys_h2_q4():
    rng = random.Random(4)
    keys = sorted(rng.sample(range(1 << 16), 64))
    node = build_reduction(KeySet(keys, 16), 2, 4, tab, tab, rng)
    assert node.sig.q == 4
    assert all(k.n_keys < 16 for k in node.vkids)
    assert sum(k.n_keys for k in node.length_children()) <= node.m
    assert node_violations(node) == []
    assert exhaustive_equiv(node, KeySet(keys, 16)).ok


def test_shared_first_character():
    rng = random.Random(5)
    keys = sorted(0xAB00 | v for v in rng.sample(range(256), 40))
    node = build_reduction(keys, 2, 4, tab, tab, rng, key_bits=16)
    assert len(node.vmax) == len(keys) - node.sig.q
    assert all(k is EMPTY or k.n_keys == 0 for k in node.vkids)
    assert exhaustive_equiv(node, KeySet(keys, 16)).ok


def test_q_at_least_n():
    keys = [3, 900, 40000, 50000, 65535]
    node = build_reduction(keys, 4, 8, tab, tab, key_bits=16)
    assert node.sig.zkeys == keys
    assert node.vmax == []
    assert exhaustive_equiv(node, KeySet(keys, 16)).ok


def test_rejects_bad_parameters():
    with pytest.raises(BuildError):
        build_reduction([1, 2, 3], 3, 4, tab, tab, key_bits=16)
    with pytest.raises(BuildError):
        build_reduction([1, 2, 3], 2, 1, tab, tab, key_bits=16)
    with pytest.raises(BuildError):
        build_reduction([1], 2, 4, tab, tab, key_bits=16)


def test_query_paths():
    keys = [0x1100, 0x1150, 0x1180, 0x2200, 0x2210, 0x22F0, 0x9000]
    node = build_reduction(keys, 2, 2, tab, tab, key_bits=16)
    for z in node.sig.zkeys:
        assert query_reduction(node, z) == z
    assert query_reduction(node, 0x10FF) is NEG_INF
    assert query_reduction(node, 0x8FFF) == 0x22F0
    assert query_reduction(node, 0xFFFF) == 0x9000
    assert exhaustive_equiv(node, KeySet(keys, 16)).ok


def test_median_split_path():
    # the shared prefix row has more next characters than n/2
    keys = sorted({0x4000 | (d << 8) for d in range(0, 256, 5)} | {0x0001})
    node = build_reduction(keys, 2, 2, tab, tab, key_bits=16)
    assert any(p is not None for p in node.upivot)
    assert node_violations(node) == []
    assert exhaustive_equiv(node, KeySet(keys, 16)).ok


# ---------------------------------------------------------------- schedules

def test_schedule_large_formula():
    s = schedule_large(2, 64, 16)
    assert (s.h, s.q_fixed) == (4, 4)


def test_schedule_large_tabulates_short_keys():
    s = schedule_large(100, 8, 16)
    assert s.notes == ("tabulate at once",)
    assert predicted_depth(s, 100, 8) == 0


def test_schedule_large_regime():
    with pytest.raises(ParameterError):
        schedule_large(1 << 12, 64, 8)
    assert not schedule_large(1 << 12, 64, 8, strict=False).in_regime


def test_schedule_large_depth_example():
    s = Schedule("large", 32, 4, 1 << (32 // 8))
    assert depth_formula_large(1 << 10, 1 << 10, 32, 4) == 5.0
    assert predicted_depth(s, 1 << 10, 1 << 10) <= 5 + 2


def test_schedule_small_q_rule():
    s = Schedule("small", 16, 2, 4)
    assert s.q_for(1 << 16) == 4
    assert s.q_for(3) == 4
    assert s.q_for(1 << 40) == 32


def test_schedule_small_tiny_n():
    s = schedule_small(3, 64, 16, strict=False)
    assert (s.h, s.q_for(3)) == (2, 4)
    assert not s.in_regime
    with pytest.raises(ParameterError):
        schedule_small(3, 64, 16)


def test_schedule_small_build_4096_keys():
    rng = random.Random(6)
    Y = KeySet(sorted({rng.randrange(1 << 64) for _ in range(1 << 12)}), 64)
    s = schedule_small(len(Y), 64, 8)
    root = build_beame_fich(Y.keys, 64, s, random.Random(7))
    assert audit_reductions(root) == []
    report = sampled_equiv(root, Y, 100_000, seed=8)
    assert report.ok
    assert report.max_depth <= predicted_depth(s, len(Y), 64)


@pytest.mark.parametrize("kind", ["large", "small"])
@pytest.mark.parametrize("l", [8, 16])
def test_schedules_exhaustive(kind, l):
    rng = random.Random(l)
    for n in (2, 5, 100, 1000):
        Y = KeySet(sorted(rng.sample(range(1 << l), min(n, 1 << l))), l)
        n = len(Y)
        maker = schedule_large if kind == "large" else schedule_small
        s = maker(n, l, 2, strict=False)
        root = build_beame_fich(Y.keys, l, s, random.Random(n))
        assert audit_reductions(root) == []
        report = exhaustive_equiv(root, Y)
        assert report.ok
        assert report.max_depth <= predicted_depth(s, n, l)


def test_signature_table_is_compact():
    sig = build_signature(list(range(0, 1 << 16, 4096)), 4, random.Random(9), key_bits=16)
    assert sig.table.dtype == np.uint16
    assert isinstance(sig, type(sig)) and ReductionNode.tag == 7
