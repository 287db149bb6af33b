import random
import struct

import pytest

from predsearch.core import NEG_INF, IntegrityError
from predsearch.oracle import KeySet, sample_queries
from predsearch.strategy import BuildConfig, build
from predsearch.structfile import (
    MAGIC, decode_pool, deserialize, encode_pool, fnv1a64, load, save, serialize,
)


def _structure(branch, n=2000, l=32, seed=1):
    rng = random.Random(n + l)
    Y = KeySet(sorted({rng.randrange(1 << l) for _ in range(n)}), l)
    return Y, build(Y, BuildConfig(len(Y), l, 64, 4 * len(Y)), seed=seed, branch=branch)


def test_fnv_known_values():
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8


@pytest.mark.parametrize("branch", [1, 2, 3, 4])
def test_round_trip_answers_and_probes(branch, tmp_path):
    Y, s = _structure(branch)
    path = tmp_path / "s.pred"
    save(s, path)
    t = load(path)
    assert t.cfg == s.cfg and t.branch == s.branch and t.seed == s.seed
    assert t.bits_used == s.bits_used
    assert t.metadata == s.metadata
    for x in sample_queries(Y, 3000, seed=branch):
        a1, st1 = s.query(x)
        a2, st2 = t.query(x)
        assert a1 == a2 and st1.probes == st2.probes and st1.depth == st2.depth
    assert serialize(t) == serialize(s)


def test_empty_and_singleton(tmp_path):
    for keys in ([], [42]):
        Y = KeySet(keys, 16)
        s = build(Y, BuildConfig(len(keys), 16, 64, 1))
        t = deserialize(serialize(s))
        assert t.query(41)[0] is NEG_INF
        assert t.query(100)[0] == (42 if keys else NEG_INF)


def test_layout_header():
    _, s = _structure(1, n=10)
    data = serialize(s)
    assert data[:4] == MAGIC
    assert struct.unpack_from("<H", data, 4) == (1,)
    assert struct.unpack("<Q", data[-8:])[0] == fnv1a64(data[6:-8])


def test_corruption_detected():
    _, s = _structure(2, n=500)
    data = bytearray(serialize(s))
    data[len(data) // 2] ^= 0x40
    with pytest.raises(IntegrityError, match="checksum"):
        deserialize(bytes(data))


@pytest.mark.parametrize("blob", [b"", b"NOPE" + bytes(30), MAGIC + b"\x09\x00" + bytes(30)])
def test_bad_framing(blob):
    with pytest.raises(IntegrityError):
        deserialize(blob)


def test_truncated_pool_detected():
    _, s = _structure(3, n=300)
    pool = encode_pool(s.root)
    with pytest.raises(IntegrityError):
        decode_pool(pool[:-5])


def test_bits_summary_checked():
    _, s = _structure(1, n=50)
    data = serialize(s)
    payload = bytearray(data[6:-8])
    payload[-8:] = struct.pack("<Q", s.bits_used + 1)
    forged = MAGIC + data[4:6] + bytes(payload) + struct.pack("<Q", fnv1a64(bytes(payload)))
    with pytest.raises(IntegrityError, match="space summary"):
        deserialize(forged)


def test_rebuild_is_byte_identical():
    for b in (1, 2, 3, 4):
        _, s1 = _structure(b, seed=9)
        _, s2 = _structure(b, seed=9)
        assert serialize(s1) == serialize(s2)
