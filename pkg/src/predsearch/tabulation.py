"""Complete tabulation of all queries, and tabulation on a key prefix."""

from __future__ import annotations

from bisect import bisect_left
from typing import Callable, Sequence

import numpy as np

from .core import (
    EMPTY, NEG_INF, REF_BITS, Answer, BuildError, Node, ParameterError, QueryStats,
)
from .oracle import KeySet

#: Largest key length we tabulate completely (2**24 entries).
MAX_TABLE_BITS = 24

ChildBuilder = Callable[[list[int], int], Node]


class FullTable(Node):
    """``entries[x]`` is the predecessor of ``x``; -1 encodes NEG_INF."""

    kind = "full_table"
    tag = 3

    def __init__(self, key_bits: int, entries: np.ndarray, n_keys: int):
        self.key_bits = key_bits
        self.entries = entries
        self.n_keys = n_keys
        self._entry_bits = key_bits + 1

    @classmethod
    def build(cls, keys: Sequence[int], key_bits: int) -> "FullTable":
        if key_bits > MAX_TABLE_BITS:
            raise BuildError(f"complete tabulation of {key_bits}-bit keys exceeds the table cap")
        ys = np.asarray(keys, dtype=np.int64)
        idx = np.searchsorted(ys, np.arange(1 << key_bits, dtype=np.int64), side="right") - 1
        entries = np.where(idx >= 0, ys[np.maximum(idx, 0)] if len(ys) else -1, -1).astype(np.int32)
        return cls(key_bits, entries, len(ys))

    def query(self, x, stats, level=0):
        stats.reach(level)
        stats.read(self._entry_bits)
        v = int(self.entries[x])
        return NEG_INF if v < 0 else v

    def own_bits(self):
        return (1 << self.key_bits) * (self.key_bits + 1)

    def fields(self):
        return [("u", self.key_bits), ("u", self.n_keys), ("np", self.entries)]

    @classmethod
    def from_fields(cls, fields):
        key_bits, n_keys, entries = fields
        return cls(key_bits, entries, n_keys)


def build_full(Y: KeySet) -> FullTable:
    return FullTable.build(Y.keys, Y.key_bits)


def query_full(t: FullTable, x: int) -> Answer:
    return t.lookup(x)[0]


class PrefixSplit(Node):
    """Direct table over every ``prefix_bits``-bit prefix.

    Slot ``u`` holds the strict predecessor of ``u`` followed by zeroes and a
    reference to the structure over the suffixes of keys with prefix ``u``.
    """

    kind = "prefix_split"
    tag = 4

    def __init__(self, key_bits: int, prefix_bits: int, strict_pred: list[Answer],
                 kids: list[Node], n_keys: int):
        self.key_bits = key_bits
        self.prefix_bits = prefix_bits
        self.suffix_bits = key_bits - prefix_bits
        self.strict_pred = strict_pred
        self.kids = kids
        self.n_keys = n_keys
        self._mask = (1 << self.suffix_bits) - 1

    def query(self, x, stats, level=0):
        stats.reach(level)
        x0 = x >> self.suffix_bits
        stats.read(REF_BITS)
        y1 = self.kids[x0].query(x & self._mask, stats, level + 1)
        if y1 is NEG_INF:
            stats.read(self.key_bits + 1)
            return self.strict_pred[x0]
        return (x0 << self.suffix_bits) | y1

    def own_bits(self):
        return (1 << self.prefix_bits) * (self.key_bits + 1 + REF_BITS)

    def children(self):
        return self.kids

    def fields(self):
        return [
            ("u", self.key_bits),
            ("u", self.prefix_bits),
            ("u", self.n_keys),
            ("al", self.strict_pred),
            ("r", self.kids),
        ]

    @classmethod
    def from_fields(cls, fields):
        key_bits, prefix_bits, n_keys, strict_pred, kids = fields
        return cls(key_bits, prefix_bits, list(strict_pred), list(kids), n_keys)


def build_prefix_split(keys: Sequence[int], key_bits: int, prefix_bits: int,
                       child_builder: ChildBuilder) -> PrefixSplit:
    """Tabulate on the first ``prefix_bits`` bits; suffix sets go to ``child_builder``."""
    if not 0 < prefix_bits <= key_bits:
        raise ParameterError(f"prefix length {prefix_bits} outside (0, {key_bits}]")
    if prefix_bits > MAX_TABLE_BITS:
        raise BuildError(f"prefix table of 2**{prefix_bits} slots exceeds the table cap")
    keys = list(keys)
    low = key_bits - prefix_bits
    mask = (1 << low) - 1
    size = 1 << prefix_bits
    strict_pred: list[Answer] = [NEG_INF] * size
    kids: list[Node] = [EMPTY] * size
    i = 0
    prev: Answer = NEG_INF
    n = len(keys)
    # walk prefixes that occur; gaps inherit the last key seen
    while i < n:
        u = keys[i] >> low
        j = bisect_left(keys, (u + 1) << low, i)
        kids[u] = child_builder([k & mask for k in keys[i:j]], low)
        strict_pred[u] = prev
        prev = keys[j - 1]
        i = j
        # fill the slots between this prefix and the next one
        nxt = keys[j] >> low if j < n else size
        for v in range(u + 1, nxt):
            strict_pred[v] = prev
    split = PrefixSplit(key_bits, prefix_bits, strict_pred, kids, n)
    if sum(k.n_keys for k in kids) != n:
        raise BuildError("prefix split lost keys")
    return split


def query_prefix_split(s: PrefixSplit, x: int) -> Answer:
    return s.lookup(x)[0]
