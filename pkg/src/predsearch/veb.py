"""Tuned van Emde Boas: prefix tabulation, then key-length halving down to ``a`` bits."""

from __future__ import annotations

import random
from bisect import bisect_left
from typing import Sequence

from .core import (
    NEG_INF, REF_BITS, Answer, BuildError, Node, ParameterError, is_pow2, pow2_ceil, small_node,
)
from .oracle import KeySet
from .perfect_hash import PerfectHash
from .tabulation import FullTable, PrefixSplit, build_prefix_split


class VebNode(Node):
    """One halving step.

    ``directory`` maps each high half ``u`` occurring in the set to a row
    holding the strict predecessor of ``u``·0…0, the largest key with high
    half ``u`` and the structure over the other low halves of that group.
    ``prefix_index`` answers predecessor queries over the high halves.
    """

    kind = "veb"
    tag = 5

    def __init__(self, key_bits: int, directory: PerfectHash, strict_pred: list[Answer],
                 max_key: list[int], kids: list[Node], prefix_index: Node, n_keys: int):
        self.key_bits = key_bits
        self.half = key_bits // 2
        self.directory = directory
        self.strict_pred = strict_pred
        self.max_key = max_key
        self.kids = kids
        self.prefix_index = prefix_index
        self.n_keys = n_keys
        self._mask = (1 << self.half) - 1
        self._record_bits = 2 * key_bits + 1 + REF_BITS

    def query(self, x, stats, level=0):
        stats.reach(level)
        x0 = x >> self.half
        row = self.directory.lookup(x0, stats)
        if row is None:
            u = self.prefix_index.query(x0, stats, level + 1)
            if u is NEG_INF:
                return NEG_INF
            row = self.directory.lookup(u, stats)
            stats.read(self.key_bits)
            return self.max_key[row]
        stats.read(self._record_bits)
        top = self.max_key[row]
        if x >= top:
            return top
        y1 = self.kids[row].query(x & self._mask, stats, level + 1)
        if y1 is NEG_INF:
            return self.strict_pred[row]
        return (x0 << self.half) | y1

    def own_bits(self):
        return self.directory.own_bits() + len(self.kids) * self._record_bits

    def children(self):
        return [*self.kids, self.prefix_index]

    def fields(self):
        return [
            ("u", self.key_bits),
            ("u", self.n_keys),
            ("sub", self.directory),
            ("al", self.strict_pred),
            ("ul", self.max_key),
            ("r", self.kids),
            ("r", [self.prefix_index]),
        ]

    @classmethod
    def from_fields(cls, fields):
        key_bits, n_keys, directory, strict_pred, max_key, kids, (prefix_index,) = fields
        return cls(key_bits, directory, list(strict_pred), list(max_key), list(kids),
                   prefix_index, n_keys)


def choose_prefix_bits(n: int, key_bits: int) -> int:
    """Largest p <= floor(log2 n) leaving a power-of-two suffix length >= 1."""
    if n < 2:
        return 0
    log_n = n.bit_length() - 1
    suffix = max(1, pow2_ceil(max(1, key_bits - log_n)))
    return max(0, key_bits - suffix)


def build_veb_core(keys: Sequence[int], key_bits: int, a: int, rng: random.Random) -> Node:
    """The halving recursion alone, tabulating completely once ``key_bits <= a``."""
    keys = list(keys)
    node = small_node(keys, key_bits)
    if node is not None:
        return node
    if key_bits <= a:
        return FullTable.build(keys, key_bits)
    if not is_pow2(key_bits):
        raise ParameterError(f"halving needs a power-of-two key length, got {key_bits}")
    half = key_bits // 2
    mask = (1 << half) - 1
    prefixes: list[int] = []
    strict_pred: list[Answer] = []
    max_key: list[int] = []
    kids: list[Node] = []
    prev: Answer = NEG_INF
    i, n = 0, len(keys)
    suffix_total = 0
    while i < n:
        u = keys[i] >> half
        j = bisect_left(keys, (u + 1) << half, i)
        group = keys[i:j]
        prefixes.append(u)
        strict_pred.append(prev)
        max_key.append(group[-1])
        # the group maximum is answered from max_key, never from the child
        kids.append(build_veb_core([k & mask for k in group[:-1]], half, a, rng))
        suffix_total += len(group) - 1
        prev = group[-1]
        i = j
    if len(prefixes) + suffix_total != n:
        raise BuildError("van Emde Boas step does not conserve keys")
    directory = PerfectHash.build(prefixes, half, rng)
    prefix_index = build_veb_core(prefixes, half, a, rng)
    return VebNode(key_bits, directory, strict_pred, max_key, kids, prefix_index, n)


def build_veb(Y: KeySet | Sequence[int], a: int, rng: random.Random | None = None,
              key_bits: int | None = None) -> Node:
    """Prefix tabulation on about lg n bits, then halving recursion down to ``a`` bits."""
    if isinstance(Y, KeySet):
        keys, key_bits = list(Y.keys), Y.key_bits
    else:
        keys = list(Y)
        if key_bits is None:
            raise ParameterError("key_bits required for a bare key list")
    if rng is None:
        rng = random.Random(0)
    if a < 1 or not is_pow2(a):
        raise ParameterError(f"a must be a positive power of two, got {a}")
    node = small_node(keys, key_bits)
    if node is not None:
        return node
    if key_bits <= a:
        return FullTable.build(keys, key_bits)
    if not is_pow2(key_bits):
        raise ParameterError(f"key length must be a power of two, got {key_bits}")
    p = choose_prefix_bits(len(keys), key_bits)
    if p == 0:
        return build_veb_core(keys, key_bits, a, rng)
    return build_prefix_split(keys, key_bits, p,
                              lambda sub, bits: build_veb_core(sub, bits, a, rng))


def query_veb(node: Node, x: int) -> Answer:
    return node.lookup(x)[0]


def veb_depth_bound(reduced_bits: int, a: int) -> int:
    """Maximum recursion depth of a prefix-tabulated vEB over ``reduced_bits``-bit suffixes."""
    steps = 0
    while reduced_bits > a:
        reduced_bits //= 2
        steps += 1
    return 1 + steps


def reduced_key_bits(root: Node) -> int:
    """Key length below the root prefix tabulation (the root's own if there is none)."""
    if isinstance(root, PrefixSplit):
        return root.suffix_bits
    return root.key_bits
