"""Static B-tree whose nodes are single words of packed keys.

Nodes live in a level-ordered pool; the children of node ``j`` on one level
are nodes ``j*d .. j*d + d - 1`` on the next, so no references are stored.
With fewer than two fields per word the tree degrades to binary search over
the sorted key array.
"""

from __future__ import annotations

from typing import Sequence

from .core import NEG_INF, EMPTY, Answer, Node, QueryStats
from .oracle import KeySet
from .wordops import WordSpec, broadcast, pack_keys, packing_degree, unpack_field


class PackedBTree(Node):
    kind = "btree"
    tag = 6

    def __init__(self, key_bits: int, word_bits: int, degree: int, words: list[int],
                 level_sizes: list[int], keys: list[int], n_keys: int):
        self.key_bits = key_bits
        self.word_bits = word_bits
        self.degree = degree
        self.words = words
        self.level_sizes = level_sizes
        self.keys = keys  # only populated in binary-search mode
        self.n_keys = n_keys
        offsets, acc = [], 0
        for size in level_sizes:
            offsets.append(acc)
            acc += size
        self.level_offsets = offsets
        if degree >= 2:
            field = key_bits + 1
            self._ones = broadcast(1, degree, field)
            self._top = self._ones << key_bits

    @property
    def height(self) -> int:
        return len(self.level_sizes)

    @property
    def packed(self) -> bool:
        return self.degree >= 2

    @classmethod
    def build(cls, keys: Sequence[int], key_bits: int, word_bits: int) -> "PackedBTree":
        keys = list(keys)
        d = packing_degree(word_bits, key_bits)
        if d < 2:
            return cls(key_bits, word_bits, d, [], [], keys, len(keys))
        levels: list[list[int]] = []
        firsts = keys
        while True:
            chunks = [firsts[i:i + d] for i in range(0, len(firsts), d)]
            levels.append([pack_keys(ch, d, key_bits) for ch in chunks])
            if len(chunks) <= 1:
                break
            firsts = [ch[0] for ch in chunks]
        levels.reverse()
        words = [w for level in levels for w in level]
        return cls(key_bits, word_bits, d, words, [len(lv) for lv in levels], [], len(keys))

    def query(self, x, stats, level=0):
        stats.reach(level)
        if not self.packed:
            return self._binary_search(x, stats)
        d, l = self.degree, self.key_bits
        # packed_rank with x broadcast once per query (sentinel bit set);
        # per node the rank is then one subtraction, one mask and a popcount
        bx = ((1 << l) | x) * self._ones
        top = self._top
        words, offsets = self.words, self.level_offsets
        j = 0
        last = self.height - 1
        for depth in range(self.height):
            word = words[offsets[depth] + j]
            stats.read(self.word_bits)
            r = ((bx - word) & top).bit_count()
            if r == 0:
                stats.reach(level + depth)
                return NEG_INF
            if depth == last:
                stats.reach(level + depth)
                return unpack_field(word, r - 1, l)
            j = j * d + r - 1
        raise AssertionError("unreachable")

    def lookup(self, x, word_bits=None):
        # one node is one cell of the tree's own word size
        return super().lookup(x, self.word_bits if word_bits is None else word_bits)

    def _binary_search(self, x: int, stats: QueryStats) -> Answer:
        lo, hi = 0, len(self.keys)
        while lo < hi:
            mid = (lo + hi) // 2
            stats.read(self.key_bits)
            if self.keys[mid] <= x:
                lo = mid + 1
            else:
                hi = mid
        return self.keys[lo - 1] if lo else NEG_INF

    def own_bits(self):
        if not self.packed:
            return len(self.keys) * self.key_bits
        return len(self.words) * self.word_bits

    def in_order(self) -> list[int]:
        """Keys read back from the leaf level, left to right."""
        if not self.packed:
            return list(self.keys)
        out = []
        start = self.level_offsets[-1]
        pad = 1 << self.key_bits
        field = self.key_bits + 1
        for word in self.words[start:]:
            for i in range(self.degree):
                v = (word >> (i * field)) & ((1 << field) - 1)
                if v != pad:
                    out.append(v)
        return out

    def fields(self):
        return [
            ("u", self.key_bits),
            ("u", self.word_bits),
            ("u", self.degree),
            ("u", self.n_keys),
            ("ul", self.words),
            ("ul", self.level_sizes),
            ("ul", self.keys),
        ]

    @classmethod
    def from_fields(cls, fields):
        key_bits, word_bits, degree, n_keys, words, level_sizes, keys = fields
        return cls(key_bits, word_bits, degree, list(words), list(level_sizes), list(keys), n_keys)


def build_btree(Y: KeySet, spec: WordSpec | int) -> Node:
    word_bits = spec.word_bits if isinstance(spec, WordSpec) else spec
    if not Y.keys:
        return EMPTY
    return PackedBTree.build(Y.keys, Y.key_bits, word_bits)


def query_btree(t: Node, x: int) -> tuple[Answer, QueryStats]:
    return t.lookup(x)


def probe_bound(n: int, degree: int) -> int:
    """ceil(log_d n) + 1, computed with integers."""
    levels, cap = 0, 1
    while cap < n:
        cap *= degree
        levels += 1
    return levels + 1
