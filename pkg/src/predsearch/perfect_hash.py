"""Static two-level perfect hashing (Fredman, Komlos, Szemeredi).

Maps a fixed set of integer keys to their row numbers with two cell reads
per lookup and O(n) slots.
"""

from __future__ import annotations

import random

from .core import REF_BITS, QueryStats

PRIME = (1 << 89) - 1
MULT_BITS = 89
BUCKET_BITS = MULT_BITS + 2 * REF_BITS  # multiplier, slot offset, bucket size


class PerfectHash:
    def __init__(self, key_bits: int, mult: int, bucket_mult: list[int], bucket_off: list[int],
                 bucket_size: list[int], slot_key: list[int | None], slot_row: list[int]):
        self.key_bits = key_bits
        self.mult = mult
        self.bucket_mult = bucket_mult
        self.bucket_off = bucket_off
        self.bucket_size = bucket_size
        self.slot_key = slot_key
        self.slot_row = slot_row
        self._m = max(1, len(bucket_mult))
        self._slot_bits = key_bits + REF_BITS

    @classmethod
    def build(cls, keys: list[int], key_bits: int, rng: random.Random) -> "PerfectHash":
        n = len(keys)
        if n == 0:
            return cls(key_bits, 1, [], [], [], [], [])
        m = n
        while True:
            mult = rng.randrange(1, PRIME)
            buckets: list[list[int]] = [[] for _ in range(m)]
            for row, k in enumerate(keys):
                buckets[(mult * k) % PRIME % m].append(row)
            if sum(len(b) ** 2 for b in buckets) <= 4 * n:
                break
        bucket_mult, bucket_off, bucket_size = [], [], []
        slot_key: list[int | None] = []
        slot_row: list[int] = []
        for rows in buckets:
            size = len(rows) ** 2
            bucket_off.append(len(slot_key))
            bucket_size.append(size)
            if not rows:
                bucket_mult.append(0)
                continue
            while True:
                bm = rng.randrange(1, PRIME) if len(rows) > 1 else 1
                where = {(bm * keys[r]) % PRIME % size for r in rows}
                if len(where) == len(rows):
                    break
            bucket_mult.append(bm)
            table_k: list[int | None] = [None] * size
            table_r = [0] * size
            for r in rows:
                j = (bm * keys[r]) % PRIME % size
                table_k[j] = keys[r]
                table_r[j] = r
            slot_key.extend(table_k)
            slot_row.extend(table_r)
        return cls(key_bits, mult, bucket_mult, bucket_off, bucket_size, slot_key, slot_row)

    def __len__(self) -> int:
        return sum(k is not None for k in self.slot_key)

    def lookup(self, key: int, stats: QueryStats | None = None) -> int | None:
        """Row number of ``key``, or None when absent."""
        if stats is not None:
            stats.read(MULT_BITS)
        if not self.bucket_mult:
            return None
        i = (self.mult * key) % PRIME % self._m
        if stats is not None:
            stats.read(BUCKET_BITS)
        size = self.bucket_size[i]
        if size == 0:
            return None
        j = self.bucket_off[i] + (self.bucket_mult[i] * key) % PRIME % size
        if stats is not None:
            stats.read(self._slot_bits)
        if self.slot_key[j] == key:
            return self.slot_row[j]
        return None

    def own_bits(self) -> int:
        return MULT_BITS + len(self.bucket_mult) * BUCKET_BITS + len(self.slot_key) * self._slot_bits

    def fields(self) -> list:
        return [
            ("u", self.key_bits),
            ("u", self.mult),
            ("ul", self.bucket_mult),
            ("ul", self.bucket_off),
            ("ul", self.bucket_size),
            ("ol", self.slot_key),
            ("ul", self.slot_row),
        ]

    @classmethod
    def from_fields(cls, values: list) -> "PerfectHash":
        key_bits, mult, bm, bo, bs, sk, sr = values
        return cls(key_bits, mult, list(bm), list(bo), list(bs), list(sk), list(sr))
