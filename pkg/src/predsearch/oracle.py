"""Ground truth by binary search over the sorted key array, and equivalence sweeps."""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .core import NEG_INF, Answer, ParameterError, QueryStats

EXHAUSTIVE_MAX_BITS = 20


@dataclass(frozen=True)
class KeySet:
    """A strictly ascending set of ``key_bits``-bit keys, optionally two-colored."""

    keys: tuple[int, ...]
    key_bits: int
    colors: tuple[object, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "keys", tuple(self.keys))
        if self.key_bits < 1:
            raise ParameterError("key_bits must be positive")
        limit = 1 << self.key_bits
        prev = -1
        for i, k in enumerate(self.keys):
            if k <= prev:
                what = "duplicate" if k == prev else "unsorted"
                raise ParameterError(f"{what} key {k} at position {i}")
            prev = k
        if self.keys and (self.keys[0] < 0 or self.keys[-1] >= limit):
            raise ParameterError(f"keys must lie in [0, 2**{self.key_bits})")
        if self.colors is not None:
            object.__setattr__(self, "colors", tuple(self.colors))
            if len(self.colors) != len(self.keys):
                raise ParameterError("one color per key required")
            if len(set(self.colors)) > 2:
                raise ParameterError("colored predecessor takes two-valued labels")

    def __len__(self) -> int:
        return len(self.keys)


def pred_sorted(Y: KeySet, x: int) -> Answer:
    """Largest key of ``Y`` that is <= x, or NEG_INF."""
    i = bisect_right(Y.keys, x)
    return Y.keys[i - 1] if i else NEG_INF


def colored_pred(Y: KeySet, x: int):
    if Y.colors is None:
        raise ParameterError("key set carries no colors")
    i = bisect_right(Y.keys, x)
    return Y.colors[i - 1] if i else NEG_INF


class Searchable(Protocol):
    def lookup(self, x: int) -> tuple[Answer, QueryStats]: ...


@dataclass
class EquivReport:
    queries: int = 0
    mismatches: list[tuple[int, Answer, Answer]] = field(default_factory=list)
    max_probes: int = 0
    max_depth: int = 0

    @property
    def ok(self) -> bool:
        return not self.mismatches


def _check(structure: Searchable, Y: KeySet, xs: Sequence[int] | range, limit: int) -> EquivReport:
    report = EquivReport()
    keys = Y.keys
    lookup = structure.lookup
    max_probes = max_depth = 0
    for x in xs:
        got, stats = lookup(x)
        i = bisect_right(keys, x)
        want = keys[i - 1] if i else NEG_INF
        if got != want and len(report.mismatches) < limit:
            report.mismatches.append((x, want, got))
        if stats.probes > max_probes:
            max_probes = stats.probes
        if stats.depth > max_depth:
            max_depth = stats.depth
    report.queries = len(xs)
    report.max_probes = max_probes
    report.max_depth = max_depth
    return report


def exhaustive_equiv(structure: Searchable, Y: KeySet, limit: int = 100) -> EquivReport:
    """Query every key of the universe and compare against :func:`pred_sorted`."""
    if Y.key_bits > EXHAUSTIVE_MAX_BITS:
        raise ParameterError(
            f"exhaustive check refuses {Y.key_bits}-bit keys; use sampled_equiv"
        )
    return _check(structure, Y, range(1 << Y.key_bits), limit)


def sample_queries(Y: KeySet, samples: int, seed: int) -> list[int]:
    """Seeded query stream: uniform keys mixed with stored keys and their neighbours."""
    rng = random.Random(seed)
    top = (1 << Y.key_bits) - 1
    out = []
    for _ in range(samples):
        r = rng.random()
        if Y.keys and r < 0.5:
            k = Y.keys[rng.randrange(len(Y.keys))]
            k = k + rng.choice((-1, 0, 0, 1))
            out.append(min(max(k, 0), top))
        else:
            out.append(rng.randrange(top + 1))
    return out


def sampled_equiv(structure: Searchable, Y: KeySet, samples: int, seed: int, limit: int = 100) -> EquivReport:
    return _check(structure, Y, sample_queries(Y, samples, seed), limit)
