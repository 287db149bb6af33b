"""Shared node machinery: the NEG_INF answer, probe accounting and terminal nodes.

Every search structure is a tree of :class:`Node` objects.  A node answers
``query(x, stats, level)`` for keys of its own ``key_bits`` width and charges
the cells it reads to a :class:`QueryStats` accumulator that is created per
query and threaded through the recursion.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import ClassVar, Iterator, Union

#: Width of a child reference (an index into the serialized node pool).
REF_BITS = 32


class ParameterError(ValueError):
    """A caller passed parameters outside an operation's domain."""


class BuildError(RuntimeError):
    """A structure could not be built (or failed its own construction audit)."""


class BudgetError(BuildError):
    def __init__(self, message: str, audit: dict):
        super().__init__(message)
        self.audit = audit


class IntegrityError(ValueError):
    """A serialized structure failed its checksum or framing checks."""


class _NegInf:
    """The answer "no key in the set is <= x"; orders below every integer."""

    __slots__ = ()
    _instance: "_NegInf | None" = None

    def __new__(cls) -> "_NegInf":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NEG_INF"

    def __str__(self) -> str:
        return "-inf"

    def __reduce__(self):
        return (_NegInf, ())

    def __lt__(self, other: object) -> bool:
        return other is not self

    def __le__(self, other: object) -> bool:
        return True

    def __gt__(self, other: object) -> bool:
        return False

    def __ge__(self, other: object) -> bool:
        return other is self

    def __eq__(self, other: object) -> bool:
        return other is self

    def __hash__(self) -> int:
        return hash("NEG_INF")


NEG_INF = _NegInf()
Answer = Union[int, _NegInf]


def concat(prefix: Answer, suffix: Answer, suffix_bits: int) -> Answer:
    """Bit-string concatenation with NEG_INF absorbing on either side."""
    if prefix is NEG_INF or suffix is NEG_INF:
        return NEG_INF
    return (prefix << suffix_bits) | suffix


@dataclass(slots=True)
class QueryStats:
    """Per-query model cost: cells of ``word_bits`` read, and recursion depth.

    ``depth`` is the deepest nesting level reached, the root node being level 0.
    """

    word_bits: int = 64
    probes: int = 0
    depth: int = 0

    def read(self, bits: int) -> None:
        # Arrays are laid out so that no entry narrower than a word straddles
        # two cells; wider records occupy whole aligned cells.  bits >= 1.
        self.probes += (bits + self.word_bits - 1) // self.word_bits

    def reach(self, level: int) -> None:
        if level > self.depth:
            self.depth = level


class Node:
    """Base class of every search-structure node."""

    kind: ClassVar[str] = "node"
    tag: ClassVar[int] = 0

    key_bits: int
    n_keys: int

    def query(self, x: int, stats: QueryStats, level: int = 0) -> Answer:
        raise NotImplementedError

    def own_bits(self) -> int:
        """Bits of tables and arrays owned by this node alone."""
        raise NotImplementedError

    def children(self) -> list["Node"]:
        return []

    @cached_property
    def bits_used(self) -> int:
        return self.own_bits() + sum(ch.bits_used for ch in self.children())

    def lookup(self, x: int, word_bits: int = 64) -> tuple[Answer, QueryStats]:
        if not 0 <= x < (1 << self.key_bits):
            raise ParameterError(f"query key {x} is not a {self.key_bits}-bit key")
        stats = QueryStats(word_bits)
        return self.query(x, stats, 0), stats

    def walk(self) -> Iterator["Node"]:
        """Pre-order traversal of the subtree (shared EMPTY visited per reference)."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children()))

    # serialization hooks, see structfile
    def fields(self) -> list:
        raise NotImplementedError

    @classmethod
    def from_fields(cls, fields: list) -> "Node":
        raise NotImplementedError


class Empty(Node):
    """The shared representation of an empty key set."""

    kind = "empty"
    tag = 1
    key_bits = 64
    n_keys = 0

    def query(self, x, stats, level=0):
        stats.reach(level)
        return NEG_INF

    def own_bits(self):
        return 0

    def lookup(self, x, word_bits=64):
        stats = QueryStats(word_bits)
        return NEG_INF, stats


EMPTY = Empty()


class Leaf(Node):
    """A single stored key."""

    kind = "leaf"
    tag = 2

    def __init__(self, key: int, key_bits: int):
        self.key = key
        self.key_bits = key_bits
        self.n_keys = 1

    def query(self, x, stats, level=0):
        stats.reach(level)
        stats.read(self.key_bits)
        return self.key if x >= self.key else NEG_INF

    def own_bits(self):
        return self.key_bits

    def fields(self):
        return [("u", self.key_bits), ("u", self.key)]

    @classmethod
    def from_fields(cls, fields):
        key_bits, key = fields
        return cls(key, key_bits)


def small_node(keys: list[int], key_bits: int) -> Node | None:
    """EMPTY or a Leaf for sets of size <= 1, else None."""
    if not keys:
        return EMPTY
    if len(keys) == 1:
        return Leaf(keys[0], key_bits)
    return None


def pow2_floor(x: int) -> int:
    if x < 1:
        raise ParameterError(f"pow2_floor of {x}")
    return 1 << (x.bit_length() - 1)


def pow2_ceil(x: int) -> int:
    if x <= 1:
        return 1
    return 1 << (x - 1).bit_length()


def is_pow2(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0
