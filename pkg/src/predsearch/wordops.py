"""Word-level primitives on keys held in Python ints.

Keys are at most 64 bits and words at most 128 bits (a pair of 64-bit
machine words).
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .core import ParameterError, is_pow2

MAX_WORD_BITS = 128
MAX_KEY_BITS = 64


@dataclass(frozen=True)
class WordSpec:
    word_bits: int
    key_bits: int
    char_bits: int
    char_count: int

    def __post_init__(self):
        w, l, c, h = self.word_bits, self.key_bits, self.char_bits, self.char_count
        if not (is_pow2(w) and is_pow2(l)):
            raise ParameterError(f"word and key widths must be powers of two, got w={w} l={l}")
        if l > w or w > MAX_WORD_BITS:
            raise ParameterError(f"need key_bits <= word_bits <= {MAX_WORD_BITS}, got l={l} w={w}")
        if c * h != l or c < 1:
            raise ParameterError(f"{h} characters of {c} bits do not make a {l}-bit key")

    @classmethod
    def with_chars(cls, word_bits: int, key_bits: int, char_count: int) -> "WordSpec":
        if char_count < 1 or key_bits % char_count:
            raise ParameterError(f"{char_count} does not divide key length {key_bits}")
        return cls(word_bits, key_bits, key_bits // char_count, char_count)


def split_prefix(x: int, key_bits: int, prefix_bits: int) -> tuple[int, int]:
    """Split ``x`` into its leading ``prefix_bits`` and the remaining suffix."""
    if not 0 <= prefix_bits <= key_bits:
        raise ParameterError(f"prefix length {prefix_bits} outside [0, {key_bits}]")
    low = key_bits - prefix_bits
    return x >> low, x & ((1 << low) - 1)


def lcp_chars(x: int, y: int, spec: WordSpec) -> int:
    """Number of leading whole characters on which ``x`` and ``y`` agree."""
    return lcp_chars_raw(x, y, spec.key_bits, spec.char_bits)


def lcp_chars_raw(x: int, y: int, key_bits: int, char_bits: int) -> int:
    diff = x ^ y
    if diff == 0:
        return key_bits // char_bits
    return (key_bits - diff.bit_length()) // char_bits


def char_at(x: int, index: int, key_bits: int, char_bits: int) -> int:
    """Character ``index`` (0 = most significant) of ``x``."""
    shift = key_bits - (index + 1) * char_bits
    return (x >> shift) & ((1 << char_bits) - 1)


def packing_degree(word_bits: int, key_bits: int) -> int:
    """Keys per word with one sentinel bit per field, rounded down to a power of two.

    Returns 0 or 1 when fewer than two fields fit.
    """
    fit = word_bits // (key_bits + 1)
    if fit < 1:
        return 0
    return 1 << (fit.bit_length() - 1)


def broadcast(value: int, count: int, field_bits: int) -> int:
    """``value`` repeated in ``count`` adjacent fields of ``field_bits`` bits."""
    ones = ((1 << (count * field_bits)) - 1) // ((1 << field_bits) - 1)
    return value * ones


def pack_keys(keys: list[int], degree: int, key_bits: int) -> int:
    """Pack up to ``degree`` sorted keys into one word, field i holding key i.

    Unused fields hold 2**key_bits (sentinel bit set, key bits zero), which
    never ranks as <= any query.
    """
    if len(keys) > degree:
        raise ParameterError(f"{len(keys)} keys do not fit {degree} fields")
    field = key_bits + 1
    word = 0
    pad = 1 << key_bits
    for i in range(degree):
        word |= (keys[i] if i < len(keys) else pad) << (i * field)
    return word


def unpack_field(word: int, index: int, key_bits: int) -> int:
    field = key_bits + 1
    return (word >> (index * field)) & ((1 << key_bits) - 1)


def packed_rank(node: int, x: int, degree: int, key_bits: int, word_bits: int | None = None) -> int:
    """Count the packed keys <= x with a constant number of word operations.

    Each field computes ``2**key_bits + x - key``; its top bit survives exactly
    when ``key <= x`` and no borrow crosses a field boundary.
    """
    field = key_bits + 1
    if word_bits is not None and degree * field > word_bits:
        raise ParameterError(f"{degree} fields of {field} bits exceed a {word_bits}-bit word")
    top = broadcast(1 << key_bits, degree, field)
    diff = broadcast((1 << key_bits) | x, degree, field) - node
    return (diff & top).bit_count()


class CharHashFamily:
    """Per-position multiply-shift hashes from ``char_bits`` to ``hash_bits`` bits.

    ``H_i(y) = ((A_i * y) mod 2**c) >> (c - b)`` with ``A_i`` odd; for two
    distinct characters the collision probability over ``A_i`` is at most
    ``2**(1 - b)``.
    """

    def __init__(self, multipliers: tuple[int, ...], char_bits: int, hash_bits: int):
        if hash_bits > char_bits:
            raise ParameterError(
                f"hash width {hash_bits} exceeds character width {char_bits}; tabulate instead"
            )
        if any(m % 2 == 0 or not 0 < m < (1 << char_bits) for m in multipliers):
            raise ParameterError("multipliers must be odd and below 2**char_bits")
        self.multipliers = tuple(multipliers)
        self.char_bits = char_bits
        self.hash_bits = hash_bits
        self._cmask = (1 << char_bits) - 1
        self._shift = char_bits - hash_bits

    @property
    def char_count(self) -> int:
        return len(self.multipliers)

    @classmethod
    def identity(cls, char_count: int, char_bits: int) -> "CharHashFamily":
        return cls((1,) * char_count, char_bits, char_bits)

    @staticmethod
    def draw_multiplier(char_bits: int, rng: random.Random) -> int:
        return rng.randrange(1 << char_bits) | 1

    def hash_char(self, position: int, ch: int) -> int:
        return ((self.multipliers[position] * ch) & self._cmask) >> self._shift

    def __eq__(self, other):
        return (
            isinstance(other, CharHashFamily)
            and self.multipliers == other.multipliers
            and self.char_bits == other.char_bits
            and self.hash_bits == other.hash_bits
        )


def parallel_char_hash(x: int, family: CharHashFamily) -> int:
    """Hash every character of ``x``; the result packs ``h`` fields of ``b`` bits.

    Character 0 (the most significant) maps to the most significant field.
    """
    c, b, h = family.char_bits, family.hash_bits, family.char_count
    cmask = family._cmask
    shift = family._shift
    out = 0
    pos = (h - 1) * c
    for mult in family.multipliers:
        out = (out << b) | ((((x >> pos) & cmask) * mult & cmask) >> shift)
        pos -= c
    return out
