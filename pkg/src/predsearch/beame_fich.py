"""Length/cardinality reductions driven by a sampled max-LCP signature.

A :class:`ReductionNode` samples ``Z`` (every ``ceil(n/q)``-th key), answers
"longest whole-character prefix shared with any key of Z" in O(1) probes via
a :class:`ZSignature`, and splits the remaining work into

* cardinality-reduced children (fewer keys, same key length), one per
  prefix in ``V``, and
* length-reduced children over single ``c``-bit characters, one per prefix
  in ``U`` (every whole-character prefix of a key in ``Z``).

Two schedules pick ``h`` (characters per key) and ``q`` (sample size) for the
recursion: a fixed-``q`` one for larger space and an ``n``-dependent one for
smaller space.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    EMPTY, NEG_INF, REF_BITS, Answer, BuildError, Node, ParameterError, QueryStats,
    is_pow2, pow2_floor, small_node,
)
from .oracle import KeySet
from .perfect_hash import PerfectHash
from .tabulation import MAX_TABLE_BITS, FullTable
from .tradeoff import lg_paper
from .wordops import CharHashFamily, WordSpec, char_at, lcp_chars_raw, parallel_char_hash

ChildBuilder = Callable[[list[int], int], Node]

_MAX_HASH_RETRIES = 1000


def _ceil_log2(x: int) -> int:
    return (x - 1).bit_length() if x > 1 else 0


def prefix_code(x: int, key_bits: int, char_bits: int, r: int) -> int:
    """The first ``r`` characters of ``x`` tagged with a leading 1 so lengths never collide."""
    width = r * char_bits
    return (1 << width) | (x >> (key_bits - width))


class ZSignature:
    """Max-LCP oracle over a small sorted sample ``Z``.

    ``table`` is indexed by the concatenated per-character hashes of the
    query and holds the index of a sample key whose hashed form shares the
    longest prefix with it.  Per-position injectivity on the sample
    characters makes that witness a true longest-prefix match.
    """

    def __init__(self, key_bits: int, char_count: int, zkeys: list[int],
                 family: CharHashFamily, table: np.ndarray):
        self.key_bits = key_bits
        self.char_count = char_count
        self.char_bits = key_bits // char_count
        self.zkeys = zkeys
        self.family = family
        self.table = table
        self.identity = family.hash_bits == family.char_bits
        self._witness_bits = max(1, _ceil_log2(len(zkeys)))

    @property
    def q(self) -> int:
        return len(self.zkeys)

    @property
    def hash_bits(self) -> int:
        return self.family.hash_bits

    @classmethod
    def build(cls, zkeys: Sequence[int], key_bits: int, char_count: int,
              rng: random.Random) -> "ZSignature":
        zkeys = list(zkeys)
        if not zkeys:
            raise ParameterError("signature needs at least one sample key")
        if char_count < 1 or key_bits % char_count:
            raise ParameterError(f"{char_count} characters do not divide {key_bits} bits")
        c = key_bits // char_count
        b = 2 * _ceil_log2(len(zkeys))
        if b >= c:
            family = CharHashFamily.identity(char_count, c)
        else:
            mults = []
            for i in range(char_count):
                chars = {char_at(z, i, key_bits, c) for z in zkeys}
                for _ in range(_MAX_HASH_RETRIES):
                    mult = CharHashFamily.draw_multiplier(c, rng)
                    probe = CharHashFamily((mult,), c, b)
                    if len({probe.hash_char(0, ch) for ch in chars}) == len(chars):
                        break
                else:
                    raise BuildError(f"no injective hash found for character position {i}")
                mults.append(mult)
            family = CharHashFamily(tuple(mults), c, b)
        table = _fill_table(zkeys, key_bits, family)
        sig = cls(key_bits, char_count, zkeys, family, table)
        if not sig.injective():
            raise BuildError("signature hash family is not injective on the sample")
        return sig

    def injective(self) -> bool:
        """Each position's hash is one-to-one on the sample characters there."""
        l, c = self.key_bits, self.char_bits
        for i in range(self.char_count):
            chars = {char_at(z, i, l, c) for z in self.zkeys}
            if len({self.family.hash_char(i, ch) for ch in chars}) != len(chars):
                return False
        return True

    def query(self, x: int, stats: QueryStats | None = None) -> tuple[int, int]:
        """(whole characters shared with the best sample key, that key's index)."""
        if stats is not None:
            stats.read(self.key_bits)  # per-position multipliers
            stats.read(self._witness_bits)
            stats.read(self.key_bits)
        hx = x if self.identity else parallel_char_hash(x, self.family)
        j = int(self.table[hx])
        return lcp_chars_raw(x, self.zkeys[j], self.key_bits, self.char_bits), j

    def own_bits(self) -> int:
        return (self.key_bits  # multipliers, h of c bits
                + len(self.table) * self._witness_bits
                + len(self.zkeys) * self.key_bits)

    def fields(self) -> list:
        return [
            ("u", self.key_bits),
            ("u", self.char_count),
            ("u", self.family.hash_bits),
            ("ul", list(self.family.multipliers)),
            ("ul", self.zkeys),
            ("np", self.table),
        ]

    @classmethod
    def from_fields(cls, values: list) -> "ZSignature":
        key_bits, h, b, mults, zkeys, table = values
        family = CharHashFamily(tuple(mults), key_bits // h, b)
        return cls(key_bits, h, list(zkeys), family, table)


def _fill_table(zkeys: list[int], key_bits: int, family: CharHashFamily) -> np.ndarray:
    h, b = family.char_count, family.hash_bits
    total_bits = h * b
    if total_bits > MAX_TABLE_BITS:
        raise BuildError(f"signature table of 2**{total_bits} entries exceeds the table cap")
    dtype = np.uint16 if len(zkeys) <= 0xFFFF else np.uint32
    table = np.zeros(1 << total_bits, dtype=dtype)
    c = family.char_bits
    hashed = [[family.hash_char(i, char_at(z, i, key_bits, c)) for i in range(h)] for z in zkeys]

    # Walk the trie of hashed sample keys.  A block whose hashed prefix leaves
    # the trie keeps the witness of the deepest trie node above it.
    def fill(pos: int, base: int, members: list[int]) -> None:
        block = 1 << (b * (h - pos))
        table[base:base + block] = members[0]
        if pos == h:
            return
        groups: dict[int, list[int]] = {}
        for j in members:
            groups.setdefault(hashed[j][pos], []).append(j)
        sub = block >> b
        for t, grp in groups.items():
            fill(pos + 1, base + t * sub, grp)

    fill(0, 0, list(range(len(zkeys))))
    return table


def build_signature(Z: KeySet | Sequence[int], spec: WordSpec | int,
                    rng: random.Random | None = None, key_bits: int | None = None) -> ZSignature:
    """Signature over ``Z``; ``spec`` is a WordSpec or the character count."""
    if isinstance(Z, KeySet):
        zkeys, key_bits = list(Z.keys), Z.key_bits
    else:
        zkeys = list(Z)
    if isinstance(spec, WordSpec):
        key_bits, h = spec.key_bits, spec.char_count
    else:
        h = spec
    if key_bits is None:
        raise ParameterError("key_bits required for a bare key list")
    return ZSignature.build(zkeys, key_bits, h, rng or random.Random(0))


def query_signature(sig: ZSignature, x: int) -> tuple[int, int]:
    return sig.query(x)


def comm_pref_plus(sig: ZSignature, x: int) -> tuple[int, int]:
    """(value, length in characters) of the shared prefix extended by one character of ``x``."""
    r, _ = sig.query(x)
    if r >= sig.char_count:
        raise ParameterError("query key is a sample key; it has no extended prefix")
    r += 1
    return x >> (sig.key_bits - r * sig.char_bits), r


class ReductionNode(Node):
    kind = "reduction"
    tag = 7

    def __init__(self, key_bits: int, h: int, q: int, n_keys: int, sig: ZSignature,
                 vdir: PerfectHash, vpred: list[Answer], vmax: list[int], vkids: list[Node],
                 udir: PerfectHash, upred: list[Answer], umax: list[int],
                 upivot: list[int | None], ulo: list[Node], uhi: list[Node],
                 extdir: PerfectHash, extval: list[int]):
        self.key_bits = key_bits
        self.h = h
        self.q = q
        self.n_keys = n_keys
        self.char_bits = key_bits // h
        self.sig = sig
        self.vdir, self.vpred, self.vmax, self.vkids = vdir, vpred, vmax, vkids
        self.udir, self.upred, self.umax = udir, upred, umax
        self.upivot, self.ulo, self.uhi = upivot, ulo, uhi
        self.extdir, self.extval = extdir, extval
        self._vrec = 2 * key_bits + 1 + REF_BITS
        self._urec = 2 * key_bits + 1 + 2 * REF_BITS

    @property
    def m(self) -> int:
        return self.sig.q + len(self.vmax)

    def query(self, x, stats, level=0):
        stats.reach(level)
        l, c = self.key_bits, self.char_bits
        r, _ = self.sig.query(x, stats)
        if r == self.h:
            return x
        row = self.vdir.lookup(prefix_code(x, l, c, r + 1), stats)
        if row is not None:
            stats.read(self._vrec)
            top = self.vmax[row]
            if x >= top:
                return top
            y = self.vkids[row].query(x, stats, level + 1)
            return self.vpred[row] if y is NEG_INF else y
        u = prefix_code(x, l, c, r)
        row = self.udir.lookup(u, stats)
        stats.read(self._urec)
        top = self.umax[row]
        if x >= top:
            return top
        d = char_at(x, r, l, c)
        pivot = self.upivot[row]
        if pivot is None:
            ch = self.ulo[row].query(d, stats, level + 1)
        else:
            stats.read(c)
            if d < pivot:
                ch = self.ulo[row].query(d, stats, level + 1)
            else:
                ch = self.uhi[row].query(d, stats, level + 1)
                if ch is NEG_INF:
                    ch = pivot
        if ch is NEG_INF:
            return self.upred[row]
        erow = self.extdir.lookup((u << c) | ch, stats)
        stats.read(l)
        return self.extval[erow]

    def own_bits(self):
        split_bits = sum(self.char_bits for p in self.upivot if p is not None)
        return (self.sig.own_bits()
                + self.vdir.own_bits() + len(self.vmax) * self._vrec
                + self.udir.own_bits() + len(self.umax) * self._urec + split_bits
                + self.extdir.own_bits() + len(self.extval) * self.key_bits)

    def children(self):
        return [*self.vkids, *self.ulo, *self.uhi]

    def length_children(self) -> list[Node]:
        return [*self.ulo, *self.uhi]

    def fields(self):
        return [
            ("u", self.key_bits), ("u", self.h), ("u", self.q), ("u", self.n_keys),
            ("sub", self.sig),
            ("sub", self.vdir), ("al", self.vpred), ("ul", self.vmax), ("r", self.vkids),
            ("sub", self.udir), ("al", self.upred), ("ul", self.umax),
            ("ol", self.upivot), ("r", self.ulo), ("r", self.uhi),
            ("sub", self.extdir), ("ul", self.extval),
        ]

    @classmethod
    def from_fields(cls, f):
        (key_bits, h, q, n_keys, sig, vdir, vpred, vmax, vkids,
         udir, upred, umax, upivot, ulo, uhi, extdir, extval) = f
        return cls(key_bits, h, q, n_keys, sig, vdir, list(vpred), list(vmax), list(vkids),
                   udir, list(upred), list(umax), list(upivot), list(ulo), list(uhi),
                   extdir, list(extval))


def sample_indices(n: int, q: int) -> list[int]:
    """Positions of Z: every ceil(n/q)-th key, clamped to the last, deduplicated."""
    step = -(-n // q)
    return sorted({min(j * step, n - 1) for j in range(q)})


def build_reduction(keys: KeySet | Sequence[int], h: int, q: int,
                    child_builder_card: ChildBuilder, child_builder_len: ChildBuilder,
                    rng: random.Random | None = None, key_bits: int | None = None) -> ReductionNode:
    if isinstance(keys, KeySet):
        key_bits, keys = keys.key_bits, list(keys.keys)
    else:
        keys = list(keys)
    if key_bits is None:
        raise ParameterError("key_bits required for a bare key list")
    rng = rng or random.Random(0)
    n = len(keys)
    if q < 2 or h < 2 or key_bits % h or n < 2:
        raise BuildError(f"reduction needs q >= 2, h >= 2 dividing {key_bits} and n >= 2 "
                         f"(got q={q}, h={h}, n={n})")
    l, c = key_bits, key_bits // h
    zidx = sample_indices(n, q)
    zkeys = [keys[i] for i in zidx]
    sig = ZSignature.build(zkeys, l, h, rng)

    # V: groups of non-sample keys sharing their prefix extended one character
    # past the best sample match.  Such groups are runs between sample keys.
    vcodes: list[int] = []
    vpred: list[Answer] = []
    vmax: list[int] = []
    vkids: list[Node] = []
    bounds = [-1, *zidx, n]
    for zi in range(len(bounds) - 1):
        lo, hi = bounds[zi] + 1, bounds[zi + 1]
        i = lo
        while i < hi:
            y = keys[i]
            r = 0
            if bounds[zi] >= 0:
                r = lcp_chars_raw(y, keys[bounds[zi]], l, c)
            if hi < n:
                r = max(r, lcp_chars_raw(y, keys[hi], l, c))
            code = prefix_code(y, l, c, r + 1)
            width = (r + 1) * c
            j = bisect_left(keys, ((code ^ (1 << width)) + 1) << (l - width), i, hi)
            vcodes.append(code)
            vpred.append(keys[i - 1] if i else NEG_INF)
            vmax.append(keys[j - 1])
            vkids.append(child_builder_card(keys[i:j - 1], l))
            i = j

    # U: every whole-character prefix (length 0..h-1) of a sample key.
    ucodes: list[int] = []
    upred: list[Answer] = []
    umax: list[int] = []
    upivot: list[int | None] = []
    ulo: list[Node] = []
    uhi: list[Node] = []
    extcodes: list[int] = []
    extval: list[int] = []
    seen: set[int] = set()
    for r in range(h):
        width = r * c
        for z in zkeys:
            code = prefix_code(z, l, c, r)
            if code in seen:
                continue
            seen.add(code)
            u = code ^ (1 << width)
            start = bisect_left(keys, u << (l - width))
            end = bisect_left(keys, (u + 1) << (l - width), start)
            chars: list[int] = []
            i = start
            while i < end:
                d = char_at(keys[i], r, l, c)
                j = bisect_left(keys, ((u << c) | d) + 1 << (l - width - c), i, end)
                chars.append(d)
                extcodes.append((code << c) | d)
                extval.append(keys[j - 1])
                i = j
            # the largest next character is covered by the x >= max test
            extcodes.pop()
            extval.pop()
            chars.pop()
            ucodes.append(code)
            upred.append(keys[start - 1] if start else NEG_INF)
            umax.append(keys[end - 1])
            if 2 * len(chars) > n:
                mid = len(chars) // 2
                upivot.append(chars[mid])
                ulo.append(child_builder_len(chars[:mid], c))
                uhi.append(child_builder_len(chars[mid + 1:], c))
            else:
                upivot.append(None)
                ulo.append(child_builder_len(chars, c))
                uhi.append(EMPTY)

    node = ReductionNode(
        l, h, q, n, sig,
        PerfectHash.build(vcodes, l + 1, rng), vpred, vmax, vkids,
        PerfectHash.build(ucodes, l + 1, rng), upred, umax, upivot, ulo, uhi,
        PerfectHash.build(extcodes, l + 1, rng), extval,
    )
    problems = node_violations(node)
    if problems:
        raise BuildError("reduction accounting violated: " + "; ".join(problems))
    return node


def node_violations(node: ReductionNode) -> list[str]:
    """Check the four accounting rules of one reduction node."""
    n, m = node.n_keys, node.m
    window = -(-n // node.q)
    out = []
    card = [k.n_keys for k in node.vkids]
    length = [k.n_keys for k in node.length_children()]
    big = [s for s in card if s >= window]
    if big:
        out.append(f"cardinality child of {max(big)} keys, window {window}")
    if sum(card) > n - m:
        out.append(f"cardinality children hold {sum(card)} keys > n - m = {n - m}")
    if sum(length) > m:
        out.append(f"length children hold {sum(length)} keys > m = {m}")
    if any(2 * s > n for s in length):
        out.append(f"length child of {max(length)} keys exceeds n/2 = {n / 2}")
    if sum(card) + len(node.vmax) + node.sig.q != n:
        out.append("keys not conserved across Z, V and the cardinality children")
    return out


def reduction_nodes(root: Node):
    for node in root.walk():
        if isinstance(node, ReductionNode):
            yield node


def audit_reductions(root: Node) -> list[str]:
    """Violations over every reduction node of a structure (empty when sound)."""
    out = []
    for node in reduction_nodes(root):
        out.extend(node_violations(node))
    return out


def query_reduction(node: Node, x: int) -> Answer:
    return node.lookup(x)[0]


# ---------------------------------------------------------------- schedules


def _iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for positive integers."""
    if n < 1:
        return 0
    r = int(round(n ** (1.0 / k)))
    while r ** k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def _h_from_balance(x: float, upper: int) -> int:
    """h = x / lg x rounded down to a power of two, clamped to [2, upper]."""
    raw = x / lg_paper(x)
    h = pow2_floor(max(1, int(raw)))
    return max(2, min(h, max(2, upper)))


@dataclass(frozen=True)
class Schedule:
    """Recursion plan: a fixed character count and a rule for the sample size.

    ``kind`` is ``"large"`` (q fixed) or ``"small"`` (q shrinking with n).
    """

    kind: str
    a: int
    h: int
    q_fixed: int
    in_regime: bool = True
    notes: tuple[str, ...] = field(default=())

    def q_for(self, n: int) -> int:
        if self.kind == "large":
            return self.q_fixed
        if n >= 1 << (self.a // 2):
            q = _iroot(n, 4 * self.h)
            return max(2, pow2_floor(q) if q >= 1 else 1)
        return self.q_fixed

    def h_for(self, key_bits: int) -> int:
        return max(2, min(self.h, key_bits))

    def params(self, n: int, key_bits: int) -> tuple[int, int]:
        return self.h_for(key_bits), self.q_for(n)


def _log2_ceil_n(n: int) -> int:
    return max(1, (n - 1).bit_length()) if n > 1 else 1


def schedule_large(n: int, key_bits: int, a: int, strict: bool = True) -> Schedule:
    """Fixed q = 2**(a/(2h)), h balancing length steps against sample steps."""
    if a < 1 or not is_pow2(a):
        raise ParameterError(f"a must be a positive power of two, got {a}")
    ok = a >= _log2_ceil_n(n)
    if strict and not ok:
        raise ParameterError(f"larger-space schedule needs a >= ceil(log2 n) = {_log2_ceil_n(n)}")
    if key_bits <= a:
        return Schedule("large", a, 2, 2, ok, ("tabulate at once",))
    x = a * lg_paper(key_bits / a) / lg_paper(n)
    h = _h_from_balance(x, min(key_bits // 2, a // 2))
    q = max(2, 1 << (a // (2 * h)))
    return Schedule("large", a, h, q, ok)


def schedule_small(n: int, key_bits: int, a: int, strict: bool = True) -> Schedule:
    """Fixed h; q = floor(n**(1/(4h))) while n >= 2**(a/2), then 2**(a/(4h))."""
    if a < 1 or not is_pow2(a):
        raise ParameterError(f"a must be a positive power of two, got {a}")
    ok = _log2_ceil_n(n) >= a / 2
    if strict and not ok:
        raise ParameterError(f"smaller-space schedule needs ceil(log2 n) >= a/2 = {a / 2}")
    if key_bits <= a:
        return Schedule("small", a, 2, 2, ok, ("tabulate at once",))
    x = lg_paper(key_bits / a) / lg_paper(lg_paper(n) / a)
    h = _h_from_balance(x, min(key_bits // 2, a // 4))
    q = max(2, 1 << (a // (4 * h)))
    return Schedule("small", a, h, q, ok)


def build_beame_fich(keys: Sequence[int], key_bits: int, schedule: Schedule,
                     rng: random.Random | None = None) -> Node:
    """Recursive reductions per ``schedule``; keys of <= a bits are tabulated."""
    rng = rng or random.Random(0)
    a = schedule.a

    def build_node(sub: list[int], bits: int) -> Node:
        node = small_node(sub, bits)
        if node is not None:
            return node
        if bits <= a:
            return FullTable.build(sub, bits)
        h, q = schedule.params(len(sub), bits)
        return build_reduction(sub, h, q, build_node, build_node, rng, key_bits=bits)

    return build_node(list(keys), key_bits)


def predicted_depth(schedule: Schedule, n: int, key_bits: int) -> int:
    """Upper bound on the nesting depth of a build, by dynamic programming.

    A reduction over ``n`` keys of ``l`` bits has cardinality children of at
    most ``ceil(n/q) - 1`` keys and length children of at most ``n // 2``
    keys over ``l/h`` bits.  Since ``q`` depends on ``n`` the child bound is
    not monotone, so each level keeps a running maximum over sizes.
    """
    a = schedule.a
    lengths = []
    l = key_bits
    while l > a:
        lengths.append(l)
        l //= schedule.h_for(l)
    # best[l][s]: max depth of any subproblem with at most s keys of length l
    best: dict[int, list[int]] = {}
    zeros = [0] * (n + 1)
    for l in reversed(lengths):
        nxt = best.get(l // schedule.h_for(l), zeros)
        row = [0] * (n + 1)
        for s in range(2, n + 1):
            card = -(-s // schedule.q_for(s)) - 1
            row[s] = max(row[s - 1], 1 + max(row[card], nxt[s // 2]))
        best[l] = row
    return best[key_bits][n] if key_bits in best else 0


def depth_formula_large(n: int, key_bits: int, a: int, h: int) -> float:
    """lg(l/a)/lg h + 2h log2(n)/a, the larger-space depth estimate without its constant."""
    return math.log2(max(1, key_bits / a)) / math.log2(h) + 2 * h * math.log2(max(2, n)) / a
