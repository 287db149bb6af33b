"""Branch selection, space amplification and the unified build/query entry points."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .beame_fich import (
    Schedule, audit_reductions, build_beame_fich, predicted_depth as bf_predicted_depth,
    schedule_large, schedule_small,
)
from .btree import PackedBTree, build_btree, probe_bound
from .core import (
    EMPTY, NEG_INF, REF_BITS, Answer, BudgetError, Node, ParameterError, QueryStats,
    pow2_ceil, pow2_floor,
)
from .oracle import KeySet
from .perfect_hash import PerfectHash
from .tradeoff import TradeoffParams, branches, lg_paper, optimal
from .veb import build_veb, reduced_key_bits, veb_depth_bound
from .wordops import MAX_KEY_BITS, MAX_WORD_BITS, packing_degree

#: Largest space exponent we build with; 2**16-entry tables per leaf.
A_CAP = 16
#: Structures must satisfy bits_used <= BUDGET_C * S * w.
BUDGET_C = 16
#: Measured bits_used <= SPACE_C * n * 2**a * key_bits across the test configurations.
SPACE_C = 4

FAMILIES = {1: "btree", 2: "veb", 3: "beame_fich_large", 4: "beame_fich_small"}


@dataclass(frozen=True)
class BuildConfig:
    """Problem size and machine parameters, before power-of-two rounding."""

    n: int
    key_bits: int
    w: int
    S: int

    def __post_init__(self):
        if self.n < 0:
            raise ParameterError("n must be non-negative")
        if self.key_bits < 1:
            raise ParameterError("key_bits must be positive")
        if self.n > (1 << self.key_bits):
            raise ParameterError(f"{self.n} distinct keys do not fit in {self.key_bits} bits")
        if self.key_bits > self.w:
            raise ParameterError(f"key length {self.key_bits} exceeds word size {self.w}")
        if self.S < max(self.n, 1):
            raise ParameterError(f"space S={self.S} below n={self.n}")

    @property
    def key_bits_rounded(self) -> int:
        return pow2_ceil(self.key_bits)

    @property
    def w_rounded(self) -> int:
        return pow2_ceil(self.w)

    @property
    def a_raw(self) -> int:
        return lg_paper(Fraction(self.S, max(self.n, 1))) + lg_paper(self.w)

    @property
    def a(self) -> int:
        return min(pow2_floor(self.a_raw), A_CAP)

    @property
    def budget_bits(self) -> int:
        return BUDGET_C * self.S * self.w_rounded

    def check_caps(self) -> None:
        if self.key_bits_rounded > MAX_KEY_BITS:
            raise ParameterError(f"key length {self.key_bits} exceeds the {MAX_KEY_BITS}-bit cap")
        if self.w_rounded > MAX_WORD_BITS:
            raise ParameterError(f"word size {self.w} exceeds the {MAX_WORD_BITS}-bit cap")

    def tradeoff_params(self) -> TradeoffParams:
        return TradeoffParams(max(self.n, 1), self.key_bits, self.w, self.S)


@dataclass(frozen=True)
class Plan:
    branch: int
    family: str
    a: int
    values: tuple[Fraction, ...]
    forced: bool
    expression: str

    @property
    def predicted_value(self) -> Fraction:
        return self.values[self.branch - 1]


_EXPRESSIONS = {
    1: "lg n / lg w",
    2: "lg((l - lg n)/a)",
    3: "lg(l/a) / lg((a/lg n) lg(l/a))",
    4: "lg(l/a) / lg(lg(l/a) / lg(lg n/a))",
}


def plan(cfg: BuildConfig, branch: int | None = None) -> Plan:
    """Pick the branch of least predicted search time, or honour an override."""
    values = branches(cfg.tradeoff_params())
    if branch is None:
        _, chosen = optimal(cfg.tradeoff_params())
        forced = False
    else:
        if branch not in FAMILIES:
            raise ParameterError(f"branch must be 1..4, got {branch}")
        chosen, forced = branch, True
    return Plan(chosen, FAMILIES[chosen], cfg.a, tuple(values), forced, _EXPRESSIONS[chosen])


class SpaceAmp(Node):
    """Representatives every ``w`` keys searched by ``top``; the keys between
    consecutive representatives form segments searched by packed B-trees."""

    kind = "space_amp"
    tag = 8

    def __init__(self, key_bits: int, word_bits: int, top: Node, repdir: PerfectHash,
                 segments: list[Node], n_keys: int):
        self.key_bits = key_bits
        self.word_bits = word_bits
        self.top = top
        self.repdir = repdir
        self.segments = segments
        self.n_keys = n_keys

    def query(self, x, stats, level=0):
        stats.reach(level)
        y = self.top.query(x, stats, level + 1)
        if y is NEG_INF:
            return NEG_INF
        row = self.repdir.lookup(y, stats)
        stats.read(REF_BITS)
        s = self.segments[row].query(x, stats, level + 1)
        return y if s is NEG_INF else s

    def own_bits(self):
        return self.repdir.own_bits() + len(self.segments) * REF_BITS

    def children(self):
        return [self.top, *self.segments]

    def fields(self):
        return [
            ("u", self.key_bits), ("u", self.word_bits), ("u", self.n_keys),
            ("r", [self.top]), ("sub", self.repdir), ("r", self.segments),
        ]

    @classmethod
    def from_fields(cls, f):
        key_bits, word_bits, n_keys, (top,), repdir, segments = f
        return cls(key_bits, word_bits, top, repdir, list(segments), n_keys)


InnerBuilder = Callable[[list[int]], Node]


def representatives(n: int, w: int) -> list[int]:
    """Positions j*w for j < ceil(n/w): every segment between them has < w keys."""
    return list(range(0, n, w))


def amplify_space(Y: KeySet, cfg: BuildConfig | int, inner_builder: InnerBuilder,
                  rng: random.Random | None = None) -> Node:
    w = cfg.w_rounded if isinstance(cfg, BuildConfig) else cfg
    keys = list(Y.keys)
    n, l = len(keys), Y.key_bits
    rng = rng or random.Random(0)
    if not keys:
        return EMPTY
    if n < w:
        # a single segment: the whole set, searched directly
        return build_btree(Y, w)
    pos = representatives(n, w)
    reps = [keys[i] for i in pos]
    top = inner_builder(reps)
    bounds = [*pos, n]
    segments: list[Node] = []
    for i in range(len(pos)):
        seg = keys[bounds[i] + 1:bounds[i + 1]]
        segments.append(PackedBTree.build(seg, l, w) if seg else EMPTY)
    repdir = PerfectHash.build(reps, l, rng)
    return SpaceAmp(l, w, top, repdir, segments, n)


def _btree_depth(n: int, key_bits: int, w: int) -> int:
    d = packing_degree(w, key_bits)
    if d < 2 or n <= 1:
        return 0
    return probe_bound(n, d) - 1


@dataclass
class Structure:
    """A built search structure with its configuration and build record."""

    root: Node
    cfg: BuildConfig
    plan: Plan
    seed: int
    schedule: Schedule | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def key_bits(self) -> int:
        return self.cfg.key_bits_rounded

    @property
    def word_bits(self) -> int:
        return self.cfg.w_rounded

    @property
    def branch(self) -> int:
        return self.plan.branch

    @property
    def family(self) -> str:
        return self.plan.family

    @property
    def bits_used(self) -> int:
        return self.root.bits_used

    @property
    def root_kind(self) -> str:
        """Kind of the branch structure, looking through the amplification wrapper."""
        node = self.root.top if isinstance(self.root, SpaceAmp) else self.root
        return node.kind

    def query(self, x: int) -> tuple[Answer, QueryStats]:
        if not 0 <= x < (1 << self.cfg.key_bits):
            raise ParameterError(f"query key {x} is not a {self.cfg.key_bits}-bit key")
        stats = QueryStats(self.word_bits)
        return self.root.query(x, stats, 0), stats

    def lookup(self, x: int) -> tuple[Answer, QueryStats]:
        return self.query(x)

    def predicted_depth(self) -> int:
        return int(self.metadata["predicted_depth"])


def _inner_builder(p: Plan, cfg: BuildConfig, rng: random.Random) -> tuple[InnerBuilder, list]:
    """Builder over a representative set plus a holder for the schedule it used."""
    l, a = cfg.key_bits_rounded, cfg.a
    used: list = []

    def veb(keys: list[int]) -> Node:
        return build_veb(keys, a, rng, key_bits=l)

    def reduction(keys: list[int]) -> Node:
        n = max(len(keys), 1)
        maker = schedule_large if p.branch == 3 else schedule_small
        sched = maker(n, l, a, strict=False)
        used.append(sched)
        return build_beame_fich(keys, l, sched, rng)

    return (veb if p.branch == 2 else reduction), used


def _inner_depth(p: Plan, root: Node, n: int, cfg: BuildConfig, sched: Schedule | None) -> int:
    l, a = cfg.key_bits_rounded, cfg.a
    if p.branch == 2:
        return veb_depth_bound(reduced_key_bits(root), a) if root.kind != "empty" else 0
    if sched is None:
        return 0
    return bf_predicted_depth(sched, n, l)


def build(Y: KeySet, cfg: BuildConfig, seed: int = 0, branch: int | None = None,
          enforce_budget: bool = True) -> Structure:
    """Build the planned (or forced) branch over ``Y``; deterministic in ``seed``."""
    cfg.check_caps()
    if len(Y) != cfg.n:
        raise ParameterError(f"config says n={cfg.n} but the key set has {len(Y)} keys")
    if Y.key_bits > cfg.key_bits:
        raise ParameterError(f"{Y.key_bits}-bit key set exceeds configured {cfg.key_bits} bits")
    p = plan(cfg, branch)
    rng = random.Random(seed)
    l, w = cfg.key_bits_rounded, cfg.w_rounded
    Yr = KeySet(Y.keys, l)
    sched = None
    if p.branch == 1:
        root = build_btree(Yr, w)
        depth = _btree_depth(len(Yr), l, w)
    else:
        inner, used = _inner_builder(p, cfg, rng)
        root = amplify_space(Yr, cfg, inner, rng)
        sched = used[0] if used else None
        if isinstance(root, SpaceAmp):
            n_top = len(representatives(len(Yr), w))
            seg_depth = _btree_depth(w - 1, l, w)
            depth = 1 + max(_inner_depth(p, root.top, n_top, cfg, sched), seg_depth)
        else:
            depth = _btree_depth(len(Yr), l, w)
    s = Structure(root, cfg, p, seed, sched)
    s.metadata = {
        "n": cfg.n, "key_bits": cfg.key_bits, "key_bits_rounded": l,
        "w": cfg.w, "w_rounded": w, "S": cfg.S,
        "a_raw": cfg.a_raw, "a": cfg.a,
        "branch": p.branch, "family": p.family, "forced": p.forced,
        "predicted_value": float(p.predicted_value), "expression": p.expression,
        "predicted_depth": depth, "seed": seed,
        "bits_used": root.bits_used, "budget_bits": cfg.budget_bits, "budget_c": BUDGET_C,
    }
    if sched is not None:
        s.metadata["schedule"] = {"kind": sched.kind, "h": sched.h, "q": sched.q_fixed,
                                  "in_regime": sched.in_regime}
        problems = audit_reductions(root)
        if problems:
            raise BudgetError("reduction audit failed: " + problems[0], audit=s.metadata)
    if enforce_budget and root.bits_used > cfg.budget_bits:
        raise BudgetError(
            f"structure uses {root.bits_used} bits, over the budget of {cfg.budget_bits}",
            audit=audit_breakdown(root) | s.metadata,
        )
    return s


def query(s: Structure, x: int) -> tuple[Answer, QueryStats]:
    return s.query(x)


def audit_breakdown(root: Node) -> dict:
    """Own bits summed per node kind."""
    out: dict[str, int] = {}
    for node in root.walk():
        out[node.kind] = out.get(node.kind, 0) + node.own_bits()
    return out


def recount_bits(root: Node) -> int:
    """Bits recomputed by an explicit traversal, independent of the cached totals."""
    return sum(node.own_bits() for node in root.walk())


def space_bound_bits(n: int, a: int, key_bits: int) -> int:
    return SPACE_C * max(n, 1) * (1 << a) * key_bits
