"""Binary persistence of built structures.

Layout (all integers little-endian)::

    b"PRED" | u16 version | u32 header length | header JSON | payload | u64 FNV-1a(payload)

The header carries the build configuration, seed, branch and metadata.  The
payload is the node pool in breadth-first order, each node written as its tag
followed by its typed fields; child references are pool indices.
"""

from __future__ import annotations

import io
import json
import struct
from collections import deque
from typing import BinaryIO

import numpy as np

from .beame_fich import ReductionNode, Schedule, ZSignature
from .btree import PackedBTree
from .core import EMPTY, NEG_INF, IntegrityError, Leaf, Node
from .perfect_hash import PerfectHash
from .strategy import BuildConfig, Plan, SpaceAmp, Structure
from .tabulation import FullTable, PrefixSplit
from .veb import VebNode

MAGIC = b"PRED"
VERSION = 1
EMPTY_REF = 0xFFFFFFFF

NODE_TYPES: dict[int, type[Node]] = {
    cls.tag: cls
    for cls in (Leaf, FullTable, PrefixSplit, VebNode, PackedBTree, ReductionNode, SpaceAmp)
}
SUB_TYPES = {1: PerfectHash, 2: ZSignature}
SUB_IDS = {cls: i for i, cls in SUB_TYPES.items()}

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


# ----------------------------------------------------------- primitive codec


def _put_uint(out: BinaryIO, v: int) -> None:
    """Unsigned LEB128."""
    if v < 0:
        raise ValueError(f"cannot encode negative {v}")
    while True:
        byte = v & 0x7F
        v >>= 7
        if v:
            out.write(bytes((byte | 0x80,)))
        else:
            out.write(bytes((byte,)))
            return


def _get_uint(buf: io.BytesIO) -> int:
    shift = v = 0
    while True:
        b = buf.read(1)
        if not b:
            raise IntegrityError("truncated payload")
        byte = b[0]
        v |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return v
        shift += 7


def _put_list(out, values) -> None:
    _put_uint(out, len(values))
    for v in values:
        _put_uint(out, v)


def _get_list(buf) -> list[int]:
    return [_get_uint(buf) for _ in range(_get_uint(buf))]


# ---------------------------------------------------------------- encoding


def _collect(root: Node) -> tuple[list[Node], dict[int, int]]:
    """Breadth-first pool of distinct nodes (EMPTY excluded) and id -> index."""
    pool: list[Node] = []
    index: dict[int, int] = {}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        if node is EMPTY or id(node) in index:
            continue
        index[id(node)] = len(pool)
        pool.append(node)
        queue.extend(node.children())
    return pool, index


def _ref(node: Node, index: dict[int, int]) -> int:
    return EMPTY_REF if node is EMPTY else index[id(node)]


_CODE_BYTES = {"u": b"u", "ul": b"l", "al": b"a", "ol": b"o", "r": b"r", "np": b"n", "sub": b"s"}
_BYTE_CODES = {v[0]: k for k, v in _CODE_BYTES.items()}


def _write_fields(out, fields, index) -> None:
    _put_uint(out, len(fields))
    for code, value in fields:
        out.write(_CODE_BYTES[code])
        if code == "u":
            _put_uint(out, value)
        elif code == "ul":
            _put_list(out, value)
        elif code == "al":
            _put_list(out, [0 if v is NEG_INF else v + 1 for v in value])
        elif code == "ol":
            _put_list(out, [0 if v is None else v + 1 for v in value])
        elif code == "r":
            _put_uint(out, len(value))
            for child in value:
                out.write(struct.pack("<I", _ref(child, index)))
        elif code == "np":
            arr = np.ascontiguousarray(value)
            dt = arr.dtype.str.encode()
            _put_uint(out, len(dt))
            out.write(dt)
            raw = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
            _put_uint(out, len(raw))
            out.write(raw)
        elif code == "sub":
            _put_uint(out, SUB_IDS[type(value)])
            _write_fields(out, value.fields(), index)
        else:
            raise ValueError(f"unknown field code {code!r}")


def encode_pool(root: Node) -> bytes:
    pool, index = _collect(root)
    out = io.BytesIO()
    _put_uint(out, len(pool))
    for node in pool:
        _put_uint(out, node.tag)
        body = io.BytesIO()
        _write_fields(body, node.fields(), index)
        data = body.getvalue()
        _put_uint(out, len(data))
        out.write(data)
    return out.getvalue()


# ---------------------------------------------------------------- decoding


def _read_fields(buf, refs) -> list:
    values = []
    for _ in range(_get_uint(buf)):
        tag = buf.read(1)
        code = _BYTE_CODES.get(tag[0]) if tag else None
        if code == "u":
            values.append(_get_uint(buf))
        elif code == "ul":
            values.append(_get_list(buf))
        elif code == "al":
            values.append([NEG_INF if v == 0 else v - 1 for v in _get_list(buf)])
        elif code == "ol":
            values.append([None if v == 0 else v - 1 for v in _get_list(buf)])
        elif code == "r":
            count = _get_uint(buf)
            raw = buf.read(4 * count)
            if len(raw) != 4 * count:
                raise IntegrityError("truncated reference list")
            values.append([refs(r) for r in struct.unpack(f"<{count}I", raw)])
        elif code == "np":
            try:
                dt = np.dtype(buf.read(_get_uint(buf)).decode())
            except (TypeError, ValueError, UnicodeDecodeError) as exc:
                raise IntegrityError(f"bad array type: {exc}") from exc
            size = _get_uint(buf)
            raw = buf.read(size)
            if len(raw) != size or size % dt.itemsize:
                raise IntegrityError("truncated array")
            values.append(np.frombuffer(raw, dtype=dt).astype(dt.newbyteorder("=")))
        elif code == "sub":
            sub_cls = SUB_TYPES.get(_get_uint(buf))
            if sub_cls is None:
                raise IntegrityError("unknown sub-object type")
            values.append(sub_cls.from_fields(_read_fields(buf, refs)))
        else:
            raise IntegrityError(f"unknown field code {tag!r}")
    return values


def decode_pool(data: bytes) -> Node:
    buf = io.BytesIO(data)
    count = _get_uint(buf)
    if count == 0:
        return EMPTY
    nodes: list[Node | None] = [None] * count
    pending: list[tuple[int, type, bytes]] = []
    for i in range(count):
        tag = _get_uint(buf)
        cls = NODE_TYPES.get(tag)
        if cls is None:
            raise IntegrityError(f"unknown node tag {tag}")
        size = _get_uint(buf)
        body = buf.read(size)
        if len(body) != size:
            raise IntegrityError("truncated node")
        pending.append((i, cls, body))
    if buf.read(1):
        raise IntegrityError("trailing bytes after node pool")

    def ref(r: int) -> Node:
        if r == EMPTY_REF:
            return EMPTY
        if not 0 <= r < count:
            raise IntegrityError(f"dangling reference {r}")
        node = nodes[r]
        if node is None:
            raise IntegrityError("reference to a node not yet decoded")
        return node

    # children follow their parents in breadth-first order, so decode backwards
    for i, cls, body in reversed(pending):
        b = io.BytesIO(body)
        try:
            nodes[i] = cls.from_fields(_read_fields(b, ref))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, IntegrityError):
                raise
            raise IntegrityError(f"malformed node {i}: {exc}") from exc
        if b.read(1):
            raise IntegrityError(f"trailing bytes in node {i}")
    return nodes[0]


# ------------------------------------------------------------ whole files


def serialize(s: Structure) -> bytes:
    header = {
        "config": {"n": s.cfg.n, "key_bits": s.cfg.key_bits, "w": s.cfg.w, "S": s.cfg.S},
        "seed": s.seed,
        "branch": s.plan.branch,
        "forced": s.plan.forced,
        "metadata": s.metadata,
    }
    if s.schedule is not None:
        sc = s.schedule
        header["schedule"] = {"kind": sc.kind, "a": sc.a, "h": sc.h, "q_fixed": sc.q_fixed,
                              "in_regime": sc.in_regime, "notes": list(sc.notes)}
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    pool = encode_pool(s.root)
    payload = struct.pack("<I", len(hbytes)) + hbytes + pool + struct.pack("<Q", s.root.bits_used)
    return MAGIC + struct.pack("<H", VERSION) + payload + struct.pack("<Q", fnv1a64(payload))


def deserialize(data: bytes) -> Structure:
    from .strategy import plan as make_plan

    if len(data) < 4 + 2 + 4 + 8 + 8 or data[:4] != MAGIC:
        raise IntegrityError("not a structure file")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise IntegrityError(f"unsupported format version {version}")
    payload, (checksum,) = data[6:-8], struct.unpack("<Q", data[-8:])
    if fnv1a64(payload) != checksum:
        raise IntegrityError("checksum mismatch")
    (hlen,) = struct.unpack_from("<I", payload, 0)
    try:
        header = json.loads(payload[4:4 + hlen])
    except ValueError as exc:
        raise IntegrityError(f"corrupt header: {exc}") from exc
    pool = payload[4 + hlen:-8]
    (bits,) = struct.unpack("<Q", payload[-8:])
    root = decode_pool(pool)
    if root.bits_used != bits:
        raise IntegrityError(f"space summary {bits} disagrees with decoded structure")
    cfg = BuildConfig(**header["config"])
    p: Plan = make_plan(cfg, header["branch"])
    if not header["forced"]:
        p = Plan(p.branch, p.family, p.a, p.values, False, p.expression)
    sched = None
    if "schedule" in header:
        sc = header["schedule"]
        sched = Schedule(sc["kind"], sc["a"], sc["h"], sc["q_fixed"], sc["in_regime"],
                         tuple(sc["notes"]))
    return Structure(root, cfg, p, header["seed"], sched, header["metadata"])


def save(s: Structure, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(s))


def load(path) -> Structure:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
