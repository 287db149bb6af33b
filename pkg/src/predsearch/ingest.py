"""Key file parsing.

Text files hold one integer per line (decimal or ``0x`` hex), strictly
ascending; blank lines and ``#`` comments are skipped.  Raw files hold
little-endian unsigned records of a fixed byte width.
"""

from __future__ import annotations

from pathlib import Path

from .core import ParameterError


class IngestError(ParameterError):
    """A key file is malformed; the message names the offending line or record."""


def parse_format(spec: str) -> tuple[str, int]:
    """``"text"`` or ``"raw:BYTES"`` -> (kind, record width)."""
    if spec == "text":
        return "text", 0
    kind, _, width = spec.partition(":")
    if kind == "raw" and width.isdigit() and 1 <= int(width) <= 8:
        return "raw", int(width)
    raise IngestError(f"unknown key format {spec!r}; use text or raw:BYTES with 1 <= BYTES <= 8")


def parse_key(token: str) -> int:
    token = token.strip()
    base = 16 if token.lower().startswith("0x") else 10
    value = int(token, base)
    if value < 0:
        raise ValueError("negative key")
    return value


def _check_order(keys: list[int], value: int, where: str) -> None:
    if keys and value <= keys[-1]:
        what = "duplicate" if value == keys[-1] else "out-of-order"
        raise IngestError(f"{where}: {what} key {value} (previous {keys[-1]})")


def read_text(lines, key_bits: int | None = None) -> list[int]:
    keys: list[int] = []
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        try:
            value = parse_key(body)
        except ValueError:
            raise IngestError(f"line {lineno}: not a non-negative integer: {body!r}") from None
        if key_bits is not None and value >= 1 << key_bits:
            raise IngestError(f"line {lineno}: key {value} does not fit in {key_bits} bits")
        _check_order(keys, value, f"line {lineno}")
        keys.append(value)
    return keys


def read_raw(data: bytes, width: int, key_bits: int | None = None) -> list[int]:
    if len(data) % width:
        raise IngestError(f"file length {len(data)} is not a multiple of the record width {width}")
    keys: list[int] = []
    for rec in range(len(data) // width):
        value = int.from_bytes(data[rec * width:(rec + 1) * width], "little")
        if key_bits is not None and value >= 1 << key_bits:
            raise IngestError(f"record {rec + 1}: key {value} does not fit in {key_bits} bits")
        _check_order(keys, value, f"record {rec + 1}")
        keys.append(value)
    return keys


def read_keys(path: str | Path, fmt: str = "text", key_bits: int | None = None) -> list[int]:
    kind, width = parse_format(fmt)
    path = Path(path)
    try:
        if kind == "raw":
            return read_raw(path.read_bytes(), width, key_bits)
        with path.open(encoding="utf-8") as fh:
            return read_text(fh, key_bits)
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise IngestError(f"{path} is not a text key file; pass --format raw:BYTES") from None
