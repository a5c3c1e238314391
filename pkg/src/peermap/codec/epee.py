"""Portable-storage serialization (the binary body format of Monero P2P).

A payload is the 8-byte storage signature, a format version byte, then one
root *section*: an ordered map of byte-string names to typed values. Sizes
and counts are varints whose width lives in the two low bits of the first
byte (0 -> 1 byte, 1 -> 2, 2 -> 4, 3 -> 8); the value is the little-endian
integer shifted right by two.

The parser accepts any varint width; the encoder always emits the minimal
one, so encode(parse(x)) == x only for minimally encoded input, while
parse(encode(v)) == v holds for every value tree.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum

from ..errors import CodecError

STORAGE_SIGNATURE = bytes.fromhex("0111010101010201")
STORAGE_VERSION = 1
MAX_SECTION_DEPTH = 100
MAX_NAME_LENGTH = 255

ARRAY_FLAG = 0x80


class TypeCode(IntEnum):
    INT64 = 1
    INT32 = 2
    INT16 = 3
    INT8 = 4
    UINT64 = 5
    UINT32 = 6
    UINT16 = 7
    UINT8 = 8
    DOUBLE = 9
    STRING = 10
    BOOL = 11
    SECTION = 12


_INT_SPEC: dict[int, tuple[str, int, int]] = {
    # code -> (struct format, min, max)
    TypeCode.INT64: ("<q", -(1 << 63), (1 << 63) - 1),
    TypeCode.INT32: ("<i", -(1 << 31), (1 << 31) - 1),
    TypeCode.INT16: ("<h", -(1 << 15), (1 << 15) - 1),
    TypeCode.INT8: ("<b", -(1 << 7), (1 << 7) - 1),
    TypeCode.UINT64: ("<Q", 0, (1 << 64) - 1),
    TypeCode.UINT32: ("<I", 0, (1 << 32) - 1),
    TypeCode.UINT16: ("<H", 0, (1 << 16) - 1),
    TypeCode.UINT8: ("<B", 0, (1 << 8) - 1),
}


class BadSignatureError(CodecError):
    """Payload does not start with the storage signature and version."""


class VarintOverrunError(CodecError):
    """A varint (or the data it sizes) extends past the end of the payload."""


class UnknownTypeCodeError(CodecError):
    """A serialized type code is not one this format defines."""


class DepthLimitError(CodecError):
    """Sections/arrays nested deeper than MAX_SECTION_DEPTH."""


class EncodeError(CodecError):
    """A value tree cannot be represented in this format."""


# ---------------------------------------------------------------------------
# Value model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Int:
    """An integer with an explicit wire width; ``code`` is a TypeCode int."""

    code: int
    value: int

    def __post_init__(self) -> None:
        spec = _INT_SPEC.get(self.code)
        if spec is None:
            raise ValueError(f"not an integer type code: {self.code}")
        _, lo, hi = spec
        if not lo <= self.value <= hi:
            raise ValueError(f"value {self.value} out of range for type code {self.code}")


@dataclass(frozen=True)
class Double:
    value: float


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Blob:
    """The format's "string" type: raw bytes, no encoding implied."""

    value: bytes


@dataclass(frozen=True)
class Array:
    """Homogeneous array: every item must serialize with ``element_code``."""

    element_code: int
    items: tuple


@dataclass(frozen=True)
class Section:
    """Ordered name -> value map. Names are byte strings up to 255 bytes."""

    entries: tuple[tuple[bytes, "EpeeValue"], ...] = ()

    @classmethod
    def of(cls, *pairs: tuple[str | bytes, "EpeeValue"]) -> "Section":
        out = []
        for name, value in pairs:
            out.append((name.encode("ascii") if isinstance(name, str) else name, value))
        return cls(tuple(out))

    def get(self, name: str | bytes) -> "EpeeValue | None":
        key = name.encode("ascii") if isinstance(name, str) else name
        for n, v in self.entries:
            if n == key:
                return v
        return None


EpeeValue = Int | Double | Bool | Blob | Array | Section


def u8(v: int) -> Int:
    return Int(TypeCode.UINT8, v)


def u16(v: int) -> Int:
    return Int(TypeCode.UINT16, v)


def u32(v: int) -> Int:
    return Int(TypeCode.UINT32, v)


def u64(v: int) -> Int:
    return Int(TypeCode.UINT64, v)


def i64(v: int) -> Int:
    return Int(TypeCode.INT64, v)


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------

class _Reader:
    __slots__ = ("data", "pos")

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise VarintOverrunError(
                f"{what} needs {n} bytes at offset {self.pos}, "
                f"only {len(self.data) - self.pos} remain"
            )
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def varint(self, what: str = "varint") -> int:
        first = self.take(1, what)[0]
        width = 1 << (first & 0x03)
        if width == 1:
            return first >> 2
        rest = self.take(width - 1, what)
        return int.from_bytes(bytes([first]) + rest, "little") >> 2


def _read_value(r: _Reader, code: int, depth: int) -> EpeeValue:
    if code in _INT_SPEC:
        fmt, _, _ = _INT_SPEC[code]
        return Int(code, struct.unpack(fmt, r.take(struct.calcsize(fmt), "integer"))[0])
    if code == TypeCode.DOUBLE:
        return Double(struct.unpack("<d", r.take(8, "double"))[0])
    if code == TypeCode.BOOL:
        return Bool(r.take(1, "bool")[0] != 0)
    if code == TypeCode.STRING:
        length = r.varint("string length")
        return Blob(r.take(length, "string body"))
    if code == TypeCode.SECTION:
        return _read_section(r, depth + 1)
    raise UnknownTypeCodeError(f"unknown type code {code} at offset {r.pos}")


def _read_entry(r: _Reader, depth: int) -> EpeeValue:
    marker = r.take(1, "type marker")[0]
    code = marker & ~ARRAY_FLAG
    if marker & ARRAY_FLAG:
        if depth + 1 > MAX_SECTION_DEPTH:
            raise DepthLimitError(f"nesting exceeds {MAX_SECTION_DEPTH}")
        count = r.varint("array length")
        items = tuple(_read_value(r, code, depth + 1) for _ in range(count))
        return Array(code, items)
    return _read_value(r, code, depth)


def _read_section(r: _Reader, depth: int) -> Section:
    if depth > MAX_SECTION_DEPTH:
        raise DepthLimitError(f"nesting exceeds {MAX_SECTION_DEPTH}")
    count = r.varint("section entry count")
    entries = []
    for _ in range(count):
        name_len = r.take(1, "name length")[0]
        name = r.take(name_len, "section name")
        entries.append((bytes(name), _read_entry(r, depth)))
    return Section(tuple(entries))


def parse_epee(payload: bytes) -> Section:
    """Parse a full portable-storage payload into its root section."""
    header = STORAGE_SIGNATURE + bytes([STORAGE_VERSION])
    if payload[:len(header)] != header:
        raise BadSignatureError(
            f"bad storage signature: {payload[:len(header)].hex()!r}"
        )
    r = _Reader(payload)
    r.pos = len(header)
    return _read_section(r, depth=1)


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

def _encode_varint(value: int, out: bytearray) -> None:
    if value < 0:
        raise EncodeError(f"varint cannot encode negative value {value}")
    for mask, width in ((0, 1), (1, 2), (2, 4), (3, 8)):
        if value < 1 << (8 * width - 2):
            out += ((value << 2) | mask).to_bytes(width, "little")
            return
    raise EncodeError(f"varint cannot encode {value} (exceeds 62 bits)")


def _value_code(value: EpeeValue) -> int:
    if isinstance(value, Int):
        return value.code
    if isinstance(value, Double):
        return TypeCode.DOUBLE
    if isinstance(value, Bool):
        return TypeCode.BOOL
    if isinstance(value, Blob):
        return TypeCode.STRING
    if isinstance(value, Section):
        return TypeCode.SECTION
    raise EncodeError(f"cannot serialize {type(value).__name__}")


def _encode_value(value: EpeeValue, code: int, out: bytearray, depth: int) -> None:
    if _value_code(value) != code:
        raise EncodeError(
            f"array element {type(value).__name__} does not match element code {code}"
        )
    if isinstance(value, Int):
        fmt, _, _ = _INT_SPEC[value.code]
        out += struct.pack(fmt, value.value)
    elif isinstance(value, Double):
        out += struct.pack("<d", value.value)
    elif isinstance(value, Bool):
        out.append(1 if value.value else 0)
    elif isinstance(value, Blob):
        _encode_varint(len(value.value), out)
        out += value.value
    elif isinstance(value, Section):
        _encode_section(value, out, depth + 1)


def _encode_entry(value: EpeeValue, out: bytearray, depth: int) -> None:
    if isinstance(value, Array):
        if depth + 1 > MAX_SECTION_DEPTH:
            raise DepthLimitError(f"nesting exceeds {MAX_SECTION_DEPTH}")
        if value.element_code == TypeCode.SECTION:
            pass
        elif value.element_code not in set(int(c) for c in TypeCode):
            raise EncodeError(f"array has unknown element code {value.element_code}")
        out.append(value.element_code | ARRAY_FLAG)
        _encode_varint(len(value.items), out)
        for item in value.items:
            _encode_value(item, value.element_code, out, depth + 1)
        return
    out.append(_value_code(value))
    _encode_value(value, _value_code(value), out, depth)


def _encode_section(section: Section, out: bytearray, depth: int) -> None:
    if depth > MAX_SECTION_DEPTH:
        raise DepthLimitError(f"nesting exceeds {MAX_SECTION_DEPTH}")
    _encode_varint(len(section.entries), out)
    for name, value in section.entries:
        if len(name) > MAX_NAME_LENGTH:
            raise EncodeError(f"section name of {len(name)} bytes exceeds {MAX_NAME_LENGTH}")
        out.append(len(name))
        out += name
        _encode_entry(value, out, depth)


def encode_epee(root: Section) -> bytes:
    """Serialize a value tree to a full payload (signature + version + body)."""
    out = bytearray(STORAGE_SIGNATURE)
    out.append(STORAGE_VERSION)
    _encode_section(root, out, depth=1)
    return bytes(out)
