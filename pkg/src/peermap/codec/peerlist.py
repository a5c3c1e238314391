"""Peer-list extraction from decoded P2P message bodies.

Handshake and timed-sync responses carry the sender's advertised peers in a
``local_peerlist_new`` array. Each element is a section::

    adr:  { type: u8, addr: { m_ip: u32, m_port: u16 } }   # type 1 = IPv4
    id:   u64
    ...plus optional fields (pruning_seed, rpc_port, ...) we keep but ignore.

Non-IPv4 entries (type != 1) are skipped and counted, not errors: real nodes
advertise IPv6 and Tor addresses alongside IPv4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import SchemaError
from ..trace import PeerAddress
from . import epee
from .epee import Array, Blob, Int, Section, TypeCode, u8, u16, u32, u64
from .levin import COMMAND_TIMED_SYNC, FLAG_RESPONSE, encode_levin_frame

PEERLIST_FIELD = b"local_peerlist_new"
ADDR_TYPE_IPV4 = 1


@dataclass(frozen=True)
class PeerListEntry:
    address: PeerAddress
    peer_id: int
    extras: tuple[tuple[bytes, object], ...] = ()


@dataclass
class PeerListExtract:
    entries: list[PeerListEntry] = field(default_factory=list)
    skipped_non_ipv4: int = 0


def _require_int(section: Section, name: bytes, code: int, where: str) -> int:
    value = section.get(name)
    if not isinstance(value, Int) or value.code != code:
        raise SchemaError(
            f"{where}: field {name.decode('latin-1')!r} must be an integer "
            f"of type code {code}"
        )
    return value.value


def ip_from_u32(raw: int, byte_order: str = "big") -> tuple[int, int, int, int]:
    """Octets of a serialized IPv4 address.

    ``byte_order`` is the order in which the u32 holds the octets: "big"
    means the first octet is the most significant byte (network order held
    in the integer), which is how stock nodes serialize it.
    """
    bs = raw.to_bytes(4, byte_order)  # type: ignore[arg-type]
    return (bs[0], bs[1], bs[2], bs[3])


def ip_to_u32(ip: tuple[int, int, int, int], byte_order: str = "big") -> int:
    return int.from_bytes(bytes(ip), byte_order)  # type: ignore[arg-type]


def extract_peerlist(root: Section, *, ip_byte_order: str = "big") -> PeerListExtract:
    """Pull advertised peers out of a decoded message body.

    A missing ``local_peerlist_new`` field yields an empty extract (requests
    and some responses legitimately carry no peer list); a field of the
    wrong shape is a schema error.
    """
    out = PeerListExtract()
    peers = root.get(PEERLIST_FIELD)
    if peers is None:
        return out
    if not isinstance(peers, Array) or peers.element_code != TypeCode.SECTION:
        raise SchemaError(
            f"{PEERLIST_FIELD.decode('latin-1')!r} must be an array of sections"
        )
    for idx, entry in enumerate(peers.items):
        where = f"peer entry {idx}"
        adr = entry.get(b"adr")
        if not isinstance(adr, Section):
            raise SchemaError(f"{where}: missing 'adr' section")
        addr_type = _require_int(adr, b"type", TypeCode.UINT8, where)
        if addr_type != ADDR_TYPE_IPV4:
            out.skipped_non_ipv4 += 1
            continue
        addr = adr.get(b"addr")
        if not isinstance(addr, Section):
            raise SchemaError(f"{where}: missing 'addr' section")
        m_ip = _require_int(addr, b"m_ip", TypeCode.UINT32, where)
        m_port = _require_int(addr, b"m_port", TypeCode.UINT16, where)
        peer_id_value = entry.get(b"id")
        peer_id = 0
        if peer_id_value is not None:
            if not isinstance(peer_id_value, Int) or peer_id_value.code != TypeCode.UINT64:
                raise SchemaError(f"{where}: 'id' must be a u64")
            peer_id = peer_id_value.value
        extras = tuple(
            (name, value)
            for name, value in entry.entries
            if name not in (b"adr", b"id")
        )
        out.entries.append(
            PeerListEntry(
                PeerAddress(ip_from_u32(m_ip, ip_byte_order), m_port),
                peer_id,
                extras,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Fixture builders (also used to synthesize test captures)
# ---------------------------------------------------------------------------

def peer_entry_section(
    address: PeerAddress,
    peer_id: int,
    *,
    ip_byte_order: str = "big",
    extras: tuple[tuple[bytes, object], ...] = (),
) -> Section:
    adr = Section.of(
        ("addr", Section.of(
            ("m_ip", u32(ip_to_u32(address.ip, ip_byte_order))),
            ("m_port", u16(address.port)),
        )),
        ("type", u8(ADDR_TYPE_IPV4)),
    )
    pairs: list[tuple[bytes, object]] = [(b"adr", adr), (b"id", u64(peer_id))]
    pairs.extend(extras)
    return Section(tuple(pairs))


def peerlist_body(
    entries: list[tuple[PeerAddress, int]], *, ip_byte_order: str = "big"
) -> Section:
    sections = tuple(
        peer_entry_section(addr, pid, ip_byte_order=ip_byte_order)
        for addr, pid in entries
    )
    return Section.of(
        ("local_peerlist_new", Array(TypeCode.SECTION, sections)),
        ("payload_data", Section.of(
            ("current_height", u64(0)),
            ("top_id", Blob(bytes(32))),
        )),
    )


def timed_sync_response(
    entries: list[tuple[PeerAddress, int]], *, ip_byte_order: str = "big"
) -> bytes:
    """A complete on-the-wire timed-sync response advertising ``entries``."""
    payload = epee.encode_epee(peerlist_body(entries, ip_byte_order=ip_byte_order))
    return encode_levin_frame(
        payload, COMMAND_TIMED_SYNC, flags=FLAG_RESPONSE, return_code=1
    )


# ---------------------------------------------------------------------------
# Capture flow files
# ---------------------------------------------------------------------------

def flow_filename(source: PeerAddress, observer: PeerAddress) -> str:
    """Name of a per-direction flow dump, tcpflow style (zero-padded)."""

    def fmt(a: PeerAddress) -> str:
        return ".".join(f"{o:03d}" for o in a.ip) + f".{a.port:05d}"

    return f"{fmt(source)}-{fmt(observer)}"


def parse_flow_filename(name: str) -> tuple[PeerAddress, PeerAddress] | None:
    """Recover (source, observer) from a flow filename; None if not one."""
    parts = name.split("-")
    if len(parts) != 2:
        return None
    addrs = []
    for part in parts:
        pieces = part.split(".")
        if len(pieces) != 5 or not all(p.isdigit() for p in pieces):
            return None
        try:
            addrs.append(PeerAddress(tuple(int(o) for o in pieces[:4]), int(pieces[4])))  # type: ignore[arg-type]
        except ValueError:
            return None
    return addrs[0], addrs[1]
