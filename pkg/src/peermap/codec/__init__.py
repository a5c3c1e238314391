"""Binary codecs for the P2P wire format: Levin framing and portable storage."""

from .epee import (
    Array,
    BadSignatureError,
    Blob,
    Bool,
    DepthLimitError,
    Double,
    EncodeError,
    Int,
    Section,
    TypeCode,
    UnknownTypeCodeError,
    VarintOverrunError,
    encode_epee,
    parse_epee,
)
from .levin import (
    COMMAND_HANDSHAKE,
    COMMAND_TIMED_SYNC,
    PEER_COMMANDS,
    FrameSyncError,
    LevinHeader,
    PartialFrame,
    PayloadTooLargeError,
    encode_levin_frame,
    parse_levin_frames,
)
from .peerlist import (
    PeerListEntry,
    PeerListExtract,
    extract_peerlist,
    flow_filename,
    parse_flow_filename,
    peerlist_body,
    timed_sync_response,
)

__all__ = [
    "Array", "BadSignatureError", "Blob", "Bool", "DepthLimitError", "Double",
    "EncodeError", "Int", "Section", "TypeCode", "UnknownTypeCodeError",
    "VarintOverrunError", "encode_epee", "parse_epee",
    "COMMAND_HANDSHAKE", "COMMAND_TIMED_SYNC", "PEER_COMMANDS",
    "FrameSyncError", "LevinHeader", "PartialFrame", "PayloadTooLargeError",
    "encode_levin_frame", "parse_levin_frames",
    "PeerListEntry", "PeerListExtract", "extract_peerlist", "flow_filename",
    "parse_flow_filename", "peerlist_body", "timed_sync_response",
]
