"""Passive topology mapping for gossip-based peer-to-peer networks.

Reconstructs the hidden connection graph of a network whose nodes share
capped, recency-ordered peer lists. The pipeline aggregates observed
peer-list packets into per-source address frequencies, splits each
source's frequency profile into background and elevated groups, and
labels the elevated addresses as likely direct neighbors. A built-in
deterministic simulator provides ground truth for end-to-end checks,
and graph analytics summarize centrality and attack robustness of the
recovered topology.
"""

from .errors import (
    CodecError,
    ConfigError,
    InputError,
    InternalError,
    PeermapError,
    ProtocolError,
    SchemaError,
    TraceParseError,
)
from .trace import PeerAddress, PeerListObservation, TripletTable, aggregate

__version__ = "0.1.0"

__all__ = [
    "CodecError",
    "ConfigError",
    "InputError",
    "InternalError",
    "PeermapError",
    "PeerAddress",
    "PeerListObservation",
    "ProtocolError",
    "SchemaError",
    "TraceParseError",
    "TripletTable",
    "aggregate",
    "__version__",
]
