"""Deterministic gossip simulator.

Models a population of nodes that keep recency-ordered whitelists of known
peers and exchange peer lists with their direct partners every handshake
period, the way the real P2P maintenance traffic behaves:

* partners exchange lists every ``handshake_period`` rounds, and each side
  responds with up to ``response_size`` entries sampled from the
  most-recently-seen slice of its whitelist (the *window*);
* a direct exchange refreshes the partner's last-seen stamp, and background
  liveness pings refresh ``ping_count`` random whitelist entries per round;
  gossiped entries arrive with the advertiser's stale stamp and never
  refresh entries the receiver already has;
* whitelists are evicted down to ``whitelist_cap`` by recency.

The window is the top ``top_window / whitelist_cap`` fraction of the actual
whitelist (so exactly the top ``top_window`` entries once the list is full).
Designated observer nodes log every peer list they receive; those logs plus
the true connection sets are the simulator's outputs.

Everything is driven by one seeded splitmix64 stream, so a config reproduces
its outputs byte for byte, on either kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import IO

import numpy as np

from . import kernels
from .errors import ConfigError, InternalError
from .rng import STREAM_ROUNDS, STREAM_TOPOLOGY, SplitMix64, derive_state
from .trace import GroundTruthSnapshot, PeerAddress, PeerListObservation

NODE_PORT = 18080

# The n x n last-seen matrix dominates memory; this caps it near 1.6 GiB.
MAX_NODES = 20000


@dataclass(frozen=True)
class SimConfig:
    node_count: int
    rounds: int
    out_degree: int = 8
    whitelist_cap: int = 1000
    top_window: int = 300
    response_size: int = 250
    handshake_period: int = 1
    observers: tuple[int, ...] = ()
    seed: int = 0
    # Hub-heavy topology: each outgoing pick targets the first
    # ``seed_node_count`` nodes with probability ``seed_bias``.
    seed_node_count: int = 0
    seed_bias: float = 0.0
    # Liveness refreshes per node per round; None derives a default that
    # keeps recency ranks well mixed relative to the window size.
    ping_count: int | None = None

    def __post_init__(self) -> None:
        if not 2 <= self.node_count <= MAX_NODES:
            raise ConfigError(f"node_count must be in [2, {MAX_NODES}], got {self.node_count}")
        if not 1 <= self.out_degree < self.node_count:
            raise ConfigError(
                f"out_degree must be in [1, node_count), got {self.out_degree} "
                f"with node_count {self.node_count}"
            )
        if self.rounds < 0:
            raise ConfigError(f"rounds must be non-negative, got {self.rounds}")
        if not 1 <= self.response_size <= self.top_window <= self.whitelist_cap:
            raise ConfigError(
                "need 1 <= response_size <= top_window <= whitelist_cap, got "
                f"{self.response_size} / {self.top_window} / {self.whitelist_cap}"
            )
        if self.handshake_period < 1:
            raise ConfigError(f"handshake_period must be >= 1, got {self.handshake_period}")
        if len(set(self.observers)) != len(self.observers):
            raise ConfigError("observers must be unique")
        for o in self.observers:
            if not 0 <= o < self.node_count:
                raise ConfigError(f"observer {o} out of range [0, {self.node_count})")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not 0 <= self.seed_node_count <= self.node_count:
            raise ConfigError(f"seed_node_count out of range: {self.seed_node_count}")
        if not 0.0 <= self.seed_bias <= 1.0:
            raise ConfigError(f"seed_bias must be in [0, 1], got {self.seed_bias}")
        if self.seed_bias > 0 and self.seed_node_count == 0:
            raise ConfigError("seed_bias > 0 requires seed_node_count >= 1")
        if self.seed_bias == 1.0 and self.seed_node_count <= self.out_degree:
            raise ConfigError("seed_bias 1.0 needs seed_node_count > out_degree")
        if self.ping_count is not None and self.ping_count < 0:
            raise ConfigError("ping_count must be non-negative")

    @property
    def effective_ping_count(self) -> int:
        if self.ping_count is not None:
            return self.ping_count
        return max(1, self.top_window // 4)


_INT_FIELDS = {
    "node_count", "rounds", "out_degree", "whitelist_cap", "top_window",
    "response_size", "handshake_period", "seed", "seed_node_count", "ping_count",
}


def config_from_mapping(mapping: dict[str, str]) -> SimConfig:
    """Build a config from flat string key=value pairs (file or CLI)."""
    kwargs: dict[str, object] = {}
    known = {f.name for f in fields(SimConfig)}
    for key, raw in mapping.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if key == "observers":
            raw = raw.strip()
            kwargs[key] = tuple(int(p) for p in raw.split(",")) if raw else ()
        elif key == "seed_bias":
            kwargs[key] = float(raw)
        elif key in _INT_FIELDS:
            try:
                kwargs[key] = int(raw)
            except ValueError:
                raise ConfigError(f"config key {key!r} must be an integer, got {raw!r}") from None
    missing = {"node_count", "rounds"} - kwargs.keys()
    if missing:
        raise ConfigError(f"config missing required keys: {sorted(missing)}")
    return SimConfig(**kwargs)  # type: ignore[arg-type]


def read_config_file(fp: IO[str]) -> dict[str, str]:
    """Parse a flat key=value config file; '#' starts a comment."""
    out: dict[str, str] = {}
    for line_no, line in enumerate(fp, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ConfigError(f"config line {line_no}: expected key=value, got {stripped!r}")
        out[key.strip()] = value.strip()
    return out


@dataclass(frozen=True)
class ProtocolOdds:
    """Per-exchange inclusion probabilities implied by the protocol constants."""

    p_selected: float
    p_enter: float
    p_neighbour: float
    p_random: float


def theoretical_odds(cfg: SimConfig) -> ProtocolOdds:
    """Inclusion odds for a full whitelist.

    A direct partner is always inside the recency window, so its chance of
    appearing in one response is the sampling ratio; an arbitrary known peer
    must first rank inside the window, then survive sampling.
    """
    p_selected = cfg.response_size / cfg.top_window
    p_enter = cfg.top_window / cfg.whitelist_cap
    return ProtocolOdds(
        p_selected=p_selected,
        p_enter=p_enter,
        p_neighbour=p_selected,
        p_random=p_enter * p_selected,
    )


def node_address(index: int) -> PeerAddress:
    """Stable synthetic endpoint for a node index (10.x.y.z:18080)."""
    return PeerAddress((10, (index >> 16) & 255, (index >> 8) & 255, index & 255), NODE_PORT)


def node_ip(index: int) -> PeerAddress:
    return PeerAddress((10, (index >> 16) & 255, (index >> 8) & 255, index & 255), 0)


def build_topology(cfg: SimConfig) -> list[tuple[int, int]]:
    """Random connection graph: every node picks ``out_degree`` distinct targets.

    Links are undirected once made, so actual degrees are at least
    ``out_degree``. With ``seed_node_count`` set, picks are biased toward the
    seed nodes, producing the hub-heavy shape of bootstrap-dominated networks.
    """
    n = cfg.node_count
    rng = SplitMix64(derive_state(cfg.seed, STREAM_TOPOLOGY))
    bias_threshold = round(cfg.seed_bias * 2.0**64)
    edges: set[tuple[int, int]] = set()
    for i in range(n):
        chosen: set[int] = set()
        while len(chosen) < cfg.out_degree:
            if cfg.seed_node_count and rng.next_u64() < bias_threshold:
                target = rng.next_below(cfg.seed_node_count)
            else:
                target = rng.next_below(n)
            if target == i or target in chosen:
                continue
            chosen.add(target)
            edges.add((i, target) if i < target else (target, i))
    return sorted(edges)


@dataclass(frozen=True)
class SimStats:
    observations: int
    max_whitelist: int
    due_rounds: int
    backend: str


@dataclass
class SimResult:
    config: SimConfig
    trace: list[PeerListObservation]
    truth_edges: frozenset[tuple[PeerAddress, PeerAddress]]
    snapshots: list[GroundTruthSnapshot]
    odds: ProtocolOdds
    stats: SimStats
    edge_indices: list[tuple[int, int]] = field(default_factory=list)


def _csr(n: int, edges: list[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        adj[i].sort()
        indptr[i + 1] = indptr[i] + len(adj[i])
    indices = np.empty(int(indptr[n]), dtype=np.int32)
    for i in range(n):
        indices[indptr[i]:indptr[i + 1]] = adj[i]
    return indptr, indices


def run(cfg: SimConfig) -> SimResult:
    """Simulate the configured network and collect observer logs."""
    n = cfg.node_count
    edges = build_topology(cfg)
    indptr, indices = _csr(n, edges)
    degrees = np.diff(indptr)

    ls = np.full((n, n), -1, dtype=np.int32)
    for i, j in edges:
        ls[i, j] = 0
        ls[j, i] = 0

    observer_mask = np.zeros(n, dtype=np.uint8)
    for o in cfg.observers:
        observer_mask[o] = 1

    due_rounds = cfg.rounds // cfg.handshake_period
    expected_obs = due_rounds * int(sum(degrees[o] for o in cfg.observers))
    win_cap = max(1, min(cfg.top_window, n))
    resp_cap = min(cfg.response_size, win_cap)
    obs_round = np.zeros(expected_obs, dtype=np.int32)
    obs_source = np.zeros(expected_obs, dtype=np.int32)
    obs_observer = np.zeros(expected_obs, dtype=np.int32)
    obs_len = np.zeros(expected_obs, dtype=np.int32)
    obs_peers = np.zeros(expected_obs * resp_cap, dtype=np.int32)

    obs_n, max_wl = kernels.sim_rounds(
        ls, indptr, indices,
        cfg.rounds, cfg.handshake_period, cfg.whitelist_cap,
        cfg.top_window, cfg.response_size, cfg.effective_ping_count,
        derive_state(cfg.seed, STREAM_ROUNDS),
        observer_mask,
        obs_round, obs_source, obs_observer, obs_len, obs_peers,
    )
    if obs_n != expected_obs:
        raise InternalError(
            f"kernel produced {obs_n} observations, expected {expected_obs}"
        )

    addrs = [node_address(i) for i in range(n)]
    trace = []
    for k in range(obs_n):
        length = int(obs_len[k])
        base = k * resp_cap
        peers = tuple(addrs[p] for p in obs_peers[base:base + length])
        trace.append(PeerListObservation(
            int(obs_round[k]), addrs[int(obs_observer[k])], addrs[int(obs_source[k])], peers,
        ))

    ips = [node_ip(i) for i in range(n)]
    truth_edges = frozenset((ips[i], ips[j]) for i, j in edges)
    neighbor_sets: dict[int, set[PeerAddress]] = {o: set() for o in cfg.observers}
    for i, j in edges:
        if i in neighbor_sets:
            neighbor_sets[i].add(ips[j])
        if j in neighbor_sets:
            neighbor_sets[j].add(ips[i])
    snapshots = [
        GroundTruthSnapshot(0, ips[o], frozenset(neighbor_sets[o]))
        for o in sorted(cfg.observers)
    ]

    return SimResult(
        config=cfg,
        trace=trace,
        truth_edges=truth_edges,
        snapshots=snapshots,
        odds=theoretical_odds(cfg),
        stats=SimStats(obs_n, int(max_wl), due_rounds, kernels.backend()),
        edge_indices=edges,
    )


def empirical_presence_rates(result: SimResult) -> tuple[float, float]:
    """Mean per-packet inclusion rate for (neighbor, non-neighbor) pairs.

    Computed over the observer logs against the true link set; used to check
    the simulator against ``theoretical_odds``.
    """
    truth: set[frozenset[PeerAddress]] = {
        frozenset((a, b)) for a, b in result.truth_edges
    }
    packets: dict[PeerAddress, int] = {}
    counts: dict[tuple[PeerAddress, PeerAddress], int] = {}
    for obs in result.trace:
        packets[obs.source] = packets.get(obs.source, 0) + 1
        for p in obs.peers:
            key = (obs.source, p)
            counts[key] = counts.get(key, 0) + 1
    nbr_total = nbr_pkts = other_total = other_pkts = 0
    seen_sources = set(packets)
    n = result.config.node_count
    for src in seen_sources:
        src_ip = PeerAddress(src.ip, 0)
        for idx in range(n):
            tgt = node_ip(idx)
            if tgt == src_ip:
                continue
            c = counts.get((src, node_address(idx)), 0)
            if frozenset((src_ip, tgt)) in truth:
                nbr_total += c
                nbr_pkts += packets[src]
            else:
                other_total += c
                other_pkts += packets[src]
    return (
        nbr_total / nbr_pkts if nbr_pkts else 0.0,
        other_total / other_pkts if other_pkts else 0.0,
    )


def replace_config(cfg: SimConfig, **changes: object) -> SimConfig:
    return replace(cfg, **changes)
