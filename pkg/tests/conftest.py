import numpy as np
import pytest
from hypothesis import settings

from peermap import graph
from peermap.trace import PeerAddress

# property tests must replay identically from run to run
settings.register_profile("suite", derandomize=True, max_examples=60)
settings.load_profile("suite")


def A(text: str) -> PeerAddress:
    return PeerAddress.parse(text)


def ip(i: int) -> PeerAddress:
    """Shorthand node address 10.0.0.<i> used across graph tests."""
    return PeerAddress((10, 0, (i >> 8) & 255, i & 255), 0)


def graph_from_pairs(pairs):
    return graph.build_graph([(ip(a), ip(b)) for a, b in pairs])


def csr_from_pairs(n, pairs):
    """CSR arrays in kernel layout for a graph on nodes 0..n-1."""
    adj = [[] for _ in range(n)]
    for a, b in pairs:
        adj[a].append(b)
        adj[b].append(a)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = []
    for i in range(n):
        adj[i] = sorted(set(adj[i]))
        indptr[i + 1] = indptr[i] + len(adj[i])
        indices.extend(adj[i])
    return indptr, np.array(indices, dtype=np.int32)


@pytest.fixture
def tiny_trace_lines():
    return [
        '{"t":100,"observer":"10.0.0.1:18080","source":"10.0.0.2:18080","peers":["10.0.0.3:18080"]}',
        '{"t":101,"observer":"10.0.0.1:18080","source":"10.0.0.2:18080","peers":["10.0.0.3:18080","10.0.0.4:18080"]}',
        '{"t":102,"observer":"10.0.0.1:18080","source":"10.0.0.5:18080","peers":["10.0.0.2:18080"]}',
    ]
