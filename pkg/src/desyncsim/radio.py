"""Deterministic discrete-event engine: firings, airtime, delivery and collisions.

All nodes share a hidden true timeline. A node's phase is the offset of its
firing timer within the period; protocols only ever see arrival times.

Channel model, per frame:

* a frame is heard only by one-hop neighbors of its sender;
* at a receiver, any overlap with another audible frame drops both there
  (no capture), which covers hidden terminals;
* a node cannot receive while it is transmitting;
* before transmitting, a node waits a random MAC backoff and defers while it
  senses a neighbor's frame on air (carrier sense). A frame that started
  less than ``cca_ms`` earlier is not yet sensed.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .frames import DEFAULT_BITRATE, Frame, airtime
from .protocols import ProtocolSettings, make_protocol
from .protocols.core import NeighborTable, Node, RelayPolicy, wrap_signed
from .topology import Topology

# event priorities at equal timestamps: frame ends before new activity
_END, _FIRE, _TX = 0, 1, 2

# RNG substream purposes
_STREAM_INIT, _STREAM_MAC, _STREAM_PROTO = 0, 1, 2


def node_rng(seed: int, node: int, purpose: int) -> np.random.Generator:
    """Independent PCG64 stream for one (seed, node, purpose)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(node, purpose))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class RunConfig:
    topology: Topology
    protocol: str = "mdwarf"
    period_ms: float = 1000.0
    periods: int = 300
    seed: int = 0
    beta: int = 0
    bitrate: float = DEFAULT_BITRATE
    backoff_ms: float = 1.0
    csma: bool = True
    cca_ms: float = 0.192
    quantum_ms: float = 1.0
    settings: ProtocolSettings = field(default_factory=ProtocolSettings)
    initial_phases: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.period_ms <= 0:
            raise ValueError("period must be positive")
        if self.periods <= 0:
            raise ValueError("periods must be positive")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.bitrate <= 0:
            raise ValueError("bitrate must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.backoff_ms < 0 or self.cca_ms < 0 or self.quantum_ms < 0:
            raise ValueError("timing parameters must be non-negative")
        if self.initial_phases is not None:
            if len(self.initial_phases) != self.topology.node_count:
                raise ValueError("initial_phases needs one entry per node")
            if any(not 0 <= p < self.period_ms for p in self.initial_phases):
                raise ValueError("initial phases must lie in [0, period)")


@dataclass
class RunTrace:
    """Per-period phase samples plus channel counters.

    ``phases[p, i]`` is node i's phase at the end of period p.
    ``collisions[p, i]`` counts frames lost to overlap at receiver i during p.
    """

    config: RunConfig
    phases: np.ndarray
    collisions: np.ndarray
    fires: np.ndarray
    receives: np.ndarray
    max_airtime: float
    known: tuple[frozenset, ...] = ()  # ids in each node's table at the end

    @property
    def node_count(self) -> int:
        return self.phases.shape[1]

    @property
    def periods(self) -> int:
        return self.phases.shape[0]

    def collisions_per_period(self) -> np.ndarray:
        return self.collisions.sum(axis=1)


def run(cfg: RunConfig) -> RunTrace:
    """Simulate ``cfg.periods`` periods and sample phases at each boundary."""
    topo = cfg.topology
    n = topo.node_count
    T = cfg.period_ms
    adj = topo.adjacency
    adj_sorted = [sorted(a) for a in adj]
    proto = make_protocol(cfg.protocol, cfg.settings, cfg.bitrate)

    nodes: list[Node] = []
    mac_rng = []
    for i in range(n):
        if cfg.initial_phases is not None:
            phase = float(cfg.initial_phases[i])
        else:
            phase = float(node_rng(cfg.seed, i, _STREAM_INIT).random() * T)
        node = Node(
            id=i,
            phase=phase,
            table=NeighborTable(i, cfg.quantum_ms),
            policy=RelayPolicy(cfg.beta),
            rng=node_rng(cfg.seed, i, _STREAM_PROTO),
        )
        proto.init_node(node, T)
        nodes.append(node)
        mac_rng.append(node_rng(cfg.seed, i, _STREAM_MAC))

    backoff = cfg.backoff_ms
    cca = cfg.cca_ms
    csma = cfg.csma

    # timer of node i fires at cycle[i] * T + phase
    cycle = [0] * n
    heap: list = []
    seq = 0

    def push(t, prio, i, kind, data=None):
        nonlocal seq
        heapq.heappush(heap, (t, prio, i, seq, kind, data))
        seq += 1

    for i, node in enumerate(nodes):
        push(node.phase, _FIRE, i, "fire")

    on_air: dict[int, Frame] = {}
    pending_tx = [-1] * n  # seq of the outstanding transmit attempt
    phases = np.empty((cfg.periods, n))
    collisions = np.zeros((cfg.periods, n), dtype=np.int64)
    max_air = 0.0
    period_idx = 0

    def draw_backoff(i):
        return float(mac_rng[i].random() * backoff) if backoff > 0 else 0.0

    def on_fire(i, t):
        node = nodes[i]
        node.table.expire()
        view = node.table.phase_view(t, T)
        old = node.phase
        new = proto.next_phase(node, view, T)
        node.last_fire = t
        node.fires += 1
        shift = wrap_signed(new - old, T)
        nxt = old + shift
        cycle[i] += 1 + (-1 if nxt < 0 else (1 if nxt >= T else 0))
        node.phase = new
        push(cycle[i] * T + new, _FIRE, i, "fire")
        # a still-deferred previous transmission is superseded
        push(t + draw_backoff(i), _TX, i, "tx")
        pending_tx[i] = seq - 1

    def on_tx(i, t, token):
        nonlocal max_air
        if pending_tx[i] != token:
            return
        if csma:
            busy_until = None
            for j in adj[i]:
                g = on_air.get(j)
                if g is not None and g.emit_time <= t - cca:
                    end = g.emit_time + g.airtime
                    busy_until = end if busy_until is None else max(busy_until, end)
            if busy_until is not None:
                push(busy_until + draw_backoff(i), _TX, i, "tx")
                pending_tx[i] = seq - 1
                return
        pending_tx[i] = -1
        node = nodes[i]
        payload = proto.payload(node, t, T)
        entries = proto.entry_count(node, payload)
        air = airtime(entries, cfg.bitrate, proto.entry_bytes)
        max_air = max(max_air, air)
        frame = Frame(i, t, air, payload, entries)
        for r in adj_sorted[i]:
            if r in on_air:
                frame.lost.add(r)
            adj_r = adj[r]
            for s, g in on_air.items():
                if s in adj_r:
                    frame.collided.add(r)
                    if r not in g.collided:
                        g.collided.add(r)
        for s, g in on_air.items():
            if s in adj[i]:
                g.lost.add(i)
        on_air[i] = frame
        push(t + air, _END, i, "end", frame)

    def on_end(i, frame):
        del on_air[i]
        for r in adj_sorted[i]:
            if r in frame.collided:
                collisions[min(period_idx, cfg.periods - 1), r] += 1
            elif r not in frame.lost:
                proto.on_receive(nodes[r], i, frame.payload, frame.emit_time, T)

    for period_idx in range(cfg.periods):
        boundary = (period_idx + 1) * T
        while heap and heap[0][0] < boundary:
            t, _prio, i, token, kind, data = heapq.heappop(heap)
            if kind == "fire":
                on_fire(i, t)
            elif kind == "tx":
                on_tx(i, t, token)
            else:
                on_end(i, data)
        for i, node in enumerate(nodes):
            phases[period_idx, i] = node.phase

    return RunTrace(
        config=cfg,
        phases=phases,
        collisions=collisions,
        fires=np.array([nd.fires for nd in nodes]),
        receives=np.array([nd.receives for nd in nodes]),
        max_airtime=max_air,
        known=tuple(frozenset(nd.table.records) for nd in nodes),
    )
