"""Protocol-independent node machinery.

Every protocol keeps a table of what it believes about the firing times of
nodes within two hops. Direct receptions give exact one-hop records; the
relayed payload of a neighbor's frame gives two-hop records, reconstructed
from the relative phases the neighbor attached.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

TTL_PERIODS = 3

Payload = Optional[tuple[tuple[int, float], ...]]


def wrap_signed(x: float, period: float) -> float:
    """Map ``x`` onto ``[-period/2, period/2)``."""
    half = period / 2.0
    r = (x + half) % period
    if r >= period:  # float rounding of tiny negatives
        r -= period
    return r - half


def wrap_phase(x: float, period: float) -> float:
    """Map ``x`` onto ``[0, period)``."""
    r = x % period
    return 0.0 if r >= period else r


class ViewEntry(NamedTuple):
    id: int
    hops: int
    delta: float  # signed offset from own firing, in [-T/2, T/2)


@dataclass(slots=True)
class NeighborRecord:
    id: int
    last_fire_time: float
    hops: int
    ttl: int = TTL_PERIODS
    via: int = -1  # relaying neighbor for two-hop records


@dataclass(slots=True)
class RelayPolicy:
    """Attach the relayed-phase payload once every ``beta + 1`` firings."""

    beta: int = 0
    fire_counter: int = 0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be non-negative")

    def next_attach(self) -> bool:
        attach = self.fire_counter % (self.beta + 1) == 0
        self.fire_counter += 1
        return attach


class NeighborTable:
    """One node's beliefs about the firing times of its two-hop neighbors.

    TTL bookkeeping is per period: :meth:`expire` runs once at each own firing
    and ages every record that saw no fresh information since the previous
    call. A two-hop record is not aged in a period where its relaying
    neighbor was heard but simply omitted the payload, since that is absence
    of data rather than evidence that the node is gone.
    """

    def __init__(self, owner: int, quantum_ms: float = 1.0):
        self.owner = owner
        self.quantum_ms = quantum_ms
        self.records: dict[int, NeighborRecord] = {}
        self._refreshed: set[int] = set()
        self._bare: set[int] = set()

    def __len__(self):
        return len(self.records)

    def __contains__(self, node_id):
        return node_id in self.records

    def get(self, node_id: int) -> NeighborRecord | None:
        return self.records.get(node_id)

    def build_payload(self, now: float, period: float, policy: RelayPolicy) -> Payload:
        """Relative phases of all one-hop records, or ``None`` on a skipped firing."""
        if not policy.next_attach():
            return None
        q = self.quantum_ms
        out = []
        for rid in sorted(self.records):
            rec = self.records[rid]
            if rec.hops != 1:
                continue
            rel = (now - rec.last_fire_time) % period
            if q > 0:
                rel = (round(rel / q) * q) % period
            out.append((rid, rel))
        return tuple(out)

    def on_receive(self, sender: int, payload: Payload, rx_time: float, period: float) -> bool:
        """Fold a delivered frame into the table; returns False if it was ignored."""
        if payload is not None:
            for entry in payload:
                if len(entry) != 2 or not (0.0 <= entry[1] < period):
                    return False
        records = self.records
        rec = records.get(sender)
        if rec is None:
            records[sender] = NeighborRecord(sender, rx_time, 1)
        else:
            rec.last_fire_time = rx_time
            rec.hops = 1
            rec.ttl = TTL_PERIODS
            rec.via = -1
        self._refreshed.add(sender)
        if payload is None:
            self._bare.add(sender)
            return True
        owner = self.owner
        refreshed = self._refreshed
        for j, rel in payload:
            if j == owner:
                continue
            rec = records.get(j)
            if rec is None:
                records[j] = NeighborRecord(j, rx_time - rel, 2, TTL_PERIODS, sender)
            elif rec.hops != 1:
                rec.last_fire_time = rx_time - rel
                rec.ttl = TTL_PERIODS
                rec.via = sender
            else:
                continue
            refreshed.add(j)
        return True

    def expire(self) -> None:
        refreshed, bare = self._refreshed, self._bare
        dead = []
        for rid, rec in self.records.items():
            if rid in refreshed:
                continue
            if rec.hops == 2 and rec.via in bare:
                continue
            rec.ttl -= 1
            if rec.ttl <= 0:
                dead.append(rid)
        for rid in dead:
            del self.records[rid]
        refreshed.clear()
        bare.clear()

    def phase_view(self, own_time: float, period: float) -> list[ViewEntry]:
        return [
            ViewEntry(rid, rec.hops, wrap_signed(rec.last_fire_time - own_time, period))
            for rid, rec in sorted(self.records.items())
        ]


@dataclass
class Node:
    """Simulation-side state of one node; protocols hang extra state in ``extra``."""

    id: int
    phase: float
    table: NeighborTable
    policy: RelayPolicy
    rng: object = None
    last_fire: float | None = None
    fires: int = 0
    receives: int = 0
    extra: dict = field(default_factory=dict)


class Protocol:
    """Base node logic; subclasses implement :meth:`next_phase`."""

    name = "base"
    entry_bytes = 4  # neighbor id + relative phase

    def init_node(self, node: Node, period: float) -> None:
        pass

    def next_phase(self, node: Node, view: Sequence[ViewEntry], period: float) -> float:
        raise NotImplementedError

    def payload(self, node: Node, emit_time: float, period: float) -> Payload:
        return node.table.build_payload(emit_time, period, node.policy)

    def entry_count(self, node: Node, payload: Payload) -> int:
        return len(payload) if payload else 0

    def on_receive(self, node: Node, sender: int, payload: Payload, rx_time: float, period: float) -> None:
        if node.table.on_receive(sender, payload, rx_time, period):
            node.receives += 1
