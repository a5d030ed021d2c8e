"""LIGHTWEIGHT: claim a random slot that is free of one-hop claims; move only on conflict."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..frames import DEFAULT_BITRATE, airtime
from .core import Node, Payload, Protocol, ViewEntry, wrap_phase


@dataclass(frozen=True)
class LightweightConfig:
    guard_ms: float = 0.5

    def __post_init__(self):
        if self.guard_ms < 0:
            raise ValueError("lightweight.guard_ms must be non-negative")


def free_intervals(occupied: Sequence[tuple[float, float]], period: float, width: float) -> list[tuple[float, float]]:
    """Maximal ``[start, end)`` ranges where a slot of ``width`` can begin.

    A claim ``(start, length)`` forbids every slot start in
    ``[start - width, start + length)``, taken modulo the period.
    """
    blocked = []
    for start, length in occupied:
        lo = start - width
        span = length + width
        if span >= period:
            return []
        lo %= period
        hi = lo + span
        if hi <= period:
            blocked.append((lo, hi))
        else:
            blocked.append((lo, period))
            blocked.append((0.0, hi - period))
    blocked.sort()
    free = []
    cursor = 0.0
    for lo, hi in blocked:
        if lo > cursor:
            free.append((cursor, lo))
        cursor = max(cursor, hi)
    if cursor < period:
        free.append((cursor, period))
    return free


def pick_slot(occupied: Sequence[tuple[float, float]], rng, period: float, width: float) -> float:
    """Uniform slot start over the free region; uniform over the period if none is free."""
    if width <= 0:
        raise ValueError("slot width must be positive")
    free = free_intervals(occupied, period, width)
    total = sum(hi - lo for lo, hi in free)
    if total <= 0:
        return wrap_phase(rng.random() * period, period)
    u = rng.random() * total
    for lo, hi in free:
        if u < hi - lo:
            return lo + u
        u -= hi - lo
    return free[-1][1] - 1e-9 * period


def has_conflict(view: Sequence[ViewEntry], width: float) -> bool:
    return any(e.hops == 1 and abs(e.delta) < width for e in view)


class Lightweight(Protocol):
    name = "lightweight"
    entry_bytes = 2  # neighbor ids only, no relative phases

    def __init__(self, cfg: LightweightConfig | None = None, bitrate: float = DEFAULT_BITRATE):
        self.cfg = cfg or LightweightConfig()
        self.bitrate = bitrate

    def slot_width(self, node: Node) -> float:
        hop1 = sum(1 for r in node.table.records.values() if r.hops == 1)
        return airtime(hop1, self.bitrate, self.entry_bytes) + 2 * self.cfg.guard_ms

    def next_phase(self, node: Node, view: Sequence[ViewEntry], period: float) -> float:
        width = self.slot_width(node)
        if not has_conflict(view, width):
            return node.phase
        occupied = [(wrap_phase(node.phase + e.delta, period), width) for e in view if e.hops == 1]
        return pick_slot(occupied, node.rng, period, width)

    def payload(self, node: Node, emit_time: float, period: float) -> Payload:
        return None

    def entry_count(self, node: Node, payload: Payload) -> int:
        return sum(1 for r in node.table.records.values() if r.hops == 1)

    def on_receive(self, node: Node, sender: int, payload: Payload, rx_time: float, period: float) -> None:
        if node.table.on_receive(sender, None, rx_time, period):
            node.receives += 1
