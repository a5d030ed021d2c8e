"""EXT-DESYNC: jump toward the circular midpoint of the two phase neighbors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import Node, Protocol, ViewEntry, wrap_phase


@dataclass(frozen=True)
class ExtDesyncConfig:
    alpha: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("extdesync.alpha must lie in (0, 1]")


def phase_neighbors(view: Sequence[ViewEntry], period: float) -> tuple[ViewEntry, ViewEntry] | None:
    """(previous, next) phase neighbors, or None when nothing usable is known.

    Distances are measured around the circle; ties go to the lower node id.
    Entries exactly coincident with the observer are ignored.
    """
    nxt = prv = None
    nkey = pkey = None
    for e in view:
        fwd = e.delta % period
        if fwd <= 0.0 or fwd >= period:
            continue
        k = (fwd, e.id)
        if nkey is None or k < nkey:
            nkey, nxt = k, e
        k = (period - fwd, e.id)
        if pkey is None or k < pkey:
            pkey, prv = k, e
    if nxt is None:
        return None
    return prv, nxt


def update_phase(phase: float, view: Sequence[ViewEntry], period: float, cfg: ExtDesyncConfig) -> float:
    pair = phase_neighbors(view, period)
    if pair is None:
        return phase
    prv, nxt = pair
    d_next = nxt.delta % period
    d_prev = period - (prv.delta % period)
    return wrap_phase(phase + cfg.alpha * (d_next - d_prev) / 2.0, period)


class ExtDesync(Protocol):
    name = "extdesync"

    def __init__(self, cfg: ExtDesyncConfig | None = None):
        self.cfg = cfg or ExtDesyncConfig()

    def next_phase(self, node: Node, view: Sequence[ViewEntry], period: float) -> float:
        return update_phase(node.phase, view, period, self.cfg)
