"""M-DWARF: repulsive force field over the two-hop view, with force absorption."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import Node, Protocol, ViewEntry, wrap_phase


@dataclass(frozen=True)
class ForceConfig:
    c1: float = 38.597
    c2: float = 1.874
    eps_abs_frac: float = 0.01
    eps_min_frac: float = 0.001
    # subtracted from every force magnitude so the field is continuous where a
    # neighbor crosses the antipode; 0 gives the plain inverse-distance form
    antipode_offset: float = 2.0
    # c1/c2 were fitted with phases in ms at a 1000 ms period; the step is
    # rescaled by period / ref_period_ms so dynamics are period invariant
    ref_period_ms: float = 1000.0

    def __post_init__(self):
        for name in ("c1", "c2", "eps_abs_frac", "eps_min_frac", "ref_period_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"mdwarf.{name} must be positive")
        if not 0 <= self.antipode_offset <= 2:
            raise ValueError("mdwarf.antipode_offset must lie in [0, 2]")

    def gain(self, n: int) -> float:
        return self.c1 * n ** (-self.c2)


def force(delta: float, period: float, eps_min: float = 0.0, offset: float = 0.0) -> float:
    """Force exerted on the observer by a neighbor at signed offset ``delta``.

    A neighbor ahead (``delta >= 0``) pushes the observer backward and one
    behind pushes it forward. Magnitude is ``period / |delta| - offset`` with
    ``|delta|`` clamped below at ``eps_min``. With ``offset=2`` a neighbor at
    the antipode exerts nothing, so the sign flip there is not a jump.
    """
    mag = period / max(abs(delta), eps_min) - offset
    return -mag if delta >= 0 else mag


def absorb(view: Sequence[ViewEntry], eps_abs: float) -> list[ViewEntry]:
    """Entries that still exert a force after coincidence absorption.

    Each side (ahead / behind) is walked outward from the observer; an entry
    lying within ``eps_abs`` of the previous entry on its side is hidden
    behind it and contributes nothing.
    """
    ahead = sorted((e for e in view if e.delta >= 0), key=lambda e: (e.delta, e.id))
    behind = sorted((e for e in view if e.delta < 0), key=lambda e: (-e.delta, e.id))
    kept = []
    for side in (ahead, behind):
        prev = None
        for e in side:
            if prev is None or abs(e.delta) - abs(prev) > eps_abs:
                kept.append(e)
            prev = e.delta
    return kept


def total_force(view: Sequence[ViewEntry], period: float, cfg: ForceConfig) -> float:
    eps_min = cfg.eps_min_frac * period
    return math.fsum(
        force(e.delta, period, eps_min, cfg.antipode_offset) for e in absorb(view, cfg.eps_abs_frac * period)
    )


def update_phase(phase: float, view: Sequence[ViewEntry], period: float, cfg: ForceConfig) -> float:
    if not view:
        return phase
    k = cfg.gain(len(view) + 1)
    step = k * total_force(view, period, cfg) * (period / cfg.ref_period_ms)
    return wrap_phase(phase + step, period)


class MDwarf(Protocol):
    name = "mdwarf"

    def __init__(self, cfg: ForceConfig | None = None):
        self.cfg = cfg or ForceConfig()

    def next_phase(self, node: Node, view: Sequence[ViewEntry], period: float) -> float:
        return update_phase(node.phase, view, period, self.cfg)
