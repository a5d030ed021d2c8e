"""Desynchronization error, convergence, slot, fairness and classification metrics.

All functions take plain phase arrays (ms) so they work equally on live
traces and on phases reloaded from CSV.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import networkx as nx
import numpy as np

from .topology import SlotBound


class MetricError(ValueError):
    pass


def circular_gaps(phases: Sequence[float], period: float) -> np.ndarray:
    """Forward gaps between consecutive phases around the circle (sorted order)."""
    s = np.sort(np.asarray(phases, dtype=float))
    return np.diff(np.append(s, s[0] + period))


def rmse(phases: Sequence[float], period: float) -> tuple[float, float]:
    """(RMSE, NRMSE) of the gap to each node's next phase neighbor vs. period/n."""
    n = len(phases)
    if n < 2:
        raise MetricError("desynchronization error needs at least two nodes")
    ideal = period / n
    err = circular_gaps(phases, period) - ideal
    r = float(np.sqrt(np.mean(err**2)))
    return r, r / ideal


def circular_distance(a, b, period: float):
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % period
    return np.minimum(d, period - d)


def displacements(phases: np.ndarray, period: float) -> np.ndarray:
    """Per-period circular phase movement, shape (periods - 1, nodes)."""
    phases = np.asarray(phases, dtype=float)
    if len(phases) < 2:
        return np.zeros((0, phases.shape[1] if phases.ndim == 2 else 0))
    return circular_distance(phases[1:], phases[:-1], period)


def converged_at(phases: np.ndarray, period: float, delta_stab: float | None = None, window: int = 10) -> Optional[int]:
    """First period p from which every node moves less than ``delta_stab``
    per period for ``window`` consecutive periods; ``None`` if never.

    ``delta_stab`` defaults to 0.5% of the period.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.size == 0:
        raise MetricError("empty trace")
    if delta_stab is None:
        delta_stab = 0.005 * period
    steps = displacements(phases, period)
    if len(steps) == 0:
        return 0
    still = steps.max(axis=1) < delta_stab
    w = min(window, len(still))
    run = 0
    for p, ok in enumerate(still):
        run = run + 1 if ok else 0
        if run >= w:
            return p - w + 1
    return None


def mean_displacement(phases: np.ndarray, period: float, start: int | None = None) -> float:
    """Mean per-node, per-period movement from ``start`` on.

    Without a start (non-converged run) the final half of the trace is used.
    """
    steps = displacements(phases, period)
    if len(steps) == 0:
        return 0.0
    if start is None:
        start = len(steps) // 2
    tail = steps[min(start, len(steps) - 1):]
    return float(tail.mean())


# -- slots -------------------------------------------------------------------


def phase_clusters(phases: Sequence[float], period: float, radius: float) -> list[list[int]]:
    """Single-link clusters of nodes whose phases chain within ``radius`` on the circle."""
    phases = np.asarray(phases, dtype=float)
    n = len(phases)
    if n == 0:
        return []
    order = [int(i) for i in np.argsort(phases, kind="stable")]
    gaps = circular_gaps(phases, period)  # gaps[k]: order[k] -> order[k+1]
    breaks = [k for k in range(n) if gaps[k] > radius]
    if not breaks:
        return [sorted(order)]
    clusters = []
    # start right after a break so no cluster straddles the list end
    start = (breaks[0] + 1) % n
    cur: list[int] = []
    for step in range(n):
        k = (start + step) % n
        cur.append(order[k])
        if gaps[k] > radius:
            clusters.append(sorted(cur))
            cur = []
    if cur:
        clusters.append(sorted(cur))
    return clusters


@dataclass(frozen=True)
class SlotReport:
    observed: int
    optimal: int
    shrinkage_pct: float
    valid: bool
    reliable: bool = True
    optimal_exact: bool = True


def shrinkage(s_opt: int, s_obs: int) -> float:
    """Percent reduction in per-node slot size when ``s_obs`` slots replace ``s_opt``."""
    if s_obs <= 0 or s_opt <= 0:
        raise MetricError("slot counts must be positive")
    return (s_obs - s_opt) / s_obs * 100.0


def slots_used(
    phases: Sequence[float],
    interference: Sequence[frozenset],
    period: float,
    optimum: int | SlotBound,
    radius: float | None = None,
    converged: bool = True,
) -> SlotReport:
    if radius is None:
        radius = 0.02 * period
    clusters = phase_clusters(phases, period, radius)
    valid = all(
        b not in interference[a] for c in clusters for i, a in enumerate(c) for b in c[i + 1:]
    )
    if isinstance(optimum, SlotBound):
        opt, exact = optimum.slots, optimum.exact
    else:
        opt, exact = int(optimum), True
    return SlotReport(
        observed=len(clusters),
        optimal=opt,
        shrinkage_pct=shrinkage(opt, len(clusters)),
        valid=valid,
        reliable=converged,
        optimal_exact=exact,
    )


# -- fairness ----------------------------------------------------------------


def utilization(phases: Sequence[float], interference: Sequence[frozenset], period: float) -> np.ndarray:
    """Each node's share of the period: gap to the next interfering firing, over T."""
    phases = np.asarray(phases, dtype=float)
    out = np.ones(len(phases))
    for i, others in enumerate(interference):
        if not others:
            continue
        idx = np.fromiter(others, dtype=int)
        fwd = (phases[idx] - phases[i]) % period
        out[i] = fwd.min() / period
    return out


@dataclass(frozen=True)
class FairnessReport:
    utilization: np.ndarray  # (periods, nodes)
    stddev: np.ndarray  # per period
    run_stddev: float  # mean over the final half


def fairness(phases: np.ndarray, interference: Sequence[frozenset], period: float, tail: float = 0.5) -> FairnessReport:
    phases = np.atleast_2d(np.asarray(phases, dtype=float))
    util = np.array([utilization(row, interference, period) for row in phases])
    std = util.std(axis=1)
    start = min(int(len(std) * (1.0 - tail)), len(std) - 1)
    return FairnessReport(util, std, float(std[start:].mean()))


# -- multi-hop error ---------------------------------------------------------


def interference_cliques(interference: Sequence[frozenset]) -> list[list[int]]:
    """Maximal cliques (size >= 2) of the two-hop interference graph."""
    g = nx.Graph()
    g.add_nodes_from(range(len(interference)))
    g.add_edges_from((a, b) for a, s in enumerate(interference) for b in s if a < b)
    return sorted(sorted(c) for c in nx.find_cliques(g) if len(c) >= 2)


def clique_error(phases: Sequence[float], cliques: Sequence[Sequence[int]], period: float) -> tuple[float, float]:
    """Mean (RMSE, NRMSE) over interference cliques."""
    if not cliques:
        raise MetricError("no interfering pairs")
    phases = np.asarray(phases, dtype=float)
    vals = np.array([rmse(phases[list(c)], period) for c in cliques])
    return float(vals[:, 0].mean()), float(vals[:, 1].mean())


# -- classification ----------------------------------------------------------


@dataclass(frozen=True)
class ClassificationThresholds:
    fast_periods: int = 50
    medium_periods: int = 150
    high_stability_ms: float = 1.0
    medium_stability_ms: float = 5.0
    fair_nrmse: float = 0.25

    def __post_init__(self):
        if not 0 <= self.fast_periods < self.medium_periods:
            raise ValueError("convergence boundaries must be increasing")
        if not 0 < self.high_stability_ms < self.medium_stability_ms:
            raise ValueError("stability boundaries must be increasing")
        if self.fair_nrmse <= 0:
            raise ValueError("fairness boundary must be positive")


@dataclass(frozen=True)
class Classification:
    convergence: str
    stability: str
    fairness: str


def classify(
    phases: np.ndarray,
    interference: Sequence[frozenset],
    period: float,
    thresholds: ClassificationThresholds | None = None,
    delta_stab: float | None = None,
    window: int = 10,
) -> Classification:
    th = thresholds or ClassificationThresholds()
    phases = np.asarray(phases, dtype=float)
    conv = converged_at(phases, period, delta_stab, window)
    if conv is None:
        convergence, stability = "Slow", "Low"
    else:
        convergence = "Fast" if conv <= th.fast_periods else ("Medium" if conv <= th.medium_periods else "Slow")
        disp = mean_displacement(phases, period, conv)
        stability = "High" if disp < th.high_stability_ms else ("Medium" if disp < th.medium_stability_ms else "Low")
    cliques = interference_cliques(interference)
    start = len(phases) // 2
    nrmse = np.mean([clique_error(row, cliques, period)[1] for row in phases[start:]]) if cliques else 0.0
    return Classification(convergence, stability, "Yes" if nrmse < th.fair_nrmse else "No")
