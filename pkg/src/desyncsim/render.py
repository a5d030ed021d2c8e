"""Charts for a results bundle: relative-phase scatter per run, error vs. size per experiment.

Rendering is best effort. Any failure is logged as a warning and the CSVs
stay the authoritative output.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from pathlib import Path

import numpy as np

from .harness import Job, ResultsBundle, read_phases

log = logging.getLogger(__name__)


def _safe(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in text)


def relative_phases(phases: np.ndarray, period: float, ref: int = 0) -> np.ndarray:
    """Phases measured from the reference node's phase, in [0, period)."""
    phases = np.asarray(phases, dtype=float)
    return (phases - phases[:, [ref]]) % period


def _phase_chart(plt, job: Job, phases: np.ndarray, path: Path) -> None:
    rel = relative_phases(phases, job.T)
    fig, ax = plt.subplots(figsize=(6, 4))
    periods = np.arange(len(rel))
    for i in range(rel.shape[1]):
        ax.scatter(periods, rel[:, i], s=2, label=str(i) if rel.shape[1] <= 12 else None)
    ax.set_xlabel("period")
    ax.set_ylabel("phase relative to node 0 (ms)")
    ax.set_ylim(0, job.T)
    ax.set_title(f"{job.protocol} {job.topology} T={job.T:g} beta={job.beta} seed={job.seed}", fontsize=9)
    if rel.shape[1] <= 12:
        ax.legend(fontsize=6, markerscale=3, ncol=2, loc="upper right")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _error_chart(plt, name: str, summary: list[dict], path: Path) -> None:
    by_proto: dict[str, list[tuple[int, float, float]]] = defaultdict(list)
    for row in summary:
        by_proto[row["protocol"]].append((int(row["nodes"]), float(row["nrmse"]), float(row["nrmse_std"])))
    sizes = sorted({s for rows in by_proto.values() for s, _, _ in rows})
    protos = sorted(by_proto)
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / max(len(protos), 1)
    x = np.arange(len(sizes))
    for k, proto in enumerate(protos):
        # several T/beta rows may share a size; average them
        vals = defaultdict(list)
        errs = defaultdict(list)
        for s, v, e in by_proto[proto]:
            vals[s].append(v)
            errs[s].append(e)
        ys = [np.mean(vals[s]) if s in vals else np.nan for s in sizes]
        es = [np.mean(errs[s]) if s in errs else 0.0 for s in sizes]
        ax.bar(x + k * width, ys, width, yerr=es, label=proto, capsize=2)
    ax.set_xticks(x + width * (len(protos) - 1) / 2)
    ax.set_xticklabels([str(s) for s in sizes])
    ax.set_xlabel("nodes")
    ax.set_ylabel("NRMSE")
    ax.set_title(name)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render(bundle: ResultsBundle, fmt: str = "png", max_runs: int | None = None) -> list[Path]:
    """Write charts under ``<bundle>/charts``; returns the files written."""
    if not bundle.summary:
        log.warning("empty results bundle; no charts written")
        return []
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except Exception as exc:  # noqa: BLE001
        log.warning("matplotlib unavailable (%s); CSV output only", exc)
        return []

    out_dir = bundle.directory / "charts"
    written: list[Path] = []
    try:
        out_dir.mkdir(exist_ok=True)
        runs = read_phases(bundle.phases_csv)
        for k, (job, phases) in enumerate(runs.items()):
            if max_runs is not None and k >= max_runs:
                break
            name = _safe(f"phase_{job.experiment}_{job.protocol}_{job.topology}_T{job.T:g}_b{job.beta}_s{job.seed}")
            path = out_dir / f"{name}.{fmt}"
            _phase_chart(plt, job, phases, path)
            written.append(path)
        by_exp: dict[str, list[dict]] = defaultdict(list)
        for row in bundle.summary:
            by_exp[row["experiment"]].append(row)
        for name, rows in sorted(by_exp.items()):
            path = out_dir / f"{_safe('error_' + name)}.{fmt}"
            _error_chart(plt, name, rows, path)
            written.append(path)
    except Exception as exc:  # noqa: BLE001
        log.warning("chart rendering failed (%s); CSV output only", exc)
    return written
