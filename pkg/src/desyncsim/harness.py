"""Batch experiments: specs, presets, run fan-out and the CSV results bundle."""

from __future__ import annotations

import csv
import io
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import metrics as M
from .frames import DEFAULT_BITRATE
from .protocols import PROTOCOLS, ProtocolSettings
from .radio import RunConfig, run
from .topology import SlotBound, Topology, TopologyError, from_spec, slot_bound, two_hop

SCHEMA_VERSION = 1
DEFAULT_WINDOW = 10

PHASE_COLUMNS = ("experiment", "protocol", "topology", "T", "beta", "seed", "period", "node", "phase_ms")
METRIC_COLUMNS = (
    "experiment", "protocol", "topology", "T", "beta", "seed",
    "rmse", "nrmse", "converged_at", "slots", "optimal_slots", "valid", "shrinkage_pct",
    "fairness_stddev", "displacement",
)
SUMMARY_COLUMNS = (
    "experiment", "protocol", "topology", "T", "beta", "nodes", "seeds",
    "rmse", "nrmse", "nrmse_std", "converged_frac", "converged_at", "slots", "optimal_slots",
    "valid_frac", "shrinkage_pct", "fairness_stddev", "displacement",
)


class HarnessError(Exception):
    """Bad experiment configuration (exit code 1)."""


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    protocols: tuple[str, ...] = ("mdwarf",)
    topologies: tuple[str, ...] = ("star:6",)
    periods_ms: tuple[float, ...] = (1000.0,)
    periods: int = 300
    seeds: int = 30
    base_seed: int = 0
    betas: tuple[int, ...] = (0,)
    bitrate: float = DEFAULT_BITRATE
    backoff_ms: float = 1.0
    csma: bool = True
    cca_ms: float = 0.192
    quantum_ms: float = 1.0
    settings: ProtocolSettings = field(default_factory=ProtocolSettings)
    output_dir: Optional[str] = None

    def __post_init__(self):
        if not self.name or any(c in self.name for c in "/\\,"):
            raise HarnessError(f"bad experiment name {self.name!r}")
        if self.seeds < 1:
            raise HarnessError("seed count must be at least 1")
        if self.periods < 1:
            raise HarnessError("periods must be positive")
        for p in self.protocols:
            if p not in PROTOCOLS:
                raise HarnessError(f"unknown protocol {p!r}")
        if not (self.protocols and self.topologies and self.periods_ms and self.betas):
            raise HarnessError("protocols, topologies, periods_ms and betas must be non-empty")
        if any(t <= 0 for t in self.periods_ms):
            raise HarnessError("T must be positive")
        if any(b < 0 for b in self.betas):
            raise HarnessError("beta must be non-negative")
        if not 0 <= self.base_seed or self.base_seed + self.seeds > 2**64:
            raise HarnessError("seeds must fit in 64 bits")
        for t in self.topologies:
            try:
                _topology(t)
            except TopologyError as exc:
                raise HarnessError(str(exc)) from exc

    def seed_list(self) -> list[int]:
        return [self.base_seed + k for k in range(self.seeds)]

    def jobs(self) -> list["Job"]:
        return [
            Job(self.name, proto, topo, float(T), beta, seed)
            for proto in self.protocols
            for topo in self.topologies
            for T in self.periods_ms
            for beta in self.betas
            for seed in self.seed_list()
        ]

    def run_config(self, job: "Job") -> RunConfig:
        return RunConfig(
            topology=_topology(job.topology),
            protocol=job.protocol,
            period_ms=job.T,
            periods=self.periods,
            seed=job.seed,
            beta=job.beta,
            bitrate=self.bitrate,
            backoff_ms=self.backoff_ms,
            csma=self.csma,
            cca_ms=self.cca_ms,
            quantum_ms=self.quantum_ms,
            settings=self.settings,
        )


@dataclass(frozen=True, order=True)
class Job:
    experiment: str
    protocol: str
    topology: str
    T: float
    beta: int
    seed: int


@lru_cache(maxsize=64)
def _topology(spec: str) -> Topology:
    return from_spec(spec)


@lru_cache(maxsize=64)
def _interference(spec: str):
    return two_hop(_topology(spec))


@lru_cache(maxsize=64)
def _optimum(spec: str) -> SlotBound:
    return slot_bound(_topology(spec))


# -- presets -----------------------------------------------------------------

MULTI_HOP_TOPOLOGIES = (
    "star:6", "star:20", "chain:3", "chain:10", "cycle:4", "cycle:10", "dumbbell:6", "dumbbell:20", "mesh10",
)

PRESETS = {
    "single-hop": dict(
        protocols=PROTOCOLS, topologies=tuple(f"clique:{n}" for n in (4, 8, 16, 32)),
    ),
    "multi-hop": dict(protocols=PROTOCOLS, topologies=MULTI_HOP_TOPOLOGIES),
    "period-sweep": dict(
        protocols=("mdwarf", "extdesync"), topologies=("star:30",), periods_ms=(1000.0, 2000.0, 3000.0),
    ),
    "fairness": dict(
        protocols=("mdwarf", "extdesync"),
        topologies=tuple(f"star:{n}" for n in (30, 40, 50, 60)),
        periods_ms=(1000.0, 1500.0, 2000.0, 2500.0, 3000.0),
    ),
    "overhead": dict(protocols=("mdwarf",), topologies=("star:10",), betas=(0, 4, 8, 12, 16, 20)),
}


def preset(name: str, **overrides) -> ExperimentSpec:
    if name not in PRESETS:
        raise HarnessError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    kw = dict(name=name, periods=300, seeds=30)
    kw.update(PRESETS[name])
    kw.update(overrides)
    return ExperimentSpec(**kw)


# -- per-run metrics ---------------------------------------------------------


def convergence_window(beta: int, window: int = DEFAULT_WINDOW) -> int:
    """Stillness window long enough to span one full relay cycle.

    With sparse payloads a node can sit still for up to beta periods on a
    stale view, which a shorter window would mistake for convergence.
    """
    return max(window, beta + 1)


def run_metrics(job: Job, phases: np.ndarray) -> dict:
    topo = _topology(job.topology)
    imap = _interference(job.topology)
    T = job.T
    final = phases[-1]
    conv = M.converged_at(phases, T, window=convergence_window(job.beta))
    cliques = M.interference_cliques(imap)
    if cliques:
        r, nr = M.clique_error(final, cliques, T)
    else:
        r = nr = float("nan")
    slots = M.slots_used(final, imap, T, _optimum(job.topology), converged=conv is not None)
    fair = M.fairness(phases, imap, T)
    return dict(
        experiment=job.experiment, protocol=job.protocol, topology=job.topology, T=T, beta=job.beta,
        seed=job.seed, rmse=r, nrmse=nr, converged_at=conv, slots=slots.observed,
        optimal_slots=slots.optimal, valid=slots.valid, shrinkage_pct=slots.shrinkage_pct,
        fairness_stddev=fair.run_stddev, displacement=M.mean_displacement(phases, T, conv),
        nodes=topo.node_count,
    )


def _execute(args: tuple[ExperimentSpec, Job]) -> tuple[Job, np.ndarray]:
    spec, job = args
    return job, run(spec.run_config(job)).phases


def collect_metrics(spec: ExperimentSpec) -> list[dict]:
    """Per-run metric rows without writing any files."""
    return [run_metrics(*_execute((spec, job))) for job in sorted(spec.jobs())]


# -- CSV ---------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _header(kind: str) -> str:
    return f"# desyncsim {kind} schema v{SCHEMA_VERSION}\n"


def _write_csv(path: Path, kind: str, columns: Iterable[str], rows: Iterable[dict]) -> None:
    buf = io.StringIO()
    buf.write(_header(kind))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _open_csv(path: Path, kind: str):
    f = open(path, newline="", encoding="utf-8")
    first = f.readline()
    if first != _header(kind):
        f.close()
        raise HarnessError(f"{path}: not a v{SCHEMA_VERSION} {kind} file")
    return f


def _phase_rows(job: Job, phases: np.ndarray):
    base = [job.experiment, job.protocol, job.topology, repr(job.T), str(job.beta), str(job.seed)]
    for p, row in enumerate(phases):
        for i, v in enumerate(row):
            yield base + [str(p), str(i), repr(float(v))]


def summarize(rows: list[dict]) -> list[dict]:
    """Means over seeds per (experiment, protocol, topology, T, beta)."""
    groups: dict[tuple, list[dict]] = defaultdict(list)
    for r in rows:
        groups[(r["experiment"], r["protocol"], r["topology"], float(r["T"]), int(r["beta"]))].append(r)
    out = []
    for key in sorted(groups):
        g = groups[key]
        conv = [r["converged_at"] for r in g if r["converged_at"] is not None]
        nrmse = np.array([r["nrmse"] for r in g], dtype=float)
        out.append(dict(
            experiment=key[0], protocol=key[1], topology=key[2], T=key[3], beta=key[4],
            nodes=g[0].get("nodes", _topology(key[2]).node_count), seeds=len(g),
            rmse=float(np.mean([r["rmse"] for r in g])),
            nrmse=float(nrmse.mean()),
            nrmse_std=float(nrmse.std()),
            converged_frac=len(conv) / len(g),
            converged_at=float(np.mean(conv)) if conv else None,
            slots=float(np.mean([r["slots"] for r in g])),
            optimal_slots=g[0]["optimal_slots"],
            valid_frac=float(np.mean([bool(r["valid"]) for r in g])),
            shrinkage_pct=float(np.mean([r["shrinkage_pct"] for r in g])),
            fairness_stddev=float(np.mean([r["fairness_stddev"] for r in g])),
            displacement=float(np.mean([r["displacement"] for r in g])),
        ))
    return out


@dataclass
class ResultsBundle:
    directory: Path
    metrics: list[dict]
    summary: list[dict]

    @property
    def phases_csv(self) -> Path:
        return self.directory / "phases.csv"

    @property
    def metrics_csv(self) -> Path:
        return self.directory / "metrics.csv"

    @property
    def summary_csv(self) -> Path:
        return self.directory / "summary.csv"


def output_root() -> Path:
    return Path(os.environ.get("DESYNC_OUTPUT_ROOT", "results"))


def _prepare_dir(directory: Path) -> Path:
    try:
        directory.mkdir(parents=True, exist_ok=True)
        probe = directory / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {directory} is not writable: {exc}") from exc
    return directory


def write_metrics(directory: Path, rows: list[dict]) -> ResultsBundle:
    rows = sorted(rows, key=lambda r: (r["experiment"], r["protocol"], r["topology"], r["T"], r["beta"], r["seed"]))
    summary = summarize(rows)
    _write_csv(directory / "metrics.csv", "metrics", METRIC_COLUMNS, rows)
    _write_csv(directory / "summary.csv", "summary", SUMMARY_COLUMNS, summary)
    return ResultsBundle(directory, rows, summary)


def run_experiment(spec: ExperimentSpec, directory: str | Path | None = None, workers: int = 1) -> ResultsBundle:
    """Run every (protocol, topology, T, beta, seed) combination and write the bundle.

    Runs are independent; with ``workers > 1`` they go to a process pool.
    Output is assembled in job order, so files do not depend on scheduling.
    """
    if directory is None:
        directory = spec.output_dir or output_root() / spec.name
    directory = _prepare_dir(Path(directory))
    jobs = spec.jobs()
    work = [(spec, j) for j in jobs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_execute, work, chunksize=max(1, len(work) // (4 * workers))))
    else:
        results = dict(map(_execute, work))

    rows = []
    with open(directory / "phases.csv", "w", newline="", encoding="utf-8") as f:
        f.write(_header("phases"))
        w = csv.writer(f, lineterminator="\n")
        w.writerow(PHASE_COLUMNS)
        for job in sorted(jobs):
            phases = results[job]
            w.writerows(_phase_rows(job, phases))
            rows.append(run_metrics(job, phases))
    return write_metrics(directory, rows)


def read_phases(path: str | Path) -> dict[Job, np.ndarray]:
    """Load phases.csv back into per-run (periods, nodes) arrays."""
    path = Path(path)
    cells: dict[Job, dict[tuple[int, int], float]] = defaultdict(dict)
    with _open_csv(path, "phases") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if tuple(header or ()) != PHASE_COLUMNS:
            raise HarnessError(f"{path}: unexpected columns {header}")
        for line, rec in enumerate(reader, start=3):
            if len(rec) != len(PHASE_COLUMNS):
                raise HarnessError(f"{path}:{line}: expected {len(PHASE_COLUMNS)} fields")
            try:
                job = Job(rec[0], rec[1], rec[2], float(rec[3]), int(rec[4]), int(rec[5]))
                cells[job][(int(rec[6]), int(rec[7]))] = float(rec[8])
            except ValueError as exc:
                raise HarnessError(f"{path}:{line}: {exc}") from exc
    out = {}
    for job, d in cells.items():
        periods = 1 + max(p for p, _ in d)
        nodes = 1 + max(i for _, i in d)
        if len(d) != periods * nodes:
            raise HarnessError(f"{path}: run {job} is missing phase rows")
        arr = np.empty((periods, nodes))
        for (p, i), v in d.items():
            arr[p, i] = v
        out[job] = arr
    return dict(sorted(out.items()))


def report(directory: str | Path) -> ResultsBundle:
    """Recompute metrics.csv and summary.csv from an existing phases.csv."""
    directory = Path(directory)
    runs = read_phases(directory / "phases.csv")
    try:
        rows = [run_metrics(job, ph) for job, ph in runs.items()]
    except TopologyError as exc:
        raise HarnessError(str(exc)) from exc
    return write_metrics(directory, rows)

