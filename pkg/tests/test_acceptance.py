"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also repeated in the pytest terminal summary.
"""

import statistics
import time

import numpy as np

import test_properties as props
from conftest import adjacency_of, bfs_within, exhaustive_coloring, record_acceptance
from desyncsim import harness
from desyncsim import metrics as M
from desyncsim.radio import RunConfig, run
from desyncsim.topology import make_chain, make_cycle, make_dumbbell, make_star, min_slots, shipped_mesh, two_hop

SEEDS = range(30)


def check(num, title, ok, detail, elapsed, budget):
    ok_time = elapsed < budget
    status = "PASS" if ok and ok_time else "FAIL"
    line = f"criterion {num:>2} {status}: {title}: {detail} [{elapsed:.1f}s of {budget:g}s]"
    print(line)
    record_acceptance(line)
    assert ok, line
    assert ok_time, line


def test_01_metric_units():
    t0 = time.perf_counter()
    r0 = M.rmse([0, 250, 500, 750], 1000)
    r1 = M.rmse([0, 100, 500, 900], 1000)
    s = M.shrinkage(6, 10)
    ok = (
        abs(r0[0]) <= 1e-9 and abs(r0[1]) <= 1e-9
        and abs(r1[0] - 150) <= 1e-9 and abs(r1[1] - 0.6) <= 1e-9
        and abs(s - 40) <= 1e-9
    )
    check(1, "metric units", ok, f"rmse={r0}, {r1}; shrinkage={s}", time.perf_counter() - t0, 1)


def test_02_oracle_checkpoints():
    t0 = time.perf_counter()
    cases = [(make_dumbbell(6), 4), (make_dumbbell(20), 11), (make_cycle(10), 4), (shipped_mesh(), 6)]
    cases += [(make_star(n), n) for n in (2, 3, 5, 6, 10, 20)]
    bad = []
    for topo, want in cases:
        got = min_slots(topo)
        if got != want:
            bad.append(f"{topo.name}={got}")
        if topo.node_count <= 12:
            adj = adjacency_of(topo)
            conflict = [bfs_within(adj, i) for i in range(topo.node_count)]
            if exhaustive_coloring(topo.node_count, conflict) != want:
                bad.append(f"{topo.name} exhaustive mismatch")
    detail = "all match" if not bad else ", ".join(bad)
    check(2, "min-slot oracle", not bad, detail, time.perf_counter() - t0, 60)


def test_03_hidden_terminal():
    t0 = time.perf_counter()
    failures = []
    for seed in SEEDS:
        tr = run(RunConfig(make_chain(3), "mdwarf", period_ms=1000, periods=300, seed=seed))
        conv = M.converged_at(tr.phases, 1000)
        if conv is None:
            failures.append(f"seed {seed} never converged")
            continue
        sep = M.circular_distance(tr.phases[conv:, 0], tr.phases[conv:, 2], 1000).min()
        if sep <= tr.max_airtime:
            failures.append(f"seed {seed} separation {sep:.3f}")
        if tr.collisions[-100:, 1].sum():
            failures.append(f"seed {seed} middle collisions")
    detail = "30/30 seeds separated, no middle-node collisions" if not failures else "; ".join(failures[:5])
    check(3, "hidden terminal (chain3)", not failures, detail, time.perf_counter() - t0, 30)


def test_04_force_absorption():
    t0 = time.perf_counter()
    imap = two_hop(make_chain(4))
    hits, invalid = [], []
    eps_abs = 0.01 * 1000
    for seed in SEEDS:
        tr = run(RunConfig(make_chain(4), "mdwarf", period_ms=1000, periods=300, seed=seed))
        conv = M.converged_at(tr.phases, 1000)
        start = conv if conv is not None else len(tr.phases) // 2
        for row in tr.phases[start:]:
            if not M.slots_used(row, imap, 1000, 3).valid:
                invalid.append(seed)
                break
        final = M.slots_used(tr.phases[-1], imap, 1000, 3)
        if conv is not None and final.observed == 3 and M.circular_distance(tr.phases[-1, 0], tr.phases[-1, 3], 1000) <= eps_abs:
            hits.append(seed)
    ok = bool(hits) and not invalid
    detail = f"{len(hits)}/30 seeds reach 3 slots with 0,3 merged; invalid seeds {invalid or 'none'}"
    check(4, "force absorption (chain4)", ok, detail, time.perf_counter() - t0, 30)


def test_05_single_hop_ranking():
    t0 = time.perf_counter()
    spec = harness.preset("single-hop")
    rows = harness.collect_metrics(spec)
    mean = {}
    for r in rows:
        mean.setdefault((r["protocol"], r["nodes"]), []).append(r["nrmse"])
    mean = {k: float(np.mean(v)) for k, v in mean.items()}
    ok = True
    parts = []
    for n in (4, 8, 16, 32):
        m, e, l = mean[("mdwarf", n)], mean[("extdesync", n)], mean[("lightweight", n)]
        ok &= m < e and m < l and m < 0.15
        parts.append(f"n={n} M={m:.4f} E={e:.4f} L={l:.4f}")
    check(5, "single-hop NRMSE ranking", ok, "; ".join(parts), time.perf_counter() - t0, 600)


def test_06_stability_ranking():
    t0 = time.perf_counter()
    spec = harness.ExperimentSpec("stability", protocols=("mdwarf", "extdesync"), topologies=("star:20",))
    rows = harness.collect_metrics(spec)
    disp = {p: float(np.mean([r["displacement"] for r in rows if r["protocol"] == p])) for p in spec.protocols}
    ok = disp["mdwarf"] < disp["extdesync"]
    detail = f"mean displacement M={disp['mdwarf']:.3f} ms, E={disp['extdesync']:.3f} ms"
    check(6, "stability ranking (star20)", ok, detail, time.perf_counter() - t0, 300)


def test_07_period_sweep():
    t0 = time.perf_counter()
    spec = harness.ExperimentSpec("sweep", protocols=("mdwarf",), topologies=("star:30",), periods_ms=(1000.0, 3000.0))
    rows = harness.collect_metrics(spec)
    slow = [r["converged_at"] for r in rows if r["T"] == 3000.0]
    fast = [r for r in rows if r["T"] == 1000.0]
    med = statistics.median(c if c is not None else float("inf") for c in slow)
    ok = med <= 75 and len(fast) == 30
    detail = f"T=3000 median converged_at={med}; T=1000 completed {len(fast)} runs"
    check(7, "period sweep (star30)", ok, detail, time.perf_counter() - t0, 300)


def test_08_fairness():
    t0 = time.perf_counter()
    spec = harness.ExperimentSpec(
        "fair", protocols=("mdwarf", "extdesync"), topologies=("star:30", "star:40"), periods_ms=(2000.0, 3000.0),
    )
    rows = harness.collect_metrics(spec)
    ok = True
    parts = []
    for topo in spec.topologies:
        for T in spec.periods_ms:
            std = {
                p: float(np.mean([r["fairness_stddev"] for r in rows if r["protocol"] == p and r["topology"] == topo and r["T"] == T]))
                for p in spec.protocols
            }
            ok &= std["extdesync"] > std["mdwarf"]
            parts.append(f"{topo} T={T:g} M={std['mdwarf']:.5f} E={std['extdesync']:.5f}")
    check(8, "utilization fairness", ok, "; ".join(parts), time.perf_counter() - t0, 900)


def test_09_overhead():
    t0 = time.perf_counter()
    spec = harness.preset("overhead")
    rows = harness.collect_metrics(spec)
    ok = True
    parts = []
    medians = []
    for b in spec.betas:
        sel = [r for r in rows if r["beta"] == b]
        good = sum(1 for r in sel if r["converged_at"] is not None and r["valid"])
        med = statistics.median(r["converged_at"] if r["converged_at"] is not None else float("inf") for r in sel)
        medians.append(med)
        if b <= 12:
            ok &= good >= 0.8 * len(sel)
        parts.append(f"b={b} ok={good}/30 med={med}")
    ok &= all(a <= b for a, b in zip(medians, medians[1:]))
    check(9, "overhead (star10, beta sweep)", ok, "; ".join(parts), time.perf_counter() - t0, 600)


def test_10_determinism(tmp_path):
    t0 = time.perf_counter()
    spec = harness.ExperimentSpec("det", protocols=("mdwarf", "extdesync", "lightweight"), topologies=("dumbbell:6",),
                                  periods=100, seeds=2, base_seed=12345)
    a = harness.run_experiment(spec, tmp_path / "a")
    b = harness.run_experiment(spec, tmp_path / "b")
    same = a.phases_csv.read_bytes() == b.phases_csv.read_bytes()
    check(10, "determinism", same, "phases.csv byte-identical" if same else "phases.csv differs",
          time.perf_counter() - t0, 10)


SUITES = [
    ("force antisymmetry", [props.test_force_antisymmetry, props.test_mirrored_view_reverses_total_force]),
    ("equally spaced fixed points", [props.test_equally_spaced_is_fixed_point]),
    ("absorption monotonicity", [props.test_absorption_monotone]),
    ("two-hop symmetry", [props.test_two_hop_symmetric_and_matches_bfs]),
    ("NRMSE scale invariance", [props.test_nrmse_scale_invariant]),
    ("LIGHTWEIGHT quiescence", [props.test_lightweight_quiescent_when_gaps_exceed_width]),
]


def test_11_invariant_suites():
    t0 = time.perf_counter()
    failed = []
    for name, fns in SUITES:
        for fn in fns:
            assert fn.hypothesis.inner_test and fn._hypothesis_internal_use_settings.max_examples >= 1000
            try:
                fn()
            except Exception as exc:  # noqa: BLE001
                failed.append(f"{name}: {type(exc).__name__}")
    detail = f"{len(SUITES)} suites x >=1000 cases" if not failed else "; ".join(failed)
    check(11, "invariant suites", not failed, detail, time.perf_counter() - t0, 60)
