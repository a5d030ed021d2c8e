import math

import numpy as np
import pytest

from desyncsim import metrics as M
from desyncsim.radio import RunConfig, run
from desyncsim.topology import SlotBound, make_chain, make_clique, make_star, two_hop

T = 1000.0


def rmse_by_hand(phases, period):
    # literal gaps to the next phase around the circle
    s = sorted(phases)
    n = len(s)
    gaps = [(s[(k + 1) % n] - s[k]) % period or period for k in range(n)]
    err = [g - period / n for g in gaps]
    r = math.sqrt(sum(e * e for e in err) / n)
    return r, r / (period / n)


def test_rmse_examples():
    assert M.rmse([0, 250, 500, 750], T) == (0.0, 0.0)
    r, nr = M.rmse([0, 100, 500, 900], T)
    assert r == pytest.approx(150, abs=1e-9) and nr == pytest.approx(0.6, abs=1e-9)
    assert list(M.circular_gaps([0, 100, 500, 900], T)) == [100, 400, 400, 100]


def test_rmse_matches_hand_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        ph = rng.uniform(0, T, size=rng.integers(2, 12))
        assert M.rmse(ph, T) == pytest.approx(rmse_by_hand(list(ph), T), rel=1e-9, abs=1e-9)


def test_rmse_scale_invariant():
    ph = np.array([0, 100, 500, 900.0])
    assert M.rmse(ph * 2, 2 * T)[1] == pytest.approx(M.rmse(ph, T)[1])
    with pytest.raises(M.MetricError):
        M.rmse([1.0], T)


def test_converged_at():
    assert M.converged_at(np.full((30, 3), 100.0), T) == 0
    alt = np.array([[100.0], [110.0]] * 20)
    assert M.converged_at(alt, T, delta_stab=5) is None
    moving = np.concatenate([np.arange(0, 200, 20.0)[:, None], np.full((15, 1), 200.0)])
    assert M.converged_at(moving, T) == 10  # final phase first reached at period 10
    # wrap-around displacement counts the short way
    wrap = np.array([[999.5], [0.5]] * 10)
    assert M.converged_at(wrap, T) == 0
    with pytest.raises(M.MetricError):
        M.converged_at(np.zeros((0, 2)), T)


def test_mean_displacement():
    ph = np.array([[0.0], [10.0], [10.0], [12.0], [12.0]])
    assert M.mean_displacement(ph, T, 1) == pytest.approx(2 / 3)
    assert M.mean_displacement(ph, T) == pytest.approx(1.0)


def test_shrinkage():
    assert M.shrinkage(6, 10) == pytest.approx(40.0, abs=1e-9)
    assert M.shrinkage(4, 4) == 0.0
    with pytest.raises(M.MetricError):
        M.shrinkage(0, 3)


def test_clusters_and_slots_chain4():
    imap = two_hop(make_chain(4))
    ph = [0.0, T / 3, 2 * T / 3, 1.0]
    rep = M.slots_used(ph, imap, T, 3)
    assert rep.observed == 3 and rep.valid and rep.shrinkage_pct == 0
    # 0 and 2 interfere
    bad = M.slots_used([0.0, 500.0, 2.0, 700.0], imap, T, 3)
    assert not bad.valid
    rep = M.slots_used(ph, imap, T, SlotBound(3, False), converged=False)
    assert not rep.reliable and not rep.optimal_exact


def test_phase_clusters_wrap():
    cl = M.phase_clusters([995.0, 5.0, 500.0, 14.0], T, 20.0)
    assert sorted(cl) == [[0, 1, 3], [2]]
    assert M.phase_clusters([], T, 1.0) == []


def test_utilization_examples():
    imap = two_hop(make_clique(2))
    u = M.utilization([0.0, 500.0], imap, T)
    assert u.tolist() == [0.5, 0.5]
    f = M.fairness(np.array([[0.0, 500.0]]), imap, T)
    assert f.run_stddev == 0
    f = M.fairness(np.array([[0.0, 100.0]]), imap, T)
    assert f.utilization[0].tolist() == pytest.approx([0.1, 0.9])
    assert f.run_stddev == pytest.approx(0.4)


def test_fairness_uses_final_half():
    imap = two_hop(make_clique(2))
    ph = np.array([[0.0, 100.0]] * 2 + [[0.0, 500.0]] * 2)
    assert M.fairness(ph, imap, T).run_stddev == 0


def test_cliques_and_error():
    imap = two_hop(make_chain(4))
    assert M.interference_cliques(imap) == [[0, 1, 2], [1, 2, 3]]
    r, nr = M.clique_error([0, T / 3, 2 * T / 3, 0], M.interference_cliques(imap), T)
    assert r == pytest.approx(0, abs=1e-9)


def test_classify_static_perfect():
    imap = two_hop(make_clique(4))
    ph = np.tile([0.0, 250.0, 500.0, 750.0], (60, 1))
    assert M.classify(ph, imap, T) == M.Classification("Fast", "High", "Yes")


def test_classify_star6_protocols():
    imap = two_hop(make_star(6))
    c = M.classify(run(RunConfig(make_star(6), "mdwarf", seed=1)).phases, imap, T)
    assert c == M.Classification("Fast", "High", "Yes")
    c = M.classify(run(RunConfig(make_star(6), "lightweight", seed=1)).phases, imap, T)
    assert c.fairness == "No"


def test_thresholds_validation():
    with pytest.raises(ValueError):
        M.ClassificationThresholds(fast_periods=200)
    with pytest.raises(ValueError):
        M.ClassificationThresholds(high_stability_ms=10)
