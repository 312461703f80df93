"""Coupled ensembles, restart identities, and pathwise comparisons."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wallsim.clockwork import SeedSpec
from wallsim.couplings import (
    VIOLATION_CSV_HEADER,
    ComparisonSpec,
    CouplingMode,
    RestartSpec,
    Violation,
    check_concatenation,
    check_gap_and_increment_order,
    check_increment_comparison,
    check_index_intersection_order,
    check_min_formula,
    check_order_preservation,
    check_step_shift,
    increment_lemma_conclusion,
    increment_lemma_hypotheses,
    increments_dominate,
    restart_step,
    round_half_away,
    run_ensemble,
    scan_increment_lemma,
    sized_stationary,
    violation_csv_row,
)
from wallsim.dynamics import Explicit, Step, StreamSource, evolve, step_window


def test_round_half_away():
    assert round_half_away(2.5) == 3
    assert round_half_away(-2.5) == -3
    assert round_half_away(2.4) == 2
    assert round_half_away(-0.5) == -1
    assert round_half_away(0.0) == 0


def test_coupling_mode_constructors():
    assert CouplingMode.basic().stream_mode == "site"
    assert CouplingMode.clock().stream_mode == "label"
    assert CouplingMode.clock(3).shift == 3
    with pytest.raises(ValueError):
        CouplingMode("basic", shift=1)


def test_violation_csv_row():
    v = Violation(3, "order", 1.5, (2, 3), 4, 5)
    row = violation_csv_row(v)
    assert len(row) == len(VIOLATION_CSV_HEADER)
    assert row[0] == "3"
    assert row[1] == "order"
    assert row[3] == "2;3"
    assert float(row[2]) == 1.5
    assert float(row[4]) == 4.0 and float(row[5]) == 5.0


# ---------------------------------------------------------------------------
# ensemble determinism


def test_basic_identical_members_identical_logs():
    s = SeedSpec(11, 0)
    win = (-16, 60)
    a, b = run_ensemble([(Step(), 0), (Step(), 0)], CouplingMode.basic(),
                        16.0, seed=s, n_labels=8, window=win)
    assert np.array_equal(a.jump_t, b.jump_t)
    assert np.array_equal(a.jump_rank, b.jump_rank)
    assert np.array_equal(a.xT, b.xT)


def test_basic_translated_members_decouple():
    # site keys are not translation invariant: a shifted copy reads other
    # clocks along its path and the jump records must eventually differ
    s = SeedSpec(11, 1)
    win = (-16, 60)
    a, b = run_ensemble([(Step(z=0), 0), (Step(z=5), 0)],
                        CouplingMode.basic(), 16.0, seed=s,
                        n_labels=8, window=win)
    diffs = sum(not np.array_equal(a.jump_times(n), b.jump_times(n))
                for n in range(1, 9))
    assert diffs >= 1


def test_clock_translated_members_identical_jumps():
    # label keys make the dynamics translation equivariant: identical
    # clocks and identical initial gaps give identical jump times
    src = StreamSource(SeedSpec(11, 2), "label")
    a = evolve(Step(z=0), src, 16.0, n_labels=8)
    b = evolve(Step(z=5), src, 16.0, n_labels=8)
    for n in range(1, 9):
        assert np.array_equal(a.jump_times(n), b.jump_times(n))
        assert b.position_at(n, 16.0) - a.position_at(n, 16.0) == 5


def test_run_ensemble_validation():
    with pytest.raises(ValueError):
        run_ensemble([(Step(), 0)], CouplingMode.basic(), 1.0,
                     seed=SeedSpec(1), window=(-4, 8))
    with pytest.raises(ValueError):
        run_ensemble([(Step(), 0), (Step(), 1)], CouplingMode.basic(), 1.0,
                     seed=SeedSpec(1), window=(-4, 8))
    with pytest.raises(ValueError):
        run_ensemble([(Step(), 0), (Step(), 0)], CouplingMode.basic(), 1.0,
                     seed=SeedSpec(1))
    with pytest.raises(ValueError):
        run_ensemble([(Step(), 0), (Step(), 2)], CouplingMode.clock(3), 1.0,
                     seed=SeedSpec(1), n_labels=4)


# ---------------------------------------------------------------------------
# increment counting


def test_increments_dominate_basic_cases():
    a = np.array([1.0, 2.0, 3.0])
    b = np.array([2.0, 3.0])
    ok, when = increments_dominate(a, b, 0.0, 4.0)
    assert ok and math.isnan(when)
    ok, when = increments_dominate(b, a, 0.0, 4.0)
    assert not ok and when == 1.0
    # a lone b-jump off a's support breaks domination at that instant
    ok, when = increments_dominate(a, np.array([2.5]), 0.0, 4.0)
    assert not ok and when == 2.5


@given(st.lists(st.floats(0.1, 9.9), max_size=12),
       st.lists(st.floats(0.1, 9.9), min_size=1, max_size=12))
@settings(max_examples=60, deadline=None)
def test_increments_dominate_superset(extra, base):
    """A time set dominates itself and any of its subsets."""
    b = np.sort(np.array(base))
    a = np.sort(np.concatenate((np.array(base), np.array(extra))))
    ok, _ = increments_dominate(a, b, 0.0, 10.0)
    assert ok
    ok, _ = increments_dominate(b, b, 0.0, 10.0)
    assert ok


@given(st.lists(st.integers(1, 99), min_size=1, max_size=12, unique=True))
@settings(max_examples=40, deadline=None)
def test_increments_dominate_disjoint_fails(base):
    """Any unmatched jump of the dominated process is a violation."""
    b = np.sort(np.array(base, dtype=float))
    a = b + 0.5
    ok, when = increments_dominate(a, b, 0.0, 100.0)
    assert not ok and when == b[0]


# ---------------------------------------------------------------------------
# restart identities


def _site_parent(seed: int, T: float = 30.0, n: int = 12):
    src = StreamSource(SeedSpec(seed), "site")
    return evolve(Step(), src, T, n_labels=n, window=step_window(0, n, T))


def _label_parent(seed: int, T: float = 30.0, n: int = 12):
    src = StreamSource(SeedSpec(seed), "label")
    return evolve(Step(), src, T, n_labels=n)


def test_restart_from_label_anchors_at_parent_position():
    parent = _label_parent(7)
    tau, m = 10.0, 4
    sub = restart_step(parent, RestartSpec.from_label(tau, m), n_labels=6)
    assert int(sub.labels[0]) == m
    assert int(sub.x0[0]) == parent.position_at(m, tau)
    # the restarted path can never run ahead of the parent's
    for n in range(m, m + 6):
        assert sub.position_at(n, 30.0) >= parent.position_at(n, 30.0)


def test_restart_validation():
    parent = _label_parent(8)
    with pytest.raises(ValueError):
        restart_step(parent, RestartSpec.from_position(5.0, 0))
    with pytest.raises(ValueError):
        restart_step(parent, RestartSpec.from_label(40.0, 3))
    site = _site_parent(8)
    with pytest.raises(ValueError):
        restart_step(site, RestartSpec.from_label(5.0, 3))


@pytest.mark.parametrize("mode", ["site", "label"])
@pytest.mark.parametrize("tau_frac", [0.25, 0.5])
def test_min_formula_exact(mode, tau_frac):
    for seed in range(4):
        parent = _site_parent(100 + seed) if mode == "site" \
            else _label_parent(100 + seed)
        assert check_min_formula(parent, tau_frac * 30.0, 8)


@pytest.mark.parametrize("mode", ["site", "label"])
@pytest.mark.parametrize("tau_frac", [0.25, 0.5])
def test_concatenation_exact(mode, tau_frac):
    for seed in range(4):
        parent = _site_parent(200 + seed) if mode == "site" \
            else _label_parent(200 + seed)
        assert check_concatenation(parent, tau_frac * 30.0, 8)


# ---------------------------------------------------------------------------
# order, gap, and shift comparisons under clock coupling


def _clock_pair(ic_a, ic_b, seed: int, T: float = 20.0, n: int = 10):
    src = StreamSource(SeedSpec(seed), "label")
    return (evolve(ic_a, src, T, n_labels=n),
            evolve(ic_b, src, T, n_labels=n))


def _spread_explicit(rng, n: int, extra_lo: int = 0, extra_hi: int = 3,
                     z: int = 0):
    gaps = rng.integers(1 + extra_lo, 2 + extra_hi, size=n - 1)
    pos = z - np.concatenate(([0], np.cumsum(gaps)))
    return Explicit(particles=tuple((i + 1, int(p)) for i, p in enumerate(pos)))


def test_order_preservation_randomized():
    for trial in range(40):
        rng = np.random.default_rng((1234, trial))
        b_ic = _spread_explicit(rng, 10, 0, 3, z=int(rng.integers(0, 4)))
        # a sits weakly left of b label by label
        shift = int(rng.integers(0, 3))
        a_ic = Explicit(particles=tuple((l, p - shift)
                                        for l, p in b_ic.particles))
        a, b = _clock_pair(a_ic, b_ic, 300 + trial)
        assert check_order_preservation(a, b, trial) == []


def test_gap_and_increment_domination_randomized():
    for trial in range(40):
        rng = np.random.default_rng((5678, trial))
        b_ic = _spread_explicit(rng, 10, 0, 2)
        b_gaps = -np.diff([p for _, p in b_ic.particles])
        a_gaps = b_gaps + rng.integers(0, 3, size=len(b_gaps))
        pos = -np.concatenate(([0], np.cumsum(a_gaps)))
        a_ic = Explicit(particles=tuple((i + 1, int(p))
                                        for i, p in enumerate(pos)))
        a, b = _clock_pair(a_ic, b_ic, 400 + trial)
        assert check_gap_and_increment_order(a, b, trial) == []


def test_step_shift_randomized():
    for trial in range(40):
        rng = np.random.default_rng((91011, trial))
        m = int(rng.integers(2, 5))
        mt = int(rng.integers(1, m + 1))
        src = StreamSource(SeedSpec(500 + trial), "label")
        a = evolve(Step(z=0, m=m), src, 20.0, n_labels=12)
        b = evolve(Step(z=0, m=mt), src, 20.0, n_labels=12)
        assert check_step_shift(a, b, trial) == []


def test_step_shift_rejects_misordered_pair():
    src = StreamSource(SeedSpec(5), "label")
    a = evolve(Step(z=0, m=1), src, 5.0, n_labels=4)
    b = evolve(Step(z=0, m=2), src, 5.0, n_labels=4)
    with pytest.raises(ValueError):
        check_step_shift(a, b)


def test_order_precondition_flagged_not_raised():
    src = StreamSource(SeedSpec(6), "label")
    a = evolve(Step(z=3), src, 5.0, n_labels=4)
    b = evolve(Step(z=0), src, 5.0, n_labels=4)
    rows = check_order_preservation(a, b)
    assert rows and all(r.check_name == "order_precondition" for r in rows)


def test_index_intersection_order():
    hits = checked = 0
    for trial in range(30):
        src = StreamSource(SeedSpec(700 + trial), "label")
        a = evolve(Step(z=0), src, 15.0, n_labels=10)
        b = evolve(_spread_explicit(np.random.default_rng(trial), 10, 0, 2),
                   src, 15.0, n_labels=10)
        out = check_index_intersection_order(a, b, 4, 7, 15.0)
        if out is not None:
            checked += 1
            hits += bool(out)
    assert checked > 0 and hits == checked


# ---------------------------------------------------------------------------
# the increment lemma: theorem under clock streams, falsifiable under site


def test_increment_lemma_site_streams_violated():
    found = scan_increment_lemma(SeedSpec(42), "basic", runs=200)
    assert found, "expected a pathwise violation under site streams"


def test_increment_lemma_clock_streams_clean():
    found = scan_increment_lemma(SeedSpec(42), "clock", runs=40,
                                 stop_at_first=False)
    assert found == []


def test_increment_lemma_hypotheses_and_conclusion_consistency():
    # whenever the hypotheses hold under clock streams the conclusion must
    src = StreamSource(SeedSpec(77), "label")
    a = evolve(Step(z=0, m=2), src, 12.0, n_labels=8)
    b = evolve(Step(z=0, m=1), src, 12.0, n_labels=8)
    for N in range(3, 8):
        for t1, t2 in [(3.0, 6.0), (3.0, 9.0), (6.0, 12.0)]:
            if increment_lemma_hypotheses(a, b, N, N, t1, t2):
                assert increment_lemma_conclusion(a, b, N, N, t1, t2)


def test_scan_rejects_unknown_variant():
    with pytest.raises(ValueError):
        scan_increment_lemma(SeedSpec(1), "mixed")


# ---------------------------------------------------------------------------
# step-vs-stationary comparison at KPZ scale


def test_comparison_spec_parameters():
    spec = ComparisonSpec(gamma=0.3, T=300.0, varkappa=1.0, kappa=1.0)
    t = 300.0 - 300.0 ** (2.0 / 3.0)
    assert spec.t == pytest.approx(t)
    assert spec.rho0 == pytest.approx(math.sqrt(0.3 * 300.0 / t))
    assert spec.rho_plus == pytest.approx(spec.rho0 + 1.0 * t ** (-1.0 / 3.0))
    assert spec.rho_minus == pytest.approx(spec.rho0 - 1.0 * t ** (-1.0 / 3.0))
    assert spec.N == round_half_away(0.3 * 300.0)
    assert 0 < spec.P < spec.N < spec.M


def test_comparison_spec_rejects_infeasible_density():
    # at T=400, gamma=0.5 the +4 kappa shift pushes rho_plus past 1
    with pytest.raises(ValueError):
        ComparisonSpec(gamma=0.5, T=400.0, varkappa=1.0, kappa=4.0)


def test_sized_stationary_covers_requested_labels():
    ic = sized_stationary(0.5, 50.0, top_label=30, min_tracked=5)
    assert ic.lo < 0 < ic.hi
    assert ic.hi * ic.rho > 50.0  # room for the contamination cone


def test_comparison_failure_rate_decays_in_kappa():
    seed = SeedSpec(2026)
    rates = []
    for kappa in (0.5, 2.0):
        spec = ComparisonSpec(gamma=0.3, T=300.0, varkappa=1.0, kappa=kappa)
        rep = check_increment_comparison(spec, seed, replicas=30)
        assert rep.n_valid() == 30
        rates.append(rep.sandwich_failure_rate()
                     + rep.distance_failure_rate())
    assert rates[1] <= rates[0]
    assert rates[1] <= 0.1
