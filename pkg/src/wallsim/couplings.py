"""Coupled ensembles, restart subsystems, and pathwise comparison checks.

Two coupling modes share randomness differently: basic coupling gives every
member the same site-keyed streams, clock coupling gives label-keyed
streams where member B's label M+n reads the stream of member A's label
N+n (a shift of M-N; zero shift is plain clock coupling).

All comparisons here are exact: positions are integers, paths are
piecewise constant, and interval-quantified statements reduce to finitely
many event times. Shared-clock members jump at bit-identical times, so
simultaneous jumps collapse exactly when merging event grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .backpaths import BackwardsPath, backwards_index
from .clockwork import SeedSpec
from .dynamics import (
    InitialCondition,
    Schedule,
    Stationary,
    Step,
    StreamSource,
    TrajectoryLog,
    build_schedule,
    evolve,
    restrict_schedule,
)


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class CouplingMode:
    variant: str        # "basic" | "clock"
    shift: int = 0

    def __post_init__(self) -> None:
        if self.variant not in ("basic", "clock"):
            raise ValueError("variant must be 'basic' or 'clock'")
        if self.variant == "basic" and self.shift != 0:
            raise ValueError("basic coupling admits no shift")

    @classmethod
    def basic(cls) -> "CouplingMode":
        return cls("basic")

    @classmethod
    def clock(cls, shift: int = 0) -> "CouplingMode":
        return cls("clock", shift)

    @property
    def stream_mode(self) -> str:
        return "site" if self.variant == "basic" else "label"


@dataclass(frozen=True)
class RestartSpec:
    """Restart as a step system sharing the parent's streams from
    restart_time on.

    from_position: rightmost particle at site Z, labels 1, 2, ... (site
    streams; the basic-coupling restart). from_label: labels m, m+1, ...
    with label n starting at x_m(tau) - n + m (label streams; the
    clock-coupling restart keeps the parent's label alignment).
    """
    restart_time: float
    variant: str        # "position" | "label"
    anchor: int

    def __post_init__(self) -> None:
        if self.variant not in ("position", "label"):
            raise ValueError("variant must be 'position' or 'label'")
        if self.restart_time < 0:
            raise ValueError("restart time must be >= 0")

    @classmethod
    def from_position(cls, tau: float, Z: int) -> "RestartSpec":
        return cls(tau, "position", int(Z))

    @classmethod
    def from_label(cls, tau: float, m: int) -> "RestartSpec":
        return cls(tau, "label", int(m))


@dataclass(frozen=True)
class Violation:
    replica_id: int
    check_name: str
    time: float
    labels: tuple[int, ...]
    lhs: float
    rhs: float


VIOLATION_CSV_HEADER = ["replica_id", "check_name", "time", "labels", "lhs", "rhs"]


def violation_csv_row(v: Violation) -> list[str]:
    return [str(v.replica_id), v.check_name, repr(float(v.time)),
            ";".join(str(l) for l in v.labels), repr(float(v.lhs)),
            repr(float(v.rhs))]


# ---------------------------------------------------------------------------
# ensembles and restarts


def run_ensemble(members: Sequence[tuple[InitialCondition, int]],
                 mode: CouplingMode, horizon: float, *,
                 seed: SeedSpec,
                 tracked: Sequence[Sequence[int]] | None = None,
                 n_labels: int | None = None,
                 window: tuple[int, int] | None = None) -> list[TrajectoryLog]:
    """Evolve all members to the horizon on shared randomness.

    Basic mode requires zero offsets and a common site window (one merged
    schedule drives every member). Clock mode gives member i the label key
    map ell -> ell - offset_i; a nonzero mode.shift is only a consistency
    constraint for pairs (offsets (0, shift)). n_labels applies to step
    members; stationary members carry their own occupancy window.
    """
    if len(members) < 2:
        raise ValueError("an ensemble needs at least two members")
    offs = [int(o) for _, o in members]
    tracked = [()] * len(members) if tracked is None else list(tracked)
    if mode.variant == "basic":
        if any(offs):
            raise ValueError("basic coupling admits no label offsets")
        if window is None:
            raise ValueError("basic coupling needs a site window")
        src = StreamSource(seed, "site")
        sched = build_schedule(src, horizon, window=window)
        return [evolve(ic, src, horizon, tracked=tr, n_labels=n_labels,
                       window=window, schedule=sched)
                for (ic, _), tr in zip(members, tracked)]
    if mode.shift != 0:
        if len(members) != 2 or offs != [0, mode.shift]:
            raise ValueError("shifted clock coupling expects offsets (0, shift)")
    src = StreamSource(seed, "label")
    return [evolve(ic, src, horizon, tracked=tr, n_labels=n_labels,
                   label_key_offset=off)
            for (ic, off), tr in zip(members, tracked)]


def restart_step(parent: TrajectoryLog, spec: RestartSpec,
                 horizon: float | None = None, *,
                 n_labels: int | None = None,
                 schedule: Schedule | None = None) -> TrajectoryLog:
    """A step subsystem reading the parent's streams from spec.restart_time.

    The sub-schedule keeps absolute times; no randomness is resampled.
    For from_position the parent must run on site streams, for from_label
    on label streams (with the parent's key offset preserved).
    """
    t_end = parent.horizon if horizon is None else float(horizon)
    tau = spec.restart_time
    if tau > t_end:
        raise ValueError("restart time beyond the horizon")
    if t_end > parent.horizon:
        raise ValueError("horizon beyond the parent's")
    if parent.source is None:
        raise ValueError("parent carries no stream context")
    if spec.variant == "position":
        if parent.mode != "site":
            raise ValueError("from_position needs a site-keyed parent")
        lo, hi = parent.window
        Z = spec.anchor
        if not lo <= Z <= hi:
            raise ValueError("restart position outside the parent window")
        if n_labels is None:
            n_labels = Z - lo + 1
        if schedule is None:
            schedule = build_schedule(parent.source, parent.horizon,
                                      window=parent.window)
        sub = restrict_schedule(schedule, t_min=tau)
        return evolve(Step(z=Z, m=1), parent.source, t_end,
                      n_labels=n_labels, window=parent.window, schedule=sub)
    if parent.mode != "label":
        raise ValueError("from_label needs a label-keyed parent")
    m = spec.anchor
    Z = parent.position_at(m, tau)
    top = int(parent.labels[-1]) if n_labels is None else m + n_labels - 1
    if top > int(parent.labels[-1]):
        raise ValueError("restart labels exceed the parent's")
    if schedule is None:
        schedule = build_schedule(
            parent.source, parent.horizon,
            labels=(int(parent.labels[0]), int(parent.labels[-1])),
            label_key_offset=parent.label_key_offset)
    sub = restrict_schedule(schedule, t_min=tau, span=(m, top))
    return evolve(Step(z=Z, m=m), parent.source, t_end,
                  n_labels=top - m + 1, schedule=sub,
                  label_key_offset=parent.label_key_offset)


# ---------------------------------------------------------------------------
# pathwise identities


def check_min_formula(parent: TrajectoryLog, tau: float, N: int, *,
                      t: float | None = None,
                      schedule: Schedule | None = None) -> bool:
    """Exact minimum-over-restarts identity at time t (default horizon).

    Site-keyed parent: x_N(t) = min over n <= N of the position of label
    N-n+1 in the step system restarted from x_n(tau). Label-keyed parent:
    x_N(t) = min over m <= N of the position of label N in the step system
    restarted from label m. Minimized over the simulated labels; the
    minimizer is always among them since every restart value bounds x_N(t)
    from below only.
    """
    t_end = parent.horizon if t is None else float(t)
    if schedule is None and parent.source is not None:
        if parent.mode == "site":
            schedule = build_schedule(parent.source, parent.horizon,
                                      window=parent.window)
        else:
            schedule = build_schedule(
                parent.source, parent.horizon,
                labels=(int(parent.labels[0]), int(parent.labels[-1])),
                label_key_offset=parent.label_key_offset)
    xN = parent.position_at(N, t_end)
    best = None
    for n in range(int(parent.labels[0]), int(N) + 1):
        if parent.mode == "site":
            Z = parent.position_at(n, tau)
            sub = restart_step(parent, RestartSpec.from_position(tau, Z),
                               t_end, n_labels=N - n + 1, schedule=schedule)
            val = int(sub.xT[sub.rank_of(N - n + 1)])
        else:
            sub = restart_step(parent, RestartSpec.from_label(tau, n),
                               t_end, n_labels=N - n + 1, schedule=schedule)
            val = int(sub.xT[sub.rank_of(N)])
        best = val if best is None else min(best, val)
    return best == xN


def check_concatenation(parent: TrajectoryLog, tau: float, N: int,
                        t: float | None = None, *,
                        schedule: Schedule | None = None) -> bool:
    """Exact concatenation through the backwards index at tau.

    With m0 = N(t down tau): site-keyed parents restart from the position
    of label m0 and read label N-m0+1; label-keyed parents restart from
    label m0 and read label N. Either must reproduce x_N(t) exactly.
    """
    t_end = parent.horizon if t is None else float(t)
    path = backwards_index(parent, N, t_end)
    m0 = path.index_at(tau)
    xN = parent.position_at(N, t_end)
    if parent.mode == "site":
        Z = parent.position_at(m0, tau)
        sub = restart_step(parent, RestartSpec.from_position(tau, Z),
                           t_end, n_labels=N - m0 + 1, schedule=schedule)
        return int(sub.xT[sub.rank_of(N - m0 + 1)]) == xN
    sub = restart_step(parent, RestartSpec.from_label(tau, m0),
                       t_end, n_labels=N - m0 + 1, schedule=schedule)
    return int(sub.xT[sub.rank_of(N)]) == xN


# ---------------------------------------------------------------------------
# pathwise comparisons


def _common_labels(a: TrajectoryLog, b: TrajectoryLog) -> range:
    lo = max(int(a.labels[0]), int(b.labels[0]))
    hi = min(int(a.labels[-1]), int(b.labels[-1]))
    return range(lo, hi + 1)


def _count_at(times: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return np.searchsorted(times, grid, side="right")


def increments_dominate(a_times: np.ndarray, b_times: np.ndarray,
                        t1: float, t2: float) -> tuple[bool, float]:
    """Whether #a-jumps minus #b-jumps is nondecreasing across (t1, t2].

    This is equivalent to increment domination over every subinterval.
    Bit-identical tie times (shared clocks) are collapsed first, so
    simultaneous jumps net to zero. Returns (ok, first bad time or nan).
    """
    a = a_times[(a_times > t1) & (a_times <= t2)]
    b = b_times[(b_times > t1) & (b_times <= t2)]
    times = np.concatenate((a, b))
    delta = np.concatenate((np.ones(len(a)), -np.ones(len(b))))
    u, inv = np.unique(times, return_inverse=True)
    net = np.bincount(inv, weights=delta)
    bad = np.flatnonzero(net < 0)
    if bad.size:
        return False, float(u[bad[0]])
    return True, math.nan


def check_order_preservation(a: TrajectoryLog, b: TrajectoryLog,
                             replica: int = 0) -> list[Violation]:
    """Clock-coupled order: with a(0) <= b(0) on common labels, a stays
    weakly left of b at every event time. Initial-order failures are
    reported as order_precondition rows."""
    out = []
    for n in _common_labels(a, b):
        ta, tb = a.jump_times(n), b.jump_times(n)
        xa0 = int(a.x0[a.rank_of(n)])
        xb0 = int(b.x0[b.rank_of(n)])
        if xa0 > xb0:
            out.append(Violation(replica, "order_precondition", 0.0, (n,),
                                 xa0, xb0))
            continue
        grid = np.unique(np.concatenate((ta, tb)))
        da = xa0 + _count_at(ta, grid)
        db = xb0 + _count_at(tb, grid)
        bad = np.flatnonzero(da > db)
        if bad.size:
            j = bad[0]
            out.append(Violation(replica, "order", float(grid[j]), (n,),
                                 float(da[j]), float(db[j])))
    return out


def check_gap_and_increment_order(a: TrajectoryLog, b: TrajectoryLog,
                                  replica: int = 0) -> list[Violation]:
    """Clock-coupled gap and increment domination on common labels.

    Requires initial gaps of a to dominate b's on every common consecutive
    pair (failures flagged as gap_precondition, not raised). Then a's gaps
    dominate at every event time and a's increments dominate b's per label
    over every interval.
    """
    out = []
    common = _common_labels(a, b)
    for n in common:
        if n - 1 not in common:
            continue
        ra1, ra = a.rank_of(n - 1), a.rank_of(n)
        rb1, rb = b.rank_of(n - 1), b.rank_of(n)
        g0a = int(a.x0[ra1]) - int(a.x0[ra])
        g0b = int(b.x0[rb1]) - int(b.x0[rb])
        if g0a < g0b:
            out.append(Violation(replica, "gap_precondition", 0.0,
                                 (n - 1, n), g0a, g0b))
            continue
        t_a1, t_a = a.jump_times(n - 1), a.jump_times(n)
        t_b1, t_b = b.jump_times(n - 1), b.jump_times(n)
        grid = np.unique(np.concatenate((t_a1, t_a, t_b1, t_b)))
        ga = g0a + _count_at(t_a1, grid) - _count_at(t_a, grid)
        gb = g0b + _count_at(t_b1, grid) - _count_at(t_b, grid)
        bad = np.flatnonzero(ga < gb)
        if bad.size:
            j = bad[0]
            out.append(Violation(replica, "gap", float(grid[j]), (n - 1, n),
                                 float(ga[j]), float(gb[j])))
    for n in common:
        ok, when = increments_dominate(a.jump_times(n), b.jump_times(n),
                                       0.0, min(a.horizon, b.horizon))
        if not ok:
            out.append(Violation(replica, "increment", when, (n,), -1.0, 0.0))
    return out


def check_step_shift(a: TrajectoryLog, b: TrajectoryLog,
                     replica: int = 0) -> list[Violation]:
    """Step-vs-step comparison under plain clock coupling.

    Both systems start their rightmost particle at the same site; a keeps
    labels >= m, b labels >= mt with mt <= m. Then on common labels N,
    a_N(t) >= b_N(t) + (m - mt) at every event time, and a's increments
    dominate b's.
    """
    m, mt = int(a.labels[0]), int(b.labels[0])
    if mt > m or int(a.x0[0]) != int(b.x0[0]):
        raise ValueError("expected same rightmost site and mt <= m")
    shift = m - mt
    out = []
    for n in _common_labels(a, b):
        ta, tb = a.jump_times(n), b.jump_times(n)
        xa0 = int(a.x0[a.rank_of(n)])
        xb0 = int(b.x0[b.rank_of(n)])
        grid = np.unique(np.concatenate(([0.0], ta, tb)))
        da = xa0 + _count_at(ta, grid)
        db = xb0 + _count_at(tb, grid)
        bad = np.flatnonzero(da < db + shift)
        if bad.size:
            j = bad[0]
            out.append(Violation(replica, "step_shift_order", float(grid[j]),
                                 (n,), float(da[j]), float(db[j] + shift)))
        ok, when = increments_dominate(ta, tb, 0.0,
                                       min(a.horizon, b.horizon))
        if not ok:
            out.append(Violation(replica, "step_shift_increment", when, (n,),
                                 -1.0, 0.0))
    return out


def check_index_intersection_order(a: TrajectoryLog, b: TrajectoryLog,
                                   M: int, Mt: int,
                                   t: float | None = None) -> bool | None:
    """Interdistance order at a time-intersection of backwards indices.

    For clock-coupled a, b and labels M < Mt, with the index of (M, t)
    through a and of (Mt, t) through b: if the two index processes agree at
    some time, then a_M(t) - a_Mt(t) >= b_M(t) - b_Mt(t). Returns None when
    the intersection hypothesis fails, else the conclusion's truth.
    """
    if not M < Mt:
        raise ValueError("need M < Mt")
    tt = a.horizon if t is None else float(t)
    pa = backwards_index(a, M, tt)
    pb = backwards_index(b, Mt, tt)
    pts = np.unique(np.concatenate(
        (pa.step_times, pb.step_times, [0.0, tt])))
    grid = np.concatenate((pts, (pts[:-1] + pts[1:]) / 2.0))
    if not any(pa.index_at(float(s)) == pb.index_at(float(s)) for s in grid):
        return None
    lhs = a.position_at(M, tt) - a.position_at(Mt, tt)
    rhs = b.position_at(M, tt) - b.position_at(Mt, tt)
    return bool(lhs >= rhs)


# ---------------------------------------------------------------------------
# the increment-comparison lemma and its basic-coupling failure


def increment_lemma_hypotheses(a: TrajectoryLog, b: TrajectoryLog,
                               N: int, M: int, t1: float, t2: float) -> bool:
    """Whether b_M(t1) <= a_N(t1) and the backwards traces of (N, t2)
    through a and (M, t1) through b meet at some time in [0, t1]."""
    if b.position_at(M, t1) > a.position_at(N, t1):
        return False
    pa = backwards_index(a, N, t2)
    pb = backwards_index(b, M, t1)
    pts = np.concatenate((pa.seg_start, pa.seg_end, pb.seg_start, pb.seg_end))
    pts = np.unique(pts[pts <= t1])
    grid = np.concatenate((pts, (pts[:-1] + pts[1:]) / 2.0))
    return any(pa.trace_at(float(s)) == pb.trace_at(float(s)) for s in grid)


def increment_lemma_conclusion(a: TrajectoryLog, b: TrajectoryLog,
                               N: int, M: int, t1: float, t2: float) -> bool:
    """a_N(t2) - a_N(t1) >= b_M(t2) - b_M(t1)."""
    ja = a.jump_times(N)
    jb = b.jump_times(M)
    inc_a = int(np.searchsorted(ja, t2, "right") - np.searchsorted(ja, t1, "right"))
    inc_b = int(np.searchsorted(jb, t2, "right") - np.searchsorted(jb, t1, "right"))
    return inc_a >= inc_b


def scan_increment_lemma(seed: SeedSpec, variant: str, *, runs: int = 200,
                         horizon: float = 12.0, n_labels: int = 8,
                         stop_at_first: bool = True) -> list[dict]:
    """Search for violations of the increment-comparison conclusion under
    satisfied hypotheses, across coupled pairs (labels >= 2 vs labels >= 1,
    same rightmost site, M = N).

    Under label streams the conclusion is a theorem and the scan must come
    back empty; under site streams it need not hold pathwise, and the scan
    documents that by exhibiting violations.
    """
    if variant not in ("basic", "clock"):
        raise ValueError("variant must be 'basic' or 'clock'")
    found = []
    T = float(horizon)
    t_pairs = [(T / 4, T / 2), (T / 4, 3 * T / 4), (T / 2, 3 * T / 4),
               (T / 2, T), (3 * T / 4, T)]
    for rep in range(runs):
        s = seed.with_replica(rep)
        if variant == "basic":
            window = (-n_labels, int(math.ceil(T + 8 * math.sqrt(T + 1) + 24)))
            logs = run_ensemble([(Step(z=0, m=2), 0), (Step(z=0, m=1), 0)],
                                CouplingMode.basic(), T, seed=s,
                                n_labels=n_labels, window=window)
        else:
            src = StreamSource(s, "label")
            logs = [evolve(Step(z=0, m=2), src, T, n_labels=n_labels),
                    evolve(Step(z=0, m=1), src, T, n_labels=n_labels)]
        a, b = logs
        for N in range(3, n_labels):
            for t1, t2 in t_pairs:
                if not increment_lemma_hypotheses(a, b, N, N, t1, t2):
                    continue
                if not increment_lemma_conclusion(a, b, N, N, t1, t2):
                    found.append({"replica": rep, "N": N, "t1": t1, "t2": t2})
                    if stop_at_first:
                        return found
    return found


# ---------------------------------------------------------------------------
# step-vs-stationary comparison at KPZ scale


@dataclass(frozen=True)
class ComparisonSpec:
    """Parameters comparing a step system's tagged label N = gamma*T with
    stationary systems of densities rho0 +- kappa*t^(-1/3) over [t, T],
    t = T - varkappa*T^(2/3)."""
    gamma: float
    T: float
    varkappa: float
    kappa: float

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0,1)")
        if self.T <= 0 or self.kappa <= 0:
            raise ValueError("T and kappa must be positive")
        if self.t <= 0:
            raise ValueError("time window exceeds T")
        if not (0.0 < self.rho_minus and self.rho_plus < 1.0):
            raise ValueError("perturbed densities leave (0,1); "
                             "reduce kappa or varkappa")

    @property
    def t(self) -> float:
        return self.T - self.varkappa * self.T ** (2.0 / 3.0)

    @property
    def rho0(self) -> float:
        return math.sqrt(self.gamma * self.T / self.t)

    @property
    def rho_plus(self) -> float:
        return self.rho0 + self.kappa * self.t ** (-1.0 / 3.0)

    @property
    def rho_minus(self) -> float:
        return self.rho0 - self.kappa * self.t ** (-1.0 / 3.0)

    @property
    def N(self) -> int:
        return round_half_away(self.gamma * self.T)

    @property
    def M(self) -> int:
        t = self.t
        return round_half_away(self.rho_plus ** 2 * t
                               - 1.5 * self.kappa * self.rho_plus * t ** (2.0 / 3.0))

    @property
    def P(self) -> int:
        t = self.t
        return round_half_away(self.rho_minus ** 2 * t
                               + 1.5 * self.kappa * self.rho_minus * t ** (2.0 / 3.0))


def sized_stationary(rho: float, horizon: float, top_label: int,
                     min_tracked: int, salt: int = 0) -> Stationary:
    """A stationary initial condition whose occupancy window realizes
    top_label and keeps the contamination cone of min_tracked inside the
    simulated labels for the given horizon (6-sigma occupancy margins)."""
    need = horizon + 5.0 * math.sqrt(horizon + 1.0) + 16.0
    r_target = max(need - min_tracked + 1.0, 8.0)
    hi = int(math.ceil((r_target + 6.0 * math.sqrt(r_target + 4.0) + 8.0) / rho))
    lo = -int(math.ceil((top_label + 6.0 * math.sqrt(top_label + 4.0) + 8.0) / rho))
    return Stationary(rho=rho, lo=lo, hi=hi, salt=salt)


@dataclass(frozen=True)
class ComparisonReplica:
    replica: int
    valid: bool
    sandwich_ok: bool
    distance_plus_ok: bool
    distance_minus_ok: bool


@dataclass(frozen=True)
class ComparisonReport:
    spec: ComparisonSpec
    rows: tuple[ComparisonReplica, ...]

    def n_valid(self) -> int:
        return sum(r.valid for r in self.rows)

    def sandwich_failure_rate(self) -> float:
        n = self.n_valid()
        return (sum(not r.sandwich_ok for r in self.rows if r.valid) / n
                if n else math.nan)

    def distance_failure_rate(self) -> float:
        n = self.n_valid()
        bad = sum(not (r.distance_plus_ok and r.distance_minus_ok)
                  for r in self.rows if r.valid)
        return bad / n if n else math.nan


def check_increment_comparison(spec: ComparisonSpec, seed: SeedSpec, *,
                               replicas: int = 200) -> ComparisonReport:
    """Monte Carlo check of the increment sandwich (shifted clock coupling)
    and of the interdistance comparison at time t (plain clock coupling).

    Per replica, the step system with labels 1..M is coupled with the
    higher-density system at label M (shift M-N) and the lower-density one
    at label P (shift P-N); the sandwich requires, over every subinterval
    of [t, T], plus-increments <= step-increments <= minus-increments.
    The unshifted runs reuse the same initial occupancies and check
    x_N - x_M >= x+_N - x+_M and x_P - x_N <= x-_P - x-_N at time t.
    Replicas whose stationary members touch a contamination front are
    marked invalid.
    """
    N, M, P = spec.N, spec.M, spec.P
    if not P < N < M:
        raise ValueError("expected P < N < M at these parameters")
    T, t = spec.T, spec.t
    plus_ic = sized_stationary(spec.rho_plus, T, M, min(N, M), salt=1)
    minus_ic = sized_stationary(spec.rho_minus, T, N, min(P, N), salt=2)
    rows = []
    for rep in range(replicas):
        src = StreamSource(seed.with_replica(rep), "label")
        x = evolve(Step(), src, T, n_labels=M)
        plus_sh = evolve(plus_ic, src, T, tracked=(M,),
                         label_key_offset=M - N)
        minus_sh = evolve(minus_ic, src, T, tracked=(P,),
                          label_key_offset=P - N)
        plus_pl = evolve(plus_ic, src, T, tracked=(N, M))
        minus_pl = evolve(minus_ic, src, T, tracked=(P, N))
        valid = not (plus_sh.boundary_contact or minus_sh.boundary_contact
                     or plus_pl.boundary_contact or minus_pl.boundary_contact)
        lower_ok, _ = increments_dominate(x.jump_times(N),
                                          plus_sh.jump_times(M), t, T)
        upper_ok, _ = increments_dominate(minus_sh.jump_times(P),
                                          x.jump_times(N), t, T)
        d_plus = (x.position_at(N, t) - x.position_at(M, t)
                  >= plus_pl.position_at(N, t) - plus_pl.position_at(M, t))
        d_minus = (x.position_at(P, t) - x.position_at(N, t)
                   <= minus_pl.position_at(P, t) - minus_pl.position_at(N, t))
        rows.append(ComparisonReplica(rep, valid, lower_ok and upper_ok,
                                      bool(d_plus), bool(d_minus)))
    return ComparisonReport(spec, tuple(rows))
