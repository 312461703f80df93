"""Backwards index processes, their spatial traces, and localization.

For an anchor (N, t), scan the exclusion-suppressed attempts backwards in
time: an attempt by the current index steps the index down by one,
effective at the attempt time. index_at(s) is therefore N minus the number
of index steps at times >= s, and the spatial trace is the position of
label index_at(s) at time s. The same construction applies to holes.

The trace of the anchor (round(gamma*T), T) concentrates along the line
(1 - 2*sqrt(gamma))*s within O(T^(2/3)); localization_experiment verifies
that on the event where the particle trace stays below the line + K*T^(2/3)
and the hole trace of a dual anchor stays above the line - K*T^(2/3), the
final position is reproduced exactly by dynamics clamped to either
half-plane around the line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .clockwork import SeedSpec
from .dynamics import (
    ClampSpec,
    Step,
    StreamSource,
    TrajectoryLog,
    build_schedule,
    evolve,
    step_window,
)

REMOVED = int(_kernels.REMOVED)


@dataclass(frozen=True, eq=False)
class BackwardsPath:
    """Backwards index process of one anchor with its spatial trace.

    step_times are ascending; the index increases by one across each step
    time (forward in time), with the lower value attained at the step time
    itself. Segments tile [0, anchor_time] in time order; segment j carries
    the trace value between its endpoints, and boundary instants are
    resolved through index_at / trace_at.
    """
    anchor_label: int
    anchor_time: float
    family: str                 # "particle" or "hole"
    step_times: np.ndarray
    seg_start: np.ndarray
    seg_end: np.ndarray
    seg_value: np.ndarray
    seg_label: np.ndarray

    @property
    def origin_label(self) -> int:
        return self.anchor_label - len(self.step_times)

    def index_at(self, s: float) -> int:
        if s < 0 or s > self.anchor_time:
            raise ValueError("time outside [0, anchor_time]")
        k = len(self.step_times) - int(
            np.searchsorted(self.step_times, s, side="left"))
        return self.anchor_label - k

    def trace_at(self, s: float) -> int:
        lab = self.index_at(s)
        j = int(np.searchsorted(self.seg_start, s, side="right")) - 1
        while j > 0 and self.seg_label[j] != lab:
            j -= 1
        return int(self.seg_value[j])

    def index_path(self) -> tuple[np.ndarray, np.ndarray]:
        """(times, values): value j holds on (times[j], times[j+1]], the
        first interval closed at 0."""
        times = np.concatenate(([0.0], self.step_times))
        vals = self.origin_label + np.arange(len(self.step_times) + 1)
        return times, vals


def _scan_steps(sup_t: np.ndarray, sup_i: np.ndarray, t: float,
                start: int) -> np.ndarray:
    """Ascending times at which the index steps, for an anchor at time t.

    Attempts at exactly t do not count: the index at the anchor time is the
    anchor label by definition.
    """
    m = int(np.searchsorted(sup_t, t, side="left"))
    out = np.empty(m, dtype=np.float64)
    k = _kernels.backwards_scan(sup_t, sup_i, m, start, out)
    return out[:k][::-1].copy()


def _build_segments(anchor: int, t: float, steps: np.ndarray,
                    jumps_fn, pos_fn, sign: int):
    bounds = np.empty(len(steps) + 2)
    bounds[0] = 0.0
    bounds[1:-1] = steps
    bounds[-1] = t
    origin = anchor - len(steps)
    starts, ends, vals, labs = [], [], [], []
    for i in range(len(steps) + 1):
        lab = origin + i
        a, b = float(bounds[i]), float(bounds[i + 1])
        jt = jumps_fn(lab)
        u = jt[np.searchsorted(jt, a, side="right"):
               np.searchsorted(jt, b, side="right")]
        p0 = pos_fn(lab, a)
        starts.append(np.concatenate(([a], u)))
        ends.append(np.concatenate((u, [b])))
        vals.append(p0 + sign * np.arange(len(u) + 1, dtype=np.int64))
        labs.append(np.full(len(u) + 1, lab, dtype=np.int64))
    return (np.concatenate(starts), np.concatenate(ends),
            np.concatenate(vals), np.concatenate(labs))


def _check_anchor(log: TrajectoryLog, t: float | None) -> float:
    tt = log.horizon if t is None else float(t)
    if tt < 0 or tt > log.horizon:
        raise ValueError("anchor time outside the simulated horizon")
    if int(log.labels[-1]) - int(log.labels[0]) + 1 != len(log.labels):
        raise ValueError("backwards paths need consecutive labels")
    return tt


def backwards_index(log: TrajectoryLog, N: int, t: float | None = None) -> BackwardsPath:
    """The backwards path of particle anchor (N, t); t defaults to the
    horizon. Wall-blocked attempts never step the index, only
    exclusion-suppressed ones do."""
    tt = _check_anchor(log, t)
    r = log.rank_of(N)
    steps = _scan_steps(log.sup_t, log.sup_rank, tt, r)
    if r - len(steps) < 0:
        raise ValueError("backwards path exits the simulated labels")
    segs = _build_segments(N, tt, steps, log.jump_times, log.position_at, +1)
    return BackwardsPath(int(N), tt, "particle", steps, *segs)


def hole_backwards(log: TrajectoryLog, M: int, t: float | None = None) -> BackwardsPath:
    """The backwards path of hole anchor (M, t); hole indices never step
    below 1 (the leftmost hole has an occupied site at its left for step
    data, so it is never the suppressed one)."""
    if log.hole_z is None:
        raise ValueError("holes were not tracked in this run")
    tt = _check_anchor(log, t)
    steps = _scan_steps(log.hole_sup_t, log.hole_sup_label, tt, int(M))
    if M - len(steps) < 1:
        raise ValueError("hole path stepped below hole 1")
    segs = _build_segments(int(M), tt, steps, log.hole_jump_times,
                           log.hole_position_at, -1)
    return BackwardsPath(int(M), tt, "hole", steps, *segs)


def midtime_index(path: BackwardsPath) -> int:
    return path.index_at(path.anchor_time / 2.0)


def right_fluctuation_sup(path: BackwardsPath, gamma: float, T: float) -> float:
    """sup over s in [0, anchor_time] of (trace(s) - (1-2*sqrt(gamma))*s),
    in units of T^(2/3).

    The difference is affine on each segment, so the supremum over the
    segment's closed hull is attained at an endpoint; taking both endpoints
    of every segment also captures one-sided limits at the instants where a
    neighbouring segment claims the value, which is exactly what the
    complement of the event {trace below the line for all s} requires.
    """
    c = 1.0 - 2.0 * math.sqrt(gamma)
    d1 = path.seg_value - c * path.seg_start
    d2 = path.seg_value - c * path.seg_end
    return float(max(d1.max(), d2.max()) / T ** (2.0 / 3.0))


def left_fluctuation_sup(path: BackwardsPath, gamma: float, T: float) -> float:
    """sup over s of ((1-2*sqrt(gamma))*s - trace(s)), in units of T^(2/3)."""
    c = 1.0 - 2.0 * math.sqrt(gamma)
    d1 = c * path.seg_start - path.seg_value
    d2 = c * path.seg_end - path.seg_value
    return float(max(d1.max(), d2.max()) / T ** (2.0 / 3.0))


def structure_violations(path: BackwardsPath) -> list[str]:
    """Structural defects of a backwards path; empty for a sound one.

    Checks: step times strictly increasing inside (0, anchor_time]; the
    segments tile [0, anchor_time]; the index moves by unit steps between
    origin and anchor; the trace moves by unit steps, +sign at a jump of
    the current label and -sign across an index step (the suppressed label
    sits directly behind the blocking one).
    """
    v = []
    st = path.step_times
    if st.size:
        if np.any(np.diff(st) <= 0):
            v.append("step times not strictly increasing")
        if st[0] <= 0 or st[-1] > path.anchor_time:
            v.append("step time outside (0, anchor_time]")
    if path.seg_start[0] != 0.0 or path.seg_end[-1] != path.anchor_time:
        v.append("trace does not span [0, anchor_time]")
    if np.any(path.seg_start[1:] != path.seg_end[:-1]):
        v.append("trace segments do not tile")
    sign = 1 if path.family == "particle" else -1
    dv = np.diff(path.seg_value)
    dl = np.diff(path.seg_label)
    ok = ((dl == 0) & (dv == sign)) | ((dl == 1) & (dv == -sign))
    if not np.all(ok):
        v.append("trace step not of unit size")
    if path.seg_label[0] != path.origin_label \
            or path.seg_label[-1] != path.anchor_label:
        v.append("index endpoints wrong")
    return v


def ordered_traces(lower: BackwardsPath, upper: BackwardsPath) -> bool:
    """Whether lower's trace stays weakly left of upper's on
    [0, lower.anchor_time].

    For anchors (M, t) and (N, t') of one run with N <= M and t <= t' this
    must hold on every realization. Both traces are piecewise constant with
    breakpoints among the segment endpoints, so evaluating at those points
    and the midpoints between them decides the full time interval.
    """
    tmax = lower.anchor_time
    pts = np.concatenate((lower.seg_start, lower.seg_end,
                          upper.seg_start, upper.seg_end))
    pts = np.unique(pts[pts <= tmax])
    grid = np.concatenate((pts, (pts[:-1] + pts[1:]) / 2.0))
    return all(lower.trace_at(float(s)) <= upper.trace_at(float(s))
               for s in grid)


def duality_display_check(log: TrajectoryLog, N: int,
                          t: float | None = None) -> bool:
    """Exact particle/hole straddling: if label N has taken J jumps by time
    t, holes J and J+1 enclose it, x_h(J) < x_N(t) < x_h(J+1) (the lower
    bound is void at J = 0)."""
    if log.hole_z is None:
        raise ValueError("holes were not tracked in this run")
    tt = log.horizon if t is None else float(t)
    xN = log.position_at(N, tt)
    J = xN - int(log.x0[log.rank_of(N)])
    if log.hole_position_at(J + 1, tt) <= xN:
        return False
    if J > 0 and log.hole_position_at(J, tt) >= xN:
        return False
    return True


# ---------------------------------------------------------------------------
# localization


@dataclass(frozen=True)
class LocalizationRow:
    replica: int
    K: float
    sup_right: float
    sup_left: float
    separated: bool
    E_held: bool
    equality_held: bool
    guard_ok: bool


@dataclass(frozen=True)
class LocalizationReport:
    gamma: float
    T: float
    N: int
    M: int
    K_grid: tuple[float, ...]
    replicas: int
    rows: tuple[LocalizationRow, ...]

    def _per_K(self, K: float) -> list[LocalizationRow]:
        return [r for r in self.rows if r.K == K and r.guard_ok]

    def exceedance(self) -> dict[float, float]:
        """P(E fails) per K, over guarded replicas."""
        out = {}
        for K in self.K_grid:
            rs = self._per_K(K)
            out[K] = sum(not r.E_held for r in rs) / len(rs) if rs else math.nan
        return out

    def conditional_equality(self) -> dict[float, float]:
        """Fraction of E-replicas where both clamped views reproduce the
        unclamped final position exactly."""
        out = {}
        for K in self.K_grid:
            rs = [r for r in self._per_K(K) if r.E_held]
            out[K] = sum(r.equality_held for r in rs) / len(rs) if rs else math.nan
        return out

    def n_guarded(self) -> int:
        ids = {r.replica for r in self.rows if r.guard_ok}
        return len(ids)


def localization_experiment(gamma: float, T: float,
                            K_grid: tuple[float, ...], replicas: int,
                            seed: SeedSpec, *,
                            n_labels: int | None = None,
                            replica0: int = 0) -> LocalizationReport:
    """Clamped-view localization for the anchor (round(gamma*T), T).

    Per replica, one site-keyed schedule drives the unclamped run (with
    holes) plus, per K, a right-clamped and a left-clamped run on the line
    (1-2*sqrt(gamma))*t +- K*T^(2/3). Requires gamma > 1/4 so the line has
    negative slope and the left clamp's frozen region is full for all
    times. The guard flags replicas whose deepest simulated particle moved
    (hole bookkeeping near the window floor would then be unreliable).
    """
    if not 0.25 < gamma < 1.0:
        raise ValueError("gamma must lie in (1/4, 1)")
    T = float(T)
    c = 1.0 - 2.0 * math.sqrt(gamma)
    N = int(round(gamma * T))
    M = int(round((1.0 - math.sqrt(gamma)) ** 2 * T - math.sqrt(T)))
    if M < 1:
        raise ValueError("dual hole anchor below 1; increase T")
    Kmax = max(K_grid)
    if n_labels is None:
        depth = max(T + 4.5 * math.sqrt(T),
                    Kmax * T ** (2.0 / 3.0) - c * T + 10.0 * T ** (1.0 / 3.0))
        n_labels = int(math.ceil(depth)) + 32
    window = step_window(0, n_labels, T)
    rows = []
    for rep in range(replica0, replica0 + replicas):
        src = StreamSource(seed.with_replica(rep), "site")
        sched = build_schedule(src, T, window=window)
        parent = evolve(Step(), src, T, n_labels=n_labels, window=window,
                        track_holes=True, schedule=sched)
        guard = bool(parent.xT[-1] == parent.x0[-1])
        rN = parent.rank_of(N)
        xN = int(parent.xT[rN])
        sup_r = right_fluctuation_sup(backwards_index(parent, N, T), gamma, T)
        sup_l = left_fluctuation_sup(hole_backwards(parent, M, T), gamma, T)
        separated = parent.hole_position_at(M, T) < xN
        for K in K_grid:
            off = float(K) * T ** (2.0 / 3.0)
            right = evolve(Step(), src, T, n_labels=n_labels, window=window,
                           schedule=sched, clamp=ClampSpec("right", off, c))
            left = evolve(Step(), src, T, n_labels=n_labels, window=window,
                          schedule=sched, clamp=ClampSpec("left", -off, c))
            xr = int(right.xT[rN])
            xl = int(left.xT[rN])
            eq = xr != REMOVED and xr == xN and xl == xN
            held = separated and sup_r <= K and sup_l <= K
            rows.append(LocalizationRow(rep, float(K), sup_r, sup_l,
                                        separated, held, eq, guard))
    return LocalizationReport(gamma, T, N, M,
                              tuple(float(k) for k in K_grid),
                              replicas, tuple(rows))
