"""TASEP evolution under keyed clocks.

Particles on Z jump one site right at rate 1, blocked by occupied targets;
labels decrease rightward (x_{n+1}(t) < x_n(t)). An optional moving wall
f suppresses any jump whose target exceeds f(t). Randomness comes from
clockwork streams, site-keyed or label-keyed; scripted schedules replace
them for exact small cases.

Window truncation policy: step initial data are exact for every simulated
label (information flows from smaller to larger labels only). Stationary
initial data are truncated on the right; a conservative contamination front
is tracked and runs flag boundary contact instead of silently degrading.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import _kernels, _rng
from ._kernels import HNONE, REMOVED
from .clockwork import SeedSpec, batch_times, merge_flat

__all__ = [
    "Step", "Stationary", "Explicit", "WallPiece", "WallSpec",
    "StreamSource", "ScriptedSource", "Schedule", "TrajectoryLog",
    "HoleView", "DualityReport", "WindowError", "evolve", "build_schedule",
    "holes_of", "duality_check", "step_window", "REMOVED",
]


class WindowError(RuntimeError):
    """A simulation window was too small for the requested run."""


# ---------------------------------------------------------------------------
# initial conditions


@dataclass(frozen=True)
class Step:
    """Fully packed to the left of z: label m at z, label m+k at z-k."""
    z: int = 0
    m: int = 1


@dataclass(frozen=True)
class Stationary:
    """Bernoulli(rho) occupancy on sites lo..hi; label 1 is the rightmost
    particle weakly left of the origin. salt picks an independent
    realization per coupled member."""
    rho: float
    lo: int
    hi: int
    salt: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.rho < 1.0):
            raise ValueError("rho must lie in (0, 1)")
        if self.hi < self.lo:
            raise ValueError("empty occupancy window")


@dataclass(frozen=True)
class Explicit:
    """An explicit finite configuration: (label, position) pairs with
    positions strictly decreasing as labels increase."""
    particles: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        labs = [l for l, _ in self.particles]
        poss = [p for _, p in self.particles]
        if sorted(labs) != labs or len(set(labs)) != len(labs):
            raise ValueError("labels must be strictly increasing")
        if any(poss[i] <= poss[i + 1] for i in range(len(poss) - 1)):
            raise ValueError("positions must strictly decrease with label")


InitialCondition = Union[Step, Stationary, Explicit]


# ---------------------------------------------------------------------------
# wall


@dataclass(frozen=True)
class WallPiece:
    t0: float
    c: float = 0.0
    v: float = 0.0
    infinite: bool = False

    def value(self, t: float) -> float:
        return math.inf if self.infinite else self.c + self.v * t


@dataclass(frozen=True)
class WallSpec:
    """Piecewise-affine nondecreasing barrier, left-closed pieces, f(0) >= 0.

    An infinite piece switches the constraint off from its start onward.
    """
    pieces: tuple[WallPiece, ...]
    horizon: float

    def __post_init__(self) -> None:
        ps = self.pieces
        if not ps:
            raise ValueError("wall needs at least one piece")
        if ps[0].t0 != 0.0:
            raise ValueError("first piece must start at t = 0")
        starts = [p.t0 for p in ps]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("piece start times must strictly increase")
        if starts[-1] > self.horizon:
            raise ValueError("piece starts beyond the horizon")
        if not ps[0].infinite and ps[0].value(0.0) < 0.0:
            raise ValueError("wall must start at f(0) >= 0")
        seen_inf = False
        for i, p in enumerate(ps):
            if seen_inf and not p.infinite:
                raise ValueError("wall cannot return from infinity")
            seen_inf = seen_inf or p.infinite
            if p.infinite:
                continue
            if p.v < 0.0:
                raise ValueError("wall pieces must be nondecreasing")
            end = ps[i + 1].t0 if i + 1 < len(ps) else self.horizon
            nxt = ps[i + 1].value(ps[i + 1].t0) if i + 1 < len(ps) else None
            if nxt is not None and p.value(end) > nxt + 1e-9 * max(1.0, abs(nxt)):
                raise ValueError("wall decreases across a seam")

    @classmethod
    def constant(cls, level: float, horizon: float) -> "WallSpec":
        return cls((WallPiece(0.0, c=float(level)),), float(horizon))

    def value(self, t: float) -> float:
        p = self.pieces[0]
        for q in self.pieces[1:]:
            if q.t0 <= t:
                p = q
            else:
                break
        return p.value(t)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        wt = np.array([p.t0 for p in self.pieces], dtype=np.float64)
        wc = np.array([p.c for p in self.pieces], dtype=np.float64)
        wv = np.array([p.v for p in self.pieces], dtype=np.float64)
        winf = np.array([1 if p.infinite else 0 for p in self.pieces],
                        dtype=np.uint8)
        return wt, wc, wv, winf


_NO_WALL = (np.empty(0, dtype=np.float64), np.empty(0, dtype=np.float64),
            np.empty(0, dtype=np.float64), np.empty(0, dtype=np.uint8))


# ---------------------------------------------------------------------------
# randomness sources and schedules


@dataclass(frozen=True)
class StreamSource:
    """Keyed Poisson clocks; mode picks the key family ('site' or 'label')."""
    seed: SeedSpec
    mode: str = "site"

    def __post_init__(self) -> None:
        if self.mode not in ("site", "label"):
            raise ValueError("mode must be 'site' or 'label'")


@dataclass(frozen=True)
class ScriptedSource:
    """A fixed schedule of (time, index) rings: indices are absolute sites
    in site mode, label values in label mode."""
    events: tuple[tuple[float, int], ...]
    mode: str = "site"

    def __post_init__(self) -> None:
        ts = [t for t, _ in self.events]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("scripted events must be time-sorted")
        if self.mode not in ("site", "label"):
            raise ValueError("mode must be 'site' or 'label'")


Source = Union[StreamSource, ScriptedSource]


@dataclass(frozen=True, eq=False)
class Schedule:
    """A merged ring schedule over dense channels, reusable across the
    coupled runs that share its randomness."""
    mode: str
    horizon: float
    ev_t: np.ndarray
    ev_ch: np.ndarray
    base: int              # channel 0 is site `base` / label-rank of label `base`
    nch: int
    label_key_offset: int = 0


def step_window(z: int, n_labels: int, horizon: float) -> tuple[int, int]:
    """A site window that holds a step system of n_labels particles for the
    given horizon, with generous rightward headroom (the kernel still flags
    any overflow)."""
    hi = z + int(math.ceil(horizon + 8.0 * math.sqrt(horizon + 1.0) + 24.0))
    return z - n_labels + 1, hi


@dataclass(frozen=True)
class ClampSpec:
    """Override the state outside a moving half-plane bounded by a + b*t.

    side "right": only the region {x <= a + b*t} evolves; ring events above
    the line are dropped, and a particle jumping across it leaves the system
    (the outside is empty by definition, so the jump is never blocked and
    the particle is removed from the log's final state).

    side "left": only {x >= a + b*t} evolves; ring events strictly below the
    line are dropped, which freezes the initial configuration there.
    """
    side: str
    a: float
    b: float

    def __post_init__(self) -> None:
        if self.side not in ("right", "left"):
            raise ValueError("clamp side must be 'right' or 'left'")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("clamp line coefficients must be finite")

    def line(self, t: float) -> float:
        return self.a + self.b * t


def build_schedule(source: Source, horizon: float, *,
                   window: tuple[int, int] | None = None,
                   labels: tuple[int, int] | None = None,
                   label_key_offset: int = 0) -> Schedule:
    """Realize the merged schedule for a site window or a label range.

    Label mode: label value ell rings on stream key Label(ell -
    label_key_offset); a nonzero offset implements shifted clock couplings.
    """
    h = float(horizon)
    if isinstance(source, ScriptedSource):
        mode = source.mode
        if mode == "site":
            assert window is not None
            base, top = window
            nch = top - base + 1
        else:
            assert labels is not None
            base, top = labels
            nch = top - base + 1
        ev = [(t, i) for (t, i) in source.events if t <= h]
        ev_t = np.array([t for t, _ in ev], dtype=np.float64)
        ev_ch = np.array([i - base for _, i in ev], dtype=np.int64)
        if ev_ch.size and (ev_ch.min() < 0 or ev_ch.max() >= nch):
            raise ValueError("scripted event index outside the simulated range")
        return Schedule(mode, h, ev_t, ev_ch, base, nch, label_key_offset)
    if source.mode == "site":
        assert window is not None
        base, top = window
        idx = np.arange(base, top + 1, dtype=np.int64)
        kind = _rng.KIND_SITE
        off = 0
    else:
        assert labels is not None
        base, top = labels
        idx = np.arange(base - label_key_offset, top - label_key_offset + 1,
                        dtype=np.int64)
        kind = _rng.KIND_LABEL
        off = label_key_offset
    flat, offsets = batch_times(source.seed, kind, idx, h)
    ev_t, ev_ch = merge_flat(flat, offsets)
    return Schedule(source.mode, h, ev_t, ev_ch, base, len(idx), off)


def restrict_schedule(schedule: Schedule, *, t_min: float | None = None,
                      span: tuple[int, int] | None = None) -> Schedule:
    """A sub-schedule keeping events at times strictly after t_min and
    channels inside span (absolute sites or labels).

    Times are never shifted: a system restarted at t_min re-reads its
    parent's remaining ring times through the restricted schedule.
    """
    ev_t, ev_ch = schedule.ev_t, schedule.ev_ch
    base, nch = schedule.base, schedule.nch
    if t_min is not None:
        k = int(np.searchsorted(ev_t, float(t_min), side="right"))
        ev_t, ev_ch = ev_t[k:], ev_ch[k:]
    if span is not None:
        lo, hi = int(span[0]), int(span[1])
        if lo < base or hi > base + nch - 1 or lo > hi:
            raise ValueError("span exceeds the schedule's channels")
        keep = (ev_ch >= lo - base) & (ev_ch <= hi - base)
        ev_t, ev_ch = ev_t[keep], ev_ch[keep] - (lo - base)
        base, nch = lo, hi - lo + 1
    return Schedule(schedule.mode, schedule.horizon, ev_t, ev_ch, base, nch,
                    schedule.label_key_offset)


# ---------------------------------------------------------------------------
# trajectory log


@dataclass(eq=False)
class TrajectoryLog:
    mode: str
    horizon: float
    labels: np.ndarray          # simulated labels, ascending
    x0: np.ndarray              # initial positions per label
    xT: np.ndarray              # final positions (REMOVED if clamped away)
    jump_t: np.ndarray
    jump_rank: np.ndarray
    sup_t: np.ndarray
    sup_rank: np.ndarray
    wall_t: np.ndarray
    wall_rank: np.ndarray
    hole_jump_t: np.ndarray
    hole_jump_label: np.ndarray
    hole_sup_t: np.ndarray
    hole_sup_label: np.ndarray
    hole_z: int | None          # hole h starts at hole_z + h (step data only)
    tracked: tuple[int, ...]
    boundary_contact: bool
    window: tuple[int, int] | None
    wall: WallSpec | None
    source: Source | None
    label_key_offset: int
    ic: InitialCondition | None = None
    clamp: ClampSpec | None = None
    _csr: dict | None = field(default=None, repr=False)

    # -- label helpers ------------------------------------------------------

    def rank_of(self, label: int) -> int:
        r = int(label) - int(self.labels[0])
        if r < 0 or r >= len(self.labels) or self.labels[r] != label:
            raise KeyError(f"label {label} not simulated")
        return r

    @property
    def jump_label(self) -> np.ndarray:
        return self.labels[self.jump_rank]

    @property
    def sup_label(self) -> np.ndarray:
        return self.labels[self.sup_rank]

    @property
    def wall_label(self) -> np.ndarray:
        return self.labels[self.wall_rank]

    def _index(self) -> dict:
        if self._csr is None:
            order = np.argsort(self.jump_rank, kind="stable")
            ranks = self.jump_rank[order]
            bounds = np.searchsorted(ranks, np.arange(len(self.labels) + 1))
            self._csr = {"order": order, "bounds": bounds}
        return self._csr

    def jump_times(self, label: int) -> np.ndarray:
        idx = self._index()
        r = self.rank_of(label)
        sel = idx["order"][idx["bounds"][r]:idx["bounds"][r + 1]]
        return self.jump_t[sel]

    def suppressed_times(self, label: int) -> np.ndarray:
        r = self.rank_of(label)
        return self.sup_t[self.sup_rank == r]

    def wall_blocked_times(self, label: int) -> np.ndarray:
        r = self.rank_of(label)
        return self.wall_t[self.wall_rank == r]

    # -- positions ----------------------------------------------------------

    def position_at(self, label: int, t: float) -> int:
        jt = self.jump_times(label)
        return int(self.x0[self.rank_of(label)]) + int(
            np.searchsorted(jt, t, side="right"))

    def positions_at(self, t: float) -> np.ndarray:
        """Positions of all simulated labels at time t (aligned to .labels)."""
        sel = self.jump_t <= t
        counts = np.bincount(self.jump_rank[sel], minlength=len(self.labels))
        return self.x0 + counts

    def path(self, label: int) -> tuple[np.ndarray, np.ndarray]:
        """(times, values): value j holds on [times[j], times[j+1]).

        times[0] = 0; the path is cadlag with unit up-steps.
        """
        jt = self.jump_times(label)
        times = np.concatenate(([0.0], jt))
        vals = int(self.x0[self.rank_of(label)]) + np.arange(len(jt) + 1)
        return times, vals

    def final_config(self) -> dict[int, int]:
        return {int(l): int(p) for l, p in zip(self.labels, self.xT)}

    # -- holes --------------------------------------------------------------

    def _hole_index(self) -> dict:
        idx = self._index()
        if "h_order" not in idx:
            order = np.argsort(self.hole_jump_label, kind="stable")
            idx["h_order"] = order
            idx["h_sorted"] = self.hole_jump_label[order]
        return idx

    def hole_jump_times(self, hole_label: int) -> np.ndarray:
        idx = self._hole_index()
        a = np.searchsorted(idx["h_sorted"], hole_label, side="left")
        b = np.searchsorted(idx["h_sorted"], hole_label, side="right")
        return self.hole_jump_t[idx["h_order"][a:b]]

    def hole_suppressed_times(self, hole_label: int) -> np.ndarray:
        return self.hole_sup_t[self.hole_sup_label == hole_label]

    def hole_position_at(self, hole_label: int, t: float) -> int:
        if self.hole_z is None:
            raise ValueError("holes were not tracked in this run")
        jt = self.hole_jump_times(hole_label)
        return self.hole_z + int(hole_label) - int(
            np.searchsorted(jt, t, side="right"))

    def hole_path(self, hole_label: int) -> tuple[np.ndarray, np.ndarray]:
        """(times, values) of a hole path; unit down-steps."""
        if self.hole_z is None:
            raise ValueError("holes were not tracked in this run")
        jt = self.hole_jump_times(hole_label)
        times = np.concatenate(([0.0], jt))
        vals = self.hole_z + int(hole_label) - np.arange(len(jt) + 1)
        return times, vals


@dataclass(frozen=True)
class HoleView:
    """Hole labels and their positions at one time."""
    labels: np.ndarray
    positions: np.ndarray

    def position_of(self, hole_label: int) -> int:
        i = np.flatnonzero(self.labels == hole_label)
        if len(i) == 0:
            raise KeyError(f"hole {hole_label} not tracked")
        return int(self.positions[i[0]])


@dataclass(frozen=True)
class DualityReport:
    holds: bool
    guard_ok: bool
    position: int
    hole_count: int


# ---------------------------------------------------------------------------
# evolve


def _realize_stationary(ic: Stationary, seed: SeedSpec) -> tuple[np.ndarray, np.ndarray]:
    """Occupancy -> (labels ascending, positions). Pure in (seed, ic)."""
    n_sites = ic.hi - ic.lo + 1
    k0, k1 = _rng.key_words_py(seed.master_seed & _rng.MASK64,
                               seed.replica_id & _rng.MASK64,
                               _rng.KIND_INIT, ic.salt & _rng.MASK64)
    u = np.empty(n_sites, dtype=np.float64)
    _rng.fill_uniforms(k0, k1, u)
    occ_sites = np.flatnonzero(u < ic.rho) + ic.lo
    if len(occ_sites) == 0:
        raise WindowError("stationary window realized no particles")
    desc = occ_sites[::-1]                     # positions descending
    j0 = int(np.searchsorted(-desc, 0, side="left"))  # first position <= 0
    labels = np.arange(len(desc), dtype=np.int64) - j0 + 1  # ascending
    return labels, np.ascontiguousarray(desc)


def _initial_state(ic: InitialCondition, source: Source,
                   n_labels: int | None, window: tuple[int, int] | None):
    """Resolve labels, initial positions, and (site mode) the window."""
    if isinstance(ic, Step):
        if n_labels is None:
            raise ValueError("step data need n_labels")
        labels = np.arange(ic.m, ic.m + n_labels, dtype=np.int64)
        x0 = ic.z - (labels - ic.m)
    elif isinstance(ic, Stationary):
        seed = source.seed if isinstance(source, StreamSource) else SeedSpec(0)
        labels, x0 = _realize_stationary(ic, seed)
        if window is None and isinstance(source, StreamSource) and source.mode == "site":
            window = (ic.lo, ic.hi)
    else:
        labels = np.array([l for l, _ in ic.particles], dtype=np.int64)
        x0 = np.array([p for _, p in ic.particles], dtype=np.int64)
    return labels, x0.astype(np.int64), window


def evolve(ic: InitialCondition, source: Source, horizon: float, *,
           wall: WallSpec | None = None,
           tracked: Sequence[int] = (),
           n_labels: int | None = None,
           window: tuple[int, int] | None = None,
           track_holes: bool = False,
           label_key_offset: int = 0,
           clamp: ClampSpec | None = None,
           schedule: Schedule | None = None) -> TrajectoryLog:
    """Run the process to the horizon and return its full event log.

    Site mode requires a window (defaulted for stationary data to the
    occupancy window); label mode simulates exactly the resolved labels.
    Wall-blocked attempts are logged apart from exclusion-suppressed ones.
    A clamp evolves only one side of a moving line (site mode only); in a
    right clamp, positions of removed particles read REMOVED.
    """
    h = float(horizon)
    if h < 0 or not math.isfinite(h):
        raise ValueError("horizon must be finite and >= 0")
    if wall is not None and wall.horizon < h:
        raise ValueError("wall horizon shorter than the run")
    if clamp is not None:
        if source.mode != "site":
            raise ValueError("clamped runs need site mode")
        if track_holes:
            raise ValueError("holes are tracked only in unclamped runs")
        if isinstance(ic, Stationary):
            raise ValueError("clamped runs need deterministic initial data")
    labels, x0, window = _initial_state(ic, source, n_labels, window)
    mode = source.mode
    ranks_tracked = []
    for lab in tracked:
        r = int(lab) - int(labels[0])
        if r < 0 or r >= len(labels) or labels[r] != lab:
            raise ValueError(f"tracked label {lab} not simulated")
        ranks_tracked.append(r)

    contam = isinstance(ic, Stationary)
    if contam:
        need = h + 5.0 * math.sqrt(h + 1.0) + 16.0
        if mode == "label":
            if ranks_tracked and min(ranks_tracked) < need:
                raise ValueError(
                    "stationary window too small: dependence cone of a "
                    "tracked label exits the simulated labels")
        else:
            # the front comes from the right edge; measure from the
            # rightmost tracked particle (the smallest tracked rank)
            if ranks_tracked and ic.hi - int(x0[min(ranks_tracked)]) < 2 * need:
                raise ValueError(
                    "stationary window too small on the right for the "
                    "tracked labels")

    if track_holes:
        if mode != "site" or not isinstance(ic, Step):
            raise ValueError("hole tracking needs site mode and step data")

    wt, wc, wv, winf = wall.arrays() if wall is not None else _NO_WALL

    if mode == "label":
        if schedule is None:
            schedule = build_schedule(source, h,
                                      labels=(int(labels[0]), int(labels[-1])),
                                      label_key_offset=label_key_offset)
        elif schedule.mode != "label" or schedule.base != int(labels[0]) \
                or schedule.nch != len(labels) or schedule.horizon < h \
                or schedule.label_key_offset != label_key_offset:
            raise ValueError("schedule does not match this run")
        sel = schedule.ev_t <= h
        ev_t = schedule.ev_t[sel] if not sel.all() else schedule.ev_t
        ev_ch = schedule.ev_ch[sel] if not sel.all() else schedule.ev_ch
        cap = len(ev_t)
        jt = np.empty(cap); ji = np.empty(cap, np.int64)
        st = np.empty(cap); si = np.empty(cap, np.int64)
        bt = np.empty(cap); bi = np.empty(cap, np.int64)
        pos = x0.copy()
        nj, ns, nb, cf = _kernels.label_kernel(
            ev_t, ev_ch, pos, wt, wc, wv, winf, contam, jt, ji, st, si, bt, bi)
        contact = bool(contam and ranks_tracked and cf >= min(ranks_tracked))
        return TrajectoryLog(
            mode=mode, horizon=h, labels=labels, x0=x0, xT=pos,
            jump_t=jt[:nj].copy(), jump_rank=ji[:nj].copy(),
            sup_t=st[:ns].copy(), sup_rank=si[:ns].copy(),
            wall_t=bt[:nb].copy(), wall_rank=bi[:nb].copy(),
            hole_jump_t=np.empty(0), hole_jump_label=np.empty(0, np.int64),
            hole_sup_t=np.empty(0), hole_sup_label=np.empty(0, np.int64),
            hole_z=None, tracked=tuple(int(l) for l in tracked),
            boundary_contact=contact, window=None, wall=wall, source=source,
            label_key_offset=label_key_offset, ic=ic)

    # site mode
    if window is None:
        raise ValueError("site mode needs a window")
    lo, hi = int(window[0]), int(window[1])
    if x0.min() < lo or x0.max() > hi:
        raise ValueError("initial positions outside the window")
    clamp_mode, line_a, line_b = 0, 0.0, 0.0
    if clamp is not None:
        clamp_mode = 1 if clamp.side == "right" else 2
        line_a, line_b = clamp.a - lo, clamp.b
        if clamp_mode == 1 and x0.max() > clamp.line(0.0):
            raise ValueError("initial positions above the clamp line")
    if schedule is None:
        schedule = build_schedule(source, h, window=(lo, hi))
    elif schedule.mode != "site" or schedule.base != lo \
            or schedule.nch != hi - lo + 1 or schedule.horizon < h:
        raise ValueError("schedule does not match this run")
    sel = schedule.ev_t <= h
    ev_t = schedule.ev_t[sel] if not sel.all() else schedule.ev_t
    ev_ch = schedule.ev_ch[sel] if not sel.all() else schedule.ev_ch

    W = hi - lo + 1
    occ = np.zeros(W + 1, dtype=np.uint8)
    plab = np.full(W + 1, -1, dtype=np.int64)
    occ[x0 - lo] = 1
    plab[x0 - lo] = np.arange(len(labels))
    hlab = np.full(W + 1, HNONE, dtype=np.int64)
    hole_z = None
    if track_holes:
        hole_z = ic.z
        empty = np.flatnonzero(occ[:W] == 0) + lo
        right = empty[empty > ic.z]
        hlab[right - lo] = right - ic.z

    cap = len(ev_t)
    jt = np.empty(cap); ji = np.empty(cap, np.int64)
    st = np.empty(cap); si = np.empty(cap, np.int64)
    bt = np.empty(cap); bi = np.empty(cap, np.int64)
    hcap = cap if track_holes else 0
    hjt = np.empty(hcap); hji = np.empty(hcap, np.int64)
    hst = np.empty(hcap); hsi = np.empty(hcap, np.int64)
    pos = x0.copy()
    nj, ns, nb, nhj, nhs, F_end, edge = _kernels.site_kernel(
        ev_t, ev_ch, occ, plab, pos, hlab, lo, wt, wc, wv, winf,
        clamp_mode, line_a, line_b, track_holes, contam, W,
        jt, ji, st, si, bt, bi, hjt, hji, hst, hsi)
    if edge and not contam:
        raise WindowError("particle reached the right edge of the window")
    contact = False
    if contam and ranks_tracked:
        right_pos = int(pos[min(ranks_tracked)])
        contact = F_end <= (right_pos - lo) + 2
    return TrajectoryLog(
        mode=mode, horizon=h, labels=labels, x0=x0, xT=pos,
        jump_t=jt[:nj].copy(), jump_rank=ji[:nj].copy(),
        sup_t=st[:ns].copy(), sup_rank=si[:ns].copy(),
        wall_t=bt[:nb].copy(), wall_rank=bi[:nb].copy(),
        hole_jump_t=hjt[:nhj].copy(), hole_jump_label=hji[:nhj].copy(),
        hole_sup_t=hst[:nhs].copy(), hole_sup_label=hsi[:nhs].copy(),
        hole_z=hole_z, tracked=tuple(int(l) for l in tracked),
        boundary_contact=contact, window=(lo, hi), wall=wall, source=source,
        label_key_offset=label_key_offset, ic=ic, clamp=clamp)


# ---------------------------------------------------------------------------
# holes and duality


def holes_of(log: TrajectoryLog, t: float | None = None,
             up_to: int | None = None) -> HoleView:
    """Hole labels 1..up_to and their positions at time t (default: the
    horizon; default up_to: the largest hole that ever moved or rang)."""
    if log.hole_z is None:
        raise ValueError("holes were not tracked in this run")
    tt = log.horizon if t is None else float(t)
    if up_to is None:
        labs = np.concatenate((log.hole_jump_label, log.hole_sup_label))
        up_to = int(labs.max()) if len(labs) else 1
    all_labs = np.arange(1, up_to + 1, dtype=np.int64)
    positions = np.array([log.hole_position_at(int(h), tt) for h in all_labs],
                         dtype=np.int64)
    return HoleView(labels=all_labs, positions=positions)


def duality_check(log: TrajectoryLog, N: int, t: float | None = None) -> DualityReport:
    """Particle/hole duality for step data: x_N(t) = -N + 1 + #{holes
    strictly left of x_N(t)}.

    Valid only while the deepest simulated label has not moved (then no
    hole can live below it); guard_ok reports that.
    """
    if not isinstance(log.ic, Step):
        raise ValueError("duality check applies to step initial data")
    tt = log.horizon if t is None else float(t)
    xs = log.positions_at(tt)
    guard_ok = bool(xs[-1] == log.x0[-1])
    rN = log.rank_of(N)
    xN = int(xs[rN])
    deep = int(xs[-1])
    inside = np.count_nonzero((xs > deep) & (xs < xN))
    holes = (xN - deep - 1) - inside
    holds = bool(xN == log.ic.z + log.ic.m - N + holes)
    return DualityReport(holds=holds, guard_ok=guard_ok,
                         position=xN, hole_count=int(holes))
