"""Deterministic cube-root-scale arithmetic.

Constants and affine maps tying a tagged label's trajectory to its
rescaled fluctuation process, clean-profile curves, the two worked wall
shapes, and extraction of the wall's rescaled profile g. Everything here
is pure arithmetic; no randomness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .couplings import round_half_away
from .dynamics import TrajectoryLog, WallPiece, WallSpec


@dataclass(frozen=True)
class ScalingCoefficients:
    """Cube-root scale constants for watching label alpha*T around time
    alpha_i*T. mu(tau, T) is the affine-in-tau centering."""
    alpha: float
    alpha_i: float
    c1: float
    c2: float
    mu0: float      # T coefficient
    mu1: float      # tau*T^(2/3) coefficient

    def mu(self, tau: float | np.ndarray, T: float):
        return self.mu0 * T + self.mu1 * np.asarray(tau, dtype=float) * T ** (2.0 / 3.0)

    def probe_time(self, tau: float | np.ndarray, T: float):
        """Observation time for rescaled coordinate tau."""
        return self.alpha_i * T - self.c2 * np.asarray(tau, dtype=float) * T ** (2.0 / 3.0)

    def tau_of_time(self, t: float | np.ndarray, T: float):
        return (self.alpha_i * T - np.asarray(t, dtype=float)) / (self.c2 * T ** (2.0 / 3.0))


def coefficients(alpha: float, alpha_i: float) -> ScalingCoefficients:
    if not 0.0 < alpha < alpha_i < 1.0:
        raise ValueError("need 0 < alpha < alpha_i < 1")
    ra, ri = math.sqrt(alpha), math.sqrt(alpha_i)
    c1 = (ri - ra) ** (2.0 / 3.0) * alpha_i ** (1.0 / 6.0) / alpha ** (1.0 / 6.0)
    c2 = 2.0 * (ri - ra) ** (1.0 / 3.0) * alpha_i ** (5.0 / 6.0) / alpha ** (1.0 / 3.0)
    mu0 = ri * (ri - 2.0 * ra)
    mu1 = -2.0 * (ri - ra) ** (4.0 / 3.0) * alpha_i ** (1.0 / 3.0) / alpha ** (1.0 / 3.0)
    return ScalingCoefficients(alpha, alpha_i, c1, c2, mu0, mu1)


def step_coefficient(alpha: float) -> float:
    """Cube-root fluctuation constant of label alpha*T observed at time T."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("need alpha in (0,1)")
    return (1.0 - math.sqrt(alpha)) ** (2.0 / 3.0) / alpha ** (1.0 / 6.0)


def lln(alpha: float, T: float, t: float | np.ndarray):
    """Leading-order position of label alpha*T at time t >= alpha*T."""
    t = np.asarray(t, dtype=float)
    if np.any(t < alpha * T):
        raise ValueError("clean profile needs t >= alpha*T")
    out = (1.0 - 2.0 * np.sqrt(alpha * T / t)) * t
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class WindowParams:
    """One bulk density alpha with observation windows at densities
    alpha < windows[0] < ... < 1, a wall offset xi, and the half-width
    eps of the excluded regions around each window (K_eps is the off-window
    wall-margin constant)."""
    alpha: float
    windows: tuple[float, ...]
    xi: float
    eps: float
    K_eps: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "windows", tuple(float(w) for w in self.windows))
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0,1)")
        if not self.windows:
            raise ValueError("need at least one window")
        prev = self.alpha
        for w in self.windows:
            if not prev < w < 1.0:
                raise ValueError("windows must ascend strictly within (alpha, 1)")
            prev = w
        ra = math.sqrt(self.alpha)
        if not -self.alpha < self.xi < 1.0 - 2.0 * ra:
            raise ValueError("xi outside (-alpha, 1-2*sqrt(alpha))")
        if not 0.0 < self.eps < self.windows[0] - self.alpha:
            raise ValueError("eps outside (0, windows[0]-alpha)")

    def coefficients(self, i: int) -> ScalingCoefficients:
        return coefficients(self.alpha, self.windows[i])

    def tagged_label(self, T: float) -> int:
        return round_half_away(self.alpha * T)


def f0(beta, xi: float, alpha: float):
    """Scaled lower wall profile: sqrt-shaped on [0, 1-alpha), constant
    xi+alpha after; continuous at the seam."""
    b = np.asarray(beta, dtype=float)
    if np.any((b < 0.0) | (b > 1.0)):
        raise ValueError("beta outside [0,1]")
    root = np.sqrt(np.maximum(1.0 - b, 0.0))
    curved = xi - root * (root - 2.0 * math.sqrt(alpha))
    out = np.where(b < 1.0 - alpha, curved, xi + alpha)
    return float(out) if out.ndim == 0 else out


def wall_constants(alpha: float, alpha_i: float, xi: float) -> tuple[float, float]:
    """Intercept-and-slope pair (c_i, v_i) of the affine wall piece tuned
    to window alpha_i."""
    c = xi - (1.0 - math.sqrt(alpha / alpha_i) - math.sqrt(alpha * alpha_i))
    v = 1.0 - math.sqrt(alpha / alpha_i)
    return c, v


def example1_wall(alpha: float, a0: float, a1: float, xi: float,
                  T: float) -> WallSpec:
    """Two-piece affine wall: the faster piece (tuned to a1) on
    [0, (2-a0-a1)T/2), then the slower piece (tuned to a0) up to T.
    The seam jump is upward. Rejects parameter choices with a negative
    intercept."""
    if not 0.0 < alpha < a0 < a1 < 1.0:
        raise ValueError("need 0 < alpha < a0 < a1 < 1")
    c0, v0 = wall_constants(alpha, a0, xi)
    c1, v1 = wall_constants(alpha, a1, xi)
    if c0 < 0.0 or c1 < 0.0:
        raise ValueError(
            f"negative wall intercept (c0={c0:.6g}, c1={c1:.6g}); raise xi")
    seam = (2.0 - a0 - a1) * T / 2.0
    if c1 * T + v1 * seam > c0 * T + v0 * seam:
        raise ValueError("seam jump is not upward; invalid parameters")
    return WallSpec(pieces=(WallPiece(t0=0.0, c=c1 * T, v=v1),
                            WallPiece(t0=seam, c=c0 * T, v=v0)),
                    horizon=T)


def example2_wall(alpha: float, a0: float, a1: float, xi: float,
                  T: float) -> WallSpec:
    """Same as example1_wall on [0, (1-a0)T], infinite afterwards
    (constraint released just after (1-a0)T)."""
    base = example1_wall(alpha, a0, a1, xi, T)
    release = math.nextafter((1.0 - a0) * T, math.inf)
    return WallSpec(pieces=base.pieces + (WallPiece(t0=release, c=math.inf,
                                                    v=0.0, infinite=True),),
                    horizon=T)


def _affine_extended_value(wall: WallSpec, times: np.ndarray) -> np.ndarray:
    """Wall values with the first/last piece extended affinely beyond
    [0, horizon]; infinite pieces give +inf."""
    wt, wc, wv, winf = wall.arrays()
    idx = np.clip(np.searchsorted(wt, times, side="right") - 1, 0, len(wt) - 1)
    vals = wc[idx] + wv[idx] * times
    return np.where(winf[idx], np.inf, vals)


def g_window_radius(params: WindowParams, i: int, T: float) -> float:
    """Half-width of the tau range on which the wall profile extraction
    is meaningful."""
    co = params.coefficients(i)
    return params.eps / co.c2 * T ** (1.0 / 3.0)


@dataclass(frozen=True)
class GValues:
    i: int
    tau: np.ndarray
    g: np.ndarray                 # +inf where the wall is infinite
    extrapolated: np.ndarray      # True where tau leaves the meaningful range

    def finite(self) -> np.ndarray:
        return np.isfinite(self.g)


def g_from_wall(wall: WallSpec, params: WindowParams, i: int,
                tau_grid, T: float) -> GValues:
    """Rescaled wall profile around window i:
    g(tau) = tau^2 + (f(T-t) - xi*T + mu(tau,T)) / (c1*T^(1/3)),
    with T-t = (1-alpha_i)T + c2*tau*T^(2/3). Outside |tau| <= radius, or
    where T-t leaves [0, T], values are affine extrapolations and flagged."""
    co = params.coefficients(i)
    tau = np.asarray(tau_grid, dtype=float)
    back = (1.0 - co.alpha_i) * T + co.c2 * tau * T ** (2.0 / 3.0)
    fvals = _affine_extended_value(wall, back)
    g = tau ** 2 + (fvals - params.xi * T + co.mu(tau, T)) / (co.c1 * T ** (1.0 / 3.0))
    radius = g_window_radius(params, i, T)
    extra = (np.abs(tau) > radius) | (back < 0.0) | (back > wall.horizon)
    return GValues(i, tau, g, extra)


def wall_value_from_g(gval, params: WindowParams, i: int, tau, T: float):
    """Pointwise inverse of g_from_wall: the wall value f(T-t) realizing a
    given profile value at tau."""
    co = params.coefficients(i)
    tau = np.asarray(tau, dtype=float)
    g = np.asarray(gval, dtype=float)
    out = (params.xi * T - co.mu(tau, T)
           - co.c1 * (tau ** 2 - g) * T ** (1.0 / 3.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RescaledSample:
    i: int
    tau: np.ndarray
    values: np.ndarray      # rescaled positions of the tagged label
    gvals: np.ndarray


def rescale(log: TrajectoryLog, params: WindowParams, i: int, tau_grid,
            T: float | None = None, *, wall: WallSpec | None = None,
            label: int | None = None) -> RescaledSample:
    """Rescaled trajectory of the tagged label over a tau grid:
    X(tau) = (x_N(probe_time(tau)) - mu(tau,T)) / (-c1*T^(1/3)).

    T defaults to the log horizon. gvals come from the given wall (or the
    log's own wall); with no wall at all the clean profile g = tau^2 is
    reported."""
    if T is None:
        T = log.horizon
    co = params.coefficients(i)
    tau = np.asarray(tau_grid, dtype=float)
    times = co.probe_time(tau, T)
    if np.any(times < 0.0) or np.any(times > log.horizon):
        raise ValueError("tau grid probes outside the simulated horizon")
    N = params.tagged_label(T) if label is None else int(label)
    jt = log.jump_times(N)
    pos = int(log.x0[log.rank_of(N)]) + np.searchsorted(jt, times, side="right")
    vals = (pos - co.mu(tau, T)) / (-co.c1 * T ** (1.0 / 3.0))
    w = wall if wall is not None else log.wall
    if w is None:
        gv = tau ** 2
    else:
        gv = g_from_wall(w, params, i, tau, T).g
    return RescaledSample(i, tau, vals, gv)


def sup_grid(log: TrajectoryLog, params: WindowParams, i: int,
             varkappa: float, T: float | None = None, *,
             label: int | None = None, fill: float = 0.01) -> np.ndarray:
    """Tau grid for sup functionals over [-varkappa, varkappa]: a uniform
    fill plus every event time of the tagged label mapped into tau, so the
    supremum of the piecewise-constant rescaled path is attained on the
    grid."""
    if T is None:
        T = log.horizon
    if varkappa < 0:
        raise ValueError("varkappa must be >= 0")
    if varkappa == 0.0:
        return np.asarray([0.0])
    co = params.coefficients(i)
    n = max(2, int(math.ceil(2.0 * varkappa / fill)) + 1)
    base = np.linspace(-varkappa, varkappa, n)
    N = params.tagged_label(T) if label is None else int(label)
    ev = co.tau_of_time(log.jump_times(N), T)
    ev = ev[(ev >= -varkappa) & (ev <= varkappa)]
    return np.unique(np.concatenate((base, ev)))


def sup_functional(log: TrajectoryLog, params: WindowParams, i: int,
                   varkappa: float, T: float | None = None, *,
                   wall: WallSpec | None = None,
                   label: int | None = None) -> float:
    """V_i = sup over |tau| <= varkappa of X(tau) + tau^2 - g(tau).

    With a wall in play the sup is restricted to the window on which the
    profile extraction is meaningful, |tau| <= min(varkappa, radius):
    beyond the radius g is a formal affine extension, and near-seam values
    there belong to the neighbouring window's profile, not this one's.

    An empty grid (varkappa with no admissible tau) reports 0."""
    if T is None:
        T = log.horizon
    kap = varkappa
    if (wall if wall is not None else log.wall) is not None:
        kap = min(kap, g_window_radius(params, i, T))
    grid = sup_grid(log, params, i, kap, T, label=label)
    if grid.size == 0:
        return 0.0
    rs = rescale(log, params, i, grid, T, wall=wall, label=label)
    return float(np.max(rs.values + rs.tau ** 2 - rs.gvals))


def assumption_a_margin(wall: WallSpec, params: WindowParams, T: float,
                        n_grid: int = 1000) -> float:
    """Minimum of (f(T-t) - T*f0((T-t)/T))/T over observation times t
    outside every eps-window around the alpha_i*T; positive margins mean
    the wall stays uniformly above the scaled lower profile off-window."""
    t = np.linspace(0.0, T, n_grid)
    mask = np.ones(len(t), dtype=bool)
    for a_i in params.windows:
        mask &= np.abs(t - a_i * T) > params.eps * T
    t = t[mask]
    if t.size == 0:
        raise ValueError("grid too coarse: no off-window points")
    back = T - t
    fvals = _affine_extended_value(wall, back)
    lower = T * f0(back / T, params.xi, params.alpha)
    margin = (fvals - lower) / T
    return float(np.min(margin[np.isfinite(margin)], initial=np.inf))
