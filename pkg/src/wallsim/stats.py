"""Small exact statistics helpers for Monte Carlo reports."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample with a right-continuous ECDF."""
    samples: np.ndarray = field()

    def __post_init__(self) -> None:
        s = np.sort(np.asarray(self.samples, dtype=float))
        if s.size == 0:
            raise ValueError("empty sample set")
        if not np.all(np.isfinite(s)):
            raise ValueError("non-finite samples")
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return int(self.samples.size)

    def cdf(self, x) -> np.ndarray | float:
        out = np.searchsorted(self.samples, np.asarray(x, dtype=float),
                              side="right") / self.n
        return float(out) if out.ndim == 0 else out

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.samples, q))


def ecdf(samples, x):
    return EmpiricalDistribution(np.asarray(samples)).cdf(x)


def ks_distance(a, b) -> float:
    """Exact two-sample sup distance, evaluated at every sample point."""
    fa = EmpiricalDistribution(np.asarray(a))
    fb = EmpiricalDistribution(np.asarray(b))
    pts = np.concatenate((fa.samples, fb.samples))
    return float(np.max(np.abs(fa.cdf(pts) - fb.cdf(pts))))


def dkw_halfwidth(n: int, delta: float = 0.01) -> float:
    """Uniform ECDF confidence half-width at level 1 - delta."""
    if n < 1 or not 0.0 < delta < 1.0:
        raise ValueError("need n >= 1 and delta in (0,1)")
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def pearson(a, b) -> float:
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.size != y.size or x.size < 2:
        raise ValueError("need two equal-length samples, n >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    den = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if den == 0.0:
        raise ValueError("zero variance")
    return float(xc @ yc) / den


def se_bernoulli(p_hat: float, n: int) -> float:
    if n < 1:
        raise ValueError("need n >= 1")
    return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)


def joint_vs_product_distance(a, b) -> float:
    """Sup distance between the joint ECDF of paired samples (a, b) and the
    product of their marginal ECDFs, over the grid of observed coordinates."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.size != y.size or x.size == 0:
        raise ValueError("need paired samples")
    n = x.size
    ux = np.unique(x)
    uy = np.unique(y)
    ix = np.searchsorted(ux, x)
    iy = np.searchsorted(uy, y)
    counts = np.zeros((ux.size, uy.size))
    np.add.at(counts, (ix, iy), 1.0)
    joint = counts.cumsum(axis=0).cumsum(axis=1) / n
    fx = np.searchsorted(np.sort(x), ux, side="right") / n
    fy = np.searchsorted(np.sort(y), uy, side="right") / n
    return float(np.max(np.abs(joint - np.outer(fx, fy))))
