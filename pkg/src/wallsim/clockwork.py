"""Keyed Poisson clocks.

A stream is a pure function of (seed, key): re-reading the same key to any
horizon yields the same event prefix, so coupled systems, restarts, and
backwards scans all see identical randomness without storing it. Site-keyed
streams realize the basic coupling, label-keyed streams the clock coupling.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from . import _rng
from ._rng import U64, poisson_cap


class KeyKind(IntEnum):
    SITE = _rng.KIND_SITE
    LABEL = _rng.KIND_LABEL


@dataclass(frozen=True, order=True)
class StreamKey:
    kind: KeyKind
    index: int


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus replica id; every stream key hashes both."""
    master_seed: int
    replica_id: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.master_seed < 2 ** 64):
            raise ValueError("master_seed must fit in 64 bits")
        if not (0 <= self.replica_id < 2 ** 64):
            raise ValueError("replica_id must fit in 64 bits")

    def with_replica(self, replica_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, replica_id)


@dataclass(frozen=True, eq=False)
class EventStream:
    key: StreamKey
    horizon: float
    times: np.ndarray  # strictly increasing, all in (0, horizon]


def _u64(x: int) -> np.uint64:
    return np.uint64(x & _rng.MASK64)


def _check_horizon(horizon: float) -> float:
    h = float(horizon)
    if not np.isfinite(h) or h < 0.0:
        raise ValueError("horizon must be finite and >= 0")
    return h


def stream_times(seed: SeedSpec, kind: int, index: int, horizon: float) -> np.ndarray:
    """Event times of one keyed stream, as an array."""
    h = _check_horizon(horizon)
    k0, k1 = _rng.key_words_py(_u64(seed.master_seed), _u64(seed.replica_id),
                               U64(int(kind)), _u64(int(index)))
    cap = poisson_cap(h)
    while True:
        out = np.empty(cap, dtype=np.float64)
        n = _rng.fill_stream(k0, k1, h, out)
        if n >= 0:
            return out[:n].copy()
        cap *= 2


def stream_events(seed: SeedSpec, key: StreamKey, horizon: float) -> EventStream:
    """The Poisson(1) event stream owned by (seed, key) up to horizon."""
    return EventStream(key=key, horizon=float(horizon),
                       times=stream_times(seed, key.kind, key.index, horizon))


def batch_times(seed: SeedSpec, kind: int, indices: np.ndarray,
                horizon: float) -> tuple[np.ndarray, np.ndarray]:
    """Streams for many indices of one kind: (flat times, offsets).

    Key i occupies flat[offsets[i]:offsets[i+1]], each slice strictly
    increasing.
    """
    h = _check_horizon(horizon)
    idx = np.ascontiguousarray(indices, dtype=np.int64).view(np.uint64)
    cap = poisson_cap(h)
    while True:
        out2d = np.empty((len(idx), cap), dtype=np.float64)
        counts = _rng.batch_fill(_u64(seed.master_seed), _u64(seed.replica_id),
                                 U64(int(kind)), idx, h, out2d)
        if not np.any(counts < 0):
            break
        cap *= 2
    mask = np.arange(cap) < counts[:, None]
    flat = out2d[mask]
    offsets = np.concatenate(([0], np.cumsum(counts)))
    return flat, offsets


def merge_flat(flat: np.ndarray, offsets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge per-channel sorted times into one schedule: (times, channels).

    Ties (possible only with scripted or degenerate inputs) break by channel
    order, which callers arrange to be (kind, index) ascending.
    """
    counts = np.diff(offsets)
    ch = np.repeat(np.arange(len(counts), dtype=np.int64), counts)
    order = np.argsort(flat, kind="quicksort")
    ts = flat[order]
    if ts.size > 1 and np.any(ts[1:] == ts[:-1]):
        order = np.lexsort((ch, flat))
        ts = flat[order]
    return ts, ch[order]


def merged_schedule(seed: SeedSpec, keys: Iterable[StreamKey],
                    horizon: float) -> list[tuple[float, StreamKey]]:
    """All events of the given keys in one chronological schedule.

    Duplicate keys are collapsed; ties order by (time, kind, index).
    """
    uniq: Sequence[StreamKey] = sorted(set(keys))
    if not uniq:
        return []
    h = _check_horizon(horizon)
    out_t = []
    out_k = []
    for kind in (KeyKind.SITE, KeyKind.LABEL):
        group = [k for k in uniq if k.kind == kind]
        if not group:
            continue
        idx = np.array([k.index for k in group], dtype=np.int64)
        flat, offsets = batch_times(seed, kind, idx, h)
        ts, ch = merge_flat(flat, offsets)
        out_t.append(ts)
        out_k.extend([group[c] for c in ch])
    if len(out_t) == 1:
        times = out_t[0]
        keys_sorted = out_k
    else:
        # two kinds: stable merge keeps the (time, kind, index) tie order
        times = np.concatenate(out_t)
        order = np.argsort(times, kind="stable")
        times = times[order]
        keys_sorted = [out_k[i] for i in order]
    return list(zip(times.tolist(), keys_sorted))
