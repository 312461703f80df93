"""Stream determinism, distribution, and merge-order tests."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wallsim import _rng
from wallsim.clockwork import (
    EventStream,
    KeyKind,
    SeedSpec,
    StreamKey,
    batch_times,
    merge_flat,
    merged_schedule,
    stream_events,
    stream_times,
)

SEED = SeedSpec(0x5EED_0001, 0)


def test_philox_matches_numpy_bitwise():
    # numpy's Philox buffers counter 1 first, so raw word j of our stream
    # equals word j of Generator-free random_raw on the same 128-bit key
    k0, k1 = _rng.key_words_py(2024, 5, 0, 2**64 - 7)
    raw = np.empty(64, np.uint64)
    _rng.fill_raw(k0, k1, raw)
    ref = np.random.Philox(key=(int(k0) | (int(k1) << 64))).random_raw(64)
    assert np.array_equal(raw, ref)


def test_gaps_are_inverse_cdf_of_raw_words():
    k0, k1 = _rng.key_words_py(1, 2, 1, 3)
    raw = np.random.Philox(key=(int(k0) | (int(k1) << 64))).random_raw(256)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    assert (u > 0).all() and (u <= 1).all()
    expected = np.cumsum(-np.log(u))
    got = stream_times(SeedSpec(1, 2), 1, 3, float(expected[-1]))
    assert len(got) == 256
    assert np.array_equal(got, expected)


def test_horizon_zero_is_empty():
    s = stream_events(SEED, StreamKey(KeyKind.SITE, 0), 0.0)
    assert isinstance(s, EventStream)
    assert len(s.times) == 0


def test_negative_or_nan_horizon_rejected():
    with pytest.raises(ValueError):
        stream_events(SEED, StreamKey(KeyKind.SITE, 0), -1.0)
    with pytest.raises(ValueError):
        stream_events(SEED, StreamKey(KeyKind.SITE, 0), float("nan"))


def test_seed_spec_validation():
    with pytest.raises(ValueError):
        SeedSpec(-1)
    with pytest.raises(ValueError):
        SeedSpec(2**64)
    assert SeedSpec(3).with_replica(9).replica_id == 9


@settings(max_examples=50, deadline=None)
@given(
    h1=st.floats(min_value=0.0, max_value=40.0),
    h2=st.floats(min_value=0.0, max_value=40.0),
    index=st.integers(min_value=-(2**62), max_value=2**62),
    kind=st.sampled_from([KeyKind.SITE, KeyKind.LABEL]),
)
def test_prefix_property(h1, h2, index, kind):
    lo, hi = sorted((h1, h2))
    a = stream_times(SEED, kind, index, lo)
    b = stream_times(SEED, kind, index, hi)
    assert len(a) <= len(b)
    assert np.array_equal(a, b[: len(a)])
    if len(b):
        assert b[0] > 0.0
        assert b[-1] <= hi
        assert (np.diff(b) > 0).all()


def test_distinct_keys_give_distinct_streams():
    base = stream_times(SEED, KeyKind.SITE, 0, 100.0)
    for seed, kind, index in [
        (SeedSpec(0x5EED_0001, 1), KeyKind.SITE, 0),
        (SeedSpec(0x5EED_0002, 0), KeyKind.SITE, 0),
        (SEED, KeyKind.LABEL, 0),
        (SEED, KeyKind.SITE, 1),
        (SEED, KeyKind.SITE, -1),
    ]:
        other = stream_times(seed, kind, index, 100.0)
        assert len(other) != len(base) or not np.array_equal(other, base)


def test_poisson_count_moments():
    # 10^4 keys read to horizon 100: sample mean within [99, 101] and
    # sample variance within [95, 105]
    idx = np.arange(10_000, dtype=np.int64)
    flat, off = batch_times(SeedSpec(777, 0), KeyKind.SITE, idx, 100.0)
    counts = np.diff(off).astype(np.float64)
    assert 99.0 <= counts.mean() <= 101.0
    assert 95.0 <= counts.var(ddof=1) <= 105.0


def test_gap_distribution_ks_vs_exponential():
    # one-sample KS on 10^5 gaps against Exp(1); 1% critical value
    k0, k1 = _rng.key_words_py(0x5EED_0001, 0, 0, 12)
    u = np.empty(100_000, dtype=np.float64)
    _rng.fill_uniforms(k0, k1, u)
    gaps = np.sort(-np.log(u))
    n = len(gaps)
    cdf = 1.0 - np.exp(-gaps)
    d_plus = np.max(np.arange(1, n + 1) / n - cdf)
    d_minus = np.max(cdf - np.arange(0, n) / n)
    ks = max(d_plus, d_minus)
    assert ks <= 1.6276 / np.sqrt(n)


def test_counts_across_keys_uncorrelated():
    idx = np.arange(2000, dtype=np.int64)
    flat, off = batch_times(SeedSpec(31337, 4), KeyKind.LABEL, idx, 100.0)
    counts = np.diff(off).astype(np.float64)
    a, b = counts[::2], counts[1::2]
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) <= 0.1


def test_merged_schedule_is_sorted_union():
    keys = [StreamKey(KeyKind.SITE, i) for i in range(-3, 4)]
    sched = merged_schedule(SEED, keys, 25.0)
    times = [t for t, _ in sched]
    assert times == sorted(times)
    union = np.sort(np.concatenate(
        [stream_times(SEED, k.kind, k.index, 25.0) for k in keys]))
    assert np.array_equal(np.array(times), union)
    # per-key subsequence matches that key's own stream
    for k in keys:
        own = [t for t, kk in sched if kk == k]
        assert np.array_equal(np.array(own),
                              stream_times(SEED, k.kind, k.index, 25.0))


def test_merged_schedule_dedupes_and_mixes_kinds():
    keys = [StreamKey(KeyKind.LABEL, 2), StreamKey(KeyKind.SITE, 1),
            StreamKey(KeyKind.LABEL, 2)]
    sched = merged_schedule(SEED, keys, 10.0)
    n_label = sum(1 for _, k in sched if k.kind == KeyKind.LABEL)
    assert n_label == len(stream_times(SEED, KeyKind.LABEL, 2, 10.0))


def test_merge_flat_breaks_ties_by_channel():
    flat = np.array([1.0, 2.0, 1.0, 3.0, 1.0])
    off = np.array([0, 2, 4, 5])
    ts, ch = merge_flat(flat, off)
    assert ts.tolist() == [1.0, 1.0, 1.0, 2.0, 3.0]
    assert ch.tolist() == [0, 1, 2, 0, 1]


def test_merged_schedule_horizon_zero():
    assert merged_schedule(SEED, [StreamKey(KeyKind.SITE, 0)], 0.0) == []


def test_batch_matches_singles():
    idx = np.array([-5, 0, 3, 2**40, -(2**40)], dtype=np.int64)
    flat, off = batch_times(SEED, KeyKind.SITE, idx, 60.0)
    for i, ix in enumerate(idx):
        single = stream_times(SEED, KeyKind.SITE, int(ix), 60.0)
        assert np.array_equal(flat[off[i]:off[i + 1]], single)
