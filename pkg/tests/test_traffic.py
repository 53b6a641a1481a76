import itertools
import math

import numpy as np
import pytest
from scipy.stats import norm

from gatesim.model import GB, DelayedFile, ParamError
from gatesim.traffic import (
    TrafficParams,
    draw_deadline,
    dump_workload,
    generate_workload,
    load_workload,
    next_file,
    total_remaining,
)

DEFAULT_TRAFFIC = TrafficParams(mean_file_bytes=1.62 * GB, mean_iat_s=600.0, window_s=1800.0, rho=1.5, delta_frac=0.1)


def _f(i, deadline, remaining, fat=0.0):
    return DelayedFile(id=i, owner_ue=0, total_bytes=remaining, fat_s=fat, deadline_s=deadline)


def test_mean_total_bytes_near_68gb():
    totals = [sum(f.total_bytes for fl in generate_workload(DEFAULT_TRAFFIC, 14, np.random.default_rng(s)) for f in fl)
              for s in range(200)]
    expected = 14 * (1800 / 600) * 1.62 * GB
    assert expected == pytest.approx(68.04 * GB)
    assert np.mean(totals) == pytest.approx(expected, rel=0.05)


def test_empty_window():
    params = TrafficParams(1.62 * GB, 600.0, 0.0, 1.5, 0.1)
    assert generate_workload(params, 14, np.random.default_rng(0)) == [[] for _ in range(14)]


def test_single_ue_file_count_is_poisson_mean():
    counts = [len(generate_workload(DEFAULT_TRAFFIC, 1, np.random.default_rng(s))[0]) for s in range(10_000)]
    assert np.mean(counts) == pytest.approx(1800 / 600, rel=0.03)


def test_workload_is_pure_function_of_seed():
    a = generate_workload(DEFAULT_TRAFFIC, 5, np.random.default_rng(11))
    b = generate_workload(DEFAULT_TRAFFIC, 5, np.random.default_rng(11))
    assert a == b
    assert a != generate_workload(DEFAULT_TRAFFIC, 5, np.random.default_rng(12))


def test_longer_window_extends_each_ue():
    short = generate_workload(DEFAULT_TRAFFIC, 4, np.random.default_rng(3))
    long = generate_workload(TrafficParams(1.62 * GB, 600.0, 7200.0, 1.5, 0.1), 4, np.random.default_rng(3))
    for s, l in zip(short, long):
        assert [(f.fat_s, f.total_bytes) for f in s] == [(f.fat_s, f.total_bytes) for f in l[:len(s)]]


def test_generated_files_respect_window_and_deadlines():
    wl = generate_workload(DEFAULT_TRAFFIC, 14, np.random.default_rng(5))
    ids = [f.id for fl in wl for f in fl]
    assert len(ids) == len(set(ids))
    for ue, files in enumerate(wl):
        assert [f.fat_s for f in files] == sorted(f.fat_s for f in files)
        for f in files:
            assert f.owner_ue == ue
            assert 0 <= f.fat_s < DEFAULT_TRAFFIC.window_s
            assert f.deadline_s >= f.fat_s
            assert f.remaining_bytes == f.total_bytes > 0


def test_file_size_distribution():
    rng = np.random.default_rng(8)
    sizes = np.array([f.total_bytes for s in range(3500)
                      for fl in generate_workload(TrafficParams(1.62 * GB, 60.0, 1800.0, 1.5, 0.1), 1, rng)
                      for f in fl])
    assert sizes.size >= 100_000
    assert sizes.mean() == pytest.approx(1.62 * GB, rel=0.02)
    assert (sizes > 1.62 * GB).mean() == pytest.approx(math.exp(-1), abs=0.02)


def test_deadline_at_boundary_is_immediate():
    rng = np.random.default_rng(0)
    assert draw_deadline(1800.0, 1800.0, 1.5, 0.1, rng) == 1800.0


def test_deadline_after_grt_rejected():
    with pytest.raises(ParamError):
        draw_deadline(1801.0, 1800.0, 1.5, 0.1, np.random.default_rng(0))


def test_deadline_moments():
    rng = np.random.default_rng(1)
    rel = np.array([draw_deadline(0.0, 1800.0, 1.5, 0.1, rng) for _ in range(100_000)])
    assert rel.mean() == pytest.approx(2700.0, rel=0.02)
    assert rel.std() == pytest.approx(180.0, rel=0.02)


def test_deadlines_mostly_after_grt():
    rng = np.random.default_rng(2)
    fats = rng.uniform(0, 1800.0, 100_000)
    late = np.mean([draw_deadline(f, 1800.0, 1.5, 0.1, rng) >= 1800.0 for f in fats])
    assert 1 - norm.cdf(-5) > 0.999999
    assert late >= 0.99


def test_negative_draws_clamp_to_arrival():
    # mean 0, sd > 0: about half the draws clamp to exactly the arrival time
    rng = np.random.default_rng(3)
    d = np.array([draw_deadline(100.0, 200.0, 0.0, 0.1, rng) for _ in range(4000)])
    assert d.min() == 100.0
    assert np.mean(d == 100.0) == pytest.approx(0.5, abs=0.03)


def test_next_file_earliest_deadline():
    assert next_file([_f(0, 10.0, 5), _f(1, 5.0, 5)], 0.0).id == 1


def test_next_file_tie_on_remaining():
    assert next_file([_f(0, 10.0, 2_000_000), _f(1, 10.0, 1_000_000)], 0.0).id == 1


def test_next_file_none_when_done():
    done = _f(0, 1.0, 10)
    done.remaining_bytes = 0
    assert next_file([done], 0.0) is None
    assert next_file([], 0.0) is None
    assert next_file([_f(0, 50.0, 10, fat=20.0)], 10.0) is None


def _rule(a, b, now):
    """Hand-written pairwise winner of the SRTF rule."""
    if a.deadline_s - now != b.deadline_s - now:
        return a if a.deadline_s < b.deadline_s else b
    if a.remaining_bytes != b.remaining_bytes:
        return a if a.remaining_bytes < b.remaining_bytes else b
    return a if a.id < b.id else b


def test_next_file_pairwise_exhaustive():
    grid = list(itertools.product([1.0, 2.0, 3.0], [1, 2, 3], [0, 1]))
    for (d1, r1, i1), (d2, r2, i2) in itertools.product(grid, repeat=2):
        if i1 == i2:
            continue
        a, b = _f(i1, d1, r1), _f(i2, d2, r2)
        assert next_file([a, b], 0.5) is _rule(a, b, 0.5)
        assert next_file([b, a], 0.5) is _rule(a, b, 0.5)


def test_next_file_size_order():
    files = [_f(0, 5.0, 9), _f(1, 10.0, 3)]
    assert next_file(files, 0.0, order="size").id == 1
    assert next_file(files, 0.0).id == 0


def test_total_remaining():
    assert total_remaining([], 0.0) == 0
    assert total_remaining([_f(0, 9.0, 3 * GB), _f(1, 9.0, 5 * GB)], 1.0) == 8 * GB


def test_total_remaining_gates_on_arrival():
    rng = np.random.default_rng(4)
    files = [_f(i, 1e4, int(rng.integers(1, 10**9)), fat=float(rng.uniform(0, 100))) for i in range(30)]
    for now in (0.0, 25.0, 50.0, 99.0, 100.0):
        arrived = [f for f in files if f.fat_s <= now]
        assert total_remaining(files, now) == sum(f.remaining_bytes for f in arrived)
    # without gating every file would count
    assert total_remaining(files, 0.0) < sum(f.remaining_bytes for f in files)


def test_workload_csv_roundtrip(tmp_path):
    wl = generate_workload(DEFAULT_TRAFFIC, 6, np.random.default_rng(9))
    path = tmp_path / "wl.csv"
    dump_workload(wl, path)
    assert load_workload(path, 6) == wl
