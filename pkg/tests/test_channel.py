import itertools
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gatesim.channel import (
    BlockageStream,
    build_capacity_table,
    capacity_bps,
    draw_link_probabilities,
    enumerate_mappings,
    path_loss_db,
    sample_blockage,
    sinr_linear,
)
from gatesim.model import Assignment, ChannelConfig, NotServed, ScenarioConfig, validate

CFG = validate(ScenarioConfig())
CH = CFG.channel


def _fspl_1m(freq_hz):
    wavelength = 299_792_458.0 / freq_hz
    return 20 * math.log10(4 * math.pi / wavelength)


def test_path_loss_examples():
    assert _fspl_1m(60e9) == pytest.approx(68.0, abs=0.05)
    assert path_loss_db(1.0, CH) == pytest.approx(68.0, abs=0.05)
    assert path_loss_db(10.0, CH) == pytest.approx(88.0, abs=0.05)
    assert path_loss_db(1.0, CH) == _fspl_1m(60e9)


def test_path_loss_array_matches_scalar():
    d = np.array([0.01, 0.5, 1.0, 7.3, 40.0])
    assert np.allclose(path_loss_db(d, CH), [path_loss_db(float(v), CH) for v in d], rtol=0, atol=1e-12)


@given(d1=st.floats(0.1, 100.0), d2=st.floats(0.1, 100.0), n=st.floats(1.5, 4.0))
def test_path_loss_monotone(d1, d2, n):
    ch = ChannelConfig(pathloss_exponent=n)
    if d1 < d2:
        assert path_loss_db(d1, ch) <= path_loss_db(d2, ch)


def _one_ap(x=10.0, y=5.0):
    aps = [(x, y, 3.0)]
    ues = {0: (x, y)}
    return aps, ues


def test_single_ap_sinr_is_snr():
    aps, ues = _one_ap()
    a = Assignment(pairs={0: 0})
    got = sinr_linear(a, 0, aps, ues, None, CFG)
    d = 2.0  # ceiling 3 m, handset 1 m
    rx = CFG.ap_tx_dbm + 2 * CH.main_lobe_gain_db - (_fspl_1m(60e9) + 20 * math.log10(d))
    noise = -174 + 10 * math.log10(CFG.ap_bandwidth_hz) + CH.noise_figure_db
    assert got == pytest.approx(10 ** ((rx - noise) / 10), rel=1e-9)


def test_unserved_ue_raises():
    aps, ues = _one_ap()
    with pytest.raises(NotServed):
        sinr_linear(Assignment(pairs={0: 0}), 5, aps, {**ues, 5: (1.0, 1.0)}, None, CFG)


def test_colocated_equal_lobes_sinr_below_one():
    cfg = CFG.replace(channel__side_lobe_gain_db=CH.main_lobe_gain_db)
    aps = [(10.0, 5.0, 3.0), (10.0, 5.0, 3.0)]
    ues = {0: (10.0, 5.0), 1: (10.0, 5.0)}
    assert sinr_linear(Assignment(pairs={0: 0, 1: 1}), 0, aps, ues, None, cfg) < 1.0


def test_blockage_cuts_snr_by_loss():
    cfg = CFG.replace(channel__blockage_loss_db=25.0, ap_tx_dbm=60.0)
    aps, ues = _one_ap()
    a = Assignment(pairs={0: 0})
    clear = sinr_linear(a, 0, aps, ues, [[False]], cfg)
    blocked = sinr_linear(a, 0, aps, ues, [[True]], cfg)
    assert clear / blocked == pytest.approx(10 ** 2.5, rel=1e-9)


def test_capacity_examples():
    assert capacity_bps(1.0, CFG) == pytest.approx(1.512e9)
    assert capacity_bps(0.0, CFG) == 0.0
    assert capacity_bps(3.0, CFG) == pytest.approx(3.024e9)


@given(a=st.floats(0, 1e6), b=st.floats(0, 1e6))
def test_capacity_monotone(a, b):
    if a <= b:
        assert capacity_bps(a, CFG) <= capacity_bps(b, CFG)


def _brute_mappings(num_aps, num_ues):
    choices = list(range(num_ues)) + [None]
    out = []
    for m in itertools.product(choices, repeat=num_aps):
        used = [u for u in m if u is not None]
        if used and len(used) == len(set(used)):
            out.append(m)
    return out


@pytest.mark.parametrize("num_aps,num_ues", [(1, 3), (2, 3), (3, 4), (4, 5), (2, 1)])
def test_enumeration_matches_itertools(num_aps, num_ues):
    rows, _ = enumerate_mappings(num_aps, num_ues)
    got = [tuple(None if j == num_ues else int(j) for j in r) for r in rows]
    # idle sorts after every UE index
    assert got == sorted(_brute_mappings(num_aps, num_ues), key=lambda m: [num_ues if u is None else u for u in m])


def _table(num_aps, num_ues, seed=0):
    rng = np.random.default_rng(seed)
    cfg = CFG.replace(num_aps=num_aps, num_ues=num_ues, gate_geometry__ap_positions=None)
    ue_xy = np.column_stack([rng.uniform(0, 20, num_ues), rng.uniform(0, 10, num_ues)])
    return cfg, ue_xy, build_capacity_table(range(num_ues), ue_xy, np.array(cfg.ap_positions), None, cfg)


def test_table_counts():
    assert len(_table(1, 3)[2]) == 3
    assert len(_table(2, 3)[2]) == 12
    assert _table(4, 14)[2].full_mapping_count() == 14 * 13 * 12 * 11 == 24024


def test_table_build_time():
    cfg, ue_xy, _ = _table(4, 14)
    _table(4, 14)
    t0 = time.perf_counter()
    build_capacity_table(range(14), ue_xy, np.array(cfg.ap_positions), None, cfg)
    assert time.perf_counter() - t0 < 0.1


@pytest.mark.parametrize("num_aps", [1, 2, 3, 4])
def test_table_entries_match_link_by_link(num_aps):
    cfg, ue_xy, table = _table(num_aps, 4, seed=num_aps)
    aps = cfg.ap_positions
    ues = {i: tuple(ue_xy[i]) for i in range(4)}
    for mapping, caps in table.entries():
        a = Assignment(pairs={ap: u for ap, u in enumerate(mapping) if u is not None})
        sinrs = table.sinr(mapping)
        for ap, u in a.pairs.items():
            direct = sinr_linear(a, u, aps, ues, None, cfg)
            assert sinrs[ap] == pytest.approx(direct, rel=1e-12)
            assert caps[ap] == pytest.approx(capacity_bps(direct, cfg), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_adding_interferer_never_helps(seed):
    cfg, ue_xy, table = _table(3, 3, seed=seed)
    by = table.sinr_by_mask
    # AP 0 serving UE 0 alone vs with APs 1 and 2 on
    assert by[0b011, 0, 0] <= by[0b001, 0, 0]
    assert by[0b111, 0, 0] <= by[0b011, 0, 0]


def test_zero_pmax_never_blocks():
    ch = ChannelConfig(blockage_prob_max=0.0)
    rng = np.random.default_rng(0)
    p = draw_link_probabilities(4, 14, ch, rng)
    stream = BlockageStream(p, rng)
    assert not any(stream[n].any() for n in range(2000))


def test_blocked_fraction_tracks_probability():
    rng = np.random.default_rng(1)
    p = np.full((1, 1), 0.1)
    hits = np.mean([sample_blockage(p, rng)[0, 0] for _ in range(20_000)])
    assert hits == pytest.approx(0.1, abs=0.01)


def test_blockage_stream_is_random_access():
    p = np.full((2, 3), 0.3)
    a = BlockageStream(p, np.random.default_rng(5))
    b = BlockageStream(p, np.random.default_rng(5))
    late = a[1500].copy()
    for n in range(1501):
        b[n]
    assert np.array_equal(b[1500], late)


def test_link_probabilities_within_bounds():
    p = draw_link_probabilities(4, 14, CH, np.random.default_rng(2))
    assert p.shape == (4, 14)
    assert np.all((p >= 0) & (p <= CH.blockage_prob_max))
