import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import majam
from majam import simulator as sim


def small_config(**kw):
    alg = majam.AlgorithmParams(monte_carlo_runs=kw.pop("runs", 6), t2_max=15,
                                t1_max=6)
    return majam.make_config(algorithm=alg, **kw)


# ---------------------------------------------------------------------------
# BS precoding
# ---------------------------------------------------------------------------

def test_zero_forcing_nulls_cross_terms(scenario, default_config):
    precoder = majam.build_bs_precoder(scenario, default_config)
    direct = np.stack([e.direct_channel for e in scenario])
    cross = direct.conj() @ precoder.matrix
    off = cross - np.diag(np.diag(cross))
    assert np.max(np.abs(off)) < 1e-9
    total = np.linalg.norm(precoder.matrix) ** 2
    assert total == pytest.approx(default_config.bs_power_w, abs=1e-9)


def test_mrt_matches_zf_for_single_user(default_config):
    cfg = dataclasses.replace(default_config, n_users=1)
    envs = majam.sample_scenario(cfg, majam.realization_rng(5, 0))[:1]
    direct = np.stack([e.direct_channel for e in envs])
    w_zf = majam.bs_precoder(direct, cfg, "zf").matrix[:, 0]
    w_mrt = majam.bs_precoder(direct, cfg, "mrt").matrix[:, 0]
    corr = abs(np.vdot(w_zf, w_mrt)) / (np.linalg.norm(w_zf)
                                        * np.linalg.norm(w_mrt))
    assert corr == pytest.approx(1.0, rel=1e-12)
    assert np.linalg.norm(w_zf) ** 2 == pytest.approx(cfg.bs_power_w, rel=1e-12)


def test_degenerate_channels_raise(default_config):
    h = np.ones((2, 4), dtype=complex)   # two identical users
    cfg = dataclasses.replace(default_config, n_users=2)
    with pytest.raises(sim.DegenerateChannelError):
        majam.bs_precoder(h, cfg, "zf")


def test_unknown_scheme_rejected(scenario, default_config):
    direct = np.stack([e.direct_channel for e in scenario])
    with pytest.raises(ValueError):
        majam.bs_precoder(direct, default_config, "dirty")


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------

def loop_rate_oracle(k, direct, precoder, jam_channels, beams, noise):
    """Independent re-implementation of the rate expression with loops."""
    h = direct[k]
    signal = abs(np.sum(np.conj(h) * precoder.matrix[:, k])) ** 2
    intra = 0.0
    for j in range(precoder.matrix.shape[1]):
        if j != k:
            intra += abs(np.sum(np.conj(h) * precoder.matrix[:, j])) ** 2
    jam = 0.0
    for j in range(beams.shape[1]):
        jam += abs(np.sum(np.conj(jam_channels[k]) * beams[:, j])) ** 2
    return math.log2(1.0 + signal / (intra + jam + noise))


def test_user_rate_matches_loop_oracle(default_config, scenario):
    rng = np.random.default_rng(0)
    precoder = majam.build_bs_precoder(scenario, default_config)
    direct = np.stack([e.direct_channel for e in scenario])
    positions = majam.fpa_layout(default_config)
    jam_ch = majam.jammer_channels(positions, scenario,
                                   default_config.wavelength_m)
    beams = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    beams *= np.sqrt(default_config.jammer_power_w) / np.linalg.norm(beams)
    report = majam.rate_report(scenario, precoder, jam_ch, beams,
                               default_config)
    for k in range(4):
        oracle = loop_rate_oracle(k, direct, precoder, jam_ch, beams,
                                  default_config.noise_power_w)
        assert majam.user_rate(k, direct, precoder, jam_ch, beams,
                               default_config.noise_power_w) \
            == pytest.approx(oracle, rel=1e-12)
        assert report.rates[k] == pytest.approx(oracle, rel=1e-12)
    assert report.sum_rate == pytest.approx(float(report.rates.sum()), rel=1e-12)
    assert np.array_equal(report.outage,
                          report.rates < default_config.rate_threshold_bps_hz)


def test_zero_forcing_rate_closed_form(default_config, scenario):
    """With no jamming, the ZF rate reduces to log2(1 + (P/K) g / noise)."""
    precoder = majam.build_bs_precoder(scenario, default_config)
    direct = np.stack([e.direct_channel for e in scenario])
    raw = np.linalg.pinv(direct.conj())
    beams = np.zeros((4, 4), dtype=complex)
    jam_ch = np.zeros((4, 4), dtype=complex)
    for k in range(4):
        effective_gain = 1.0 / np.linalg.norm(raw[:, k]) ** 2
        expected = math.log2(
            1.0 + (default_config.bs_power_w / 4) * effective_gain
            / default_config.noise_power_w)
        got = majam.user_rate(k, direct, precoder, jam_ch, beams,
                              default_config.noise_power_w)
        assert got == pytest.approx(expected, rel=1e-9)


def test_rate_is_one_at_unit_snr():
    direct = np.ones((1, 1), dtype=complex)
    noise = 1e-11
    precoder = sim.BsPrecoder(matrix=np.array([[np.sqrt(noise)]], dtype=complex),
                              scheme="zf", per_user_power=np.array([noise]))
    rate = majam.user_rate(0, direct, precoder,
                           np.zeros((1, 1), dtype=complex),
                           np.zeros((1, 1), dtype=complex), noise)
    assert rate == pytest.approx(1.0, rel=1e-12)


def test_rate_vanishes_under_huge_jamming(default_config, scenario):
    precoder = majam.build_bs_precoder(scenario, default_config)
    direct = np.stack([e.direct_channel for e in scenario])
    positions = majam.fpa_layout(default_config)
    jam_ch = majam.jammer_channels(positions, scenario,
                                   default_config.wavelength_m)
    k = 0
    beam = np.sqrt(1e6) * jam_ch[k] / np.linalg.norm(jam_ch[k])
    beams = np.zeros((4, 4), dtype=complex)
    beams[:, k] = beam
    rate = majam.user_rate(k, direct, precoder, jam_ch, beams,
                           default_config.noise_power_w)
    assert rate < 1e-3


# ---------------------------------------------------------------------------
# Outage aggregation
# ---------------------------------------------------------------------------

def report_with_outage(flags):
    k = len(flags)
    rates = np.where(flags, 0.5, 2.0)
    return sim.RateReport(rates=rates, sum_rate=float(rates.sum()),
                          outage=np.asarray(flags, dtype=bool),
                          signal_power=np.ones(k), intra_power=np.zeros(k),
                          jam_power=np.zeros(k), noise_power=np.ones(k),
                          jam_objective=0.0)


def test_system_outage_zero_when_no_flags():
    reports = [report_with_outage([False, False]) for _ in range(10)]
    summary = majam.system_outage(reports)
    assert summary.p_system_indep == 0.0
    assert summary.p_system_empirical == 0.0
    assert summary.user_outage_fraction == 0.0


def test_system_outage_half_half():
    # Two users, each in outage in half the realizations -> 1 - 0.25.
    reports = [report_with_outage([i % 2 == 0, i % 2 == 1]) for i in range(10)]
    summary = majam.system_outage(reports)
    assert summary.per_user == pytest.approx([0.5, 0.5])
    assert summary.p_system_indep == pytest.approx(0.75)
    assert summary.p_system_empirical == 1.0
    assert summary.user_outage_fraction == pytest.approx(0.5)


@given(st.lists(st.lists(st.booleans(), min_size=3, max_size=3),
                min_size=1, max_size=40))
def test_system_outage_union_bound_sandwich(flag_matrix):
    reports = [report_with_outage(flags) for flags in flag_matrix]
    summary = majam.system_outage(reports)
    assert summary.p_system_indep >= summary.per_user.max() - 1e-12
    assert summary.p_system_indep <= min(1.0, summary.per_user.sum()) + 1e-12


def test_system_outage_needs_reports():
    with pytest.raises(ValueError):
        majam.system_outage([])


# ---------------------------------------------------------------------------
# Realizations
# ---------------------------------------------------------------------------

def test_run_realization_none_mode_has_zero_jamming():
    cfg = small_config()
    report = majam.run_realization(cfg, majam.realization_rng(1, 0), "none")
    assert np.all(report.jam_power == 0.0)
    assert report.jam_objective == 0.0


def test_run_realization_deterministic():
    cfg = small_config()
    a = majam.run_realization(cfg, majam.realization_rng(1, 3), "ma-partial")
    b = majam.run_realization(cfg, majam.realization_rng(1, 3), "ma-partial")
    assert np.array_equal(a.rates, b.rates)
    assert a.jam_objective == b.jam_objective


def test_ma_objective_dominates_fpa_per_instance():
    cfg = small_config()
    for r in range(4):
        ma = majam.run_realization(cfg, majam.realization_rng(1, r), "ma-partial")
        fpa = majam.run_realization(cfg, majam.realization_rng(1, r),
                                    "fpa-partial")
        assert ma.jam_objective >= fpa.jam_objective - 1e-12


def test_unknown_mode_rejected(scenario, default_config):
    with pytest.raises(ValueError):
        sim.solve_jamming(scenario, default_config, "sideways")


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def test_sweep_power_shapes_and_aggregates():
    cfg = small_config(runs=5)
    result = majam.sweep_power(cfg, powers_w=(0.5, 1.0),
                               modes=("none", "fpa-partial"))
    rows = list(result.raw_rows())
    assert len(rows) == 2 * 2 * 5
    agg = result.aggregate_rows()
    assert len(agg) == 4
    for row in agg:
        assert 0.0 <= row.p_system_indep <= 1.0
        assert 0.0 <= row.p_system_empirical <= 1.0
        assert 0.0 <= row.user_outage_frac <= 1.0
        reports = result.point_reports(row.mode,
                                       result.axis_values.index(row.axis_value))
        assert row.mean_sum_rate == pytest.approx(
            np.mean([r.sum_rate for r in reports]), rel=1e-12)


def test_zero_power_equals_no_jamming_bitwise():
    cfg = small_config(runs=4)
    result = majam.sweep_power(cfg, powers_w=(0.0,),
                               modes=("none", "fpa-partial", "ma-partial"))
    base = result.point_reports("none", 0)
    for mode in ("fpa-partial", "ma-partial"):
        for a, b in zip(base, result.point_reports(mode, 0)):
            assert np.array_equal(a.rates, b.rates)


def test_none_mode_identical_across_powers():
    cfg = small_config(runs=3)
    result = majam.sweep_power(cfg, powers_w=(1.0, 5.0), modes=("none",))
    for a, b in zip(result.point_reports("none", 0),
                    result.point_reports("none", 1)):
        assert np.array_equal(a.rates, b.rates)


def test_far_jammer_approaches_no_jam_baseline():
    cfg = small_config(runs=4)
    result = majam.sweep_jammer_location(cfg, x_coords_m=(1e4,),
                                         modes=("none", "fpa-partial"))
    base = [r.sum_rate for r in result.point_reports("none", 0)]
    far = [r.sum_rate for r in result.point_reports("fpa-partial", 0)]
    assert abs(np.mean(base) - np.mean(far)) < 0.1


def test_sweep_parallel_matches_serial():
    cfg = small_config(runs=4)
    serial = majam.sweep_power(cfg, powers_w=(1.0, 2.0),
                               modes=("none", "ma-partial"), jobs=1)
    parallel = majam.sweep_power(cfg, powers_w=(1.0, 2.0),
                                 modes=("none", "ma-partial"), jobs=2)
    for key in serial.reports:
        for a, b in zip(serial.reports[key], parallel.reports[key]):
            assert np.array_equal(a.rates, b.rates)
            assert a.jam_objective == b.jam_objective


def test_negative_power_rejected_in_sweep():
    cfg = small_config()
    with pytest.raises(ValueError):
        majam.sweep_power(cfg, powers_w=(-1.0,), modes=("none",))


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def test_csv_schemas(tmp_path):
    cfg = small_config(runs=2)
    result = majam.sweep_power(cfg, powers_w=(1.0,), modes=("none",))
    raw = tmp_path / "raw.csv"
    agg = tmp_path / "aggregate.csv"
    majam.write_raw_csv(result, str(raw))
    majam.write_aggregate_csv(result, str(agg))
    raw_lines = raw.read_text().splitlines()
    assert raw_lines[0] == ("mode,axis_name,axis_value,realization,sum_rate,"
                            "users_in_outage,r_1,r_2,r_3,r_4")
    assert len(raw_lines) == 1 + 2
    agg_lines = agg.read_text().splitlines()
    assert agg_lines[0] == ("mode,axis_value,mean_sum_rate,se_sum_rate,"
                            "p_system_indep,p_system_empirical,"
                            "user_outage_frac")
    assert len(agg_lines) == 1 + 1
    values = agg_lines[1].split(",")
    assert values[0] == "none"
    assert 0.0 <= float(values[4]) <= 1.0
