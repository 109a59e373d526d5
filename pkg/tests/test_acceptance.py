"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see every line.  The
heavy Monte-Carlo sweeps (100 realizations, desk scale) are shared
session fixtures; everything here sticks to the library defaults unless
a criterion states its own tolerance.
"""

import dataclasses
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import majam
from majam import cli
from majam import optimizer as opt
from majam.optimizer import (_random_beams, beamforming_objective,
                             closed_form_single_user, mrt_equal_power)

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = Path(__file__).resolve().parent / "data"
JOBS = 2


def check(name, ok, detail=""):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="session")
def power_sweep():
    cfg = majam.SystemConfig()
    return majam.sweep_power(cfg, jobs=JOBS)


@pytest.fixture(scope="session")
def location_sweep():
    cfg = majam.SystemConfig()
    return majam.sweep_jammer_location(
        cfg, modes=("none", "fpa-partial", "ma-partial"), jobs=JOBS)


def rows_by_key(sweep):
    return {(r.mode, r.axis_value): r for r in sweep.aggregate_rows()}


# ---------------------------------------------------------------------------
# Gradient correctness
# ---------------------------------------------------------------------------

def test_gradient_correctness():
    report = opt.gradient_check_suite(majam.SystemConfig(), instances=100,
                                      seed=0)
    worst = max(report.position_error, report.beam_error)
    check("gradient-correctness", worst < 1e-5,
          f"position {report.position_error:.2e}, beams "
          f"{report.beam_error:.2e}, sum-rate {report.sum_rate_error:.2e} "
          f"over {report.instances} instances (tolerance 1e-5)")


# ---------------------------------------------------------------------------
# Beamforming oracle equivalence
# ---------------------------------------------------------------------------

def test_p1_oracle_equivalence():
    cfg = majam.SystemConfig()
    alg = dataclasses.replace(cfg.algorithm, epsilon=1e-10, t2_max=1_000_000)
    tight = dataclasses.replace(cfg, algorithm=alg)
    worst = 0.0
    for seed in range(50):
        envs = majam.sample_scenario(cfg, majam.realization_rng(1, seed))
        positions = majam.fpa_layout(cfg)
        channels = majam.jammer_channels(positions, envs, cfg.wavelength_m)
        v0 = mrt_equal_power(channels, cfg.jammer_power_w)
        _, trace = opt.optimize_beamforming(envs, positions, v0, tight)
        oracle = beamforming_objective(
            channels, closed_form_single_user(channels, cfg.jammer_power_w))
        worst = max(worst, abs(trace.objectives[-1] - oracle) / oracle)
    check("p1-oracle-equivalence", worst < 1e-6,
          f"worst relative gap {worst:.2e} over 50 instances (tolerance 1e-6)")


# ---------------------------------------------------------------------------
# Position oracle (single movable antenna vs exhaustive grid)
# ---------------------------------------------------------------------------

def test_position_grid_oracle():
    cfg = majam.make_config(n_users=1, n_bs_antennas=1, n_jammer_antennas=1)
    lam = cfg.wavelength_m
    half = cfg.array_half_length_m
    xs = np.linspace(-lam, lam, int(round(2 * lam / (lam / 20))) + 1)
    ys = np.linspace(-half, half, int(round(2 * half / (lam / 20))) + 1)
    gx, gy, gz = np.meshgrid(xs, ys, xs, indexing="ij")
    grid = np.stack([gx.ravel(), gy.ravel(), gz.ravel()])
    worst = np.inf
    for seed in range(20):
        envs = majam.sample_scenario(cfg, majam.realization_rng(1, seed))
        p0 = majam.fpa_layout(cfg)
        beams = mrt_equal_power(
            majam.jammer_channels(p0, envs, lam), cfg.jammer_power_w)
        positions, _ = opt.optimize_positions(envs, beams, p0, cfg)
        final = majam.jamming_power(positions, beams, envs, lam)
        h = np.exp(-1j * 2 * np.pi / lam
                   * (envs[0].angles.transmit @ grid)).T \
            @ envs[0].effective_path_vector
        grid_best = float((np.abs(h) ** 2).max()) * abs(beams[0, 0]) ** 2
        worst = min(worst, final / grid_best)
    check("position-grid-oracle", worst >= 0.95,
          f"worst objective ratio vs wavelength/20 grid: {worst:.4f} "
          f"(needs >= 0.95, 20 instances)")


# ---------------------------------------------------------------------------
# Feasibility and monotonicity across optimizer runs
# ---------------------------------------------------------------------------

def test_feasibility_and_monotonicity():
    cfg = majam.SystemConfig()
    worst_power = worst_position = 0.0
    monotone = True
    for seed in range(20):
        envs = majam.sample_scenario(cfg, majam.realization_rng(3, seed))
        _, _, trace = opt.run_bcd(envs, cfg)
        worst_power = max(worst_power, max(trace.power_violation))
        worst_position = max(worst_position, max(trace.position_violation))
        values = [trace.initial_objective] + trace.objective
        monotone &= all(b >= a - 1e-9 * max(values)
                        for a, b in zip(values, values[1:]))
        # Inner blocks: accepted iterates never decrease the objective.
        rng = np.random.default_rng(seed)
        beams = _random_beams(cfg, rng, cfg.n_users)
        _, p_trace = opt.optimize_positions(envs, beams,
                                            majam.fpa_layout(cfg), cfg)
        diffs = np.diff(p_trace.objectives)
        monotone &= bool(np.all(diffs >= -1e-12 * max(p_trace.objectives)))
    ok = worst_power <= 1e-9 and worst_position <= 1e-9 and monotone
    check("feasibility-and-monotonicity", ok,
          f"max power violation {worst_power:.2e}, max position violation "
          f"{worst_position:.2e} (slack 1e-9), monotone={monotone}")


# ---------------------------------------------------------------------------
# Sum rate vs jammer power (figure-3a style)
# ---------------------------------------------------------------------------

def test_fig3a_baseline_range(power_sweep):
    rows = rows_by_key(power_sweep)
    base = rows[("none", power_sweep.axis_values[0])].mean_sum_rate
    check("fig3a-baseline-range", 25.0 <= base <= 45.0,
          f"no-jam mean sum rate {base:.2f} bps/Hz (needs [25, 45])")


def test_fig3a_ma_exceeds_fpa_everywhere(power_sweep):
    rows = rows_by_key(power_sweep)
    ok = all(rows[("ma-partial", p)].mean_sum_rate
             < rows[("fpa-partial", p)].mean_sum_rate
             for p in power_sweep.axis_values)
    gaps = [rows[("fpa-partial", p)].mean_sum_rate
            - rows[("ma-partial", p)].mean_sum_rate
            for p in power_sweep.axis_values]
    check("fig3a-ma-exceeds-fpa", ok,
          "movable-antenna reduction exceeds fixed-antenna reduction at "
          f"every power; gaps {['%.2f' % g for g in gaps]} bps/Hz")


def test_fig3a_mean_gap_at_least_10pct(power_sweep):
    rows = rows_by_key(power_sweep)
    base = rows[("none", power_sweep.axis_values[0])].mean_sum_rate
    gaps, reductions = [], []
    for p in power_sweep.axis_values:
        fpa = rows[("fpa-partial", p)].mean_sum_rate
        ma = rows[("ma-partial", p)].mean_sum_rate
        gaps.append(fpa - ma)
        reductions.append(base - fpa)
    ratio = np.mean(gaps) / np.mean(reductions)
    check("fig3a-mean-gap-10pct", ratio >= 0.10,
          f"mean gap {np.mean(gaps):.2f} bps/Hz is {100 * ratio:.1f}% of the "
          f"mean fixed-antenna reduction {np.mean(reductions):.2f} "
          "(needs >= 10%)")


def test_fig3a_full_vs_partial_csi_within_15pct(power_sweep):
    rows = rows_by_key(power_sweep)
    worst = 0.0
    for p in power_sweep.axis_values:
        for partial, full in (("fpa-partial", "fpa-full"),
                              ("ma-partial", "ma-full")):
            a = rows[(partial, p)].mean_sum_rate
            b = rows[(full, p)].mean_sum_rate
            worst = max(worst, abs(a - b) / a)
    check("fig3a-full-vs-partial-15pct", worst < 0.15,
          f"largest full-vs-partial CSI sum-rate difference {100 * worst:.1f}% "
          "(needs < 15%)")


# ---------------------------------------------------------------------------
# Sum rate vs jammer location (figure-3b style)
# ---------------------------------------------------------------------------

def test_fig3b_minimum_near_user_centroid(location_sweep):
    rows = rows_by_key(location_sweep)
    xs = location_sweep.axis_values
    ok = True
    argmins = {}
    for mode in ("fpa-partial", "ma-partial"):
        means = [rows[(mode, x)].mean_sum_rate for x in xs]
        argmins[mode] = xs[int(np.argmin(means))]
        ok &= argmins[mode] == 50.0
    check("fig3b-minimum-at-50m", ok,
          f"sum-rate minima at x = {argmins} (sweep point nearest 50 m)")


def test_fig3b_endpoints_within_two_se(location_sweep):
    rows = rows_by_key(location_sweep)
    xs = location_sweep.axis_values
    ok = True
    details = []
    for mode in ("fpa-partial", "ma-partial"):
        a, b = rows[(mode, xs[0])], rows[(mode, xs[-1])]
        diff = abs(a.mean_sum_rate - b.mean_sum_rate)
        bound = 2.0 * math.hypot(a.se_sum_rate, b.se_sum_rate)
        ok &= diff < bound
        details.append(f"{mode}: |{a.mean_sum_rate:.2f} - "
                       f"{b.mean_sum_rate:.2f}| = {diff:.2f} < {bound:.2f}")
    check("fig3b-endpoints-symmetric", ok, "; ".join(details))


# ---------------------------------------------------------------------------
# Outage vs jammer power (figure-4 style)
# ---------------------------------------------------------------------------

def test_fig4_no_jam_outage_is_zero(power_sweep):
    rows = rows_by_key(power_sweep)
    worst = max(rows[("none", p)].p_system_indep
                for p in power_sweep.axis_values)
    check("fig4-no-jam-outage-zero", worst == 0.0,
          f"largest no-jam system outage {worst} (needs exactly 0)")


def test_fig4_outage_monotone_in_power(power_sweep):
    rows = rows_by_key(power_sweep)
    ok = True
    for mode in ("fpa-partial", "ma-partial"):
        seq = [rows[(mode, p)] for p in power_sweep.axis_values]
        for a, b in zip(seq, seq[1:]):
            bound = 2.0 * math.hypot(a.se_p_system_indep, b.se_p_system_indep)
            ok &= b.p_system_indep >= a.p_system_indep - bound
    check("fig4-outage-monotone", ok,
          "system outage non-decreasing in jammer power within 2 SE "
          "for fixed and movable arrays")


def test_fig4_ma_outage_dominates_fpa(power_sweep):
    rows = rows_by_key(power_sweep)
    outage_ok = all(rows[("ma-partial", p)].p_system_indep
                    >= rows[("fpa-partial", p)].p_system_indep
                    for p in power_sweep.axis_values)
    frac_gaps = [rows[("ma-partial", p)].user_outage_frac
                 - rows[("fpa-partial", p)].user_outage_frac
                 for p in power_sweep.axis_values]
    frac_ok = all(g > 0.0 for g in frac_gaps)
    check("fig4-ma-dominates-fpa", outage_ok and frac_ok,
          f"user-outage-fraction gaps {['%.3f' % g for g in frac_gaps]} "
          "(ordering plus positive gap at every power)")


# ---------------------------------------------------------------------------
# Determinism
# ---------------------------------------------------------------------------

def test_determinism_manifest_rerun(tmp_path):
    cfg_path = tmp_path / "cfg.toml"
    cfg_path.write_text(
        "[algorithm]\nmonte_carlo_runs = 4\nmaster_seed = 11\n")
    first = tmp_path / "first"
    second = tmp_path / "second"
    code = cli.main(["sweep", "--config", str(cfg_path), "--powers", "1.0,3.0",
                     "--modes", "none,fpa-partial,ma-partial",
                     "--out-dir", str(first), "--jobs", "1", "--quiet"])
    assert code == 0
    code = cli.main(["sweep", "--from-manifest", str(first / "manifest.json"),
                     "--out-dir", str(second), "--jobs", "2", "--quiet"])
    assert code == 0
    identical = (first / "raw.csv").read_bytes() \
        == (second / "raw.csv").read_bytes()
    check("determinism-manifest-rerun", identical,
          "raw CSV reproduced bit-identically from the manifest with a "
          "different --jobs")


# ---------------------------------------------------------------------------
# Secondary component: plot scripts
# ---------------------------------------------------------------------------

def render(argv):
    return subprocess.run(
        [sys.executable, str(REPO_ROOT / "plots" / "render"), *argv],
        capture_output=True, text=True)


def test_secondary_plot_kinds(tmp_path):
    golden_power = DATA_DIR / "golden_aggregate_power.csv"
    golden_location = DATA_DIR / "golden_aggregate_location.csv"
    jobs = (("sumrate-power", golden_power), ("outage-power", golden_power),
            ("users-outage-power", golden_power),
            ("sumrate-location", golden_location))
    ok = True
    details = []
    for kind, source in jobs:
        out = tmp_path / f"{kind}.png"
        result = render(["--in", str(source), "--kind", kind,
                         "--out", str(out)])
        good = result.returncode == 0 and out.exists() \
            and out.stat().st_size > 0
        ok &= good
        details.append(f"{kind}={'ok' if good else result.stderr.strip()}")
    check("secondary-plot-kinds", ok, "; ".join(details))


def test_secondary_plot_rejects_truncated_csv(tmp_path):
    golden = (DATA_DIR / "golden_aggregate_power.csv").read_text().splitlines()
    truncated = tmp_path / "truncated.csv"
    truncated.write_text("\n".join(
        ",".join(line.split(",")[:-1]) for line in golden) + "\n")
    out = tmp_path / "never.png"
    result = render(["--in", str(truncated), "--kind", "users-outage-power",
                     "--out", str(out)])
    ok = result.returncode != 0 and "user_outage_frac" in result.stderr \
        and not out.exists()
    check("secondary-plot-named-column-error", ok,
          f"exit {result.returncode}, stderr names the missing column, "
          "no file written")
