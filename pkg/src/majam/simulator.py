"""Legitimate network side and the Monte-Carlo experiment engine.

The base station never sees the jammer: it precodes on the BS-user
channels alone (zero-forcing with equal per-user power by default,
maximum-ratio as the bracketing alternative).  Each realization draws a
scenario, builds the precoder, runs the selected jamming configuration
and evaluates the per-user rates

    R_k = log2(1 + S_k / (I_k + J_k + noise_k)),

with S_k the intended beam's power, I_k the intra-cell leakage and J_k
the total received jamming power.  Sweeps reuse the same child seed per
realization index across modes and sweep points (common random numbers),
so curves differ only through the jammer's budget, its location, or its
strategy.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import core
from .channel import jammer_channels, realization_rng, sample_scenario
from .core import JAM_MODES, SystemConfig
from .optimizer import (JammingStrategy, OptimizerTrace, beamforming_objective,
                        fpa_layout, full_csi_beamforming, mrt_equal_power,
                        optimize_beamforming, run_bcd)


class DegenerateChannelError(RuntimeError):
    """Zero-forcing hit a rank-deficient channel draw; resample."""


# ---------------------------------------------------------------------------
# BS precoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BsPrecoder:
    """BS beamforming matrix (N, K), one column per user."""

    matrix: np.ndarray
    scheme: str
    per_user_power: np.ndarray

    def __post_init__(self):
        self.matrix.setflags(write=False)
        self.per_user_power.setflags(write=False)


def bs_precoder(direct_channels: np.ndarray, config: SystemConfig,
                scheme: str = "zf") -> BsPrecoder:
    """Equal-power precoder from the stacked user channels (K, N).

    ``zf``: columns of the pseudo-inverse of the conjugated channel
    matrix, normalized per user, each carrying ``bs_power / K``; nulls
    every cross-user leg exactly.  ``mrt``: each user's beam along its
    own channel at the same power split.
    """
    channels = np.asarray(direct_channels)
    k, n = channels.shape
    if k > n:
        raise ValueError("zero-forcing needs at least as many BS antennas as users")
    per_user = config.bs_power_w / k
    if scheme == "mrt":
        matrix = np.zeros((n, k), dtype=complex)
        for j in range(k):
            matrix[:, j] = channels[j] / np.linalg.norm(channels[j])
    elif scheme == "zf":
        rows = channels.conj()           # row k is h_k^H
        if np.linalg.cond(rows) > 1e12:
            raise DegenerateChannelError("channel matrix is (near) rank deficient")
        raw = np.linalg.pinv(rows)       # (N, K), rows @ raw = I
        matrix = raw / np.linalg.norm(raw, axis=0, keepdims=True)
    else:
        raise ValueError(f"unknown precoding scheme {scheme!r}")
    matrix = np.sqrt(per_user) * matrix
    return BsPrecoder(matrix=matrix, scheme=scheme,
                      per_user_power=np.full(k, per_user))


def build_bs_precoder(envs, config: SystemConfig,
                      scheme: str = "zf") -> BsPrecoder:
    direct = np.stack([env.direct_channel for env in envs])
    return bs_precoder(direct, config, scheme)


# ---------------------------------------------------------------------------
# Rates and outage
# ---------------------------------------------------------------------------

def user_rate(k: int, direct_channels: np.ndarray, precoder: BsPrecoder,
              jam_channels: np.ndarray, beams: np.ndarray,
              noise_w: float) -> float:
    """Rate of user ``k`` in bps/Hz."""
    h = direct_channels[k]
    gains = np.abs(h.conj() @ precoder.matrix) ** 2
    signal = gains[k]
    intra = float(gains.sum() - signal)
    jam = float(np.sum(np.abs(jam_channels[k].conj() @ beams) ** 2))
    return float(np.log2(1.0 + signal / (intra + jam + noise_w)))


@dataclass(frozen=True)
class RateReport:
    """Per-user rates and the interference decomposition of one realization."""

    rates: np.ndarray            # (K,) bps/Hz
    sum_rate: float
    outage: np.ndarray           # (K,) bool, rate below threshold
    signal_power: np.ndarray     # (K,)
    intra_power: np.ndarray      # (K,)
    jam_power: np.ndarray        # (K,)
    noise_power: np.ndarray      # (K,)
    jam_objective: float         # sum_k |h_k^H v_k|^2 actually delivered

    def users_in_outage(self) -> int:
        return int(np.count_nonzero(self.outage))


def rate_report(envs, precoder: BsPrecoder, jam_channels: np.ndarray,
                beams: np.ndarray, config: SystemConfig) -> RateReport:
    """Evaluate every user's rate for one realization."""
    direct = np.stack([env.direct_channel for env in envs])
    cross = direct.conj() @ precoder.matrix             # (K, K): h_k^H w_j
    powers = np.abs(cross) ** 2
    signal = np.diag(powers).copy()
    intra = powers.sum(axis=1) - signal
    jam = np.sum(np.abs(jam_channels.conj() @ beams) ** 2, axis=1)
    noise = np.asarray(config.noise_vector(), dtype=float)
    rates = np.log2(1.0 + signal / (intra + jam + noise))
    return RateReport(
        rates=rates, sum_rate=float(rates.sum()),
        outage=rates < config.rate_threshold_bps_hz,
        signal_power=signal, intra_power=intra, jam_power=jam,
        noise_power=noise,
        jam_objective=beamforming_objective(jam_channels, beams))


@dataclass(frozen=True)
class OutageSummary:
    """Outage statistics aggregated over realizations."""

    per_user: np.ndarray          # (K,) empirical P(R_k < threshold)
    p_system_indep: float         # 1 - prod_k (1 - P_out_k)
    p_system_empirical: float     # frequency of any user in outage
    user_outage_fraction: float   # mean over realizations of (#outage / K)
    se_p_system_indep: float      # delta-method standard error
    se_user_outage_fraction: float


def system_outage(reports) -> OutageSummary:
    """Aggregate outage statistics from per-realization reports.

    The headline probability combines the per-user empirical outage rates
    through the independence product; the direct any-user frequency is
    reported alongside because rates within one realization share the
    scenario and are not actually independent.
    """
    if not reports:
        raise ValueError("system_outage needs at least one realization")
    flags = np.stack([r.outage for r in reports])        # (n, K)
    n = flags.shape[0]
    per_user = flags.mean(axis=0)
    keep = 1.0 - per_user
    p_indep = 1.0 - float(np.prod(keep))
    p_emp = float(np.mean(flags.any(axis=1)))
    fractions = flags.mean(axis=1)
    frac = float(fractions.mean())
    # Delta method: d p_indep / d p_k = prod_{j != k} (1 - p_j).
    partials = np.array([np.prod(np.delete(keep, k)) for k in range(len(per_user))])
    var = float(np.sum(partials ** 2 * per_user * keep / n))
    se_frac = float(fractions.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    summary = OutageSummary(per_user=per_user, p_system_indep=p_indep,
                            p_system_empirical=p_emp,
                            user_outage_fraction=frac,
                            se_p_system_indep=math.sqrt(var),
                            se_user_outage_fraction=se_frac)
    # Union-bound sandwich; holds for any per-user rates.
    assert p_indep >= per_user.max() - 1e-12
    assert p_indep <= min(1.0, per_user.sum()) + 1e-12
    return summary


# ---------------------------------------------------------------------------
# Single realizations
# ---------------------------------------------------------------------------

def solve_jamming(envs, config: SystemConfig, jam_mode: str,
                  precoder: BsPrecoder | None = None):
    """Beams, positions and (for the movable modes) the optimizer trace."""
    if jam_mode not in JAM_MODES:
        raise ValueError(f"unknown jam mode {jam_mode!r} (choose from {JAM_MODES})")
    lam = config.wavelength_m
    positions = fpa_layout(config)
    trace: OptimizerTrace | None = None
    if jam_mode == "none":
        beams = np.zeros((config.n_jammer_antennas, len(envs)), dtype=complex)
        return beams, positions, trace
    if jam_mode.startswith("fpa"):
        channels = jammer_channels(positions, envs, lam)
        beams, _ = optimize_beamforming(
            envs, positions, mrt_equal_power(channels, config.jammer_power_w),
            config)
    else:
        beams, positions, trace = run_bcd(envs, config,
                                          JammingStrategy.PAPER_SCA)
    if jam_mode.endswith("full"):
        if precoder is None:
            raise ValueError("full-CSI jamming needs the BS precoder")
        beams = full_csi_beamforming(envs, precoder, positions, config,
                                     v_init=beams)
    return beams, positions, trace


def run_realization(config: SystemConfig, rng: np.random.Generator,
                    jam_mode: str) -> RateReport:
    """Sample one scenario and evaluate the selected jamming configuration.

    A rank-deficient zero-forcing draw (probability zero under continuous
    fading) is resampled from the same stream so Monte-Carlo counts stay
    exact.
    """
    while True:
        envs = sample_scenario(config, rng)
        try:
            precoder = build_bs_precoder(envs, config)
        except DegenerateChannelError:
            continue
        break
    beams, positions, _ = solve_jamming(envs, config, jam_mode, precoder)
    jam_ch = jammer_channels(positions, envs, config.wavelength_m)
    return rate_report(envs, precoder, jam_ch, beams, config)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AggregateRow:
    mode: str
    axis_value: float
    mean_sum_rate: float
    se_sum_rate: float
    p_system_indep: float
    p_system_empirical: float
    user_outage_frac: float
    se_p_system_indep: float
    se_user_outage_frac: float


@dataclass
class SweepResult:
    """Raw per-realization reports plus aggregation helpers."""

    axis_name: str                      # "power_w" or "jammer_x_m"
    axis_values: tuple
    modes: tuple
    runs: int
    n_users: int
    reports: dict                       # (mode, point index) -> list[RateReport]

    def point_reports(self, mode: str, index: int):
        return self.reports[(mode, index)]

    def aggregate_rows(self) -> list[AggregateRow]:
        rows = []
        for mode in self.modes:
            for i, value in enumerate(self.axis_values):
                reports = self.reports[(mode, i)]
                sums = np.array([r.sum_rate for r in reports])
                se = float(sums.std(ddof=1) / math.sqrt(len(sums))) \
                    if len(sums) > 1 else 0.0
                outage = system_outage(reports)
                rows.append(AggregateRow(
                    mode=mode, axis_value=float(value),
                    mean_sum_rate=float(sums.mean()), se_sum_rate=se,
                    p_system_indep=outage.p_system_indep,
                    p_system_empirical=outage.p_system_empirical,
                    user_outage_frac=outage.user_outage_fraction,
                    se_p_system_indep=outage.se_p_system_indep,
                    se_user_outage_frac=outage.se_user_outage_fraction))
        return rows

    def raw_rows(self):
        for mode in self.modes:
            for i, value in enumerate(self.axis_values):
                for r, report in enumerate(self.reports[(mode, i)]):
                    yield (mode, self.axis_name, float(value), r,
                           report.sum_rate, report.users_in_outage(),
                           tuple(report.rates))


def _config_for_point(config: SystemConfig, axis_name: str, value: float
                      ) -> SystemConfig:
    if axis_name == "power_w":
        return core.with_jammer_power(config, value)
    if axis_name == "jammer_x_m":
        return core.with_jammer_position(config, value, 0.0)
    raise ValueError(f"unknown sweep axis {axis_name!r}")


def _realization_task(args):
    config, axis_name, value, mode, realization = args
    point_config = _config_for_point(config, axis_name, value)
    rng = realization_rng(config.algorithm.master_seed, realization)
    report = run_realization(point_config, rng, mode)
    return (mode, axis_name, value, realization), report


def _run_sweep(config: SystemConfig, axis_name: str, values, modes,
               jobs: int = 1, progress=None) -> SweepResult:
    values = tuple(float(v) for v in values)
    modes = tuple(modes)
    for mode in modes:
        if mode not in JAM_MODES:
            raise ValueError(f"unknown jam mode {mode!r}")
    runs = config.algorithm.monte_carlo_runs
    tasks = [(config, axis_name, value, mode, r)
             for mode in modes for value in values for r in range(runs)]
    results = {}
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            chunk = max(1, len(tasks) // (8 * jobs))
            for key, report in pool.map(_realization_task, tasks,
                                        chunksize=chunk):
                results[key] = report
                if progress is not None:
                    progress(len(results), len(tasks))
    else:
        for task in tasks:
            key, report = _realization_task(task)
            results[key] = report
            if progress is not None:
                progress(len(results), len(tasks))
    reports = {}
    for i, value in enumerate(values):
        for mode in modes:
            reports[(mode, i)] = [results[(mode, axis_name, value, r)]
                                  for r in range(runs)]
    return SweepResult(axis_name=axis_name, axis_values=values, modes=modes,
                       runs=runs, n_users=config.n_users, reports=reports)


def sweep_power(config: SystemConfig, powers_w=None, modes=None,
                jobs: int = 1, progress=None) -> SweepResult:
    """Monte-Carlo sweep over the jammer's power budget."""
    powers = config.sweep.powers_w if powers_w is None else powers_w
    if any(p < 0 for p in powers):
        raise ValueError("jammer powers must be >= 0")
    modes = config.sweep.modes if modes is None else modes
    return _run_sweep(config, "power_w", powers, modes, jobs, progress)


def sweep_jammer_location(config: SystemConfig, x_coords_m=None, modes=None,
                          jobs: int = 1, progress=None) -> SweepResult:
    """Monte-Carlo sweep over the jammer's x-coordinate (y = 0)."""
    coords = config.sweep.x_coords_m if x_coords_m is None else x_coords_m
    modes = config.sweep.modes if modes is None else modes
    return _run_sweep(config, "jammer_x_m", coords, modes, jobs, progress)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

AGGREGATE_CSV_FIELDS = ("mode", "axis_value", "mean_sum_rate", "se_sum_rate",
                        "p_system_indep", "p_system_empirical",
                        "user_outage_frac")


def raw_csv_header(n_users: int) -> str:
    rates = ",".join(f"r_{k + 1}" for k in range(n_users))
    return ("mode,axis_name,axis_value,realization,sum_rate,users_in_outage,"
            + rates)


def write_raw_csv(result: SweepResult, path: str) -> None:
    with open(path, "w", encoding="ascii", newline="") as handle:
        handle.write(raw_csv_header(result.n_users) + "\n")
        for (mode, axis_name, value, r, sum_rate, n_out, rates) in result.raw_rows():
            rate_text = ",".join(repr(float(v)) for v in rates)
            handle.write(f"{mode},{axis_name},{value!r},{r},{sum_rate!r},"
                         f"{n_out},{rate_text}\n")


def write_aggregate_csv(result: SweepResult, path: str) -> None:
    with open(path, "w", encoding="ascii", newline="") as handle:
        handle.write(",".join(AGGREGATE_CSV_FIELDS) + "\n")
        for row in result.aggregate_rows():
            handle.write(
                f"{row.mode},{row.axis_value!r},{row.mean_sum_rate!r},"
                f"{row.se_sum_rate!r},{row.p_system_indep!r},"
                f"{row.p_system_empirical!r},{row.user_outage_frac!r}\n")
