"""Joint jammer optimization: beamforming and antenna placement.

The jammer maximizes ``sum_k |h_k(P)^H v_k|^2`` subject to a total power
budget on the beamforming matrix ``V`` (Frobenius ball) and per-antenna
position constraints: ``x_m, z_m`` each within one wavelength of the
local origin, ``y_m`` within the array half-length ``L``, and consecutive
``y`` coordinates at least two wavelengths apart.

Both blocks are handled by successive linearization.  Each linearized
subproblem has a cheap exact solution:

* beamforming: a linear functional over a Frobenius ball is minimized on
  the boundary, at ``-sqrt(P) * G / ||G||_F`` (`solve_p1_step`);
* positions: the feasible set is a box for ``x``/``z`` and a
  spacing-constrained chain for ``y``; the chain piece is an exact tiny
  linear program solved by a dynamic program over its vertex values
  (`solve_p2_step`).

Raw linearized position steps jump to polytope vertices and can cycle,
so by default each step is confined to a per-antenna trust region that
halves whenever a candidate would reduce the exact objective; the
``paper_faithful`` algorithm flag disables both the trust region and the
accept/reject guard to recover the plain linearized iteration.

The outer loop (`run_bcd`) alternates the two blocks from a fixed-array
layout and maximum-ratio equal-power beams, and stops as soon as either
block's Frobenius update falls below the tolerance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .channel import (TWO_PI, jammer_channels, jamming_power,
                      jamming_power_and_gradient, stack_jammer_geometry)
from .core import SystemConfig

POWER_SLACK = 1e-9      # tolerated overshoot of the beam power budget
POSITION_SLACK = 1e-9   # tolerated violation of the position constraints


class JammingStrategy(enum.Enum):
    """How the jammer picks beams (and, for PAPER_SCA, positions)."""

    PAPER_SCA = "paper-sca"                    # full alternating optimization
    MRT_EQUAL_POWER = "mrt-equal-power"        # one equal-power beam per user
    CLOSED_FORM_SINGLE_USER = "single-user"    # all power on the strongest user
    FULL_CSI_GRADIENT = "full-csi-gradient"    # sum-rate descent, needs BS info


@dataclass
class InnerTrace:
    """Objective history of one inner (single-block) loop."""

    iterations: int = 0
    objectives: list = field(default_factory=list)
    converged: bool = False


@dataclass
class OptimizerTrace:
    """Per-outer-iteration record of the alternating optimization."""

    initial_objective: float = 0.0
    objective: list = field(default_factory=list)      # sum_k |h_k^H v_k|^2
    dv_fro: list = field(default_factory=list)
    dp_fro: list = field(default_factory=list)
    inner_v_iters: list = field(default_factory=list)
    inner_p_iters: list = field(default_factory=list)
    power_violation: list = field(default_factory=list)
    position_violation: list = field(default_factory=list)
    termination: str = ""

    def outer_iterations(self) -> int:
        return len(self.objective)

    def csv_rows(self):
        """Rows for the trace CSV: outer_iter, objective, dV_fro, dP_fro, ..."""
        for i in range(len(self.objective)):
            yield (i + 1, self.objective[i], self.dv_fro[i], self.dp_fro[i],
                   self.inner_v_iters[i], self.inner_p_iters[i])


TRACE_CSV_HEADER = "outer_iter,objective,dV_fro,dP_fro,inner_v_iters,inner_p_iters"


def write_trace_csv(trace: OptimizerTrace, path: str) -> None:
    with open(path, "w", encoding="ascii", newline="") as handle:
        handle.write(TRACE_CSV_HEADER + "\n")
        for row in trace.csv_rows():
            handle.write(f"{row[0]},{row[1]!r},{row[2]!r},{row[3]!r},"
                         f"{row[4]},{row[5]}\n")


# ---------------------------------------------------------------------------
# Feasibility
# ---------------------------------------------------------------------------

def power_violation(beams: np.ndarray, power_budget: float) -> float:
    """How far sum_k ||v_k||^2 exceeds the budget (0 when feasible)."""
    return max(0.0, float(np.linalg.norm(beams) ** 2 - power_budget))


def position_violation(positions: np.ndarray, config: SystemConfig) -> float:
    """Largest violation of the box and spacing constraints (0 when feasible)."""
    lam = config.wavelength_m
    half = config.array_half_length_m
    x, y, z = positions
    worst = max(float(np.max(np.abs(x))) - lam,
                float(np.max(np.abs(z))) - lam,
                float(np.max(np.abs(y))) - half)
    if positions.shape[1] > 1:
        gaps = np.diff(y)
        worst = max(worst, float(np.max(config.min_spacing_m - gaps)))
    return max(0.0, worst)


def fpa_layout(config: SystemConfig) -> np.ndarray:
    """Fixed-array reference layout: x = z = 0, y on a centered 2-wavelength grid."""
    m = config.n_jammer_antennas
    y = (np.arange(m) - (m - 1) / 2.0) * config.min_spacing_m
    positions = np.zeros((3, m))
    positions[1] = y
    if position_violation(positions, config) > POSITION_SLACK:
        raise ValueError("fixed layout does not fit the array half-length")
    return positions


# ---------------------------------------------------------------------------
# Beamforming block
# ---------------------------------------------------------------------------

def beamforming_objective(channels: np.ndarray, beams: np.ndarray) -> float:
    """sum_k |h_k^H v_k|^2 for channels (K, M) and beams (M, K)."""
    a = np.einsum("km,mk->k", channels.conj(), beams)
    return float(np.sum(np.abs(a) ** 2))


def beamforming_gradient(channels: np.ndarray, beams: np.ndarray) -> np.ndarray:
    """Gradient of ``-sum_k |h_k^H v_k|^2`` in V; column k is -2 a_k h_k.

    Real-composite convention: for a real function f of complex V the
    first-order change is Re<G, dV>, so finite differences on the real
    and imaginary parts recover Re(G) and Im(G) entrywise.
    """
    a = np.einsum("km,mk->k", channels.conj(), beams)
    return -2.0 * channels.T * a[None, :]


def mrt_equal_power(channels: np.ndarray, power_budget: float) -> np.ndarray:
    """One beam per user along its own channel, equal power split."""
    k = channels.shape[0]
    beams = np.zeros((channels.shape[1], k), dtype=complex)
    if power_budget == 0.0:
        return beams
    for j in range(k):
        norm = np.linalg.norm(channels[j])
        if norm > 0.0:
            beams[:, j] = np.sqrt(power_budget / k) * channels[j] / norm
    return beams


def closed_form_single_user(channels: np.ndarray, power_budget: float) -> np.ndarray:
    """All power on the user with the strongest jammer channel."""
    beams = np.zeros((channels.shape[1], channels.shape[0]), dtype=complex)
    if power_budget == 0.0:
        return beams
    norms = np.linalg.norm(channels, axis=1)
    best = int(np.argmax(norms))
    if norms[best] > 0.0:
        beams[:, best] = np.sqrt(power_budget) * channels[best] / norms[best]
    return beams


def solve_p1_step(grad_v: np.ndarray, power_budget: float,
                  v_current: np.ndarray) -> np.ndarray:
    """Exact minimizer of Re<grad_v, V> over the ball ||V||_F <= sqrt(P).

    A nonzero linear functional over a ball is minimized on the boundary
    at ``-sqrt(P) * grad / ||grad||_F``; a zero gradient leaves any
    feasible point optimal, in which case the current iterate is kept.
    """
    if power_budget < 0.0:
        raise ValueError("power budget must be >= 0")
    norm = np.linalg.norm(grad_v)
    if norm == 0.0 or power_budget == 0.0:
        return np.array(v_current, copy=True)
    return (-np.sqrt(power_budget) / norm) * np.asarray(grad_v)


def optimize_beamforming(envs, positions: np.ndarray, v_init: np.ndarray,
                         config: SystemConfig) -> tuple[np.ndarray, InnerTrace]:
    """Linearized beamforming iteration at fixed antenna positions.

    Each step solves the linearized subproblem exactly on the power ball;
    because the true objective is convex in V, these steps never decrease
    it.  A step that would (numerically) decrease the objective is
    rejected and the loop halts.  Stops when the Frobenius update falls
    below ``epsilon`` or after ``t2_max`` iterations.
    """
    p_j = config.jammer_power_w
    if power_violation(v_init, p_j) > POWER_SLACK:
        raise ValueError("v_init exceeds the jammer power budget")
    channels = jammer_channels(positions, envs, config.wavelength_m)
    beams = np.array(v_init, dtype=complex, copy=True)
    value = beamforming_objective(channels, beams)
    trace = InnerTrace(objectives=[value])
    eps = config.algorithm.epsilon
    for _ in range(config.algorithm.t2_max):
        grad = beamforming_gradient(channels, beams)
        candidate = solve_p1_step(grad, p_j, beams)
        cand_value = beamforming_objective(channels, candidate)
        if cand_value < value:
            break  # only round-off can get here; keep the last good iterate
        delta = float(np.linalg.norm(candidate - beams))
        beams = candidate
        value = cand_value
        trace.iterations += 1
        trace.objectives.append(value)
        if delta <= eps:
            trace.converged = True
            break
    return beams, trace


# ---------------------------------------------------------------------------
# Position block
# ---------------------------------------------------------------------------

def _min_linear_chain(coeff: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                      spacing: float) -> np.ndarray:
    """Exact minimizer of sum(coeff * y) under bounds and chain spacing.

    Feasible set: ``lower <= y <= upper`` and ``y[m] - y[m-1] >= spacing``.
    Substituting ``s[m] = y[m] - m*spacing`` turns the spacing constraint
    into monotonicity, leaving a linear program over an isotonic polytope
    with box bounds.  Some optimal solution sits at a vertex, where every
    maximal block of equal ``s`` values is pinned to one of its members'
    bounds, so a dynamic program over the 2M candidate bound values is
    exact.
    """
    m = coeff.shape[0]
    shift = spacing * np.arange(m)
    lo = lower - shift
    hi = upper - shift
    candidates = np.unique(np.concatenate([lo, hi]))
    n_cand = candidates.shape[0]
    feasible = (candidates[None, :] >= lo[:, None]) & (candidates[None, :] <= hi[:, None])
    if not feasible.any(axis=1).all():
        raise ValueError("chain subproblem is infeasible")
    best = np.where(feasible[0], coeff[0] * candidates, np.inf)
    back = np.zeros((m, n_cand), dtype=int)
    for i in range(1, m):
        running = np.minimum.accumulate(best)
        hit = best <= running
        back[i] = np.maximum.accumulate(np.where(hit, np.arange(n_cand), 0))
        best = np.where(feasible[i], coeff[i] * candidates + running, np.inf)
    j = int(np.argmin(best))
    if not np.isfinite(best[j]):
        raise ValueError("chain subproblem is infeasible")
    s = np.empty(m)
    s[m - 1] = candidates[j]
    for i in range(m - 1, 0, -1):
        j = back[i, j]
        s[i - 1] = candidates[j]
    return s + shift


def solve_p2_step(grad_p: np.ndarray, p_current: np.ndarray,
                  config: SystemConfig,
                  trust_radius: float | None = None) -> np.ndarray:
    """Exact minimizer of <grad_p, P> over the position constraints.

    ``x`` and ``z`` decouple into per-antenna interval problems; the
    ``y`` coordinates form the chain linear program.  When
    ``trust_radius`` is given, every coordinate is additionally confined
    to ``[current - radius, current + radius]``.  A zero gradient returns
    the current point unchanged (any feasible point is optimal).
    """
    grad_p = np.asarray(grad_p, dtype=float)
    p_current = np.asarray(p_current, dtype=float)
    if grad_p.shape != p_current.shape or p_current.shape[0] != 3:
        raise ValueError("grad_p and p_current must both have shape (3, M)")
    if position_violation(p_current, config) > POSITION_SLACK:
        raise ValueError("current positions violate the array constraints")
    if not np.any(grad_p):
        return np.array(p_current, copy=True)
    lam = config.wavelength_m
    half = config.array_half_length_m
    radius = np.inf if trust_radius is None else float(trust_radius)
    out = np.empty_like(p_current)
    for row, bound in ((0, lam), (2, lam)):
        lo = np.maximum(-bound, p_current[row] - radius)
        hi = np.minimum(bound, p_current[row] + radius)
        g = grad_p[row]
        out[row] = np.where(g > 0, lo, np.where(g < 0, hi, p_current[row]))
    g_y = grad_p[1]
    if not np.any(g_y):
        out[1] = p_current[1]
    else:
        lo = np.maximum(-half, p_current[1] - radius)
        hi = np.minimum(half, p_current[1] + radius)
        out[1] = _min_linear_chain(g_y, lo, hi, config.min_spacing_m)
    return out


def _axis_lattice(lo: float, hi: float, pitch: float) -> np.ndarray:
    """Inclusive uniform lattice over [lo, hi] with spacing at most pitch."""
    if hi <= lo:
        return np.array([lo])
    return np.linspace(lo, hi, int(round((hi - lo) / pitch)) + 1)


def lattice_probe_positions(envs, beams: np.ndarray, p_init: np.ndarray,
                            config: SystemConfig) -> np.ndarray:
    """One pass of exact per-antenna lattice search over the feasible set.

    Antenna by antenna, evaluates the true jamming power on a dense
    lattice of that antenna's feasible positions (the others held fixed;
    the y interval is clipped by the already-updated neighbors) and moves
    to the best point when it improves the objective.  The local ascent
    that follows is only as good as the basin it starts in, so this
    deterministic probe picks the basin; every move is feasible and
    improving, which keeps the optimizer's monotonicity intact.
    """
    lam = config.wavelength_m
    pitch = config.algorithm.probe_pitch_m
    half = config.array_half_length_m
    spacing = config.min_spacing_m
    t, b = stack_jammer_geometry(envs)
    positions = np.array(p_init, dtype=float, copy=True)
    m_count = positions.shape[1]
    channels = jammer_channels(positions, envs, lam)
    conj_h = channels.conj()                                  # (K, M)
    a = np.einsum("km,mk->k", conj_h, beams)
    value = float(np.sum(np.abs(a) ** 2))
    for m in range(m_count):
        y_lo = -half if m == 0 else positions[1, m - 1] + spacing
        y_hi = half if m == m_count - 1 else positions[1, m + 1] - spacing
        if y_hi < y_lo:  # neighbors leave no slack; keep the current y
            y_axis = np.array([positions[1, m]])
        else:
            y_axis = _axis_lattice(y_lo, y_hi, pitch)
        x_axis = _axis_lattice(-lam, lam, pitch)
        z_axis = _axis_lattice(-lam, lam, pitch)
        gx, gy, gz = np.meshgrid(x_axis, y_axis, z_axis, indexing="ij")
        grid = np.stack([gx.ravel(), gy.ravel(), gz.ravel()])  # (3, Q)
        phases = TWO_PI / lam * np.einsum("klc,cq->klq", t, grid)
        cand_conj_h = np.einsum("klq,kl->kq", np.exp(1j * phases), b.conj())
        base = a - conj_h[:, m] * beams[m, :]
        cand_a = base[:, None] + cand_conj_h * beams[m, :][:, None]
        cand_value = np.sum(np.abs(cand_a) ** 2, axis=0)
        best = int(np.argmax(cand_value))
        if cand_value[best] > value:
            positions[:, m] = grid[:, best]
            conj_h[:, m] = cand_conj_h[:, best]
            a = cand_a[:, best]
            value = float(cand_value[best])
    return positions


def optimize_positions(envs, beams: np.ndarray, p_init: np.ndarray,
                       config: SystemConfig,
                       probe: bool | None = None) -> tuple[np.ndarray, InnerTrace]:
    """Lattice-probed, trust-region linearized ascent on antenna positions.

    Unless disabled (``probe=False`` or ``paper_faithful``), a
    deterministic per-antenna lattice probe first relocates the start
    into the best basin it can see; `lattice_probe_positions` explains
    why the ascent alone is not enough.  Candidates then come from
    `solve_p2_step`; one is accepted only if it does not decrease the
    exact jamming power, otherwise the trust radius is halved.  Stops on
    a sub-``epsilon`` accepted displacement, on the radius shrinking
    below wavelength/1000, or after ``t2_max`` candidate evaluations.
    With ``paper_faithful`` set, the raw linearized step is always
    accepted and only the displacement and iteration tests remain.
    """
    if position_violation(p_init, config) > POSITION_SLACK:
        raise ValueError("p_init violates the array constraints")
    lam = config.wavelength_m
    eps = config.algorithm.epsilon
    faithful = config.algorithm.paper_faithful
    if probe is None:
        probe = config.algorithm.position_probe and not faithful
    radius = None if faithful else config.algorithm.trust_radius_m
    positions = np.array(p_init, dtype=float, copy=True)
    if probe:
        positions = lattice_probe_positions(envs, beams, positions, config)
    value = jamming_power(positions, beams, envs, lam)
    trace = InnerTrace(objectives=[value])
    grad = None
    for _ in range(config.algorithm.t2_max):
        if grad is None:
            _, grad = jamming_power_and_gradient(positions, beams, envs, lam)
            grad = -grad  # switch to the gradient of the (maximized) power
        trace.iterations += 1
        if not np.any(grad):
            trace.converged = True
            break
        candidate = solve_p2_step(-grad, positions, config, radius)
        cand_value = jamming_power(candidate, beams, envs, lam)
        if faithful or cand_value >= value:
            delta = float(np.linalg.norm(candidate - positions))
            positions = candidate
            value = cand_value
            grad = None
            trace.objectives.append(value)
            if delta <= eps:
                trace.converged = True
                break
        else:
            radius *= 0.5
            if radius < lam / 1000.0:
                break
    return positions, trace


# ---------------------------------------------------------------------------
# Outer alternating loop and baselines
# ---------------------------------------------------------------------------

def run_bcd(envs, config: SystemConfig,
            strategy: JammingStrategy = JammingStrategy.PAPER_SCA,
            bs_precoder=None,
            p_init: np.ndarray | None = None,
            v_init: np.ndarray | None = None,
            ) -> tuple[np.ndarray, np.ndarray, OptimizerTrace]:
    """Alternate beamforming and position blocks until convergence.

    Starts from the fixed-array layout with maximum-ratio equal-power
    beams unless explicit initial points are given.  The loop exits when
    either block's Frobenius update drops to ``epsilon`` ("tolerance"),
    when an outer pass yields no objective improvement ("stalled"), or
    after ``t1_max`` passes ("t1_max").  Strategies other than PAPER_SCA
    return their closed forms at the initial layout without iterating.
    """
    lam = config.wavelength_m
    positions = fpa_layout(config) if p_init is None else np.array(p_init, dtype=float)
    channels = jammer_channels(positions, envs, lam)
    if v_init is None:
        beams = mrt_equal_power(channels, config.jammer_power_w)
    else:
        beams = np.array(v_init, dtype=complex)

    trace = OptimizerTrace()
    trace.initial_objective = beamforming_objective(channels, beams)

    if strategy is JammingStrategy.MRT_EQUAL_POWER:
        trace.termination = "tolerance"
        return beams, positions, trace
    if strategy is JammingStrategy.CLOSED_FORM_SINGLE_USER:
        beams = closed_form_single_user(channels, config.jammer_power_w)
        trace.termination = "tolerance"
        return beams, positions, trace
    if strategy is JammingStrategy.FULL_CSI_GRADIENT:
        if bs_precoder is None:
            raise ValueError("FULL_CSI_GRADIENT requires the BS precoder")
        beams = full_csi_beamforming(envs, bs_precoder, positions, config,
                                     v_init=beams)
        trace.termination = "tolerance"
        return beams, positions, trace

    value = trace.initial_objective
    eps = config.algorithm.epsilon
    for outer in range(config.algorithm.t1_max):
        new_beams, v_trace = optimize_beamforming(envs, positions, beams, config)
        # Probe only on the first pass: later passes polish an already
        # well-placed array under mildly rescaled beams.
        probe = (outer == 0) and config.algorithm.position_probe \
            and not config.algorithm.paper_faithful
        new_positions, p_trace = optimize_positions(envs, new_beams, positions,
                                                    config, probe=probe)
        new_value = jamming_power(new_positions, new_beams, envs, lam)
        dv = float(np.linalg.norm(new_beams - beams))
        dp = float(np.linalg.norm(new_positions - positions))
        trace.objective.append(new_value)
        trace.dv_fro.append(dv)
        trace.dp_fro.append(dp)
        trace.inner_v_iters.append(v_trace.iterations)
        trace.inner_p_iters.append(p_trace.iterations)
        trace.power_violation.append(
            power_violation(new_beams, config.jammer_power_w))
        trace.position_violation.append(
            position_violation(new_positions, config))
        beams, positions = new_beams, new_positions
        if dv <= eps or dp <= eps:
            trace.termination = "tolerance"
            break
        if new_value <= value:
            trace.termination = "stalled"
            break
        value = new_value
    else:
        trace.termination = "t1_max"
    return beams, positions, trace


# ---------------------------------------------------------------------------
# Full-CSI reference jammer
# ---------------------------------------------------------------------------

def sum_rate_and_gradient(beams: np.ndarray, jam_channels: np.ndarray,
                          signal_power: np.ndarray, intra_power: np.ndarray,
                          noise: np.ndarray) -> tuple[float, np.ndarray]:
    """Downlink sum rate and its gradient in the jammer beams.

    ``jam_channels`` is (K, M); ``signal_power``, ``intra_power`` and
    ``noise`` are the per-user constants of the rate expression.  Uses
    the same real-composite gradient convention as
    `beamforming_gradient`.
    """
    cross = jam_channels.conj() @ beams                 # (K, K): h_k^H v_j
    jam = np.sum(np.abs(cross) ** 2, axis=1)
    denom = intra_power + jam + noise
    rate = np.log2(1.0 + signal_power / denom)
    beta = (2.0 / np.log(2.0)) * (1.0 / (denom + signal_power) - 1.0 / denom)
    mixer = np.einsum("k,km,kn->mn", beta, jam_channels, jam_channels.conj())
    return float(np.sum(rate)), mixer @ beams


def _project_power_ball(beams: np.ndarray, power_budget: float) -> np.ndarray:
    norm_sq = float(np.linalg.norm(beams) ** 2)
    if norm_sq <= power_budget or norm_sq == 0.0:
        return beams
    return beams * np.sqrt(power_budget / norm_sq)


def full_csi_beamforming(envs, bs_precoder, positions: np.ndarray,
                         config: SystemConfig,
                         v_init: np.ndarray | None = None) -> np.ndarray:
    """Projected gradient descent on the true sum rate over the power ball.

    A reference jammer that, unlike the partial-CSI design, sees the BS
    precoder and the BS-user channels.  Starts from the partial-CSI beams
    (or ``v_init``) and returns the best feasible iterate found, so its
    sum rate never exceeds the starting point's.
    """
    p_j = config.jammer_power_w
    if p_j == 0.0:
        return np.zeros((positions.shape[1], len(envs)), dtype=complex)
    lam = config.wavelength_m
    jam_ch = jammer_channels(positions, envs, lam)
    if v_init is None:
        v_init, _ = optimize_beamforming(
            envs, positions, mrt_equal_power(jam_ch, p_j), config)
    direct = np.stack([env.direct_channel for env in envs])
    cross_bs = direct.conj() @ bs_precoder.matrix        # (K, K)
    powers = np.abs(cross_bs) ** 2
    signal = np.diag(powers).copy()
    intra = powers.sum(axis=1) - signal
    noise = np.asarray(config.noise_vector(), dtype=float)

    beams = np.array(v_init, dtype=complex, copy=True)
    best_rate, grad = sum_rate_and_gradient(beams, jam_ch, signal, intra, noise)
    best = beams.copy()
    step = 0.5 * np.sqrt(p_j) / max(float(np.linalg.norm(grad)), 1e-300)
    eps = config.algorithm.epsilon
    for _ in range(config.algorithm.t2_max):
        candidate = _project_power_ball(beams - step * grad, p_j)
        rate, cand_grad = sum_rate_and_gradient(candidate, jam_ch, signal,
                                                intra, noise)
        if rate < best_rate:
            delta = float(np.linalg.norm(candidate - beams))
            beams, grad = candidate, cand_grad
            best_rate, best = rate, candidate.copy()
            step *= 1.5
            if delta <= eps:
                break
        else:
            step *= 0.5
            if step * float(np.linalg.norm(grad)) <= eps:
                break
    return best


# ---------------------------------------------------------------------------
# Finite-difference verification
# ---------------------------------------------------------------------------

@dataclass
class GradientCheckReport:
    """Worst norm-wise relative errors over the random instances."""

    position_error: float
    beam_error: float
    sum_rate_error: float
    instances: int

    def max_error(self) -> float:
        return max(self.position_error, self.beam_error, self.sum_rate_error)


def _relative_error(numeric: np.ndarray, analytic: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(analytic)), 1e-300)
    return float(np.linalg.norm(numeric - analytic)) / scale


def check_position_gradient(positions, beams, envs, wavelength,
                            step: float = 1e-7) -> float:
    """Central finite differences vs the analytic position gradient."""
    _, grad = jamming_power_and_gradient(positions, beams, envs, wavelength)
    numeric = np.zeros_like(grad)
    for c in range(3):
        for m in range(positions.shape[1]):
            plus = np.array(positions, copy=True)
            minus = np.array(positions, copy=True)
            plus[c, m] += step
            minus[c, m] -= step
            f_plus = -jamming_power(plus, beams, envs, wavelength)
            f_minus = -jamming_power(minus, beams, envs, wavelength)
            numeric[c, m] = (f_plus - f_minus) / (2.0 * step)
    return _relative_error(numeric, grad)


def _complex_fd(func, beams: np.ndarray, step: float) -> np.ndarray:
    """Central differences on the real and imaginary parts of a matrix."""
    numeric = np.zeros(beams.shape, dtype=complex)
    for idx in np.ndindex(beams.shape):
        for unit in (1.0, 1.0j):
            plus = np.array(beams, copy=True)
            minus = np.array(beams, copy=True)
            plus[idx] += step * unit
            minus[idx] -= step * unit
            diff = (func(plus) - func(minus)) / (2.0 * step)
            numeric[idx] += diff * unit
    return numeric


def check_beam_gradient(positions, beams, envs, wavelength,
                        step: float = 1e-4) -> float:
    """Central finite differences vs the analytic beamforming gradient."""
    channels = jammer_channels(positions, envs, wavelength)
    analytic = beamforming_gradient(channels, beams)
    numeric = _complex_fd(lambda v: -beamforming_objective(channels, v),
                          beams, step)
    return _relative_error(numeric, analytic)


def gradient_check_suite(config: SystemConfig, instances: int = 100,
                         seed: int = 0) -> GradientCheckReport:
    """Finite-difference audit of all three analytic gradients.

    Draws random scenarios, feasible random positions and random
    full-power beams, and reports the worst norm-wise relative error for
    the position gradient, the beamforming gradient, and the sum-rate
    gradient used by the full-CSI jammer.
    """
    from .channel import sample_scenario  # local import to keep module load light
    from .simulator import build_bs_precoder

    worst_p = worst_v = worst_s = 0.0
    rng = np.random.default_rng(np.random.SeedSequence((config.algorithm.master_seed,
                                                        0xC0FFEE, seed)))
    lam = config.wavelength_m
    for _ in range(instances):
        envs = sample_scenario(config, rng)
        positions = _random_feasible_positions(config, rng)
        beams = _random_beams(config, rng, len(envs))
        worst_p = max(worst_p, check_position_gradient(positions, beams, envs, lam))
        worst_v = max(worst_v, check_beam_gradient(positions, beams, envs, lam))

        precoder = build_bs_precoder(envs, config)
        direct = np.stack([env.direct_channel for env in envs])
        cross = direct.conj() @ precoder.matrix
        powers = np.abs(cross) ** 2
        signal = np.diag(powers).copy()
        intra = powers.sum(axis=1) - signal
        noise = np.asarray(config.noise_vector(), dtype=float)
        jam_ch = jammer_channels(positions, envs, lam)
        _, analytic = sum_rate_and_gradient(beams, jam_ch, signal, intra, noise)
        numeric = _complex_fd(
            lambda v: sum_rate_and_gradient(v, jam_ch, signal, intra, noise)[0],
            beams, 1e-4)
        worst_s = max(worst_s, _relative_error(numeric, analytic))
    return GradientCheckReport(position_error=worst_p, beam_error=worst_v,
                               sum_rate_error=worst_s, instances=instances)


def _random_feasible_positions(config: SystemConfig,
                               rng: np.random.Generator) -> np.ndarray:
    """Random positions satisfying the box and chain constraints."""
    m = config.n_jammer_antennas
    lam = config.wavelength_m
    half = config.array_half_length_m
    positions = fpa_layout(config)
    positions[0] = rng.uniform(-lam, lam, m)
    positions[2] = rng.uniform(-lam, lam, m)
    # Random comb along y: split the slack beyond minimal spacing into
    # m + 1 nonnegative extra gaps (start offset, m - 1 widenings, tail).
    slack = 2.0 * half - (m - 1) * config.min_spacing_m
    extra = rng.uniform(0.0, 1.0, m + 1)
    extra *= slack / extra.sum()
    positions[1] = (-half + np.cumsum(extra[:-1])
                    + np.arange(m) * config.min_spacing_m)
    return positions


def _random_beams(config: SystemConfig, rng: np.random.Generator,
                  n_users: int) -> np.ndarray:
    m = config.n_jammer_antennas
    beams = (rng.standard_normal((m, n_users))
             + 1j * rng.standard_normal((m, n_users)))
    norm = np.linalg.norm(beams)
    if norm > 0.0:
        beams *= np.sqrt(config.jammer_power_w) / norm
    return beams
