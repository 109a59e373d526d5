"""Movable-antenna jammer: channel model, optimizer and link simulator."""

__version__ = "0.1.0"

from .channel import (
    UserEnvironment,
    VirtualAngles,
    jammer_channel,
    jammer_channels,
    jamming_power,
    jamming_power_and_gradient,
    load_scenario,
    realization_rng,
    receive_frv,
    sample_angles,
    sample_scenario,
    save_scenario,
    transmit_frv,
    virtual_angles,
)
from .core import (
    AlgorithmParams,
    ConfigError,
    Geometry,
    JAM_MODES,
    SweepParams,
    SystemConfig,
    db_to_linear,
    dbm_to_watts,
    linear_to_db,
    load_config,
    make_config,
    watts_to_dbm,
    with_jammer_position,
    with_jammer_power,
    with_master_seed,
)
from .optimizer import (
    JammingStrategy,
    OptimizerTrace,
    beamforming_objective,
    closed_form_single_user,
    fpa_layout,
    full_csi_beamforming,
    gradient_check_suite,
    mrt_equal_power,
    optimize_beamforming,
    optimize_positions,
    position_violation,
    power_violation,
    run_bcd,
    solve_p1_step,
    solve_p2_step,
)
from .simulator import (
    BsPrecoder,
    DegenerateChannelError,
    OutageSummary,
    RateReport,
    SweepResult,
    bs_precoder,
    build_bs_precoder,
    rate_report,
    run_realization,
    sweep_jammer_location,
    sweep_power,
    system_outage,
    user_rate,
    write_aggregate_csv,
    write_raw_csv,
)
