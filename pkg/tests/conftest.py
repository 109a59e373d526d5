import dataclasses

import numpy as np
import pytest

import majam


@pytest.fixture
def default_config():
    return majam.SystemConfig()


@pytest.fixture
def tight_config():
    """Defaults with a tight beamforming convergence budget."""
    cfg = majam.SystemConfig()
    alg = dataclasses.replace(cfg.algorithm, epsilon=1e-10, t2_max=1_000_000)
    return dataclasses.replace(cfg, algorithm=alg)


@pytest.fixture
def scenario(default_config):
    rng = majam.realization_rng(7, 0)
    return majam.sample_scenario(default_config, rng)


def random_feasible_beams(rng, n_antennas, n_users, power):
    beams = (rng.standard_normal((n_antennas, n_users))
             + 1j * rng.standard_normal((n_antennas, n_users)))
    return beams * np.sqrt(power) / np.linalg.norm(beams)
