"""Shared run fixtures; the heavy simulations are session-scoped."""

from dataclasses import replace

import pytest

from wavetrace import LaunchProfile, Medium, RunConfig, run


@pytest.fixture(scope="session")
def gaussian_config():
    # 85 rays over span 3 put rays exactly on x = 0 and x = +-1.
    return RunConfig(n_steps=6000, n_rays=85, span=3.0, output_every=30)


@pytest.fixture(scope="session")
def gaussian_record(gaussian_config):
    """Single Gaussian beam run to three Rayleigh ranges."""
    return run(LaunchProfile.single(), Medium.vacuum(), gaussian_config)


@pytest.fixture(scope="session")
def gaussian_record_5zr(gaussian_config):
    cfg = replace(gaussian_config, n_steps=10000, output_every=50)
    return run(LaunchProfile.single(), Medium.vacuum(), cfg)


@pytest.fixture(scope="session")
def eikonal_gaussian_record(gaussian_config):
    cfg = replace(gaussian_config, eikonal=True)
    return run(LaunchProfile.single(), Medium.vacuum(), cfg)


@pytest.fixture(scope="session")
def two_slit_config():
    return RunConfig(n_steps=6000, n_rays=281, span=7.0, output_every=30)


@pytest.fixture(scope="session")
def two_slit_record(two_slit_config):
    """Two Gaussian slits at x = +-4 run to three Rayleigh ranges."""
    return run(LaunchProfile.slits((-4.0, 4.0)), Medium.vacuum(), two_slit_config)


@pytest.fixture(scope="session")
def two_slit_eikonal_record(two_slit_config):
    cfg = replace(two_slit_config, eikonal=True)
    return run(LaunchProfile.slits((-4.0, 4.0)), Medium.vacuum(), cfg)
