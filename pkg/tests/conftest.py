"""Shared fixtures: the stock parameter set and a small fast variant."""

import pytest

from fluidcell import (
    FaArrayConfig,
    FluidParams,
    NetworkConfig,
    build_frame_budget,
    sinr_threshold,
)

# stock coherence frame: 100 MHz x 50 ms, 16% spent training
COHERENCE_BANDWIDTH = 1e8
COHERENCE_TIME = 0.05
ESTIMATION_FRACTION = 0.16


@pytest.fixture
def stock_cfg():
    return FaArrayConfig()


@pytest.fixture
def stock_fluid():
    return FluidParams()


@pytest.fixture
def stock_net():
    return NetworkConfig()


@pytest.fixture
def stock_budget(stock_cfg, stock_fluid):
    return build_frame_budget(
        stock_cfg, stock_fluid,
        COHERENCE_BANDWIDTH, COHERENCE_TIME, ESTIMATION_FRACTION,
    )


@pytest.fixture
def stock_target(stock_budget):
    return sinr_threshold(1.0, stock_budget)


@pytest.fixture
def desk_cfg():
    """Two antennas, five ports: small enough for quadrature-vs-MC runs."""
    return FaArrayConfig(num_fas=2, ports_per_fa=5, skipped_ports=1)


@pytest.fixture
def desk_budget(desk_cfg, stock_fluid):
    return build_frame_budget(
        desk_cfg, stock_fluid,
        COHERENCE_BANDWIDTH, COHERENCE_TIME, ESTIMATION_FRACTION,
    )
