"""Shared fixtures."""

from pathlib import Path

import numpy as np
import pytest
import yaml

from inclusion_mpc.harness.environments import double_integrator, pendulum
from inclusion_mpc.inclusion.side import SideInfo
from inclusion_mpc.interval import IntervalVector


@pytest.fixture
def scalar_side() -> SideInfo:
    """xdot = f(x) + g(x) u on [-1, 1] with a single control."""
    return SideInfo(
        lipschitz_f=[1.0],
        lipschitz_g=[[0.0]],
        weights=[1.0],
        control_exponents=((1,),),
        global_bound=10.0,
        state_box=IntervalVector([-1.0], [1.0]),
        control_box=IntervalVector([-1.0], [1.0]),
    )


@pytest.fixture
def pend():
    return pendulum()


@pytest.fixture
def pend_data(pend):
    return pend.sample_dataset(30, np.random.default_rng(3))


@pytest.fixture
def dbl():
    return double_integrator()


@pytest.fixture
def write_config(tmp_path: Path):
    """Write a run config to a YAML file and return its path."""

    def _write(**overrides) -> Path:
        data = {
            "environment": "double_integrator",
            "side_info": "known_terms",
            "horizon": 1,
            "steps": 4,
            "seed": 1,
            "output_dir": str(tmp_path / "out"),
        }
        data.update(overrides)
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump(data))
        return path

    return _write
