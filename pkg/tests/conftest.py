from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def paper_cfg_path() -> Path:
    return REPO_ROOT / "configs" / "paper.cfg"


@pytest.fixture(scope="session")
def calibration():
    from dickesim import defaults

    return defaults.paper_calibration()


@pytest.fixture(scope="session")
def splitting_cfg(calibration):
    from dickesim import defaults

    return defaults.splitting_config(calibration)
