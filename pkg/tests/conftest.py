import pathlib

import pytest

from esolab.config import build_experiment, load_config, sweep_epsilons
from esolab.sim import epsilon_sweep, run_closed_loop

REPO = pathlib.Path(__file__).resolve().parents[1]
SEC5_CONFIG = REPO / "configs" / "paper_sec5.json"


@pytest.fixture(scope="session")
def sec5_doc():
    return load_config(str(SEC5_CONFIG))


@pytest.fixture(scope="session")
def sec5_experiment(sec5_doc):
    return build_experiment(sec5_doc)


@pytest.fixture(scope="session")
def sec5_trajectory(sec5_experiment):
    traj = run_closed_loop(sec5_experiment)
    assert not traj.diverged
    return traj


@pytest.fixture(scope="session")
def sec5_sweep(sec5_doc, sec5_experiment):
    return epsilon_sweep(sec5_experiment, sweep_epsilons(sec5_doc))
