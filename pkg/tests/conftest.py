import json

import pytest

from exposure_audit.ingest import RatingDataset, split_train_test
from exposure_audit.pipeline import ExperimentConfig, run_experiment
from exposure_audit.synthetic import SyntheticSpec, generate_synthetic

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def tiny():
    return RatingDataset.from_records([("u1", "i1", 4), ("u1", "i2", 2), ("u2", "i1", 5)])


@pytest.fixture(scope="session")
def synthetic():
    """Default synthetic dataset and its supplier map."""
    return generate_synthetic(SyntheticSpec())


@pytest.fixture(scope="session")
def synthetic_split(synthetic):
    return split_train_test(synthetic[0], 0.2, seed=0)


@pytest.fixture(scope="session")
def experiment(tmp_path_factory):
    """One full default pipeline run on synthetic data: (config, reports, out dir)."""
    out = tmp_path_factory.mktemp("experiment")
    config = ExperimentConfig(out=str(out))
    reports = run_experiment(config)
    return config, reports, out


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
