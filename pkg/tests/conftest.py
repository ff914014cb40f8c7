import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from arms.domain import default_config, snapshot_from_dict
from arms.reputation import benchmark_from_dict

settings.register_profile(
    "arms",
    max_examples=200,
    derandomize=True,
    deadline=None,
    suppress_health_check=[
        HealthCheck.too_slow,
        HealthCheck.filter_too_much,
        HealthCheck.data_too_large,
    ],
)
settings.load_profile("arms")

FIXTURE_DIR = Path(__file__).parent / "fixtures"


def load_snapshot_fixture(name: str):
    path = FIXTURE_DIR / f"{name}.json"
    return snapshot_from_dict(json.loads(path.read_text(encoding="utf-8")))


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURE_DIR


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def genuine_snapshot():
    return load_snapshot_fixture("genuine_maintainer")


@pytest.fixture(scope="session")
def xz_snapshot():
    return load_snapshot_fixture("xz_pattern")


@pytest.fixture(scope="session")
def dexcom_snapshot():
    return load_snapshot_fixture("dexcom_pattern")


@pytest.fixture(scope="session")
def eslint_snapshot():
    return load_snapshot_fixture("eslint_legit")


@pytest.fixture(scope="session")
def population():
    paths = sorted((FIXTURE_DIR / "population").glob("*.json"))
    return [snapshot_from_dict(json.loads(p.read_text(encoding="utf-8")))
            for p in paths]


@pytest.fixture(scope="session")
def golden_benchmark_doc():
    path = FIXTURE_DIR / "golden" / "population_benchmark.json"
    return json.loads(path.read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def golden_benchmark(golden_benchmark_doc):
    return benchmark_from_dict(golden_benchmark_doc)
