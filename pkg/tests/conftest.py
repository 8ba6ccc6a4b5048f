from pathlib import Path

import pytest

from aaweave.cli import load_cascade_manifest
from aaweave.model import assembly_from_json

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def hospital_base():
    return assembly_from_json((FIXTURES / "hospital_base.json").read_text())


@pytest.fixture(scope="session")
def mono_cascade():
    return load_cascade_manifest(str(FIXTURES / "mono.cascade.json"))


@pytest.fixture(scope="session")
def scenario_cascade():
    return load_cascade_manifest(str(FIXTURES / "scenario.cascade.json"))


@pytest.fixture(scope="session")
def assistance_cascade():
    return load_cascade_manifest(str(FIXTURES / "assistance.cascade.json"))


@pytest.fixture(scope="session")
def energy_cascade():
    return load_cascade_manifest(str(FIXTURES / "energy.cascade.json"))
