import os
import pathlib
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default",
    max_examples=100,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = pathlib.Path(__file__).resolve().parent.parent
PROGRAMS = ROOT / "walkthroughs" / "programs"


@pytest.fixture(scope="session")
def programs():
    return PROGRAMS


@pytest.fixture(scope="session")
def governments():
    from sessionflow.surface import parse_file

    return parse_file(PROGRAMS / "governments.sp")


@pytest.fixture(scope="session")
def continuations():
    from sessionflow.surface import parse_file

    return parse_file(PROGRAMS / "continuations.sp")
