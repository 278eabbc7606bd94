import numpy as np
import pytest
from hypothesis import settings

from pdmpquant.horizon import augment
from pdmpquant.models import get_entry
from pdmpquant.models.corrosion import CorrosionParams, corrosion_model
from pdmpquant.models.repair import RepairWorkshopParams, repair_workshop_model
from pdmpquant.models.toy import ToyConstantParams, toy_constant_model

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])


@pytest.fixture
def toy():
    return toy_constant_model(ToyConstantParams())


@pytest.fixture
def repair():
    return repair_workshop_model(RepairWorkshopParams())


@pytest.fixture
def corrosion():
    return corrosion_model(CorrosionParams())


@pytest.fixture(params=["toy-constant", "repair-workshop", "corrosion"])
def registered(request):
    e = get_entry(request.param)
    p = e.make_params()
    return e, p, e.model(p), e.x0(p)


def rows(x):
    """Single state as (mode array, coords array)."""
    return np.array([x.mode]), np.array([x.coords], dtype=float)
