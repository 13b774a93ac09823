import numpy as np
import pytest
from hypothesis import settings

from heatctl.coeffs import derive, preset
from heatctl.numerics import SampledFunction
from heatctl.transforms import TransformContext

settings.register_profile("heatctl", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("heatctl")


@pytest.fixture(scope="session")
def ctx1():
    return TransformContext.build("example1")


@pytest.fixture(scope="session")
def ctx2():
    return TransformContext.build("example2")


@pytest.fixture(scope="session")
def ctx0():
    return TransformContext.build("constant")


@pytest.fixture(scope="session")
def d1():
    return derive(preset("example1"))


@pytest.fixture(scope="session")
def z0_ex1(ctx1):
    return SampledFunction(ctx1.lam_grid(), np.exp(-ctx1.lam / 2))


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("ab")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>3}: {'PASS' if ok else 'FAIL'}  {detail}")
