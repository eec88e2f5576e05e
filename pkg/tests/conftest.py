import time

import numpy as np
import pytest

from contactlfd.generator import generate_demo
from contactlfd.motion_planning import load_bundled_chain
from contactlfd.pipeline import learn_from_demo
from contactlfd.scenarios import dishwash_spec, wrist_flip_spec

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}
# fixture name -> seconds spent learning the policy
LEARN_SECONDS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def chain():
    return load_bundled_chain()


@pytest.fixture(scope="session")
def dishwash():
    """(spec, demo, truth, LearnResult) for the nominal dishwash demonstration."""
    spec = dishwash_spec()
    demo, truth = generate_demo(spec)
    t0 = time.perf_counter()
    res = learn_from_demo(demo)
    LEARN_SECONDS["dishwash"] = time.perf_counter() - t0
    return spec, demo, truth, res


@pytest.fixture(scope="session")
def wrist_flip():
    spec = wrist_flip_spec()
    demo, truth = generate_demo(spec)
    return spec, demo, truth, learn_from_demo(demo)
