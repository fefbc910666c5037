import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from trcdiagram.fixtures import load_fixtures
from trcdiagram.fragments import Fragment
from trcdiagram.randquery import QueryGenerator

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = load_fixtures()


def queries(fragment=Fragment.FULL, max_depth=3, boolean=None):
    """Hypothesis strategy of well-formed random queries."""
    return st.randoms(use_true_random=False).map(
        lambda rng: QueryGenerator(random.Random(rng.getrandbits(64)), fragment, max_depth).query(boolean)
    )


@pytest.fixture(params=FIXTURES, ids=lambda fx: fx.name)
def fx(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance")
        for line in RESULTS:
            terminalreporter.write_line(line)
