import pytest

from causalgeo import (CausalSetSpace, MinkowskiSpace, PuncturedMinkowski,
                       canonical_time_bundle, causet_time_bundle,
                       cubic_time_bundle)


@pytest.fixture
def mink():
    return MinkowskiSpace(1, window=((-2.0, 2.0), 2.0))


@pytest.fixture
def mink_bundle(mink):
    return canonical_time_bundle(mink)


@pytest.fixture
def mink3():
    return MinkowskiSpace(2, window=((-2.0, 2.0), 2.0))


@pytest.fixture
def diamond():
    return CausalSetSpace(
        [("p", 0), ("a", 1), ("b", 1), ("q", 2)],
        [("p", "a", 1), ("p", "b", 1), ("a", "q", 1), ("b", "q", 1)])


@pytest.fixture
def diamond_bundle(diamond):
    return causet_time_bundle(diamond)


@pytest.fixture
def skewed_diamond():
    return CausalSetSpace(
        [("p", 0.0), ("a", 0.2), ("b", 1.8), ("q", 2.0)],
        [("p", "a", 1), ("p", "b", 1), ("a", "q", 1), ("b", "q", 1)])


@pytest.fixture
def skewed_bundle(skewed_diamond):
    return causet_time_bundle(skewed_diamond)


@pytest.fixture
def punctured():
    return PuncturedMinkowski(1, removed=[(1.0, 0.0)], window=((-1.0, 3.0), 3.0))


@pytest.fixture
def punctured_bundle(punctured):
    return canonical_time_bundle(punctured)


@pytest.fixture
def cubic_mink():
    return MinkowskiSpace(1, window=((-0.4, 0.4), 0.4))


@pytest.fixture
def cubic_bundle(cubic_mink):
    return cubic_time_bundle(cubic_mink, half_width=0.5)


class TauOverride:
    """Delegating wrapper that corrupts tau on chosen pairs (test defects)."""

    def __init__(self, base, overrides):
        self._base = base
        self._overrides = dict(overrides)

    def __getattr__(self, name):
        return getattr(self._base, name)

    def tau(self, x, y):
        key = (x, y)
        if key in self._overrides:
            return self._overrides[key]
        return self._base.tau(x, y)
