import numpy as np
import pytest

from smloc.geometry import AnchorSet
from smloc.measurement import make_intervals

SWEEP_TARGET = np.array([0.15, 0.35])


def sweep_case(h, delta=0.05):
    anchors = AnchorSet.from_points([[-1.0, 0.0], [1.0, 0.0], [0.0, h]])
    return anchors, make_intervals(SWEEP_TARGET, anchors, delta)


def random_case(rng, m=None, n=2, delta=None, spread=2.0):
    """Anchors in a box around a target that is measured consistently."""
    m = int(rng.integers(3, 7)) if m is None else m
    anchors = AnchorSet.from_points(rng.uniform(-spread, spread, size=(m, n)))
    target = rng.uniform(-0.5, 0.5, size=n)
    delta = float(rng.uniform(0.02, 0.4)) if delta is None else delta
    return anchors, make_intervals(target, anchors, delta), target


def random_directions(rng, count, n=2):
    d = rng.normal(size=(count, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


@pytest.fixture
def h12():
    return sweep_case(1.2)


@pytest.fixture
def h008():
    return sweep_case(0.08)
