"""Shared fixtures: the three component models used throughout the paper's
worked examples, loaded from the same files the CLI documentation uses."""

from fractions import Fraction
from pathlib import Path

import pytest

from rtpta.components import load_spec

MODELS = Path(__file__).resolve().parent.parent / "models"


@pytest.fixture(scope="session")
def spec_cyclic_pair():
    """Two periodic tasks (31, T1, T1) and (49, T2, T2), cyclic scheduler."""
    return load_spec(str(MODELS / "model51.json"))


@pytest.fixture(scope="session")
def spec_idle_pair():
    """Same task pair under the idle-time (busy-period) scheduler."""
    return load_spec(str(MODELS / "model52.json"))


@pytest.fixture(scope="session")
def spec_component():
    """Three-task component: periodic (2,8,8) and (20,50,50) around a bursty
    provided method with wcet 5 and parametric burst/period/deadline."""
    return load_spec(str(MODELS / "model6.json"))


@pytest.fixture
def ref_point():
    return {"T1": Fraction(60), "T2": Fraction(120)}
