"""Shared test helpers."""

import json
import os

import numpy as np
import pytest

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                        "fixtures")


def load_fixture(name):
    with open(os.path.join(FIXTURES, name)) as f:
        return json.load(f)


def fixture_path(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)
