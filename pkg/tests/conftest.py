import sys

import numpy as np
import pytest

from sphvqi.point_sets import gauss_product_points


def random_unit(rng, n, min_polar=0.05):
    """Uniform unit vectors kept ``min_polar`` radians away from the poles."""
    out = []
    while len(out) < n:
        v = rng.standard_normal(3)
        v /= np.linalg.norm(v)
        if np.arccos(min(1.0, abs(v[2]))) > min_polar:
            out.append(v)
    return np.array(out)


def random_pairs(rng, n, tmax=1 - 1e-4):
    X, Y = [], []
    while len(X) < n:
        x, y = random_unit(rng, 2)
        if abs(x @ y) <= tmax:
            X.append(x)
            Y.append(y)
    return np.array(X), np.array(Y)


def tangent_at(rng, x):
    v = rng.standard_normal(x.shape)
    return v - np.sum(v * x, axis=-1, keepdims=True) * x


@pytest.fixture
def rng():
    return np.random.default_rng(20241017)


@pytest.fixture(scope="session")
def dense_rule():
    # exact for polynomial integrands up to degree 60, away-from-pole nodes
    return gauss_product_points(60)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "SUMMARY", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
