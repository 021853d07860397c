from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def jittered_polygon(n: int, rng: np.random.Generator, jitter: float = 0.3, radial: float = 0.15,
                     scale: float = 1.0, shift=(0.0, 0.0)) -> np.ndarray:
    """Star-shaped CCW polygon: a regular n-gon with angular and radial noise."""
    base = 2.0 * np.pi * np.arange(n) / n
    t = base + rng.uniform(-jitter, jitter, n) * np.pi / n
    r = 1.0 - radial * rng.uniform(0.0, 1.0, n)
    return scale * np.column_stack([r * np.cos(t), r * np.sin(t)]) + np.asarray(shift)


@st.composite
def polygons(draw, min_vertices=3, max_vertices=9):
    n = draw(st.integers(min_vertices, max_vertices))
    seed = draw(st.integers(0, 2**32 - 1))
    scale = draw(st.floats(0.05, 20.0))
    rng = np.random.default_rng(seed)
    return jittered_polygon(n, rng, scale=scale, shift=rng.uniform(-5, 5, 2))


def small_gradients(bound=0.2):
    return st.lists(st.floats(-bound, bound), min_size=4, max_size=4).map(lambda v: np.array(v).reshape(2, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def fd_gradient(f, x, eps=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = eps
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


def fd_jacobian(f, x, eps=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = eps
        cols.append(((f(x + e) - f(x - e)) / (2 * eps)).ravel())
    return np.array(cols).T


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
