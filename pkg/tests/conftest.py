import time
from contextlib import contextmanager

import numpy as np
import pytest

from recall_dyn.learning import REFERENCE_PATTERNS, LearningSpec, learn_weights
from recall_dyn.model import NetworkConfig, structured_random_weights

ALPHA = 1 / 54
G_REFERENCE = 97 / 54

_ACCEPTANCE_LINES: dict[int, str] = {}


def reference_network(mu1, g_bar_a=G_REFERENCE):
    cfg = NetworkConfig(6, 3, ALPHA, g_bar_a)
    return learn_weights(LearningSpec(REFERENCE_PATTERNS, mu1, 6, 3), cfg), cfg


def random_network(rng, n, m, alpha=None, g_bar_a=None, scale=1.0):
    alpha = rng.uniform(0.05, 0.5) if alpha is None else alpha
    g_bar_a = rng.uniform(0.5, 5.0) if g_bar_a is None else g_bar_a
    return structured_random_weights(n, m, rng, scale), NetworkConfig(n, m, alpha, g_bar_a)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@contextmanager
def criterion(number: int, title: str):
    """Record a PASS/FAIL line with runtime for an acceptance criterion."""
    t0 = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        _ACCEPTANCE_LINES[number] = (f"criterion {number:2d} FAIL  {title} "
                                     f"[{time.perf_counter() - t0:.1f}s] {type(exc).__name__}: "
                                     f"{str(exc).splitlines()[0] if str(exc) else ''}")
        raise
    _ACCEPTANCE_LINES[number] = (f"criterion {number:2d} PASS  {title} "
                                 f"[{time.perf_counter() - t0:.1f}s]")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(_ACCEPTANCE_LINES[k])


def matched_max_error(a, b):
    """Largest distance after optimal one-to-one matching of two multisets."""
    from scipy.optimize import linear_sum_assignment

    a, b = np.asarray(a).ravel(), np.asarray(b).ravel()
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
