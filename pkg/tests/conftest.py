import numpy as np
import pytest

from lglab.core import ActionSpace, Characteristic, FiniteTypes, LargeGameSpec

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_space(rng, k):
    """A metric on k points from random planar coordinates."""
    pts = rng.random((k, 2)) + 0.05 * np.arange(k)[:, None]
    dist = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    return ActionSpace(tuple(f"x{j}" for j in range(k)), dist)


def random_affine_game(rng, n_types, k):
    chars = tuple(Characteristic("affine", tuple(rng.normal(size=k + k * k).round(6))) for _ in range(n_types))
    w = rng.dirichlet(np.ones(n_types))
    w = w / w.sum()
    return LargeGameSpec(ActionSpace.discrete([f"a{j}" for j in range(k)]), FiniteTypes(chars, w))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
