import numpy as np
import pytest

from spikecert import ClosedLoopReference, LtiPlant


REACTOR_A = np.array([[1.38, -0.2077, 6.715, -5.676],
                      [-0.5814, -4.29, 0.0, 0.675],
                      [1.067, 4.273, -6.654, 5.893],
                      [0.048, 4.273, 1.343, -2.104]])
REACTOR_B = np.array([[0.0, 0.0], [5.679, 0.0], [1.136, -3.146], [1.136, 0.0]])
REACTOR_C = np.array([[1.0, 0.0, 1.0, -1.0], [0.0, 1.0, 0.0, 0.0]])
REACTOR_K = np.array([[-0.5, -2.0], [5.0, 0.5]])
REACTOR_ALPHA = np.array([[1.0, 4.0], [3.0, 0.3]]) / 25.0
REACTOR_X0 = np.array([5.51, 7.08, 2.91, 5.11])


@pytest.fixture(scope="session")
def reactor_plant():
    return LtiPlant(REACTOR_A, REACTOR_B, REACTOR_C)


@pytest.fixture(scope="session")
def reactor_abar():
    return REACTOR_A + REACTOR_B @ REACTOR_K @ REACTOR_C


@pytest.fixture(scope="session")
def reactor_ref(reactor_abar):
    return ClosedLoopReference(reactor_abar, REACTOR_X0)


def random_siso_scenario(rng, max_spikes=600.0, allow_xi0=False):
    """Random (possibly unstable) SISO loop with a bounded spike budget.

    The budget keeps the event count proportional to t_end so localization
    error stays well inside the identity-residual tolerance.
    """
    nx = int(rng.integers(1, 5))
    base = rng.uniform(-1.0, 1.0, (nx, nx))
    scale = rng.uniform(0.2, 1.0) / max(np.linalg.norm(base, 2), 1e-9)
    a = base * scale
    b = rng.uniform(-1.0, 1.0, (nx, 1))
    c = rng.uniform(-1.0, 1.0, (1, nx))
    if abs(c @ b) < 1e-3:
        c[0, 0] += 0.5
    k = float(rng.uniform(0.2, 5.0))
    alpha = rng.uniform(0.05, 0.5, 2)
    x0 = rng.uniform(-2.0, 2.0, nx)
    t_end = float(rng.uniform(0.5, 3.0))
    y_max = (np.linalg.norm(c, 2) * np.exp(np.linalg.norm(a, 2) * t_end)
             * max(np.linalg.norm(x0), 1e-9))
    est = k * y_max * t_end / alpha.min()
    budget = max_spikes * t_end
    if est > budget:
        x0 = x0 * (budget / est)
    xi0 = (0.0, 0.0)
    if allow_xi0 and rng.random() < 0.25:
        xi0 = tuple(rng.uniform(0.0, 0.999) * alpha / k)
    return a, b, c, k, alpha, x0, t_end, xi0
