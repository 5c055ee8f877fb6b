"""LTI plant with exact open-loop flow and Dirac-impulse state jumps.

Between control spikes the plant evolves open loop (``xdot = A x``), so
inter-spike propagation is the exact matrix-exponential flow. A spike on
input channel ``k`` with signed amplitude ``a`` shifts the state by
``a * B[:, k]`` instantaneously.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, is_hurwitz, mat_exp

__all__ = ["LtiPlant", "ClosedLoopReference", "flow_open_loop", "apply_impulse", "reference_state"]


@dataclass(frozen=True)
class LtiPlant:
    """State-space triple (A, B, C): xdot = A x + B u, y = C x."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", as_matrix(self.a, square=True, name="A"))
        object.__setattr__(self, "b", as_matrix(self.b, name="B"))
        object.__setattr__(self, "c", as_matrix(self.c, name="C"))
        if self.b.shape[0] != self.nx:
            raise ValueError(f"B has {self.b.shape[0]} rows, expected {self.nx}")
        if self.c.shape[1] != self.nx:
            raise ValueError(f"C has {self.c.shape[1]} columns, expected {self.nx}")

    @property
    def nx(self) -> int:
        return self.a.shape[0]

    @property
    def nu(self) -> int:
        return self.b.shape[1]

    @property
    def ny(self) -> int:
        return self.c.shape[0]

    def output(self, x: np.ndarray) -> np.ndarray:
        return self.c @ x


@dataclass(frozen=True)
class ClosedLoopReference:
    """Ideal continuous-time closed loop: xbar_dot = Abar xbar, Abar Hurwitz."""

    abar: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "abar", as_matrix(self.abar, square=True, name="Abar"))
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if x0.shape[0] != self.abar.shape[0] or not np.all(np.isfinite(x0)):
            raise ValueError("x0 must be a finite vector matching Abar's order")
        object.__setattr__(self, "x0", x0)
        if not is_hurwitz(self.abar):
            raise ValueError("Abar is not Hurwitz; the reference loop must be stable")


def flow_open_loop(plant: LtiPlant, x, dt: float) -> np.ndarray:
    """Exact inter-spike propagation e^{A dt} x (u == 0 between spikes)."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    x = np.asarray(x, dtype=float).reshape(-1)
    return mat_exp(plant.a, dt) @ x


def apply_impulse(plant: LtiPlant, x, channel: int, signed_amplitude: float) -> np.ndarray:
    """State jump x + signed_amplitude * B[:, channel] (channel is 0-based)."""
    if not 0 <= channel < plant.nu:
        raise ValueError(f"channel {channel} out of range [0, {plant.nu})")
    x = np.asarray(x, dtype=float).reshape(-1)
    return x + signed_amplitude * plant.b[:, channel]


def reference_state(ref: ClosedLoopReference, t: float) -> np.ndarray:
    """Reference trajectory xbar(t) = e^{Abar t} x0."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return mat_exp(ref.abar, t) @ ref.x0
