"""Closed-form guaranteed bounds and verification of simulated runs.

The guaranteed state-emulation bound is the iSISS gain of the ideal loop
times an amplitude factor determined by the network shape:

* pair:      gamma * (alpha1 + alpha2), or gamma * max(alpha1, alpha2)
             when both neuron states start at zero,
* grid:      gamma * sqrt(sum_i (sum_j (alpha_1ij + alpha_2ij))^2),
* row-gain:  gamma * sqrt(sum_i (alpha_1i + alpha_2i)^2),
* pwa:       sum_i alpha_i (a signal-level bound, no plant gain).

``verify`` replays every check against a finished run and reports achieved
values next to bounds; check failures are report content, never exceptions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import DecayEnvelope, hurwitz_envelope, isiss_gain
from .network import ControllerNetwork
from .plant import ClosedLoopReference, LtiPlant
from .simulator import EmulationTrace, SimResult

__all__ = [
    "CertReport",
    "siso_bound",
    "mimo_bound",
    "rowgain_bound",
    "pwa_bound",
    "practical_bound",
    "verify",
]

# Relative slack on the dwell-time check: the empirical max rate samples the
# drive at quadrature nodes only, so sub-step peaks can shave the bound by
# O(step * drive slope / rate).
_DWELL_RTOL = 1e-3


def _check_nonneg(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be non-negative and finite")
    return arr


def siso_bound(gamma: float, alpha1: float, alpha2: float, xi0_zero: bool) -> float:
    """Pair bound gamma*(a1+a2), tightened to gamma*max(a1,a2) for zero initial states."""
    gamma, alpha1, alpha2 = (float(v) for v in
                             _check_nonneg([gamma, alpha1, alpha2], "gamma/alpha"))
    return gamma * (max(alpha1, alpha2) if xi0_zero else alpha1 + alpha2)


def mimo_bound(gamma: float, alpha) -> float:
    """Grid bound gamma * sqrt(sum_i (sum over branch,j of alpha)^2).

    ``alpha`` has shape (2, nu, ny) (per branch) or (nu, ny) when both
    branches share amplitudes.
    """
    gamma = float(_check_nonneg(gamma, "gamma"))
    A = _check_nonneg(alpha, "alpha")
    if A.ndim == 2:
        A = np.stack([A, A])
    if A.ndim != 3 or A.shape[0] != 2:
        raise ValueError("alpha must have shape (2, nu, ny) or (nu, ny)")
    per_channel = A.sum(axis=(0, 2))
    return gamma * float(np.sqrt(np.sum(per_channel ** 2)))


def rowgain_bound(gamma: float, alpha) -> float:
    """Row-gain bound gamma * sqrt(sum_i (alpha_1i + alpha_2i)^2)."""
    gamma = float(_check_nonneg(gamma, "gamma"))
    A = _check_nonneg(alpha, "alpha")
    if A.ndim == 1:
        A = np.stack([A, A])
    if A.ndim != 2 or A.shape[0] != 2:
        raise ValueError("alpha must have shape (2, nu) or (nu,)")
    per_channel = A.sum(axis=0)
    return gamma * float(np.sqrt(np.sum(per_channel ** 2)))


def pwa_bound(alpha) -> float:
    """Signal-level bound sum_i alpha_i on |integral of (g(y) - u)|."""
    return float(_check_nonneg(alpha, "alpha").sum())


def practical_bound(envelope: DecayEnvelope, x0_norm: float, gamma: float,
                    e_star_bound: float, t: float) -> float:
    """c e^{-lambda t} |x0| + gamma * e_star_bound; the t -> inf limit is the ultimate ball."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return envelope.at(t) * float(x0_norm) + float(gamma) * float(e_star_bound)


@dataclass
class CertReport:
    """Guaranteed bounds next to achieved values, with per-check verdicts."""

    gamma: float
    envelope: DecayEnvelope
    e_star_bound: float
    xtilde_bound: float
    achieved_xtilde: float
    achieved_e_star: float
    total_spikes: int
    eps_num: float
    x0_norm: float
    checks: dict[str, tuple[float, float, bool]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(ok for _, _, ok in self.checks.values())

    def practical_bound_at(self, t: float) -> float:
        return practical_bound(self.envelope, self.x0_norm, self.gamma,
                               self.e_star_bound, t)

    def to_text(self) -> str:
        lines = [
            "certification report",
            f"gamma: {self.gamma:.9g}",
            f"envelope_c: {self.envelope.c:.9g}",
            f"envelope_lambda: {self.envelope.lam:.9g}",
            f"e_star_bound: {self.e_star_bound:.9g}",
            f"xtilde_bound: {self.xtilde_bound:.9g}",
            f"achieved_xtilde: {self.achieved_xtilde:.9g}",
            f"achieved_e_star: {self.achieved_e_star:.9g}",
            f"total_spikes: {self.total_spikes}",
            f"eps_num: {self.eps_num:.9g}",
            f"ultimate_ball: {self.gamma * self.e_star_bound:.9g}",
        ]
        for name, (achieved, bound, ok) in self.checks.items():
            lines.append(f"check {name}: achieved {achieved:.9g}"
                         f" bound {bound:.9g} pass {str(ok).lower()}")
        lines.append(f"pass: {str(self.passed).lower()}")
        return "\n".join(lines) + "\n"


def _network_e_star_bound(net: ControllerNetwork, xi0_zero: bool) -> float:
    """Star-norm bound on the emulation error implied by the network's amplitudes."""
    sums = net.channel_amplitude_sums()
    if net.kind == "siso_pair" and xi0_zero:
        return float(max(nr.amplitude for nr in net.neurons))
    if net.kind == "pwa":
        return float(sums.sum())
    return float(np.sqrt(np.sum(sums ** 2)))


def verify(sim: SimResult, trace: EmulationTrace, *, plant: LtiPlant,
           net: ControllerNetwork, ref: ClosedLoopReference,
           gamma: float | None = None,
           envelope: DecayEnvelope | None = None) -> CertReport:
    """Fill a CertReport for a finished closed-loop run.

    Checks, each within the run's integration slack eps_num:
    max |xtilde| against the guaranteed bound, the achieved star norm
    against the amplitude bound, |x(t)| against the practical-stability
    envelope at every sample, per-channel running-integral bounds,
    per-neuron dwell times, and the running-integral identity residual.
    """
    if sim.status != "completed":
        raise ValueError(f"cannot verify a run with status {sim.status!r}")
    if gamma is None:
        gamma = isiss_gain(ref.abar, plant.b)
    if envelope is None:
        envelope = hurwitz_envelope(ref.abar)

    xi0_zero = bool(np.all(sim.neuron_states[0] == 0.0))
    e_star_bound = _network_e_star_bound(net, xi0_zero)
    xtilde_bound = gamma * e_star_bound
    achieved_xtilde = sim.max_state_error()
    eps = sim.eps_num

    checks: dict[str, tuple[float, float, bool]] = {}
    checks["xtilde"] = (achieved_xtilde, xtilde_bound,
                        achieved_xtilde <= xtilde_bound + eps)
    checks["e_star"] = (trace.e_star, e_star_bound, trace.e_star <= e_star_bound + eps)

    x0_norm = float(np.linalg.norm(ref.x0))
    norms = np.linalg.norm(sim.states, axis=1)
    pb = np.array([practical_bound(envelope, x0_norm, gamma, e_star_bound, t)
                   for t in sim.times])
    worst = float(np.max(norms - pb))
    checks["practical"] = (worst, 0.0, worst <= eps)

    sup_margin = 0.0
    for sup, bound in zip(trace.channel_sups, trace.channel_bounds):
        sup_margin = max(sup_margin, sup - bound)
    checks["per_channel_integral"] = (sup_margin, 0.0, sup_margin <= eps)

    dwell_worst = 0.0
    for gap, delta, m in zip(sim.min_gap, (nr.threshold for nr in net.neurons), sim.m_emp):
        if np.isfinite(gap) and m > 0:
            dwell_worst = max(dwell_worst, delta / m - gap)
    dwell_slack = _DWELL_RTOL * float(max(
        (nr.threshold / m for nr, m in zip(net.neurons, sim.m_emp) if m > 0),
        default=0.0))
    checks["dwell_time"] = (dwell_worst, 0.0, dwell_worst <= dwell_slack)

    # The identity residual accumulates one reset error (~rate * event_tol)
    # per spike; gain * max-rate * t_end is the natural scale of the
    # running integrals it perturbs.
    gains = np.array([nr.amplitude / nr.threshold for nr in net.neurons])
    residual_scale = float(np.max(gains * sim.m_emp)) * sim.config.t_end
    residual_tol = 1e-6 * max(residual_scale, 1e-9)
    checks["identity_residual"] = (trace.psi_identity_residual, residual_tol,
                                   trace.psi_identity_residual <= residual_tol)

    return CertReport(gamma=float(gamma), envelope=envelope,
                      e_star_bound=e_star_bound, xtilde_bound=xtilde_bound,
                      achieved_xtilde=achieved_xtilde, achieved_e_star=trace.e_star,
                      total_spikes=sim.total_spikes, eps_num=eps, x0_norm=x0_norm,
                      checks=checks)
