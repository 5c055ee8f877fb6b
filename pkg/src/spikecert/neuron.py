"""Integrate-and-fire units and the spiking-signal algebra.

A neuron integrates a rectified affine function of the measured output,
``rate = max(0, orientation * (w . y - bias))``, and emits a spike of signed
amplitude ``sign_gain * amplitude`` whenever its state reaches the firing
threshold, resetting only its own state.

A spiking signal is a sampled Lebesgue part on a uniform grid plus a train
of Dirac impulses with strictly increasing times. Its running integral uses
the trapezoid rule for the sampled part and sums the impulse amplitudes with
time <= t (right-continuous at impulse times). The star norm is the supremum
of the absolute running integral, evaluated at every grid point and at both
one-sided values of every impulse time.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "IafNeuron",
    "SpikeEvent",
    "SpikingSignal",
    "neuron_rate",
    "neuron_step",
    "running_integral",
    "star_norm",
    "signal_scale",
    "signal_add",
    "signal_from_events",
    "spikes_to_csv",
    "spikes_from_csv",
]


@dataclass
class IafNeuron:
    """One integrate-and-fire unit.

    ``threshold`` and ``amplitude`` are strictly positive; ``sign_gain`` is
    the sign of emitted spikes and ``orientation`` selects whether the unit
    rectifies the input or its negation. ``input_weights`` is the row that
    maps the measured output vector into the unit's scalar drive; a constant
    drive c is encoded as a zero row with bias -c. ``state`` lives in
    [0, threshold) between events and is 0 right after the unit's own spike.
    """

    threshold: float
    amplitude: float
    sign_gain: int
    orientation: int
    bias: float = 0.0
    input_weights: np.ndarray = field(default_factory=lambda: np.ones(1))
    state: float = 0.0

    def __post_init__(self):
        if not (self.threshold > 0 and np.isfinite(self.threshold)):
            raise ValueError(f"threshold must be > 0, got {self.threshold}")
        if not (self.amplitude > 0 and np.isfinite(self.amplitude)):
            raise ValueError(f"amplitude must be > 0, got {self.amplitude}")
        if self.sign_gain not in (-1, 1):
            raise ValueError("sign_gain must be -1 or +1")
        if self.orientation not in (-1, 1):
            raise ValueError("orientation must be -1 or +1")
        self.input_weights = np.asarray(self.input_weights, dtype=float).reshape(-1)
        if not np.all(np.isfinite(self.input_weights)) or not np.isfinite(self.bias):
            raise ValueError("input_weights and bias must be finite")
        if not 0.0 <= self.state < self.threshold:
            raise ValueError(f"state must lie in [0, threshold), got {self.state}")

    @property
    def gain(self) -> float:
        """Emulated static gain magnitude amplitude/threshold."""
        return self.amplitude / self.threshold


def neuron_rate(neuron: IafNeuron, y) -> float:
    """Rectified drive max(0, orientation * (w . y - bias))."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape[0] != neuron.input_weights.shape[0]:
        raise ValueError(
            f"input dimension {y.shape[0]} does not match weights "
            f"{neuron.input_weights.shape[0]}"
        )
    return max(0.0, neuron.orientation * (float(neuron.input_weights @ y) - neuron.bias))


def neuron_step(neuron: IafNeuron, rate: float, dt: float) -> bool:
    """Advance the state by rate*dt; fire and reset to 0 on threshold crossing.

    The caller (the simulator's event localization) keeps dt small enough
    that at most one crossing occurs per step.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if rate < 0:
        raise ValueError("rate must be >= 0")
    neuron.state += rate * dt
    if neuron.state >= neuron.threshold:
        neuron.state = 0.0
        return True
    return False


@dataclass(frozen=True)
class SpikeEvent:
    """One emitted spike: time, owning neuron, control channel, signed amplitude."""

    time: float
    neuron_id: int
    channel: int
    signed_amplitude: float


@dataclass(frozen=True)
class SpikingSignal:
    """Lebesgue part sampled on a uniform grid plus a Dirac train.

    ``values`` has shape (n_samples,) for scalar signals or (n_samples, nv).
    ``dirac_times`` are strictly increasing; ``dirac_amps`` holds one
    (possibly vector) amplitude per time, with simultaneous components
    merged into a single impulse vector.
    """

    times: np.ndarray
    values: np.ndarray
    dirac_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    dirac_amps: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.shape[0] != v.shape[0] or t.shape[0] < 2:
            raise ValueError("need >= 2 grid samples and matching values")
        steps = np.diff(t)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12) or steps[0] <= 0:
            raise ValueError("grid must be uniform and increasing")
        dt = np.asarray(self.dirac_times, dtype=float).reshape(-1)
        da = np.asarray(self.dirac_amps, dtype=float)
        if da.ndim == 1:
            da = da[:, None] if da.size else da.reshape(0, v.shape[1])
        if da.shape[0] != dt.shape[0]:
            raise ValueError("dirac_times and dirac_amps disagree in length")
        if dt.size and (np.any(np.diff(dt) <= 0) or dt[0] < t[0] or dt[-1] > t[-1]):
            raise ValueError("dirac times must be strictly increasing within the grid span")
        if da.size and da.shape[1] != v.shape[1]:
            raise ValueError("dirac amplitude dimension does not match signal dimension")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "dirac_times", dt)
        object.__setattr__(self, "dirac_amps", da)

    @property
    def nv(self) -> int:
        return self.values.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def lebesgue_cumulative(self) -> np.ndarray:
        """Trapezoid running integral of the sampled part at every grid point."""
        dt = np.diff(self.times)[:, None]
        panels = 0.5 * dt * (self.values[:-1] + self.values[1:])
        out = np.zeros_like(self.values)
        np.cumsum(panels, axis=0, out=out[1:])
        return out

    def _lebesgue_at(self, t: float, cum: np.ndarray) -> np.ndarray:
        k = int(np.searchsorted(self.times, t, side="right") - 1)
        k = min(max(k, 0), len(self.times) - 2)
        t0 = self.times[k]
        h = self.times[k + 1] - t0
        frac = (t - t0) / h
        v_t = self.values[k] * (1 - frac) + self.values[k + 1] * frac
        return cum[k] + 0.5 * (t - t0) * (self.values[k] + v_t)


def running_integral(v: SpikingSignal, t: float):
    """Integral of the signal over [0, t]; includes any impulse exactly at t."""
    if t < v.times[0] - 1e-12 or t > v.horizon + 1e-12:
        raise ValueError(f"t={t} outside the signal horizon [{v.times[0]}, {v.horizon}]")
    t = min(max(t, float(v.times[0])), v.horizon)
    total = v._lebesgue_at(t, v.lebesgue_cumulative())
    if v.dirac_times.size:
        mask = v.dirac_times <= t
        total = total + v.dirac_amps[mask].sum(axis=0)
    return float(total[0]) if v.nv == 1 else total


def star_norm(v: SpikingSignal) -> float:
    """sup_t |running integral|, checking both one-sided values at impulses.

    The supremum is taken over every grid point and over the pre/post value
    at each Dirac time; the running integral jumps there, so both one-sided
    limits are candidates.
    """
    cum = v.lebesgue_cumulative()
    dirac_cum = np.zeros((len(v.times), v.nv))
    if v.dirac_times.size:
        idx = np.searchsorted(v.dirac_times, v.times, side="right")
        amps_cum = np.cumsum(v.dirac_amps, axis=0)
        nonzero = idx > 0
        dirac_cum[nonzero] = amps_cum[idx[nonzero] - 1]
    best = float(np.max(np.linalg.norm(cum + dirac_cum, axis=1)))
    if v.dirac_times.size:
        amps_cum = np.cumsum(v.dirac_amps, axis=0)
        for i, td in enumerate(v.dirac_times):
            leb = v._lebesgue_at(float(td), cum)
            before = amps_cum[i - 1] if i > 0 else np.zeros(v.nv)
            pre = leb + before
            post = leb + amps_cum[i]
            best = max(best, float(np.linalg.norm(pre)), float(np.linalg.norm(post)))
    return best


def signal_scale(v: SpikingSignal, a: float) -> SpikingSignal:
    """Pointwise scaling a*v, scaling both the sampled part and the impulses."""
    return SpikingSignal(v.times, a * v.values, v.dirac_times, a * v.dirac_amps)


def signal_add(v: SpikingSignal, w: SpikingSignal) -> SpikingSignal:
    """Sum of two signals sharing the same grid; coincident impulses merge."""
    if v.nv != w.nv or len(v.times) != len(w.times) or not np.allclose(v.times, w.times):
        raise ValueError("signals must share a common grid and dimension")
    times = np.concatenate([v.dirac_times, w.dirac_times])
    amps = np.concatenate([v.dirac_amps.reshape(-1, v.nv), w.dirac_amps.reshape(-1, v.nv)])
    if times.size:
        order = np.argsort(times, kind="stable")
        times, amps = times[order], amps[order]
        keep_t, keep_a = [], []
        for t, a in zip(times, amps):
            if keep_t and t == keep_t[-1]:
                keep_a[-1] = keep_a[-1] + a
            else:
                keep_t.append(t)
                keep_a.append(a.copy())
        times = np.array(keep_t)
        amps = np.array(keep_a)
    return SpikingSignal(v.times, v.values + w.values, times, amps)


def signal_from_events(times: np.ndarray, values: np.ndarray,
                       events: list[SpikeEvent], nv: int | None = None,
                       amp_sign: float = 1.0) -> SpikingSignal:
    """Build a signal from a sampled part and spike events.

    Each event contributes ``amp_sign * signed_amplitude`` on its channel;
    events sharing one instant merge into a single vector impulse.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    nv = values.shape[1] if nv is None else nv
    by_time: dict[float, np.ndarray] = {}
    order: list[float] = []
    for ev in events:
        if ev.time not in by_time:
            by_time[ev.time] = np.zeros(nv)
            order.append(ev.time)
        by_time[ev.time][ev.channel] += amp_sign * ev.signed_amplitude
    order.sort()
    dt = np.array(order)
    da = np.array([by_time[t] for t in order]).reshape(-1, nv)
    return SpikingSignal(times, values, dt, da)


_CSV_HEADER = ["t", "neuron_id", "channel", "signed_amplitude"]


def spikes_to_csv(events: list[SpikeEvent], fh) -> None:
    """Write spike events as CSV (time in seconds, 9 significant digits)."""
    own = isinstance(fh, (str, bytes))
    f = open(fh, "w", newline="") if own else fh
    try:
        writer = csv.writer(f)
        writer.writerow(_CSV_HEADER)
        for ev in events:
            writer.writerow([f"{ev.time:.9g}", ev.neuron_id, ev.channel,
                             f"{ev.signed_amplitude:.9g}"])
    finally:
        if own:
            f.close()


def spikes_from_csv(fh) -> list[SpikeEvent]:
    """Read spike events written by :func:`spikes_to_csv`."""
    own = isinstance(fh, (str, bytes))
    f = open(fh, "r", newline="") if own else fh
    try:
        reader = csv.reader(f)
        header = next(reader)
        if header != _CSV_HEADER:
            raise ValueError(f"unexpected spike CSV header: {header}")
        return [SpikeEvent(float(t), int(nid), int(ch), float(amp))
                for t, nid, ch, amp in reader]
    finally:
        if own:
            f.close()
