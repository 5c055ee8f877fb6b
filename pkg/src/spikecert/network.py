"""Controller-network builders and continuous piecewise-affine functions.

Four network shapes are supported:

* ``siso_pair``    -- two neurons emulating a scalar static gain K > 0,
* ``mimo_grid``    -- one neuron pair per (input channel, output) entry of K,
* ``mimo_rowgain`` -- one unit-gain pair per input channel sensing K's row,
* ``pwa``          -- a rectified-term network emulating a continuous
  piecewise-affine map of a scalar input.

Every neuron's amplitude/threshold ratio equals the gain magnitude it
emulates; entries (slope increments) that are exactly zero are omitted,
which keeps every amplitude positive and leaves the bounds unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .neuron import IafNeuron

__all__ = [
    "ControllerNetwork",
    "PwaFunction",
    "build_siso_pair",
    "build_mimo_grid",
    "build_mimo_rowgain",
    "build_pwa_network",
    "pwa_eval",
]

KINDS = ("siso_pair", "mimo_grid", "mimo_rowgain", "pwa")


@dataclass
class ControllerNetwork:
    """A finite set of neurons plus the control channel each one feeds.

    Spikes landing on one channel sum. ``n_inputs`` is the dimension of the
    measured signal every neuron's input_weights row must match.
    """

    neurons: list[IafNeuron]
    channels: list[int]
    kind: str
    n_channels: int
    n_inputs: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown network kind {self.kind!r}")
        if not self.neurons:
            raise ValueError("network must contain at least one neuron")
        if len(self.channels) != len(self.neurons):
            raise ValueError("one output channel per neuron required")
        for ch in self.channels:
            if not 0 <= ch < self.n_channels:
                raise ValueError(f"channel {ch} out of range [0, {self.n_channels})")
        for nr in self.neurons:
            if nr.input_weights.shape[0] != self.n_inputs:
                raise ValueError("neuron input_weights dimension mismatch")

    @property
    def n_neurons(self) -> int:
        return len(self.neurons)

    def channel_amplitude_sums(self) -> np.ndarray:
        """Sum of spike amplitudes feeding each channel (bound bookkeeping)."""
        sums = np.zeros(self.n_channels)
        for nr, ch in zip(self.neurons, self.channels):
            sums[ch] += nr.amplitude
        return sums


def _check_positive(value: float, name: str) -> float:
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return float(value)


def build_siso_pair(k: float, alpha1: float, alpha2: float,
                    xi0: tuple[float, float] = (0.0, 0.0)) -> ControllerNetwork:
    """Two-neuron pair emulating u = K y for scalar K > 0.

    Thresholds are alpha/K so each neuron's amplitude/threshold ratio is K.
    Neuron 0 rectifies +y and emits +alpha1; neuron 1 rectifies -y and emits
    -alpha2. For a stabilizing K < 0 flip the sign of the emitted control
    instead (equivalently, build the one-row grid which handles signs).
    """
    k = _check_positive(k, "K")
    alpha1 = _check_positive(alpha1, "alpha1")
    alpha2 = _check_positive(alpha2, "alpha2")
    neurons = [
        IafNeuron(threshold=alpha1 / k, amplitude=alpha1, sign_gain=+1,
                  orientation=+1, input_weights=np.ones(1), state=xi0[0]),
        IafNeuron(threshold=alpha2 / k, amplitude=alpha2, sign_gain=-1,
                  orientation=-1, input_weights=np.ones(1), state=xi0[1]),
    ]
    return ControllerNetwork(neurons, [0, 0], "siso_pair", n_channels=1, n_inputs=1)


def build_mimo_grid(k: np.ndarray, alpha: np.ndarray) -> ControllerNetwork:
    """One neuron pair per nonzero K entry; 2 * nu * ny neurons at most.

    ``alpha`` has shape (2, nu, ny) (per rectification branch and entry) or
    (nu, ny) when both branches share amplitudes. Pairs with K[i, j] == 0
    are omitted; a negative K[i, j] flips both emitted signs.
    """
    K = np.asarray(k, dtype=float)
    if K.ndim != 2 or not np.all(np.isfinite(K)):
        raise ValueError("K must be a finite 2-D matrix")
    nu, ny = K.shape
    A = np.asarray(alpha, dtype=float)
    if A.shape == (nu, ny):
        A = np.stack([A, A])
    if A.shape != (2, nu, ny):
        raise ValueError(f"alpha must have shape (2, {nu}, {ny}) or ({nu}, {ny})")
    if not np.any(K):
        raise ValueError("K is all zero: the network would be empty")
    neurons: list[IafNeuron] = []
    channels: list[int] = []
    for i in range(nu):
        for j in range(ny):
            if K[i, j] == 0.0:
                continue
            sgn = 1 if K[i, j] > 0 else -1
            w = np.zeros(ny)
            w[j] = 1.0
            for ell, (orient, branch_sign) in enumerate(((+1, +1), (-1, -1))):
                a = _check_positive(A[ell, i, j], f"alpha[{ell},{i},{j}]")
                neurons.append(IafNeuron(
                    threshold=a / abs(K[i, j]), amplitude=a,
                    sign_gain=sgn * branch_sign, orientation=orient,
                    input_weights=w.copy()))
                channels.append(i)
    return ControllerNetwork(neurons, channels, "mimo_grid",
                             n_channels=nu, n_inputs=ny)


def build_mimo_rowgain(k: np.ndarray, alpha: np.ndarray) -> ControllerNetwork:
    """One unit-gain pair per input channel, sensing the weighted output K[i, :] y.

    ``alpha`` has shape (2, nu) or (nu,). Thresholds equal the amplitudes
    (amplitude/threshold == 1), so the pair emulates the weighted sum itself.
    """
    K = np.asarray(k, dtype=float)
    if K.ndim != 2 or not np.all(np.isfinite(K)):
        raise ValueError("K must be a finite 2-D matrix")
    nu, ny = K.shape
    A = np.asarray(alpha, dtype=float)
    if A.shape == (nu,):
        A = np.stack([A, A])
    if A.shape != (2, nu):
        raise ValueError(f"alpha must have shape (2, {nu}) or ({nu},)")
    neurons: list[IafNeuron] = []
    channels: list[int] = []
    for i in range(nu):
        if not np.any(K[i]):
            raise ValueError(f"K row {i} is all zero")
        for ell, (orient, sgn) in enumerate(((+1, +1), (-1, -1))):
            a = _check_positive(A[ell, i], f"alpha[{ell},{i}]")
            neurons.append(IafNeuron(
                threshold=a, amplitude=a, sign_gain=sgn, orientation=orient,
                input_weights=K[i].copy()))
            channels.append(i)
    return ControllerNetwork(neurons, channels, "mimo_rowgain",
                             n_channels=nu, n_inputs=ny)


@dataclass(frozen=True)
class PwaFunction:
    """Continuous piecewise-affine map written as rectified terms.

    ``g(y) = c - K0 max(0, -(y - b1)) + K1 max(0, y - b1)
             + sum_i (Ki - K(i-1)) max(0, y - bi)``

    with value c at the first breakpoint's left limit anchored by g(0) = c
    when b1 = 0. ``slopes`` lists K0..KN; ``breakpoints`` lists b1..bN
    (non-decreasing, with b1 < bN for N >= 2). The form is continuous by
    construction.
    """

    c: float
    breakpoints: tuple[float, ...]
    slopes: tuple[float, ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        sl = tuple(float(s) for s in self.slopes)
        if not bp:
            raise ValueError("need at least one breakpoint")
        if len(sl) != len(bp) + 1:
            raise ValueError(f"need {len(bp) + 1} slopes for {len(bp)} breakpoints")
        if not all(np.isfinite(b) for b in bp) or not all(np.isfinite(s) for s in sl):
            raise ValueError("breakpoints and slopes must be finite")
        if not np.isfinite(self.c):
            raise ValueError("c must be finite")
        if any(b2 < b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be non-decreasing")
        if len(bp) >= 2 and not bp[0] < bp[-1]:
            raise ValueError("degenerate breakpoints: need b1 < bN when N >= 2")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "slopes", sl)

    @property
    def n_segments(self) -> int:
        return len(self.slopes)

    def slope_increments(self) -> np.ndarray:
        """Increments (K0, K1, K2-K1, ..., KN-K(N-1)) driving the network gains."""
        sl = np.asarray(self.slopes)
        out = np.empty(len(sl))
        out[0] = sl[0]
        out[1] = sl[1] if len(sl) > 1 else 0.0
        out[2:] = np.diff(sl[1:])
        return out


def pwa_eval(g: PwaFunction, y):
    """Evaluate the rectified-term form directly (not by segment lookup)."""
    y = np.asarray(y, dtype=float)
    b = np.asarray(g.breakpoints)
    k = np.asarray(g.slopes)
    out = g.c - k[0] * np.maximum(0.0, -(y - b[0])) + k[1] * np.maximum(0.0, y - b[0])
    for i in range(1, len(b)):
        out = out + (k[i + 1] - k[i]) * np.maximum(0.0, y - b[i])
    return float(out) if out.ndim == 0 else out


def build_pwa_network(g: PwaFunction, alpha) -> ControllerNetwork:
    """Rectified-term network emulating g; N + 3 neurons before omissions.

    Unit ``i`` integrates max(0, y - b_i) (unit 0 integrates the reflected
    first term) with threshold alpha_i / |increment_i| and emits the
    increment's sign; two unit-gain constant units integrate max(0, +-c) so
    exactly one of them reproduces the offset c (neither fires when c == 0).
    Units whose slope increment is exactly zero are omitted.
    """
    N = len(g.breakpoints)
    a = np.asarray(alpha, dtype=float).reshape(-1)
    if a.shape[0] != N + 3:
        raise ValueError(f"alpha must have {N + 3} entries, got {a.shape[0]}")
    inc = g.slope_increments()
    neurons: list[IafNeuron] = []
    for i in range(N + 1):
        if inc[i] == 0.0:
            continue
        amp = _check_positive(a[i], f"alpha[{i}]")
        if i == 0:
            orient, bias, sgn = -1, g.breakpoints[0], -int(np.sign(inc[0]))
        else:
            orient, bias, sgn = +1, g.breakpoints[i - 1], int(np.sign(inc[i]))
        neurons.append(IafNeuron(
            threshold=amp / abs(inc[i]), amplitude=amp, sign_gain=sgn,
            orientation=orient, bias=bias, input_weights=np.ones(1)))
    for idx, orient, sgn in ((N + 1, +1, +1), (N + 2, -1, -1)):
        amp = _check_positive(a[idx], f"alpha[{idx}]")
        neurons.append(IafNeuron(
            threshold=amp, amplitude=amp, sign_gain=sgn, orientation=orient,
            bias=-g.c, input_weights=np.zeros(1)))
    return ControllerNetwork(neurons, [0] * len(neurons), "pwa",
                             n_channels=1, n_inputs=1)
