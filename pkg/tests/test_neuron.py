import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikecert.neuron import (IafNeuron, SpikeEvent, SpikingSignal,
                              neuron_rate, neuron_step, running_integral,
                              signal_add, signal_from_events, signal_scale,
                              spikes_from_csv, spikes_to_csv, star_norm)


def _pair_neuron(orientation, bias=0.0, threshold=0.5, amplitude=1.0):
    return IafNeuron(threshold=threshold, amplitude=amplitude,
                     sign_gain=orientation, orientation=orientation, bias=bias)


# -------------------------------------------------------------- neuron_rate

def test_rate_positive_branch():
    assert neuron_rate(_pair_neuron(+1), 2.0) == 2.0


def test_rate_negative_branch_rejects_positive_input():
    assert neuron_rate(_pair_neuron(-1), 2.0) == 0.0


def test_rate_bias_shifts_rectifier():
    n = IafNeuron(threshold=0.5, amplitude=1.0, sign_gain=1, orientation=1, bias=1.0)
    assert neuron_rate(n, 0.5) == 0.0
    assert neuron_rate(n, 1.75) == pytest.approx(0.75)


def test_rate_weighted_input():
    n = IafNeuron(threshold=1.0, amplitude=1.0, sign_gain=1, orientation=1,
                  input_weights=np.array([2.0, -1.0]))
    assert neuron_rate(n, np.array([1.0, 0.5])) == pytest.approx(1.5)


def test_rate_dimension_mismatch():
    with pytest.raises(ValueError):
        neuron_rate(_pair_neuron(+1), np.array([1.0, 2.0]))


# -------------------------------------------------------------- neuron_step

def test_constant_rate_spikes_on_schedule():
    n = _pair_neuron(+1, threshold=0.5)
    dt = 1e-3
    fired_at = []
    for k in range(2000):
        if neuron_step(n, 1.0, dt):
            fired_at.append((k + 1) * dt)
    assert len(fired_at) == 4
    assert np.allclose(fired_at, [0.5, 1.0, 1.5, 2.0], atol=2 * dt)


def test_zero_rate_never_fires():
    n = _pair_neuron(+1)
    assert not any(neuron_step(n, 0.0, 1e-2) for _ in range(1000))
    assert n.state == 0.0


def test_linear_ramp_first_spike_at_unit_time():
    # rate(t) = t integrates to t^2/2; threshold 0.5 crossed at t = 1
    n = _pair_neuron(+1, threshold=0.5)
    dt = 1e-3
    t = 0.0
    while not neuron_step(n, t + dt / 2.0, dt):
        t += dt
    assert t + dt == pytest.approx(1.0, abs=2e-3)


def test_neuron_validation():
    with pytest.raises(ValueError):
        IafNeuron(threshold=-1.0, amplitude=1.0, sign_gain=1, orientation=1)
    with pytest.raises(ValueError):
        IafNeuron(threshold=1.0, amplitude=1.0, sign_gain=2, orientation=1)
    with pytest.raises(ValueError):
        IafNeuron(threshold=1.0, amplitude=1.0, sign_gain=1, orientation=1, state=1.0)


# --------------------------------------------------------- running_integral

def _dirac_signal(horizon, diracs, n=2001):
    times = np.linspace(0.0, horizon, n)
    events = [SpikeEvent(t, 0, 0, a) for t, a in diracs]
    return signal_from_events(times, np.zeros(n), events)


def test_running_integral_includes_dirac_at_its_instant():
    v = _dirac_signal(2.0, [(1.0, 3.0)])
    assert running_integral(v, 0.5) == 0.0
    assert running_integral(v, 1.0) == 3.0  # right-continuous at the impulse


def test_running_integral_sine():
    times = np.linspace(0.0, np.pi, 4001)
    v = SpikingSignal(times, np.sin(times))
    assert running_integral(v, np.pi) == pytest.approx(2.0, abs=1e-6)


def test_running_integral_cancelling_diracs():
    v = _dirac_signal(3.0, [(1.0, 2.0), (2.0, -2.0)])
    assert running_integral(v, 3.0) == 0.0


def test_running_integral_outside_horizon():
    v = _dirac_signal(1.0, [])
    with pytest.raises(ValueError):
        running_integral(v, 2.0)


# ---------------------------------------------------------------- star_norm

def test_star_norm_cancelling_diracs():
    assert star_norm(_dirac_signal(3.0, [(1.0, 2.0), (2.0, -2.0)])) == pytest.approx(2.0)


def test_star_norm_sine_two_periods():
    times = np.linspace(0.0, 4 * np.pi, 8001)
    v = SpikingSignal(times, np.sin(times))
    assert star_norm(v) == pytest.approx(2.0, abs=1e-5)


def test_star_norm_single_dirac():
    assert star_norm(_dirac_signal(2.0, [(0.7, 3.0)])) == pytest.approx(3.0)


def test_star_norm_checks_pre_dirac_side():
    # Lebesgue ramp up to 1, then a -2 impulse: the pre-impulse running
    # integral (1.0) exceeds every grid value after the jump (-1 .. 0).
    times = np.linspace(0.0, 2.0, 2001)
    vals = np.where(times < 1.0, 1.0, 0.0)
    ev = [SpikeEvent(1.0, 0, 0, -2.0)]
    v = signal_from_events(times, vals, ev)
    assert star_norm(v) == pytest.approx(1.0, abs=2e-3)


# ------------------------------------------------------- norm axioms (prop)

signal_strategy = st.builds(
    lambda seed: _random_signal(np.random.default_rng(seed)),
    st.integers(0, 10_000_000),
)


def _random_signal(rng, one_signed=False):
    n = int(rng.integers(16, 200))
    horizon = float(rng.uniform(0.5, 5.0))
    times = np.linspace(0.0, horizon, n)
    vals = rng.uniform(-2.0, 2.0, n)
    if one_signed:
        vals = np.abs(vals) * (1.0 if rng.random() < 0.5 else -1.0)
    n_d = int(rng.integers(0, 6))
    picks = np.sort(rng.choice(np.linspace(0.05, 0.95, 40), size=n_d, replace=False))
    events = [SpikeEvent(float(p * horizon), 0, 0, float(rng.uniform(-3, 3)))
              for p in picks]
    return signal_from_events(times, vals, events)


@settings(max_examples=80, deadline=None)
@given(signal_strategy, st.floats(-8, 8, allow_nan=False))
def test_star_norm_homogeneity(v, a):
    assert star_norm(signal_scale(v, a)) == pytest.approx(abs(a) * star_norm(v),
                                                          rel=1e-12, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000_000), st.integers(0, 10_000_000))
def test_star_norm_triangle_inequality(seed_v, seed_w):
    rng_v = np.random.default_rng(seed_v)
    rng_w = np.random.default_rng(seed_w)
    n, horizon = 120, 2.0
    times = np.linspace(0.0, horizon, n)

    def make(rng):
        vals = rng.uniform(-2, 2, n)
        n_d = int(rng.integers(0, 5))
        picks = np.sort(rng.choice(np.linspace(0.1, 0.9, 30), size=n_d, replace=False))
        evs = [SpikeEvent(float(p * horizon), 0, 0, float(rng.uniform(-3, 3)))
               for p in picks]
        return signal_from_events(times, vals, evs)

    v, w = make(rng_v), make(rng_w)
    assert star_norm(signal_add(v, w)) <= star_norm(v) + star_norm(w) + 1e-12


def test_star_norm_zero_signal_is_zero():
    times = np.linspace(0.0, 1.0, 50)
    assert star_norm(SpikingSignal(times, np.zeros(50))) == 0.0


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000_000))
def test_star_norm_positive_for_nonzero(seed):
    rng = np.random.default_rng(seed)
    v = _random_signal(rng, one_signed=True)
    nonzero = np.any(v.values != 0.0) or np.any(v.dirac_amps != 0.0)
    if nonzero:
        assert star_norm(v) > 0.0


# --------------------------------------------------------------------- CSV

def test_spike_csv_round_trip(tmp_path):
    events = [SpikeEvent(0.123456789123, 0, 0, 0.04),
              SpikeEvent(1.5, 3, 1, -0.012)]
    path = tmp_path / "spikes.csv"
    spikes_to_csv(events, str(path))
    back = spikes_from_csv(str(path))
    assert len(back) == 2
    assert back[0].neuron_id == 0 and back[1].channel == 1
    # 9 significant digits survive the round trip
    assert back[0].time == pytest.approx(0.123456789, abs=1e-9)
    assert back[1].signed_amplitude == -0.012


def test_spike_csv_header_checked():
    fh = io.StringIO("a,b,c,d\n")
    with pytest.raises(ValueError):
        spikes_from_csv(fh)
