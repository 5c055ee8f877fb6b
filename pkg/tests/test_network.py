import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikecert import (LtiPlant, PwaFunction, SimConfig, build_mimo_grid,
                       build_mimo_rowgain, build_pwa_network, build_siso_pair,
                       pwa_eval, simulate, simulate_feedforward)

from conftest import REACTOR_ALPHA, REACTOR_K


# ------------------------------------------------------------ siso builder

def test_siso_pair_thresholds():
    net = build_siso_pair(2.0, 0.1, 0.1)
    assert [nr.threshold for nr in net.neurons] == [0.05, 0.05]
    assert [nr.sign_gain for nr in net.neurons] == [1, -1]
    assert [nr.orientation for nr in net.neurons] == [1, -1]


def test_siso_pair_asymmetric_amplitudes():
    net = build_siso_pair(2.0, 0.1, 0.2)
    assert [nr.threshold for nr in net.neurons] == [0.05, 0.1]
    assert net.channel_amplitude_sums().tolist() == [pytest.approx(0.3)]


def test_siso_pair_rejects_nonpositive_gain():
    with pytest.raises(ValueError):
        build_siso_pair(0.0, 0.1, 0.1)
    with pytest.raises(ValueError):
        build_siso_pair(1.0, -0.1, 0.1)


# ------------------------------------------------------------ grid builder

def test_grid_reactor_thresholds():
    net = build_mimo_grid(REACTOR_K, REACTOR_ALPHA)
    assert net.n_neurons == 8
    # entry (0, 0): alpha 1/25 over |K| = 0.5
    assert net.neurons[0].threshold == pytest.approx(0.08)
    # gain magnitude is |K| exactly for every unit
    for nr, ch in zip(net.neurons, net.channels):
        j = int(np.argmax(np.abs(nr.input_weights)))
        assert nr.gain == pytest.approx(abs(REACTOR_K[ch, j]), rel=1e-15)


def test_grid_negative_entry_flips_both_signs():
    net = build_mimo_grid(np.array([[-2.0]]), np.array([[0.1]]))
    assert [nr.sign_gain for nr in net.neurons] == [-1, 1]
    assert [nr.orientation for nr in net.neurons] == [1, -1]


def test_grid_zero_entry_omitted():
    k = np.array([[1.0, 0.0], [0.5, 2.0]])
    net = build_mimo_grid(k, np.full((2, 2), 0.1))
    assert net.n_neurons == 6


def test_grid_all_zero_rejected():
    with pytest.raises(ValueError):
        build_mimo_grid(np.zeros((2, 2)), np.full((2, 2), 0.1))


def test_grid_reduces_to_siso_pair_bitwise():
    rng = np.random.default_rng(14)
    a = np.array([[0.4, -1.0], [0.3, -0.8]])
    plant = LtiPlant(a, [[0.5], [1.0]], [[1.0, 0.7]])
    cfg = SimConfig(t_end=2.0, base_step=1e-3, event_tol=1e-9, sample_stride=5)
    x0 = rng.uniform(-1, 1, 2)
    sims = []
    for net in (build_siso_pair(2.0, 0.1, 0.15),
                build_mimo_grid(np.array([[2.0]]), np.array([[0.1], [0.15]]).reshape(2, 1, 1))):
        sims.append(simulate(plant, net, x0, cfg, ref=None))
    t1 = [(ev.time, ev.neuron_id, ev.signed_amplitude) for ev in sims[0].spikes]
    t2 = [(ev.time, ev.neuron_id, ev.signed_amplitude) for ev in sims[1].spikes]
    assert t1 == t2  # bitwise-identical spike trains
    assert np.array_equal(sims[0].states, sims[1].states)


# --------------------------------------------------------- rowgain builder

def test_rowgain_unit_gain_and_weights():
    net = build_mimo_rowgain(REACTOR_K, np.full(2, 0.05))
    assert net.n_neurons == 4  # 2 per input channel vs 8 for the grid
    for nr, ch in zip(net.neurons, net.channels):
        assert nr.gain == pytest.approx(1.0)
        assert np.allclose(nr.input_weights, REACTOR_K[ch])


def test_rowgain_channel_bound_bookkeeping():
    net = build_mimo_rowgain(np.array([[1.0, 2.0]]), np.array([[0.1], [0.2]]))
    assert net.channel_amplitude_sums().tolist() == [pytest.approx(0.3)]


def test_rowgain_rejects_zero_row():
    with pytest.raises(ValueError):
        build_mimo_rowgain(np.array([[0.0, 0.0], [1.0, 1.0]]), np.full(2, 0.1))


def test_rowgain_single_row_emulates_scalar_gain():
    net = build_mimo_rowgain(np.array([[3.0]]), np.array([0.1]))
    y = np.array([0.5])
    from spikecert.neuron import neuron_rate
    assert neuron_rate(net.neurons[0], y) == pytest.approx(1.5)
    assert neuron_rate(net.neurons[1], y) == 0.0


# ---------------------------------------------------------------- pwa eval

def test_pwa_eval_absolute_value():
    g = PwaFunction(c=0.0, breakpoints=(0.0,), slopes=(-1.0, 1.0))
    assert pwa_eval(g, -3.0) == 3.0
    assert pwa_eval(g, 2.5) == 2.5


def test_pwa_continuity_at_breakpoints():
    g = PwaFunction(c=1.0, breakpoints=(-1.0, 0.5, 2.0), slopes=(2.0, -1.0, 0.5, 3.0))
    h = 1e-6
    max_slope = max(abs(s) for s in g.slopes)
    for b in g.breakpoints:
        gap = abs(pwa_eval(g, b + h) - pwa_eval(g, b - h))
        assert gap <= max_slope * 2 * h * 1.01


def _segment_oracle(g, y):
    """Anchor at the first breakpoint (value c) and integrate slopes."""
    bp = np.asarray(g.breakpoints)
    sl = np.asarray(g.slopes)
    if y < bp[0]:
        return g.c + sl[0] * (y - bp[0])
    val = g.c
    prev = bp[0]
    for i in range(len(bp)):
        hi = bp[i + 1] if i + 1 < len(bp) else np.inf
        if y <= hi:
            return val + sl[i + 1] * (y - prev)
        val += sl[i + 1] * (hi - prev)
        prev = hi
    return val


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000_000), st.integers(1, 6))
def test_pwa_eval_matches_segment_oracle(seed, n_breaks):
    rng = np.random.default_rng(seed)
    bp = np.sort(rng.uniform(-3, 3, n_breaks))
    if n_breaks >= 2 and bp[0] == bp[-1]:
        bp[-1] += 1.0
    g = PwaFunction(c=float(rng.uniform(-2, 2)), breakpoints=tuple(bp),
                    slopes=tuple(rng.uniform(-4, 4, n_breaks + 1)))
    for y in rng.uniform(-5, 5, 1000):
        assert pwa_eval(g, y) == pytest.approx(_segment_oracle(g, y), abs=1e-12)


def test_pwa_validation():
    with pytest.raises(ValueError):
        PwaFunction(c=0.0, breakpoints=(), slopes=(1.0,))
    with pytest.raises(ValueError):
        PwaFunction(c=0.0, breakpoints=(1.0, 0.0), slopes=(1.0, 2.0, 3.0))
    with pytest.raises(ValueError):
        PwaFunction(c=0.0, breakpoints=(1.0, 1.0), slopes=(1.0, 2.0, 3.0))


# ------------------------------------------------------------- pwa builder

def test_pwa_network_absolute_value_signs():
    g = PwaFunction(c=0.0, breakpoints=(0.0,), slopes=(-1.0, 1.0))
    net = build_pwa_network(g, [0.1, 0.2, 0.05, 0.05])
    # increments K0 = -1, K1 = +1: both emitted signs positive
    assert [nr.sign_gain for nr in net.neurons[:2]] == [1, 1]
    assert net.neurons[0].threshold == pytest.approx(0.1)
    assert net.neurons[1].threshold == pytest.approx(0.2)


def test_pwa_network_zero_increment_omitted():
    # slope does not change at the second breakpoint
    g = PwaFunction(c=0.0, breakpoints=(0.0, 1.0), slopes=(-1.0, 1.0, 1.0))
    net = build_pwa_network(g, [0.1, 0.1, 0.1, 0.05, 0.05])
    assert net.n_neurons == 4  # unit for b2 dropped, both constant units kept


def test_pwa_constant_units_fire_at_rate_c():
    g = PwaFunction(c=5.0, breakpoints=(0.0,), slopes=(1.0, 1.0))
    # linear g with zero increment beyond slope 1: unit 0 omitted (K0 = 1?
    # no: K0 = 1 and K1 = 1 both nonzero) -- build and drive with y = 0
    net = build_pwa_network(g, [0.1, 0.1, 0.2, 0.2])
    cfg = SimConfig(t_end=1.0, base_step=1e-3, event_tol=1e-9, sample_stride=10)
    ff = simulate_feedforward(net, lambda t: np.zeros_like(np.asarray(t)), cfg)
    plus = [ev for ev in ff.spikes if ev.neuron_id == 2]
    minus = [ev for ev in ff.spikes if ev.neuron_id == 3]
    assert len(minus) == 0  # max(0, -c) = 0 branch stays silent
    # constant rate 5 against threshold 0.2: period 0.04
    gaps = np.diff([ev.time for ev in plus])
    assert np.allclose(gaps, 0.04, atol=1e-6)


def test_pwa_linear_reduces_to_pair_structure():
    g = PwaFunction(c=0.0, breakpoints=(0.0,), slopes=(2.0, 2.0))
    net = build_pwa_network(g, [0.1, 0.1, 0.05, 0.05])
    pair = build_siso_pair(2.0, 0.1, 0.1)
    # unit 0 mirrors the negative-branch neuron, unit 1 the positive one
    assert net.neurons[0].threshold == pytest.approx(pair.neurons[1].threshold)
    assert net.neurons[0].sign_gain == pair.neurons[1].sign_gain
    assert net.neurons[1].threshold == pytest.approx(pair.neurons[0].threshold)
    assert net.neurons[1].sign_gain == pair.neurons[0].sign_gain


def test_builders_gain_ratio_exact():
    rng = np.random.default_rng(3)
    k = rng.uniform(-3, 3, (2, 3))
    k[np.abs(k) < 0.2] = 0.7
    net = build_mimo_grid(k, np.full((2, 3), 0.1))
    for nr, ch in zip(net.neurons, net.channels):
        j = int(np.argmax(np.abs(nr.input_weights)))
        assert nr.amplitude / nr.threshold == pytest.approx(abs(k[ch, j]), rel=1e-15)
