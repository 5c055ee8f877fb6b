import numpy as np
import pytest

from spikecert import (ClosedLoopReference, DecayEnvelope, LtiPlant,
                       SimConfig, build_mimo_grid, build_siso_pair,
                       emulation_metrics, mimo_bound, practical_bound,
                       pwa_bound, rowgain_bound, simulate, siso_bound, verify)

from conftest import (REACTOR_ALPHA, REACTOR_B, REACTOR_C, REACTOR_K,
                      REACTOR_X0)


# ----------------------------------------------------------- bound formulas

def test_siso_bound_sum_form():
    assert siso_bound(2.0, 0.1, 0.2, xi0_zero=False) == pytest.approx(0.6)


def test_siso_bound_max_form():
    assert siso_bound(2.0, 0.1, 0.2, xi0_zero=True) == pytest.approx(0.4)


def test_siso_bound_degenerate_zero():
    assert siso_bound(3.0, 0.0, 0.0, xi0_zero=False) == 0.0


def test_mimo_bound_reactor_amplitude_factor():
    # per-channel sums (0.4, 0.264) -> factor sqrt(0.4^2 + 0.264^2)
    factor = mimo_bound(1.0, REACTOR_ALPHA)
    assert factor == pytest.approx(np.hypot(0.4, 0.264), rel=1e-12)
    assert factor == pytest.approx(0.47927, abs=5e-6)


def test_mimo_bound_scales_linearly():
    g = 7.0
    full = mimo_bound(g, REACTOR_ALPHA)
    assert mimo_bound(g, REACTOR_ALPHA / 4.0) == pytest.approx(full / 4.0, rel=1e-12)
    assert mimo_bound(g, REACTOR_ALPHA / 15.0) == pytest.approx(full / 15.0, rel=1e-12)


def test_mimo_bound_single_entry_reduces_to_pair_sum():
    assert mimo_bound(2.0, np.array([[0.1], [0.2]]).reshape(2, 1, 1)) == \
        pytest.approx(siso_bound(2.0, 0.1, 0.2, xi0_zero=False))


def test_rowgain_bound_single_channel():
    assert rowgain_bound(2.0, np.array([[0.1], [0.2]])) == pytest.approx(0.6)


def test_rowgain_bound_zero():
    assert rowgain_bound(5.0, np.zeros((2, 3))) == 0.0


def test_rowgain_bound_two_channels():
    got = rowgain_bound(1.0, np.full((2, 2), 0.1))
    assert got == pytest.approx(np.sqrt(2.0) * 0.2, rel=1e-12)


def test_rowgain_per_channel_never_exceeds_grid_per_channel():
    # with matched per-neuron amplitudes the row-gain channel sum is the
    # ny = 1 slice of the grid channel sum; equality exactly when ny = 1
    alpha = 0.07
    for ny in (1, 2, 3, 5):
        row_sum = 2 * alpha
        grid_sum = 2 * ny * alpha
        assert row_sum <= grid_sum
        assert (row_sum == grid_sum) == (ny == 1)


def test_pwa_bound_counts_every_unit():
    assert pwa_bound([0.01] * 4) == pytest.approx(0.04)
    assert pwa_bound([]) == 0.0
    assert pwa_bound([0.1, 0.1, 0.1, 0.1]) == pytest.approx(0.4)


def test_bounds_scale_with_amplitudes():
    s = 3.7
    assert siso_bound(2.0, 0.1 * s, 0.2 * s, False) == pytest.approx(0.6 * s)
    assert pwa_bound(np.array([0.1, 0.2]) * s) == pytest.approx(0.3 * s, rel=1e-12)
    assert rowgain_bound(2.0, np.full((2, 2), 0.1) * s) == \
        pytest.approx(rowgain_bound(2.0, np.full((2, 2), 0.1)) * s, rel=1e-12)


def test_practical_bound_limits():
    env = DecayEnvelope(c=2.0, lam=0.5)
    ultimate = practical_bound(env, 3.0, 4.0, 0.25, 1e9)
    assert ultimate == pytest.approx(4.0 * 0.25, rel=1e-6)
    at0 = practical_bound(env, 3.0, 4.0, 0.25, 0.0)
    assert at0 >= 3.0
    pure = practical_bound(env, 3.0, 4.0, 0.0, 1.2)
    assert pure == pytest.approx(2.0 * np.exp(-0.6) * 3.0, rel=1e-12)


def test_bounds_reject_negative_inputs():
    with pytest.raises(ValueError):
        siso_bound(-1.0, 0.1, 0.1, False)
    with pytest.raises(ValueError):
        pwa_bound([-0.1])


# ----------------------------------------------------------------- verify

def _reactor_case(scale=1.0, t_end=3.0):
    from conftest import REACTOR_A
    plant = LtiPlant(REACTOR_A, REACTOR_B, REACTOR_C)
    ref = ClosedLoopReference(REACTOR_A + REACTOR_B @ REACTOR_K @ REACTOR_C,
                              REACTOR_X0)
    net = build_mimo_grid(REACTOR_K, REACTOR_ALPHA * scale)
    cfg = SimConfig(t_end=t_end, base_step=1e-4, event_tol=1e-9, sample_stride=10)
    sim = simulate(plant, net, REACTOR_X0, cfg, ref=ref)
    trace = emulation_metrics(sim, REACTOR_K, net)
    return plant, net, ref, sim, trace


def test_verify_reactor_passes_all_checks():
    plant, net, ref, sim, trace = _reactor_case()
    report = verify(sim, trace, plant=plant, net=net, ref=ref)
    assert report.passed, report.checks
    assert report.achieved_xtilde <= report.xtilde_bound
    assert report.achieved_e_star <= report.e_star_bound
    assert report.xtilde_bound == pytest.approx(
        report.gamma * mimo_bound(1.0, REACTOR_ALPHA), rel=1e-9)


def test_verify_zero_run_trivially_passes():
    from conftest import REACTOR_A
    plant = LtiPlant(REACTOR_A, REACTOR_B, REACTOR_C)
    ref = ClosedLoopReference(REACTOR_A + REACTOR_B @ REACTOR_K @ REACTOR_C,
                              np.zeros(4))
    net = build_mimo_grid(REACTOR_K, REACTOR_ALPHA)
    cfg = SimConfig(t_end=1.0, base_step=1e-3, event_tol=1e-8, sample_stride=10)
    sim = simulate(plant, net, np.zeros(4), cfg, ref=ref)
    trace = emulation_metrics(sim, REACTOR_K, net)
    report = verify(sim, trace, plant=plant, net=net, ref=ref)
    assert report.passed
    assert report.achieved_xtilde == 0.0
    assert report.achieved_e_star == 0.0
    assert report.total_spikes == 0


def test_verify_pass_survives_step_halving():
    plant, net, ref, sim, trace = _reactor_case(t_end=1.5)
    report = verify(sim, trace, plant=plant, net=net, ref=ref)
    assert report.passed
    cfg2 = SimConfig(t_end=1.5, base_step=5e-5, event_tol=1e-9, sample_stride=20)
    net2 = build_mimo_grid(REACTOR_K, REACTOR_ALPHA)
    sim2 = simulate(plant, net2, REACTOR_X0, cfg2, ref=ref)
    trace2 = emulation_metrics(sim2, REACTOR_K, net2)
    report2 = verify(sim2, trace2, plant=plant, net=net2, ref=ref,
                     gamma=report.gamma, envelope=report.envelope)
    assert report2.passed


def test_report_text_is_structured():
    plant, net, ref, sim, trace = _reactor_case(t_end=1.0)
    report = verify(sim, trace, plant=plant, net=net, ref=ref)
    text = report.to_text()
    for key in ("gamma:", "xtilde_bound:", "achieved_xtilde:", "eps_num:",
                "check dwell_time:", "pass:"):
        assert key in text


def test_verify_rejects_incomplete_run():
    plant, net, ref, sim, trace = _reactor_case(t_end=1.0)
    sim.status = "zeno_guard_tripped"
    with pytest.raises(ValueError):
        verify(sim, trace, plant=plant, net=net, ref=ref)
