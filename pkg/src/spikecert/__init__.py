"""Event-driven simulation and certification of integrate-and-fire
spiking controllers stabilizing LTI plants."""

from .certify import (CertReport, mimo_bound, practical_bound, pwa_bound,
                      rowgain_bound, siso_bound, verify)
from .linalg import (ConvergenceError, DecayEnvelope, MarginalSpectrumError,
                     char_poly_residual, hurwitz_envelope, induced_two_norm,
                     is_hurwitz, isiss_gain, mat_exp)
from .network import (ControllerNetwork, PwaFunction, build_mimo_grid,
                      build_mimo_rowgain, build_pwa_network, build_siso_pair,
                      pwa_eval)
from .neuron import (IafNeuron, SpikeEvent, SpikingSignal, neuron_rate,
                     neuron_step, running_integral, signal_add,
                     signal_from_events, signal_scale, spikes_from_csv,
                     spikes_to_csv, star_norm)
from .plant import (ClosedLoopReference, LtiPlant, apply_impulse,
                    flow_open_loop, reference_state)
from .simulator import (EmulationTrace, FeedforwardResult, SimConfig,
                        SimResult, emulation_metrics, locate_event, simulate,
                        simulate_feedforward)

__version__ = "0.1.0"
