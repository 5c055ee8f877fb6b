"""Scenario files: strict JSON ingestion and the built-in presets.

A closed-loop scenario is a JSON document with sections ``plant``,
``controller``, ``reference``, ``sim``, and optional ``outputs``;
``schema_version`` is required. Unknown keys are rejected so a typo in a
neuron parameter cannot silently corrupt the emulated gain.

The feedforward (``pwa``) scenario replaces plant/controller/reference with
``pwa``, ``alpha``, and ``input`` sections.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .network import (ControllerNetwork, PwaFunction, build_mimo_grid,
                      build_mimo_rowgain, build_pwa_network, build_siso_pair)
from .plant import ClosedLoopReference, LtiPlant
from .simulator import SimConfig

__all__ = ["ScenarioError", "Scenario", "PwaScenario", "parse_scenario",
           "parse_pwa_scenario", "preset_scenario", "PRESET_NAMES"]


class ScenarioError(ValueError):
    """Validation failure; the message names the offending key."""


_DEFAULT_OUTPUTS = {
    "trajectory": "trajectory.csv",
    "spikes": "spikes.csv",
    "report": "report.txt",
    "precision": 9,
}


@dataclass
class Scenario:
    plant: LtiPlant
    network: ControllerNetwork
    ref: ClosedLoopReference
    cfg: SimConfig
    k_matrix: np.ndarray
    outputs: dict


@dataclass
class PwaScenario:
    pwa: PwaFunction
    network: ControllerNetwork
    input_fn: object
    cfg: SimConfig
    outputs: dict


def _require(section: dict, key: str, path: str):
    if key not in section:
        raise ScenarioError(f"missing required key {path}.{key}")
    return section[key]


def _check_keys(section: dict, allowed: set[str], path: str, strict: bool):
    if not isinstance(section, dict):
        raise ScenarioError(f"{path} must be an object")
    if strict:
        unknown = set(section) - allowed
        if unknown:
            raise ScenarioError(f"unknown key {path}.{sorted(unknown)[0]}")


def _array(value, path: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{path} is not numeric") from exc
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{path} contains non-finite entries")
    return arr


def _positive_scalar(value, path: str) -> float:
    if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
        raise ScenarioError(f"{path} must be a positive number")
    return float(value)


def _build_sim_config(sim: dict, strict: bool) -> SimConfig:
    _check_keys(sim, {"t_end", "base_step", "event_tol", "sample_stride",
                      "merge_window"}, "sim", strict)
    try:
        return SimConfig(
            t_end=_positive_scalar(_require(sim, "t_end", "sim"), "sim.t_end"),
            base_step=float(sim.get("base_step", 1e-4)),
            event_tol=float(sim.get("event_tol", 1e-9)),
            sample_stride=int(sim.get("sample_stride", 10)),
            merge_window=sim.get("merge_window"),
        )
    except ValueError as exc:
        raise ScenarioError(f"sim: {exc}") from exc


def _build_outputs(doc: dict, strict: bool) -> dict:
    outputs = dict(_DEFAULT_OUTPUTS)
    if "outputs" in doc:
        _check_keys(doc["outputs"], set(_DEFAULT_OUTPUTS), "outputs", strict)
        outputs.update(doc["outputs"])
    precision = outputs["precision"]
    if not isinstance(precision, int) or not 1 <= precision <= 17:
        raise ScenarioError("outputs.precision must be an integer in [1, 17]")
    return outputs


def _build_controller(ctrl: dict, plant: LtiPlant, strict: bool):
    _check_keys(ctrl, {"kind", "K", "alpha", "xi0"}, "controller", strict)
    kind = _require(ctrl, "kind", "controller")
    alpha = _array(_require(ctrl, "alpha", "controller"), "controller.alpha")
    if np.any(alpha <= 0):
        raise ScenarioError("controller.alpha entries must be positive")
    k_raw = _require(ctrl, "K", "controller")
    try:
        if kind == "siso_pair":
            if plant.nu != 1 or plant.ny != 1:
                raise ScenarioError(
                    f"controller.kind siso_pair needs a SISO plant, got "
                    f"nu={plant.nu}, ny={plant.ny}")
            k = float(k_raw)
            if alpha.shape != (2,):
                raise ScenarioError("controller.alpha must be [alpha1, alpha2]")
            net = build_siso_pair(k, alpha[0], alpha[1])
            k_matrix = np.array([[k]])
        elif kind == "mimo_grid":
            k_matrix = _array(k_raw, "controller.K")
            if k_matrix.shape != (plant.nu, plant.ny):
                raise ScenarioError(
                    f"controller.K shape {k_matrix.shape} does not match "
                    f"(nu, ny) = ({plant.nu}, {plant.ny})")
            net = build_mimo_grid(k_matrix, alpha)
        elif kind == "mimo_rowgain":
            k_matrix = _array(k_raw, "controller.K")
            if k_matrix.shape != (plant.nu, plant.ny):
                raise ScenarioError(
                    f"controller.K shape {k_matrix.shape} does not match "
                    f"(nu, ny) = ({plant.nu}, {plant.ny})")
            net = build_mimo_rowgain(k_matrix, alpha)
        else:
            raise ScenarioError(f"controller.kind {kind!r} is not supported")
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"controller: {exc}") from exc

    if "xi0" in ctrl:
        xi0 = _array(ctrl["xi0"], "controller.xi0").reshape(-1)
        if xi0.shape[0] != net.n_neurons:
            raise ScenarioError(
                f"controller.xi0 must list {net.n_neurons} states, got {xi0.shape[0]}")
        for nr, s in zip(net.neurons, xi0):
            if not 0.0 <= s < nr.threshold:
                raise ScenarioError(
                    f"controller.xi0 entry {s} outside [0, {nr.threshold})")
            nr.state = float(s)
    return net, k_matrix


def parse_scenario(text: str, strict: bool = True) -> Scenario:
    """Parse and fully validate a closed-loop scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    _check_keys(doc, {"schema_version", "plant", "controller", "reference",
                      "sim", "outputs"}, "scenario", strict)
    if _require(doc, "schema_version", "scenario") != 1:
        raise ScenarioError("scenario.schema_version must be 1")

    plant_doc = _require(doc, "plant", "scenario")
    _check_keys(plant_doc, {"A", "B", "C"}, "plant", strict)
    try:
        plant = LtiPlant(_array(_require(plant_doc, "A", "plant"), "plant.A"),
                         _array(_require(plant_doc, "B", "plant"), "plant.B"),
                         _array(_require(plant_doc, "C", "plant"), "plant.C"))
    except ValueError as exc:
        raise ScenarioError(f"plant: {exc}") from exc

    net, k_matrix = _build_controller(_require(doc, "controller", "scenario"),
                                      plant, strict)

    ref_doc = _require(doc, "reference", "scenario")
    _check_keys(ref_doc, {"x0"}, "reference", strict)
    x0 = _array(_require(ref_doc, "x0", "reference"), "reference.x0").reshape(-1)
    if x0.shape[0] != plant.nx:
        raise ScenarioError(
            f"reference.x0 has {x0.shape[0]} entries, plant order is {plant.nx}")
    try:
        ref = ClosedLoopReference(plant.a + plant.b @ k_matrix @ plant.c, x0)
    except ValueError as exc:
        raise ScenarioError(f"reference: {exc}") from exc

    cfg = _build_sim_config(_require(doc, "sim", "scenario"), strict)
    outputs = _build_outputs(doc, strict)
    return Scenario(plant=plant, network=net, ref=ref, cfg=cfg,
                    k_matrix=k_matrix, outputs=outputs)


def _input_fn(spec: dict, strict: bool):
    _check_keys(spec, {"kind", "amplitude", "frequency", "offset", "value"},
                "input", strict)
    kind = _require(spec, "kind", "input")
    if kind == "sine":
        amp = float(spec.get("amplitude", 1.0))
        freq = _positive_scalar(spec.get("frequency", 1.0), "input.frequency")
        off = float(spec.get("offset", 0.0))
        return lambda t: amp * np.sin(2.0 * np.pi * freq * np.asarray(t)) + off
    if kind == "constant":
        value = float(_require(spec, "value", "input"))
        return lambda t: np.full_like(np.asarray(t, dtype=float), value)
    raise ScenarioError(f"input.kind {kind!r} is not supported")


def parse_pwa_scenario(text: str, strict: bool = True) -> PwaScenario:
    """Parse a feedforward scenario replaying a network built from a PWA map."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    _check_keys(doc, {"schema_version", "pwa", "alpha", "input", "sim",
                      "outputs"}, "scenario", strict)
    if _require(doc, "schema_version", "scenario") != 1:
        raise ScenarioError("scenario.schema_version must be 1")
    pwa_doc = _require(doc, "pwa", "scenario")
    _check_keys(pwa_doc, {"c", "breakpoints", "slopes"}, "pwa", strict)
    try:
        g = PwaFunction(float(_require(pwa_doc, "c", "pwa")),
                        tuple(_array(_require(pwa_doc, "breakpoints", "pwa"),
                                     "pwa.breakpoints").reshape(-1)),
                        tuple(_array(_require(pwa_doc, "slopes", "pwa"),
                                     "pwa.slopes").reshape(-1)))
        alpha = _array(_require(doc, "alpha", "scenario"), "alpha").reshape(-1)
        if np.any(alpha <= 0):
            raise ScenarioError("alpha entries must be positive")
        net = build_pwa_network(g, alpha)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"pwa: {exc}") from exc
    fn = _input_fn(_require(doc, "input", "scenario"), strict)
    cfg = _build_sim_config(_require(doc, "sim", "scenario"), strict)
    outputs = _build_outputs(doc, strict)
    return PwaScenario(pwa=g, network=net, input_fn=fn, cfg=cfg, outputs=outputs)


# Linearized batch-reactor case study: an open-loop unstable 4-state plant
# stabilized by static output feedback, emulated by an 8-neuron grid.
_REACTOR = {
    "A": [[1.38, -0.2077, 6.715, -5.676],
          [-0.5814, -4.29, 0.0, 0.675],
          [1.067, 4.273, -6.654, 5.893],
          [0.048, 4.273, 1.343, -2.104]],
    "B": [[0.0, 0.0], [5.679, 0.0], [1.136, -3.146], [1.136, 0.0]],
    "C": [[1.0, 0.0, 1.0, -1.0], [0.0, 1.0, 0.0, 0.0]],
}
_REACTOR_K = [[-0.5, -2.0], [5.0, 0.5]]
_REACTOR_ALPHA = [[1.0 / 25.0, 4.0 / 25.0], [3.0 / 25.0, 0.3 / 25.0]]
_REACTOR_X0 = [5.51, 7.08, 2.91, 5.11]

PRESET_NAMES = ("batch-reactor-I", "batch-reactor-II", "batch-reactor-III",
                "batch-reactor-rest")


def preset_scenario(name: str) -> dict:
    """Built-in scenario documents; 'rest' starts the loop at the origin."""
    scales = {"batch-reactor-I": 1.0, "batch-reactor-II": 0.25,
              "batch-reactor-III": 1.0 / 15.0, "batch-reactor-rest": 1.0}
    if name not in scales:
        raise ScenarioError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    scale = scales[name]
    alpha = [[a * scale for a in row] for row in _REACTOR_ALPHA]
    x0 = [0.0, 0.0, 0.0, 0.0] if name == "batch-reactor-rest" else list(_REACTOR_X0)
    return {
        "schema_version": 1,
        "plant": {k: [row[:] for row in v] for k, v in _REACTOR.items()},
        "controller": {"kind": "mimo_grid", "K": [row[:] for row in _REACTOR_K],
                       "alpha": alpha,
                       "xi0": [0.0] * 8},
        "reference": {"x0": x0},
        "sim": {"t_end": 10.0, "base_step": 1e-4, "event_tol": 1e-9,
                "sample_stride": 10},
    }
