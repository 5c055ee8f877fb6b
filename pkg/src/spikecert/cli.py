"""Command-line interface.

Subcommands::

    simulate    run a scenario, write trajectory and spike CSVs
    certify     simulate, then verify every guaranteed bound; writes a report
    gain        print the iSISS gain and decay envelope for a given (F, G)
    pwa-approx  replay a PWA-emulating network and check its integral bound
    table1      run the three batch-reactor presets and print a comparison

Exit codes: 0 success, 2 validation error, 3 numerical guard tripped.
Bound-check failures exit 0 and mark pass=false in the report.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .certify import pwa_bound, verify
from .linalg import hurwitz_envelope, isiss_gain
from .neuron import spikes_to_csv
from .network import pwa_eval
from .scenario import (PRESET_NAMES, Scenario, ScenarioError, parse_pwa_scenario,
                       parse_scenario, preset_scenario)
from .simulator import emulation_metrics, simulate, simulate_feedforward

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GUARD = 3


def _atomic_write(path: Path, write_fn) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="") as fh:
        write_fn(fh)
    os.replace(tmp, path)


def _write_trajectory(path: Path, sim, precision: int) -> None:
    nx = sim.states.shape[1]
    fmt = f"%.{precision}g"
    header = (["t"] + [f"x{i + 1}" for i in range(nx)]
              + [f"xbar{i + 1}" for i in range(nx)] + ["xtilde_norm"])

    def write(fh):
        fh.write(",".join(header) + "\n")
        ref = sim.reference if sim.reference is not None else np.zeros_like(sim.states)
        err = (np.linalg.norm(sim.state_error, axis=1)
               if sim.state_error is not None else np.zeros(len(sim.times)))
        for t, x, xb, e in zip(sim.times, sim.states, ref, err):
            row = [fmt % t] + [fmt % v for v in x] + [fmt % v for v in xb] + [fmt % e]
            fh.write(",".join(row) + "\n")

    _atomic_write(path, write)


def _run_summary(sim) -> str:
    lines = [
        "run summary",
        f"status: {sim.status}",
        f"t_end: {sim.config.t_end:.9g}",
        f"base_step: {sim.config.base_step:.9g}",
        f"total_spikes: {sim.total_spikes}",
        f"eps_num: {sim.eps_num:.9g}",
    ]
    if sim.state_error is not None:
        lines.append(f"max_xtilde: {sim.max_state_error():.9g}")
    for i, (gap, m) in enumerate(zip(sim.min_gap, sim.m_emp)):
        gap_s = f"{gap:.9g}" if np.isfinite(gap) else "inf"
        lines.append(f"neuron {i}: min_gap {gap_s} max_rate {m:.9g}")
    return "\n".join(lines) + "\n"


def _load_scenario(args) -> Scenario:
    if args.preset:
        doc = preset_scenario(args.preset)
        text = json.dumps(doc)
    elif args.scenario:
        text = Path(args.scenario).read_text()
    else:
        raise ScenarioError("provide --scenario <path> or --preset <name>")
    sc = parse_scenario(text, strict=args.strict)
    return _apply_overrides(sc, args)


def _apply_overrides(sc, args):
    cfg = sc.cfg
    if getattr(args, "step", None) or getattr(args, "t_end", None):
        from .simulator import SimConfig
        cfg = SimConfig(
            t_end=args.t_end if args.t_end else cfg.t_end,
            base_step=args.step if args.step else cfg.base_step,
            event_tol=cfg.event_tol,
            sample_stride=cfg.sample_stride,
            merge_window=cfg.merge_window,
        )
        sc.cfg = cfg
    return sc


def _out_dir(args) -> Path:
    out = Path(args.out_dir) if args.out_dir else Path.cwd()
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    sc = _load_scenario(args)
    sim = simulate(sc.plant, sc.network, sc.ref.x0, sc.cfg, ref=sc.ref)
    out = _out_dir(args)
    precision = sc.outputs["precision"]
    _write_trajectory(out / sc.outputs["trajectory"], sim, precision)
    _atomic_write(out / sc.outputs["spikes"], lambda fh: spikes_to_csv(sim.spikes, fh))
    summary = _run_summary(sim)
    _atomic_write(out / "summary.txt", lambda fh: fh.write(summary))
    sys.stdout.write(summary)
    return EXIT_GUARD if sim.status != "completed" else EXIT_OK


def cmd_certify(args) -> int:
    sc = _load_scenario(args)
    sim = simulate(sc.plant, sc.network, sc.ref.x0, sc.cfg, ref=sc.ref)
    out = _out_dir(args)
    precision = sc.outputs["precision"]
    _write_trajectory(out / sc.outputs["trajectory"], sim, precision)
    _atomic_write(out / sc.outputs["spikes"], lambda fh: spikes_to_csv(sim.spikes, fh))
    if sim.status != "completed":
        sys.stdout.write(_run_summary(sim))
        return EXIT_GUARD
    trace = emulation_metrics(sim, sc.k_matrix, sc.network)
    report = verify(sim, trace, plant=sc.plant, net=sc.network, ref=sc.ref)
    text = report.to_text()
    _atomic_write(out / sc.outputs["report"], lambda fh: fh.write(text))
    sys.stdout.write(text)
    return EXIT_OK


def cmd_gain(args) -> int:
    try:
        f = np.asarray(json.loads(args.matrix_f), dtype=float)
        g = np.asarray(json.loads(args.matrix_g), dtype=float)
    except (json.JSONDecodeError, ValueError) as exc:
        raise ScenarioError(f"matrices must be JSON numeric arrays: {exc}") from exc
    f = np.atleast_2d(f)
    g = np.atleast_2d(g)
    if g.shape[0] != f.shape[0] and g.shape[1] == f.shape[0]:
        g = g.T
    gamma = isiss_gain(f, g)
    env = hurwitz_envelope(f)
    sys.stdout.write(f"gamma: {gamma:.9g}\n")
    sys.stdout.write(f"envelope_c: {env.c:.9g}\n")
    sys.stdout.write(f"envelope_lambda: {env.lam:.9g}\n")
    return EXIT_OK


def cmd_pwa_approx(args) -> int:
    if not args.scenario:
        raise ScenarioError("pwa-approx requires --scenario <path>")
    sc = parse_pwa_scenario(Path(args.scenario).read_text(), strict=args.strict)
    if args.step or args.t_end:
        sc = _apply_overrides(sc, args)
    g = sc.pwa
    ff = simulate_feedforward(sc.network, sc.input_fn, sc.cfg,
                              aux_fn=lambda y: pwa_eval(g, y))
    out = _out_dir(args)
    _atomic_write(out / sc.outputs["spikes"], lambda fh: spikes_to_csv(ff.spikes, fh))
    pars_alpha = np.array([nr.amplitude for nr in sc.network.neurons])
    bound = pwa_bound(pars_alpha)
    u_int = (ff.spike_counts * np.array([
        nr.sign_gain * nr.amplitude for nr in sc.network.neurons])).sum(axis=1)
    sup = float(np.max(np.abs(ff.aux_integral - u_int)))
    ok = sup <= bound + ff.eps_num
    lines = [
        "pwa emulation report",
        f"status: {ff.status}",
        f"total_spikes: {len(ff.spikes)}",
        f"achieved_sup: {sup:.9g}",
        f"bound: {bound:.9g}",
        f"eps_num: {ff.eps_num:.9g}",
        f"pass: {str(ok).lower()}",
    ]
    text = "\n".join(lines) + "\n"
    _atomic_write(out / sc.outputs["report"], lambda fh: fh.write(text))
    sys.stdout.write(text)
    return EXIT_GUARD if ff.status != "completed" else EXIT_OK


def cmd_table1(args) -> int:
    rows = []
    for name in ("batch-reactor-I", "batch-reactor-II", "batch-reactor-III"):
        doc = preset_scenario(name)
        sc = parse_scenario(json.dumps(doc), strict=True)
        sc = _apply_overrides(sc, args)
        sim = simulate(sc.plant, sc.network, sc.ref.x0, sc.cfg, ref=sc.ref)
        if sim.status != "completed":
            sys.stdout.write(f"{name}: guard tripped\n")
            return EXIT_GUARD
        trace = emulation_metrics(sim, sc.k_matrix, sc.network)
        report = verify(sim, trace, plant=sc.plant, net=sc.network, ref=sc.ref)
        rows.append((name.rsplit("-", 1)[-1], sim.total_spikes,
                     report.xtilde_bound, report.achieved_xtilde,
                     report.achieved_e_star, report.passed))
        if args.out_dir:
            out = _out_dir(args) / name
            out.mkdir(parents=True, exist_ok=True)
            _write_trajectory(out / "trajectory.csv", sim, 9)
            _atomic_write(out / "spikes.csv", lambda fh: spikes_to_csv(sim.spikes, fh))
            _atomic_write(out / "report.txt",
                          lambda fh, r=report: fh.write(r.to_text()))
    header = f"{'controller':<12}{'spikes':>8}{'bound':>12}{'achieved':>12}{'e_star':>10}{'pass':>6}"
    sys.stdout.write(header + "\n")
    for name, n_sp, bound, achieved, e_star, ok in rows:
        sys.stdout.write(f"{name:<12}{n_sp:>8}{bound:>12.4f}{achieved:>12.4f}"
                         f"{e_star:>10.4f}{str(ok).lower():>6}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikecert",
        description="Simulate and certify integrate-and-fire spiking controllers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", help="path to a scenario JSON file")
            p.add_argument("--preset", choices=PRESET_NAMES,
                           help="built-in scenario name")
        p.add_argument("--out-dir", help="directory for emitted files")
        p.add_argument("--step", type=float, help="override sim.base_step")
        p.add_argument("--t-end", type=float, help="override sim.t_end")
        p.add_argument("--strict", action="store_true", default=True,
                       help="reject unknown scenario keys (default on)")

    p_sim = sub.add_parser("simulate", help="run and write trajectory/spike CSVs")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_cert = sub.add_parser("certify", help="simulate and verify all bounds")
    common(p_cert)
    p_cert.set_defaults(func=cmd_certify)

    p_gain = sub.add_parser("gain", help="iSISS gain and envelope of (F, G)")
    p_gain.add_argument("--matrix-f", "-F", required=True,
                        help="JSON matrix, e.g. '[[-1]]'")
    p_gain.add_argument("--matrix-g", "-G", required=True,
                        help="JSON matrix, e.g. '[[1]]'")
    p_gain.set_defaults(func=cmd_gain)

    p_pwa = sub.add_parser("pwa-approx", help="replay a PWA network and check its bound")
    common(p_pwa)
    p_pwa.set_defaults(func=cmd_pwa_approx)

    p_t1 = sub.add_parser("table1", help="run the three reactor presets")
    common(p_t1, scenario=False)
    p_t1.set_defaults(func=cmd_table1)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
