"""Command-line entry points.

Subcommands: run, bench6, sweep, budget, rate, fit-coupling.  Row-producing
commands emit the fixed CSV schema (or its JSON mirror); failures exit nonzero
with a machine-readable error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .cavity import InputQubit
from .config import load_config
from .core import QuantumStateError
from .experiments import (
    SIX_STATES,
    error_budget,
    fit_node_coupling,
    input_state,
    rate_estimate,
    row_to_dict,
    rows_to_csv,
    six_state_benchmark,
    sweep,
    with_single_photon_source,
)
from .protocol import run_protocol, teleport_fidelity

_LAWS = {"exp": "exponential", "gauss": "gaussian"}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="config file (defaults packaged)")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--shots", type=int, default=None,
                   help="finite-shot tomography sample count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--decoherence-law", choices=tuple(_LAWS), default=None)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teleportsim",
        description="Simulate single-photon teleportation between two "
                    "cavity-QED memory nodes.")
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="one protocol run, JSON result")
    p_run.add_argument("--state", default="up_x", choices=tuple(SIX_STATES))
    p_run.add_argument("--alpha", default=None,
                       help="input amplitude 're,im' (overrides --state)")
    p_run.add_argument("--beta", default=None, help="input amplitude 're,im'")
    _add_common(p_run)

    p_bench = subs.add_parser("bench6", help="six-state benchmark")
    _add_common(p_bench)

    p_sweep = subs.add_parser("sweep", help="fidelity sweep")
    p_sweep.add_argument("--param", required=True, choices=("mean-photon", "delay"))
    p_sweep.add_argument("--grid", default=None,
                         help="comma-separated swept values")
    p_sweep.add_argument("--workers", type=int, default=1)
    _add_common(p_sweep)

    p_budget = subs.add_parser("budget", help="error budget decomposition")
    _add_common(p_budget)

    p_rate = subs.add_parser("rate", help="herald probability and rate")
    p_rate.add_argument("--single-photon", action="store_true",
                        help="assume a one-photon Fock source")
    _add_common(p_rate)

    p_fit = subs.add_parser("fit-coupling", help="fit cavity input coupling")
    p_fit.add_argument("--target-bob", type=float, default=0.60)
    p_fit.add_argument("--target-alice", type=float, default=0.55)
    _add_common(p_fit)
    return parser


def _load(args, input_qubit=None):
    cfg = load_config(args.config, input_qubit)
    if args.decoherence_law:
        cfg = replace(cfg, decoherence_law=_LAWS[args.decoherence_law])
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _rows_out(rows, args, extra: dict | None = None, default_format="csv") -> None:
    fmt = args.format or default_format
    if fmt == "csv":
        _emit(rows_to_csv(rows), args.out)
    else:
        payload = dict(extra or {})
        payload["rows"] = [row_to_dict(r) for r in rows]
        _emit(json.dumps(payload, indent=2), args.out)


def _matrix_json(m: np.ndarray) -> dict:
    return {"re": np.real(m).tolist(), "im": np.imag(m).tolist()}


def _parse_amplitude(text: str) -> complex:
    re, _, im = text.partition(",")
    return complex(float(re), float(im) if im else 0.0)


def _cmd_run(args) -> None:
    if args.alpha is not None or args.beta is not None:
        if args.alpha is None or args.beta is None:
            raise QuantumStateError("--alpha and --beta must be given together")
        qubit = InputQubit(_parse_amplitude(args.alpha), _parse_amplitude(args.beta))
    else:
        qubit = input_state(args.state)
    cfg = _load(args, qubit)
    result = run_protocol(cfg)
    fid, per_branch = teleport_fidelity(result, qubit)
    payload = {
        "input": {"alpha": [qubit.alpha.real, qubit.alpha.imag],
                  "beta": [qubit.beta.real, qubit.beta.imag]},
        "herald_probability": result.herald_probability,
        "double_click_probability": result.double_click_probability,
        "no_click_probability": result.no_click_probability,
        "rate_hz": cfg.repetition_rate_hz * result.herald_probability,
        "fidelity": fid,
        "branches": [
            {
                "photon": b.photon,
                "alice": b.alice,
                "probability": b.probability,
                "feedback": [f"{axis}_pi" for axis, _ in b.feedback],
                "fidelity": per_branch.get((b.photon, b.alice)),
                "bob_density_matrix": None if b.bob_state is None
                else _matrix_json(b.bob_state.matrix),
            }
            for b in result.branches
        ],
    }
    _emit(json.dumps(payload, indent=2), args.out)


def _cmd_bench6(args) -> None:
    cfg = _load(args)
    bench = six_state_benchmark(cfg, shots=args.shots, seed=args.seed)
    extra = {
        "experiment": "bench6",
        "average_fidelity": bench.average_fidelity,
        "average_stderr": bench.average_stderr,
        "density_matrices": {k: _matrix_json(v)
                             for k, v in bench.bob_density_matrices.items()},
    }
    _rows_out(bench.rows, args, extra)


def _cmd_sweep(args) -> None:
    cfg = _load(args)
    grid = None
    if args.grid:
        grid = [float(v) for v in args.grid.split(",") if v.strip() != ""]
    param = args.param.replace("-", "_")
    rows = sweep(cfg, param, grid, shots=args.shots, seed=args.seed,
                 workers=args.workers)
    _rows_out(rows, args, {"experiment": f"sweep_{param}"})


def _cmd_budget(args) -> None:
    cfg = _load(args)
    entries = error_budget(cfg)
    payload = {
        "experiment": "budget",
        "baseline_average_fidelity": entries[0].baseline_average,
        "entries": [
            {"imperfection": e.label, "gain_points": e.gain_points,
             "idealized_average": e.idealized_average}
            for e in entries
        ],
    }
    _emit(json.dumps(payload, indent=2), args.out)


def _cmd_rate(args) -> None:
    cfg = _load(args)
    if args.single_photon:
        cfg = with_single_photon_source(cfg)
    est = rate_estimate(cfg)
    _emit(json.dumps({
        "experiment": "rate",
        "single_photon": bool(args.single_photon),
        "herald_probability": est.herald_probability,
        "rate_hz": est.rate_hz,
    }, indent=2), args.out)


def _cmd_fit_coupling(args) -> None:
    cfg = _load(args)
    fits = {
        "bob": fit_node_coupling(cfg.node_bob, args.target_bob),
        "alice": fit_node_coupling(cfg.node_alice, args.target_alice),
    }
    _emit(json.dumps({
        "experiment": "fit_coupling",
        "targets": {"bob": args.target_bob, "alice": args.target_alice},
        "fits": {
            name: {
                "kappa_in_fraction": f.kappa_in_fraction,
                "mode_matching": f.mode_matching,
                "achieved_reflectivity": f.achieved_reflectivity,
                "residual": f.residual,
            } for name, f in fits.items()
        },
    }, indent=2), args.out)


_DISPATCH = {
    "run": _cmd_run,
    "bench6": _cmd_bench6,
    "sweep": _cmd_sweep,
    "budget": _cmd_budget,
    "rate": _cmd_rate,
    "fit-coupling": _cmd_fit_coupling,
}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
        _DISPATCH[args.command](args)
        return 0
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    except (QuantumStateError, OSError, ValueError) as exc:
        sys.stderr.write(json.dumps(
            {"error": {"type": type(exc).__name__, "message": str(exc)}}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
