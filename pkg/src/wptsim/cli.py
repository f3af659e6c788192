"""Command-line interface.

Subcommands: fig2 (amplitude-sweep study), chain-sweep, evm-sweep, gen
(write an IQ file), analyze (metrics of an IQ file). Exit codes: 0 on
success, 2 on configuration errors, 3 on I/O errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import experiments, iqfile, metrics
from .experiments import ScenarioError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wptsim",
        description="Waveform-level simulator of RF wireless power transfer "
        "through a digital IQ-modulator transmitter.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fig2 = sub.add_parser("fig2", help="multisine amplitude sweep: power, PAPR, EVM")
    fig2.add_argument("--out", required=True, help="output CSV path")
    fig2.add_argument(
        "--n-tones",
        default="1,2,4,8,16",
        help="comma list of tone counts (default: 1,2,4,8,16)",
    )
    fig2.add_argument(
        "--amplitudes",
        default=None,
        help="comma list or start:stop:count log grid (default: log 1e-2..1e2, 60 points)",
    )

    for name, help_text in (
        ("chain-sweep", "end-to-end power/efficiency sweep from a scenario"),
        ("evm-sweep", "transmit-quality sweep from a constellation scenario"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--scenario", required=True, help="scenario file path")
        cmd.add_argument("--out", default=None, help="output CSV path (overrides scenario)")
        cmd.add_argument("--seed", type=int, default=None, help="seed override")
        cmd.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")

    gen = sub.add_parser("gen", help="write the scenario waveform as an IQ file")
    gen.add_argument("--scenario", required=True)
    gen.add_argument("--out", required=True, help="output IQ path")
    gen.add_argument("--seed", type=int, default=None)

    analyze = sub.add_parser("analyze", help="print metrics of an IQ file")
    analyze.add_argument("path", help="IQ file with a .meta sidecar")
    return parser


def _parse_amplitudes(text: str | None) -> np.ndarray | None:
    if text is None:
        return None
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ScenarioError(f"amplitude grid must be start:stop:count, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if start <= 0 or stop <= start or count < 2:
            raise ScenarioError(f"bad log amplitude grid {text!r}")
        return np.logspace(np.log10(start), np.log10(stop), count)
    values = np.array([float(p) for p in text.split(",") if p.strip()])
    if values.size == 0 or np.any(values <= 0):
        raise ScenarioError(f"bad amplitude list {text!r}")
    return values


def _load_scenario(path: str, seed: int | None) -> experiments.Scenario:
    scenario = experiments.load_scenario(path)
    if seed is not None:
        from dataclasses import replace

        scenario = replace(scenario, seed=seed)
    return scenario


def _resolve_out(args, scenario) -> str:
    out = args.out or scenario.csv_path
    if not out:
        raise ScenarioError("no output path: pass --out or set [output] csv in the scenario")
    return out


def _cmd_fig2(args) -> int:
    try:
        n_tones = tuple(int(p) for p in args.n_tones.split(",") if p.strip())
    except ValueError as err:
        raise ScenarioError(f"bad --n-tones {args.n_tones!r}: {err}") from err
    rows = experiments.fig2_rows(n_tones, _parse_amplitudes(args.amplitudes))
    experiments.write_csv(args.out, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_chain_sweep(args) -> int:
    scenario = _load_scenario(args.scenario, args.seed)
    rows = experiments.chain_sweep_rows(scenario, jobs=args.jobs)
    out = _resolve_out(args, scenario)
    experiments.write_csv(out, rows)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def _cmd_evm_sweep(args) -> int:
    scenario = _load_scenario(args.scenario, args.seed)
    rows = experiments.evm_sweep_rows(scenario, jobs=args.jobs)
    out = _resolve_out(args, scenario)
    experiments.write_csv(out, rows)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def _cmd_gen(args) -> int:
    scenario = _load_scenario(args.scenario, args.seed)
    w, descriptor = experiments.scenario_waveform(scenario)
    iqfile.write_iq(w, args.out, generator=descriptor, seed=scenario.seed)
    print(f"wrote {w.n_samples} samples to {args.out}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    w, meta = iqfile.read_iq(args.path)
    stats = metrics.waveform_metrics(w)
    print(f"n_samples={w.n_samples}")
    print(f"sample_rate={w.sample_rate:.12g}")
    print(f"duration_s={w.duration:.12g}")
    print(f"generator={meta.get('generator', '')}")
    print(f"seed={meta.get('seed', '')}")
    print(f"average_power={stats.average_power:.12g}")
    print(f"peak_power={stats.peak_power:.12g}")
    print(f"envelope_papr={stats.papr:.12g}")
    print(f"rf_papr={metrics.papr(w):.12g}")
    return EXIT_OK


_HANDLERS = {
    "fig2": _cmd_fig2,
    "chain-sweep": _cmd_chain_sweep,
    "evm-sweep": _cmd_evm_sweep,
    "gen": _cmd_gen,
    "analyze": _cmd_analyze,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ScenarioError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
