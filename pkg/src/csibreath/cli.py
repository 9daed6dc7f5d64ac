"""Command-line front end.

Subcommands: simulate, run, sweep-blindspot, sweep-snr, gass-audit. Every
subcommand takes --config, --seed, and --out. Outputs are deterministic for
a fixed seed: floats are serialized with repr, JSON keys are sorted, and no
wall-clock values are written.

Exit codes: 0 success, 2 configuration error, 3 input-format error,
4 no usable analysis window.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from .config import (
    grid_from_config,
    impairments_from_config,
    load_config,
    pipeline_from_config,
    scenario_from_config,
)
from .errors import (
    ConfigurationError,
    CsiBreathError,
    DegenerateScenarioError,
    NoWindowError,
    TraceFormatError,
)
from .gass import GassSolution, optimize, rank_seed_pairs
from .pipeline import (
    EvaluationReport,
    PipelineConfig,
    WindowResult,
    blind_spot_sweep,
    run_pipeline,
    segment,
    snr_sweep,
)
from .ratio import average_phase_blocks
from .simulate import apply_impairments, frames_to_matrix, generate_ideal_csi
from .traceio import read_trace, write_trace

EXIT_CONFIG = 2
EXIT_TRACE = 3
EXIT_NO_WINDOW = 4


def _jsonable(value):
    """Make a value JSON-serializable; non-finite floats become strings."""
    if isinstance(value, (np.floating, float)):
        f = float(value)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return f
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, fieldnames: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_format_cell(row.get(name)) for name in fieldnames])


def _solution_record(solution: GassSolution) -> dict:
    genome = solution.genome
    return {
        "weights_re": [float(w.real) for w in genome.weights],
        "weights_im": [float(w.imag) for w in genome.weights],
        "numerator_indices": [int(m) for m in genome.numerator_indices],
        "denominator_index": int(genome.denominator_index),
        "fitness": _jsonable(solution.fitness),
        "generation_found": solution.generation_found,
        "history": _jsonable(solution.history),
        "seeded_best_fitness": _jsonable(solution.seeded_best_fitness),
        "seeded_pairs": [list(p) for p in solution.seeded_pairs],
    }


def _result_record(result: WindowResult) -> dict:
    e = result.estimate
    return {
        "window_id": result.window_id,
        "start_frame": result.start_frame,
        "start_time_s": _jsonable(result.start_time_s),
        "f_bpm": _jsonable(e.f_bpm) if e else None,
        "confidence": _jsonable(e.confidence) if e else None,
        "k_p1": e.k_p1 if e else None,
        "k_p2": e.k_p2 if e else None,
        "lag_samples": _jsonable(e.lag_samples) if e else None,
        "flags": list(e.flags) if e else [],
        "rejected_bpm": _jsonable(e.rejected_bpm) if e else None,
        "gass_reused": result.gass_reused,
        "stage_band_ratios": _jsonable(result.stage_band_ratios),
        "solution": _solution_record(result.solution) if result.solution else None,
        "reason": result.reason,
    }


def _load_frames(config: dict, seed: int):
    """Input resolution shared by run/gass-audit: trace file or scenario."""
    input_section = config.get("input") or {}
    if input_section:
        unknown = set(input_section) - {"trace"}
        if unknown:
            raise ConfigurationError(f"unknown input keys: {sorted(unknown)}")
        frames, sample_rate, grid = read_trace(input_section["trace"])
        return frames, sample_rate, grid
    scenario = scenario_from_config(config)
    grid = grid_from_config(config)
    frames = generate_ideal_csi(scenario, grid)
    if "impairments" in config:
        frames = apply_impairments(frames, impairments_from_config(config, seed))
    return frames, scenario.sample_rate_hz, grid


def _cmd_simulate(config: dict, seed: int, out: Path) -> int:
    scenario = scenario_from_config(config)
    grid = grid_from_config(config)
    frames = generate_ideal_csi(scenario, grid)
    if "impairments" in config:
        frames = apply_impairments(frames, impairments_from_config(config, seed))
    write_trace(out / "trace.csv", frames, scenario.sample_rate_hz, grid)
    print(f"wrote {out / 'trace.csv'} ({len(frames)} frames, {grid.count} subcarriers)")
    return 0


def _cmd_run(config: dict, seed: int, out: Path) -> int:
    frames, sample_rate, _ = _load_frames(config, seed)
    pipeline_config = pipeline_from_config(config)
    results = run_pipeline(frames, sample_rate, pipeline_config, seed=seed)
    with open(out / "estimates.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for result in results:
            fh.write(json.dumps(_result_record(result), sort_keys=True) + "\n")
    write_csv(
        out / "windows.csv",
        ["window_id", "start_time_s", "f_bpm", "confidence", "flags", "reason"],
        [
            {
                "window_id": r.window_id,
                "start_time_s": r.start_time_s,
                "f_bpm": r.estimate.f_bpm if r.estimate else None,
                "confidence": r.estimate.confidence if r.estimate else None,
                "flags": ";".join(r.estimate.flags) if r.estimate else "",
                "reason": r.reason,
            }
            for r in results
        ],
    )
    estimated = sum(1 for r in results if r.estimate and r.estimate.f_bpm is not None)
    print(f"{estimated}/{len(results)} windows produced an estimate")
    return 0


def _write_report(report: EvaluationReport, out: Path, stem: str) -> None:
    fieldnames = list(report.rows[0].keys()) if report.rows else []
    write_csv(out / f"{stem}.csv", fieldnames, [dict(r) for r in report.rows])
    with open(out / f"{stem}_summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(
            {"summary": _jsonable(report.summary), "meta": _jsonable(report.meta)},
            fh,
            sort_keys=True,
            indent=1,
        )
        fh.write("\n")


def _cmd_sweep_blindspot(config: dict, seed: int, out: Path) -> int:
    scenario = scenario_from_config(config)
    grid = grid_from_config(config)
    impairments = impairments_from_config(config, seed)
    sweep = dict(config.get("sweep", {}))
    known = {"offsets_m", "positions", "span_wavelengths", "noise_stds", "runs_per_level"}
    unknown = set(sweep) - known
    if unknown:
        raise ConfigurationError(f"unknown sweep keys: {sorted(unknown)}")
    if "offsets_m" in sweep:
        offsets = np.asarray(sweep["offsets_m"], dtype=float)
    else:
        positions = int(sweep.get("positions", 32))
        span = float(sweep.get("span_wavelengths", 1.0))
        wavelength = float(np.mean(grid.wavelength_m))
        offsets = np.arange(positions) * (span * wavelength / positions)
    report = blind_spot_sweep(
        scenario, impairments, grid, offsets, pipeline_from_config(config), seed=seed
    )
    _write_report(report, out, "blindspot")
    for method in ("full", "amplitude", "phase"):
        print(f"{method}: {report.summary[f'{method}_detectability_pct']:.1f}% detectable")
    return 0


def _cmd_sweep_snr(config: dict, seed: int, out: Path) -> int:
    scenario = scenario_from_config(config)
    grid = grid_from_config(config)
    impairments = impairments_from_config(config, seed)
    sweep = dict(config.get("sweep", {}))
    if "noise_stds" not in sweep:
        raise ConfigurationError("sweep.noise_stds is required for sweep-snr")
    report = snr_sweep(
        scenario,
        impairments,
        grid,
        np.asarray(sweep["noise_stds"], dtype=float),
        pipeline_from_config(config),
        seed=seed,
        runs_per_level=int(sweep.get("runs_per_level", 1)),
    )
    _write_report(report, out, "snr")
    print("full-pipeline detection rates:", report.summary["full"])
    return 0


def _cmd_gass_audit(config: dict, seed: int, out: Path) -> int:
    frames, sample_rate, _ = _load_frames(config, seed)
    pipeline_config = pipeline_from_config(config)
    plan = segment(frames, sample_rate, pipeline_config)
    if plan.window_starts.size == 0:
        raise NoWindowError("no complete window to audit")
    start = int(plan.window_starts[0]) * plan.frame_samples
    window = frames[start : start + plan.window_frames * plan.frame_samples]
    k1 = pipeline_config.block_size(sample_rate)
    matrix = frames_to_matrix(average_phase_blocks(window, k1))
    eff_rate = sample_rate / k1
    rng = np.random.default_rng([seed, 0])
    ranked = rank_seed_pairs(matrix, eff_rate, pipeline_config.ga, rng)
    solution = optimize(
        matrix,
        pipeline_config.n_numerators,
        eff_rate,
        params=pipeline_config.ga,
        seed=rng,
        ranked_pairs=ranked,
    )
    with open(out / "gass_solution.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_solution_record(solution), fh, sort_keys=True, indent=1)
        fh.write("\n")
    print(
        f"window 0: fitness {solution.fitness:.4g} "
        f"(seeded single-pair best {solution.seeded_best_fitness:.4g})"
    )
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "run": _cmd_run,
    "sweep-blindspot": _cmd_sweep_blindspot,
    "sweep-snr": _cmd_sweep_snr,
    "gass-audit": _cmd_gass_audit,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csibreath",
        description="Respiration sensing from single-antenna Wi-Fi CSI",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("simulate", "synthesize a CSI trace from a scenario config"),
        ("run", "estimate respiration rate from a trace or scenario"),
        ("sweep-blindspot", "detectability of three estimators across positions"),
        ("sweep-snr", "detection rate versus additive noise level"),
        ("gass-audit", "dump the subcarrier-search solution for one window"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](config, args.seed, out)
    except (ConfigurationError, DegenerateScenarioError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TraceFormatError as exc:
        print(f"input format error: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except NoWindowError as exc:
        print(f"no analysis window: {exc}", file=sys.stderr)
        return EXIT_NO_WINDOW
    except CsiBreathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
