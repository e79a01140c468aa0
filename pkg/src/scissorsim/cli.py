"""Command-line experiment runner.

    scissorsim run CONFIG.json --out result.csv [--key value ...]
    scissorsim validate CONFIG.json

Every config key is also a long-form flag and overrides the file value.
Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from typing import Optional, Sequence

from . import amplifier as amp
from .config import SCHEMA, ConfigError, ExperimentConfig, check_values, load_config, parse_text, validate
from .source import SpdcSource, hom_dip

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

COLUMNS = {
    "gain-sweep": ["t", "gain_ideal", "gain_nonpnr", "gain_simulated", "vmax", "visibility_simulated"],
    "hom-dip": ["delay", "coincidence_prob"],
    "fringe-scan": ["phi", "coincidence_prob"],
    "phase-average": ["fixed_phase_visibility", "averaged_visibility", "ratio"],
    "amplifier-single": [
        "t",
        "alpha_sq",
        "herald_probability",
        "success_probability_total",
        "gain",
        "single_photon_weight_in",
        "single_photon_weight_out",
        "rho_00",
        "rho_11",
        "rho_01_re",
        "rho_01_im",
        "measured_gain",
    ],
}


def compute(config: ExperimentConfig) -> tuple[list[str], list[list[float]], dict]:
    """Run the configured experiment; return ``(columns, rows, summary)``."""
    p = config.params
    kind = config.experiment
    summary: dict = {}
    if kind == "gain-sweep":
        table = amp.gain_sweep(p, config.t_grid, config.spdc, config.gain_estimator, config.phase_grid)
        rows = [[r.t, r.gain_ideal, r.gain_nonpnr, r.gain_simulated, r.vmax, r.visibility_simulated] for r in table]
    elif kind == "hom-dip":
        src = config.spdc or SpdcSource(0.0, config.overlap)
        detector = p.coincidence_detector
        dip, visibility = hom_dip(src, config.delay_grid, config.delay_width, detector, single=config.spdc is None)
        rows = [list(r) for r in dip]
        summary["visibility"] = visibility
    elif kind == "fringe-scan":
        rec = amp.simulate_full_interferometer(p, config.spdc, config.phase_grid)
        rows = [[float(x), float(y)] for x, y in zip(rec.phases, rec.coincidence)]
        summary["visibility"] = rec.visibility
        summary["herald_probability"] = rec.herald_probability
    elif kind == "phase-average":
        res = amp.phase_average(p, config.phase_grid, config.average_points)
        rows = [[res.fixed_phase_visibility, res.averaged_visibility, res.ratio]]
        summary["phase_state_fixed_visibility"] = res.phase_state_fixed_visibility
    elif kind == "amplifier-single":
        res = amp.simulate_amplifier(p)
        rho = res.output_state
        try:
            g_meas = amp.measured_gain(p, config.spdc)
        except ValueError:
            g_meas = math.nan
        rows = [
            [
                p.t,
                p.alpha_sq,
                res.herald_probability,
                res.success_probability_total,
                res.gain,
                res.single_photon_weight_in,
                res.single_photon_weight_out,
                rho.matrix[0, 0].real,
                rho.matrix[1, 1].real,
                rho.matrix[0, 1].real,
                rho.matrix[0, 1].imag,
                g_meas,
            ]
        ]
    else:  # pragma: no cover - guarded by validation
        raise ValueError(f"unknown experiment {kind!r}")
    return COLUMNS[kind], [[float(v) for v in row] for row in rows], summary


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else format(x, ".12g")


def render_csv(columns, rows, summary) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    for key in sorted(summary):
        buf.write(f"# {key}={_fmt(float(summary[key]))}\n")
    return buf.getvalue()


def _json_value(x: float):
    return None if math.isnan(x) else x


def render_json(experiment, columns, rows, summary) -> str:
    doc = {
        "experiment": experiment,
        "columns": columns,
        "rows": [[_json_value(v) for v in row] for row in rows],
        "summary": {k: _json_value(float(v)) for k, v in sorted(summary.items())},
    }
    return json.dumps(doc, indent=2) + "\n"


def render(config: ExperimentConfig) -> str:
    columns, rows, summary = compute(config)
    if config.output == "json":
        return render_json(config.experiment, columns, rows, summary)
    return render_csv(columns, rows, summary)


def run(config: ExperimentConfig, out_path: str) -> int:
    """Compute ``config`` and write the table to ``out_path``; return the exit status."""
    text = render(config)
    try:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: cannot write {out_path}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scissorsim", description="Heralded photon amplifier experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "validate"):
        cmd = sub.add_parser(name)
        cmd.add_argument("config", nargs="?", help="JSON config file")
        if name == "run":
            cmd.add_argument("--out", required=True, help="output file")
        for key in SCHEMA:
            # grids accept a comma-separated list
            cmd.add_argument(f"--{key}", dest=f"opt_{key}", default=None, metavar="VALUE")
    return parser


def _read(path: Optional[str]) -> tuple[Optional[str], str]:
    if path is None:
        return "{}", "<defaults>"
    with open(path, encoding="utf-8") as fh:
        return fh.read(), path


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("opt_") and v is not None}
    try:
        text, source = _read(args.config)
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO

    if args.command == "validate":
        raw, errors = parse_text(text, source)
        if not errors:
            errors = check_values(raw, text, source, overrides)[1]
        for e in errors:
            print(e, file=sys.stderr)
        if not errors:
            print("ok")
        return EXIT_CONFIG if errors else EXIT_OK

    try:
        config = load_config(text, source, overrides)
    except ConfigError as exc:
        for e in exc.errors:
            print(e, file=sys.stderr)
        return EXIT_CONFIG
    return run(config, args.out)


__all__ = ["compute", "main", "render", "run", "validate"]

if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
