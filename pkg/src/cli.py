"""
Command-line front end. Every subcommand reads one JSON run config, writes its CSV or
JSON artifacts into the output directory and prints a one-line summary.

Usage:
python -m src.cli --config config_defaults/tabletop.json resonance

Author:
Nikki Hess (nkhess@umich.edu)
"""

# built-in
from pathlib import Path
import argparse
import csv
import io
import math
import os
import sys
import tempfile

# pypi
import numpy as np

# my modules
from nikki_utils import tsprint, set_log_file
from . import __version__, cavity, fit, membrane, meters, noise, quantum
from .config import CONFIG_DEFAULTS_PATH, DEFAULT_CONFIG_NAME, RunConfig, load_config, with_grid
from .errors import NumericalError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

PHASE_POINTS = 2001
SUBCOMMANDS = ("resonance", "tf", "noise", "membrane", "compare", "fit", "synth")

def atomic_write(path: Path, text: str):
    """
    Writes text to path through a temporary file in the same directory, so readers
    never see a partial file.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile("w", dir=path.parent, suffix=".tmp", delete=False, newline="") as handle:
        handle.write(text)
        temp_name = handle.name

    os.replace(temp_name, path)

def header_lines(config: RunConfig, seed: int, command: str) -> list[str]:
    return [
        f"# hrc-speedmeter {__version__}",
        f"# command: {command}",
        f"# config_sha256: {config.config_hash}",
        f"# seed: {seed}",
    ]

def write_csv(path: Path, fieldnames: list[str], rows, header: list[str]):
    """
    Writes a CSV whose first lines are the '#' header block.

    :param path: destination file
    :type path: Path

    :param fieldnames: column names
    :type fieldnames: list[str]

    :param rows: one sequence of values per row, in fieldnames order
    :type rows: Iterable[Sequence[float]]

    :param header: comment lines, each starting with '#'
    :type header: list[str]
    """
    buffer = io.StringIO()
    buffer.write("\n".join(header) + "\n")

    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(fieldnames)
    for row in rows:
        writer.writerow([repr(float(value)) for value in row])

    atomic_write(path, buffer.getvalue())
    tsprint(f'Wrote "{path}".')

def run_resonance(config: RunConfig, args, header: list[str]) -> str:
    cfg = config.cavity
    phases = np.linspace(0, 2 * math.pi, PHASE_POINTS)
    sweep = cavity.intracavity_intensity_sweep(cfg, phases)
    write_csv(Path(args.out_dir) / "resonance.csv", ["phase_rad", "intensity_norm"], sweep, header)

    splitting = cavity.resonance_splitting(cfg) / (2 * math.pi)
    estimate = cavity.mode_splitting(cfg) / (2 * math.pi)
    dark = cavity.dark_port_ratio(cfg, config.laser.branch)
    return (f"Resonance splitting {splitting / 1e6:.3f} MHz (high-finesse formula {estimate / 1e6:.3f} MHz), "
            f"dark port |B2/A1|^2 = {dark:.3e}")

def run_tf(config: RunConfig, args, header: list[str]) -> str:
    laser = config.laser
    if args.branch is not None:
        laser = cavity.LaserConfig(laser.wavelength, laser.input_power, args.branch)

    frequencies = config.frequencies_hz()
    transfer = quantum.transfer_full(config.cavity, laser, 2 * math.pi * frequencies)
    coefficients = transfer.as_dict()
    if args.port != "both":
        coefficients = {name: values for name, values in coefficients.items() if name[1] == args.port}

    fieldnames = ["omega_hz"]
    columns = [frequencies]
    for name, values in coefficients.items():
        fieldnames += [f"abs_{name}", f"arg_{name}"]
        columns += [np.abs(values), np.angle(values)]

    write_csv(Path(args.out_dir) / "tf.csv", fieldnames, zip(*columns), header)

    middle = frequencies.size // 2
    ratio = quantum.amplitude_ratio_db(transfer.b13[middle] / transfer.b23[middle])
    return f"Port ratio |b13/b23| = {ratio:.2f} dB at {frequencies[middle] / 1e6:.3f} MHz"

def run_noise(config: RunConfig, args, header: list[str]) -> str:
    port = args.port if args.port is not None else config.readout.port
    zeta = args.zeta if args.zeta is not None else config.readout.zeta
    optimal = args.optimal_readout or config.readout.optimal_readout
    if not 0 < zeta <= math.pi:
        raise ValidationError("homodyne angle must be in (0, pi]", "zeta")

    frequencies = config.frequencies_hz()
    omegas = 2 * math.pi * frequencies
    mode = config.mechanical_mode()
    budgets = noise.total_budget(config.cavity, config.laser, mode, port, zeta, omegas)

    fieldnames = ["omega_hz", "s_shot_1", "s_shot_2", "s_rp_x", "s_rp_v", "s_total_1", "s_total_2", "s_sql"]
    rows = [[f_hz, *budget.as_row().values()] for f_hz, budget in zip(frequencies, budgets)]

    if optimal:
        combined = noise.postprocessed_budget(config.cavity, config.laser, mode, omegas)
        fieldnames.append("s_postprocessed")
        rows = [row + [value] for row, value in zip(rows, combined)]

    write_csv(Path(args.out_dir) / "noise.csv", fieldnames, rows, header)

    totals = np.array([budget.S_total_1 if port == 1 else budget.S_total_2 for budget in budgets])
    ratio = totals / np.array([budget.S_SQL for budget in budgets])
    return f"Port {port} at zeta = {zeta:.4f} rad: min S/S_SQL = {ratio.min():.4g}"

def run_membrane(config: RunConfig, args, header: list[str]) -> str:
    modes = config.modes()
    for mode in modes:
        tsprint(f"Mode ({mode.m}, {mode.n}): {mode.frequency / 1e3:.1f} kHz, M_eff = {mode.M_eff:.3e} kg")

    frequencies = config.frequencies_hz()
    omegas = 2 * math.pi * frequencies
    gamma = config.cavity.gamma
    position = np.abs(membrane.multimode_force_transfer(modes, 1, gamma, omegas))
    speed = np.abs(membrane.multimode_force_transfer(modes, 2, gamma, omegas))
    ratio = quantum.amplitude_ratio_db(position / speed)

    write_csv(Path(args.out_dir) / "membrane.csv",
              ["omega_hz", "abs_tf_port1", "abs_tf_port2", "ratio_db"],
              zip(frequencies, position, speed, ratio), header)
    return f"{len(modes)} membrane modes, fundamental {modes[0].frequency / 1e3:.1f} kHz"

def run_compare(config: RunConfig, args, header: list[str]) -> str:
    frequencies = config.frequencies_hz()
    omegas = 2 * math.pi * frequencies
    mass = config.mass
    laser = config.laser
    free = noise.MechanicalMode.free(mass)

    params = meters.MeterParams(k_p=laser.k_p, P=laser.input_power, M=mass, tau=config.cavity.tau)
    s_sql = noise.sql(mass, omegas)
    free_speed = meters.meter_sensitivity(params, "speed", omegas) / s_sql
    free_position = meters.meter_sensitivity(params, "position", omegas) / s_sql

    budgets = noise.total_budget(config.cavity, laser, free, 2, math.pi / 2, omegas)
    port1 = np.array([budget.S_total_1 for budget in budgets]) / s_sql
    port2 = np.array([budget.S_total_2 for budget in budgets]) / s_sql
    combined = noise.postprocessed_budget(config.cavity, laser, free, omegas) / s_sql

    write_csv(Path(args.out_dir) / "compare.csv",
              ["omega_hz", "free_speed", "free_position", "hrc_port1", "hrc_port2", "hrc_postprocessed"],
              zip(frequencies, free_speed, free_position, port1, port2, combined), header)
    return (f"min S/S_SQL: free position {free_position.min():.4g}, free speed {free_speed.min():.4g}, "
            f"ring cavity speed port {port2.min():.4g}")

def _fit_summary(result: fit.FitResult) -> str:
    parts = [f"{name} = {estimate.value:.6g} +/- {estimate.sigma:.2g}" for name, estimate in result.params.items()]
    return ", ".join(parts)

def run_fit(config: RunConfig, args, header: list[str]) -> str:
    if not args.inputs:
        raise ValidationError("at least one input CSV is required", "in")

    share = None
    if config.back_mirror_power_transmission > 0:
        share = fit.input_coupler_share(config.cavity.T**2, config.back_mirror_power_transmission)

    if args.kind == "transmission":
        data = fit.read_sweep_csv(args.inputs[0], "transmission")
        result = fit.fit_double_lorentzian(data, cavity_length=config.cavity.L, coupler_share=share)
    elif args.kind == "tf":
        if len(args.inputs) == 1:
            result = fit.fit_optical_tf(None, fit.read_sweep_csv(args.inputs[0], "tf_speed"), coupler_share=share)
        else:
            result = fit.fit_optical_tf(fit.read_sweep_csv(args.inputs[0], "tf_position"),
                                        fit.read_sweep_csv(args.inputs[1], "tf_speed"), coupler_share=share)
    else:
        data = fit.read_sweep_csv(args.inputs[0], "ringdown")
        result = fit.fit_ringdown(data, 2 * math.pi * _mechanical_frequency(config))

    out = Path(args.out) if args.out else Path(args.out_dir) / f"fit_{args.kind}.json"
    atomic_write(out, fit.result_json(result) + "\n")
    tsprint(f'Wrote "{out}".')
    return _fit_summary(result)

def _mechanical_frequency(config: RunConfig) -> float:
    if config.mechanics.omega_m_hz is not None:
        return config.mechanics.omega_m_hz
    return config.modes()[0].frequency

def run_synth(config: RunConfig, args, header: list[str]) -> str:
    out_dir = Path(args.out_dir)
    written = []

    def emit(data: fit.SweepData, name: str):
        path = out_dir / name
        write_csv(path, fit.CSV_HEADERS[data.kind].split(","), zip(data.x, data.y), header)
        written.append(path.name)

    if args.kind == "transmission":
        emit(fit.synthetic_transmission(seed=args.seed), "synth_transmission.csv")
    elif args.kind == "tf":
        position, speed = fit.synthetic_tf(seed=args.seed)
        emit(position, "synth_tf_position.csv")
        emit(speed, "synth_tf_speed.csv")
    else:
        fundamental = config.modes()[0]
        times, amplitude_db = membrane.synthetic_ringdown(
            fundamental.Q, 2 * math.pi * _mechanical_frequency(config), seed=args.seed,
        )
        emit(fit.SweepData(times, amplitude_db, "ringdown"), "synth_ringdown.csv")

    return f"Synthetic {args.kind} data: {', '.join(written)}"

RUNNERS = {
    "resonance": run_resonance,
    "tf": run_tf,
    "noise": run_noise,
    "membrane": run_membrane,
    "compare": run_compare,
    "fit": run_fit,
    "synth": run_synth,
}

def run_subcommand(name: str, config: RunConfig, args) -> int:
    """
    Runs one subcommand and maps package errors onto exit codes.

    :param name: subcommand name
    :type name: str

    :param config: validated run config
    :type config: RunConfig

    :param args: parsed command line
    :type args: argparse.Namespace

    :return: 0 on success, 2 on a validation error, 3 on a numerical failure
    :rtype: int
    """
    header = header_lines(config, args.seed, name)
    try:
        summary = RUNNERS[name](config, args, header)
    except ValidationError as e:
        tsprint(f"ERROR: {e}")
        return EXIT_VALIDATION
    except NumericalError as e:
        tsprint(f"ERROR: Numerical failure in {name}: {e}")
        return EXIT_NUMERICAL

    tsprint(summary)
    return EXIT_OK

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hrc-speedmeter",
        description="Simulate and fit a hybrid readout ring cavity speedmeter.",
    )
    parser.add_argument("--config", default=str(CONFIG_DEFAULTS_PATH / DEFAULT_CONFIG_NAME),
                        help="JSON run config (default: the shipped tabletop.json)")
    parser.add_argument("--out-dir", default="out", help="directory for CSV and JSON artifacts")
    parser.add_argument("--seed", type=int, default=0, help="seed for synthetic data")
    parser.add_argument("--log-file", default=None, help="mirror log lines into this file")
    parser.add_argument("--f-min", type=float, default=None, help="override grid.f_min_hz")
    parser.add_argument("--f-max", type=float, default=None, help="override grid.f_max_hz")
    parser.add_argument("--points", type=int, default=None, help="override grid.points")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("resonance", help="intra-cavity intensity sweep and split resonances")

    tf_parser = subparsers.add_parser("tf", help="transfer coefficients of the ports")
    tf_parser.add_argument("--port", choices=("1", "2", "both"), default="both",
                           help="output port whose coefficients are written")
    tf_parser.add_argument("--branch", choices=cavity.BRANCHES, default=None)

    noise_parser = subparsers.add_parser("noise", help="quantum noise budget")
    noise_parser.add_argument("--zeta", type=float, default=None, help="homodyne angle, rad")
    noise_parser.add_argument("--port", type=int, choices=(1, 2), default=None)
    noise_parser.add_argument("--optimal-readout", action="store_true")

    subparsers.add_parser("membrane", help="multi-mode membrane response")
    subparsers.add_parser("compare", help="ring cavity against free-space meters, S/S_SQL")

    fit_parser = subparsers.add_parser("fit", help="fit measured or synthetic sweeps")
    fit_parser.add_argument("--kind", choices=("transmission", "tf", "ringdown"), required=True)
    fit_parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                            help="input CSV(s); for tf give position then speed, or speed only")
    fit_parser.add_argument("--out", default=None, help="output JSON (default: <out-dir>/fit_<kind>.json)")

    synth_parser = subparsers.add_parser("synth", help="write synthetic sweeps for the fit kinds")
    synth_parser.add_argument("--kind", choices=("transmission", "tf", "ringdown"), required=True)

    return parser

def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.log_file:
        set_log_file(args.log_file)

    tsprint(f"Starting hrc-speedmeter {__version__}: {args.command}")
    try:
        config = load_config(args.config)
        if args.f_min is not None or args.f_max is not None or args.points is not None:
            config = with_grid(config, args.f_min, args.f_max, args.points)
    except ValidationError as e:
        tsprint(f"ERROR: {e}")
        return EXIT_VALIDATION

    return run_subcommand(args.command, config, args)

if __name__ == "__main__":
    sys.exit(main())
