"""Command-line front end.

Usage:
    rspsim verify                         Check every pulse/operator identity
    rspsim rsp --polar --theta pi/3       Run one remote preparation
    rspsim sweep --equatorial -o eq.csv   Write a full great-circle sweep
    rspsim tomo --polar --theta pi/2      Print Bob's tomography record
    rspsim compile prog.pulse             Dump the unitary of a pulse program

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 IO error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, SimulationConfig, load_config
from .gates import Mode, QubitTarget, correction_u, epr_network, r_plus_matrix
from .protocol import (
    MeasurementPath,
    Source,
    SweepRecord,
    measure_branches,
    run_rsp,
    run_sweep,
    sample_branch,
)
from .pulsedsl import PulseSyntaxError, compile_sequence, format_sequence, parse_angle, parse_sequence
from .qmath import DensityMatrix, apply_to_spin, bloch_vector
from .tomography import fit_sinusoid, tomograph, wrap_phase
from .verify import format_report, run_identities

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3

CSV_COLUMNS = [f.name for f in fields(SweepRecord)]

CONVENTIONS = {
    "rotation": "X(t)=exp(-i t sx/2), likewise Y, Z; bar = negated angle",
    "j_coupling": "J(t)=exp(-i t sz(x)sz/4); J(pi) lasts 1/(2J)",
    "tensor_order": "spin A (1H, sender) slow index, spin B (13C, receiver) fast index",
    "pulse_files": "time order, one pulse per line",
    "relative_error_norm": "frobenius",
    "noise_timing": "relaxation during timed pulses (split around each propagator) and acquisition delay",
}

# Ideal curve phase per channel: cos -> 0, sin -> -pi/2 in y = a cos(x + d) + c.
FIT_CHANNELS = {
    Mode.POLAR: {"real_signal": -math.pi / 2, "z_readout": 0.0},
    Mode.EQUATORIAL: {"real_signal": 0.0, "imag_signal": -math.pi / 2},
}


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def angle_arg(text: str) -> float:
    try:
        return parse_angle(text)
    except PulseSyntaxError as exc:
        raise argparse.ArgumentTypeError(f"bad angle {text!r}: {exc}") from None


# --- records ---------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_csv(records: list[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def records_from_csv(text: str) -> list[SweepRecord]:
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for row in reader:
        out.append(
            SweepRecord(
                index=int(row["index"]),
                angle=float(row["angle"]),
                angle_label=row["angle_label"],
                real_signal=float(row["real_signal"]),
                imag_signal=float(row["imag_signal"]),
                z_readout=float(row["z_readout"]),
                fidelity=float(row["fidelity"]),
                delta=float(row["delta"]),
                p_plus=float(row["p_plus"]),
                delta_deviation=float(row["delta_deviation"]) if row["delta_deviation"] else None,
            )
        )
    return out


def fit_channels(mode: Mode, records: list[SweepRecord]) -> dict[str, dict]:
    xs = [r.angle for r in records]
    fits = {}
    for channel, nominal in FIT_CHANNELS[Mode(mode)].items():
        fit = fit_sinusoid(xs, [getattr(r, channel) for r in records])
        entry = asdict(fit)
        entry["fitted_phase"] = entry.pop("phase_offset")
        entry["phase_offset"] = wrap_phase(fit.phase_offset - nominal) if fit.amplitude > 1e-12 else 0.0
        fits[channel] = entry
    return fits


def sweep_metadata(mode: Mode, cfg: SimulationConfig, noise_on: bool, path, source, records) -> dict:
    meta = {
        "tool": f"rspsim {__version__}",
        "mode": Mode(mode).value,
        "points": len(records),
        "path": MeasurementPath(path).value,
        "source": Source(source).value,
        "noise": noise_on,
        "epsilon": cfg.epsilon,
        "constants": {
            "j_coupling_hz": cfg.j_coupling,
            "t1_a_s": cfg.t1_a,
            "t2_a_s": cfg.t2_a,
            "t1_b_s": cfg.t1_b,
            "t2_b_s": cfg.t2_b,
            "acquisition_delay_s": cfg.acquisition_delay,
            "rf_duration_per_radian_s": cfg.rf_duration_per_radian,
        },
        "conventions": CONVENTIONS,
        "fits": fit_channels(mode, records),
        "max_delta": max(r.delta for r in records),
        "min_fidelity": min(r.fidelity for r in records),
    }
    if cfg.epsilon < 1:
        meta["max_delta_deviation"] = max(r.delta_deviation for r in records)
    return meta


# --- commands -------------------------------------------------------------

def _config(args) -> SimulationConfig:
    cfg = SimulationConfig()
    if getattr(args, "config", None):
        try:
            cfg = load_config(args.config)
        except OSError as exc:
            raise CLIError(f"cannot read config {args.config}: {exc.strerror}", EXIT_IO) from None
        except ConfigError as exc:
            raise CLIError(f"{args.config}: {exc}", EXIT_USAGE) from None
    if getattr(args, "noise", False):
        cfg = cfg.replace(noise=True)
    if getattr(args, "epsilon", None) is not None:
        cfg = cfg.replace(epsilon=args.epsilon)
    return cfg


def _mode(args) -> Mode:
    return Mode.POLAR if args.polar else Mode.EQUATORIAL


def _target(args) -> QubitTarget:
    mode = _mode(args)
    angle = args.theta if mode is Mode.POLAR else args.phi
    if angle is None:
        raise CLIError(f"--{'theta' if mode is Mode.POLAR else 'phi'} is required for {mode.value} targets", EXIT_USAGE)
    try:
        return QubitTarget.on_circle(mode, angle)
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_USAGE) from None


def cmd_verify(args, out) -> int:
    checks = run_identities(j_sign=-1 if args.corrupt_j_convention else 1)
    out.write(format_report(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY_FAILED


def cmd_rsp(args, out) -> int:
    cfg = _config(args)
    target = _target(args)
    noise = cfg.noise_params()
    res = run_rsp(
        target, args.path, noise, args.source,
        epsilon=cfg.epsilon, rf_duration_per_radian=cfg.rf_duration_per_radian,
    )
    report = {
        "mode": target.mode.value,
        "theta": target.theta,
        "phi": target.phi,
        "path": res.path.value,
        "source": res.source.value,
        "noisy": res.noisy,
        "bloch": list(res.bob_bloch),
        "fidelity": res.fidelity,
        "delta": res.delta,
        "delta_deviation": res.delta_deviation,
        "branch_probs": list(res.branch_probs),
    }
    if args.sample:
        rng = np.random.default_rng(args.seed if args.seed is not None else cfg.seed)
        u = apply_to_spin(r_plus_matrix(target), "A") @ epr_network().ideal_unitary()
        state = DensityMatrix.from_ket(u[:, 0])
        outcome, bob = sample_branch(measure_branches(state), correction_u(target.mode), rng)
        report["sampled_outcome"] = outcome
        report["sampled_bloch"] = list(bloch_vector(bob))
    if args.json:
        out.write(json.dumps(report, indent=2) + "\n")
        return EXIT_OK
    b = res.bob_bloch
    out.write(f"target      {target.mode.value} theta={target.theta:.6f} phi={target.phi:.6f}\n")
    out.write(f"path        {res.path.value} ({res.source.value} level, noise {'on' if res.noisy else 'off'})\n")
    out.write(f"bloch       ({b.x:.6f}, {b.y:.6f}, {b.z:.6f})\n")
    out.write(f"fidelity    {res.fidelity:.12f}\n")
    out.write(f"delta       {res.delta:.6e}\n")
    out.write(f"p(0), p(1)  {res.branch_probs[0]:.12f}, {res.branch_probs[1]:.12f}\n")
    if args.sample:
        out.write(f"sampled     outcome {report['sampled_outcome']}, bloch {report['sampled_bloch']}\n")
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    cfg = _config(args)
    mode = _mode(args)
    divisions = cfg.polar_divisions if mode is Mode.POLAR else cfg.equatorial_divisions
    records = run_sweep(
        mode, cfg.noise_params(), args.path, args.source,
        epsilon=cfg.epsilon, divisions=divisions,
        rf_duration_per_radian=cfg.rf_duration_per_radian, workers=args.workers,
    )
    meta = sweep_metadata(mode, cfg, cfg.noise, args.path, args.source, records)
    if args.format == "json":
        doc = {"metadata": meta, "records": [asdict(r) for r in records]}
        payloads = [(args.output, json.dumps(doc, indent=2) + "\n")]
    else:
        payloads = [(args.output, records_to_csv(records))]
        if args.output is not None:
            payloads.append((Path(str(args.output) + ".meta.json"), json.dumps(meta, indent=2) + "\n"))
    for path, text in payloads:
        if path is None:
            out.write(text)
            continue
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise CLIError(f"cannot write {path}: {exc.strerror}", EXIT_IO) from None
        out.write(f"wrote {path}\n")
    return EXIT_OK


def cmd_tomo(args, out) -> int:
    cfg = _config(args)
    target = _target(args)
    res = run_rsp(target, args.path, cfg.noise_params(), args.source, epsilon=cfg.epsilon)
    sigma = args.readout_sigma if args.readout_sigma is not None else cfg.readout_sigma
    rng = np.random.default_rng(args.seed if args.seed is not None else cfg.seed)
    rec = tomograph(res.bob_state, 1, readout_sigma=sigma, rng=rng)
    doc = {
        "expectations": rec.expectations,
        "reconstructed": [[[z.real, z.imag] for z in row] for row in rec.reconstructed.matrix],
        "readout_sigma": sigma,
        "note": "Pauli-complete simulated readout",
    }
    out.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_compile(args, out) -> int:
    cfg = _config(args)
    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot read {args.file}: {exc.strerror}", EXIT_IO) from None
    try:
        seq = parse_sequence(
            text, Path(args.file).stem, notation=args.notation,
            j_coupling=cfg.j_coupling, rf_duration_per_radian=cfg.rf_duration_per_radian,
        )
    except PulseSyntaxError as exc:
        raise CLIError(f"{args.file}: {exc}", EXIT_USAGE) from None
    comp = compile_sequence(seq)
    out.write(f"# {seq.name}: {len(seq)} pulses, duration {comp.duration:.9g} s\n")
    out.write(f"# paper order: {format_sequence(seq, 'paper-order')}\n")
    with np.printoptions(precision=6, suppress=True, linewidth=120):
        out.write(f"{comp.unitary}\n")
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rspsim", description="Remote state preparation simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, target=True):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--noise", action="store_true", help="enable T1/T2 relaxation")
        p.add_argument("--epsilon", type=float, help="pseudo-pure polarization in (0, 1]")
        p.add_argument("--path", choices=[m.value for m in MeasurementPath], default="conditional")
        p.add_argument("--source", choices=[s.value for s in Source], default="pulse")
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--polar", action="store_true")
        group.add_argument("--equatorial", action="store_true")
        if target:
            p.add_argument("--theta", type=angle_arg, help="polar angle, e.g. pi/3")
            p.add_argument("--phi", type=angle_arg, help="azimuthal angle, e.g. 3*pi/8")

    p = sub.add_parser("verify", help="check pulse/operator identities")
    p.add_argument("--seed", type=int, help="accepted for symmetry with other commands; checks are exact")
    p.add_argument("--corrupt-j-convention", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rsp", help="run a single remote preparation")
    common(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--sample", action="store_true", help="also draw one projective outcome")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_rsp)

    p = sub.add_parser("sweep", help="sweep a great circle")
    common(p, target=False)
    p.add_argument("-o", "--output", type=Path)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tomo", help="tomography of Bob's final state")
    common(p)
    p.add_argument("--readout-sigma", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("compile", help="compile a pulse file to its unitary")
    p.add_argument("file")
    p.add_argument("--config")
    p.add_argument("--notation", choices=["time-order", "paper-order"], default="time-order")
    p.set_defaults(func=cmd_compile)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except CLIError as exc:
        print(f"rspsim: error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"rspsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
