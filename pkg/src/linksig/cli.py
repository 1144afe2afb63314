"""Command-line pipeline: simulate/sound traces, detect, ROC, sweeps, fits.

Exit codes: 0 success, 1 usage or configuration error, 2 data error (bad or
missing input files). All randomness flows from --seed, so identical
invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import channel as chanmod
from .channel import ArrayGeometry, ChannelSnapshot, add_noise, make_random_channel
from .detector import DetectorConfig, VERDICT_WARMING, run_trace
from .errors import TraceFormatError
from .evaluation import (
    H0,
    H1,
    DeltaSample,
    Scenario,
    fit_power_law,
    pm_at_pfa,  # noqa: F401  (re-exported for scripting against the CLI module)
    roc,
    sweep,
)
from .signatures import (
    KIND_COMPLEX,
    KIND_MAGNITUDE,
    NORM_L2,
    NORM_PHI2,
    SIGMA_MEAN_PAIRWISE,
    SIGMA_PAPER,
    ctls_from_snapshot,
    tls_from_ctls,
)
from .sounding import sound_snapshot
from .traceio import KIND_SNAPSHOT, TraceHeader, read_trace, write_trace


def _g17(x: float) -> str:
    return "%.17g" % float(x)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise _UsageError(f"{self.prog}: error: {message}")


def _add_scenario_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paths", type=int, default=32)
    p.add_argument("--k1", type=int, default=1)
    p.add_argument("--k2", type=int, default=1)
    p.add_argument("--carrier-hz", type=float, default=2.4e9)
    p.add_argument("--delay-spread-ns", type=float, default=100.0)
    p.add_argument("--bandwidth-mhz", type=float, default=40.0)
    p.add_argument("--taps", type=int, default=40)
    p.add_argument("--snr-db", type=float, default=np.inf)


def _add_motion_flags(p):
    p.add_argument("--speed-mps", type=float, default=0.0)
    p.add_argument("--interval-s", type=float, default=3.2e-3)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--jump-at", type=int, default=None,
                   help="measurement index at which the position jumps")
    p.add_argument("--jump-distance-m", type=float, default=0.0)
    p.add_argument("--jump-angle-deg", type=float, default=0.0)


def _positions(args) -> np.ndarray:
    n = np.arange(args.count)[:, None]
    pos = n * args.interval_s * np.array([[args.speed_mps, 0.0]])
    if args.jump_at is not None:
        if not 0 <= args.jump_at < args.count:
            raise _UsageError(
                f"--jump-at {args.jump_at} outside the trace of {args.count}"
            )
        ang = np.deg2rad(args.jump_angle_deg)
        pos[args.jump_at:] += args.jump_distance_m * np.array(
            [np.cos(ang), np.sin(ang)]
        )
    return pos


def _make_channel(args):
    tx = ArrayGeometry("uniform-circular", args.k1, 0.5)
    rx = ArrayGeometry("uniform-circular", args.k2, 0.5)
    return make_random_channel(
        seed=[args.seed, 0], path_count=args.paths,
        delay_spread_s=args.delay_spread_ns * 1e-9,
        carrier_hz=args.carrier_hz, tx_array=tx, rx_array=rx,
    )


def _write_snapshot_trace(path, args, snapshots):
    header = TraceHeader(
        kind=KIND_SNAPSHOT, k1=args.k1, k2=args.k2, n_taps=args.taps,
        sample_period_s=snapshots[0].sample_period_s,
        carrier_hz=args.carrier_hz, record_count=len(snapshots),
    )
    times = [n * args.interval_s for n in range(len(snapshots))]
    write_trace(path, header, snapshots, times)


def _cmd_simulate(args) -> int:
    channel = _make_channel(args)
    bandwidth_hz = args.bandwidth_mhz * 1e6
    positions = _positions(args)
    freqs = chanmod.snapshot_grid_hz(bandwidth_hz, args.taps)
    weights = chanmod.path_weight_matrix(channel, freqs)
    phases = chanmod.displacement_phases(channel, positions)
    taps = np.fft.ifft(
        (phases @ weights).reshape(args.count, args.k1, args.k2, args.taps),
        axis=-1,
    )
    snapshots = []
    for n in range(args.count):
        snap = ChannelSnapshot(
            taps=taps[n], sample_period_s=1.0 / bandwidth_hz, meas_index=n,
            position_m=(float(positions[n, 0]), float(positions[n, 1])),
        )
        snapshots.append(add_noise(snap, args.snr_db, seed=[args.seed, 1, n]))
    _write_snapshot_trace(args.out, args, snapshots)
    return 0


def _cmd_sound(args) -> int:
    channel = _make_channel(args)
    positions = _positions(args)
    if args.method == "ofdm":
        args.taps = 64  # fixed by the 64-subcarrier training format
    snapshots = [
        sound_snapshot(
            channel, positions[n], args.method,
            bandwidth_hz=args.bandwidth_mhz * 1e6, n_taps=args.taps,
            snr_db=args.snr_db, sync_jitter_samples=args.jitter_samples,
            seed=[args.seed, 1, n], meas_index=n,
        )
        for n in range(args.count)
    ]
    _write_snapshot_trace(args.out, args, snapshots)
    return 0


def _trace_signatures(trace, kind):
    sigs = []
    for snap in trace.snapshots:
        sig = ctls_from_snapshot(snap)
        if kind == KIND_MAGNITUDE:
            sig = tls_from_ctls(sig)
        sigs.append(sig)
    return sigs


def _cmd_detect(args) -> int:
    config = DetectorConfig(history_size=args.history, delay=args.delay,
                            threshold=args.threshold, norm=args.norm,
                            sigma_mode=args.sigma_mode)
    trace = read_trace(args.infile)
    sigs = _trace_signatures(trace, args.kind)
    decisions = run_trace(config, sigs)
    with open(args.out, "w") as f:
        f.write("meas_index,verdict,delta\n")
        for d in decisions:
            delta = "" if d.delta_value is None else _g17(d.delta_value)
            f.write(f"{d.meas_index},{d.verdict},{delta}\n")
    return 0


def _move_index(trace) -> int:
    first = trace.snapshots[0].position_m
    for snap in trace.snapshots:
        if snap.position_m != first:
            return snap.meas_index
    raise TraceFormatError("H1 trace has no position change to score")


def _cmd_roc(args) -> int:
    config = DetectorConfig(history_size=args.history, delay=args.delay,
                            threshold=args.threshold, norm=args.norm,
                            sigma_mode=args.sigma_mode)
    samples = []
    for path in args.h0:
        trace = read_trace(path)
        decisions = run_trace(config, _trace_signatures(trace, args.kind))
        samples += [DeltaSample(H0, d.delta_value) for d in decisions
                    if d.verdict != VERDICT_WARMING]
    for path in args.h1:
        trace = read_trace(path)
        decisions = run_trace(config, _trace_signatures(trace, args.kind))
        if args.h1_score == "first-move":
            mi = _move_index(trace)
            if decisions[mi].verdict == VERDICT_WARMING:
                raise TraceFormatError(
                    f"{path}: detector still warming at the move (index {mi})"
                )
            decisions = [decisions[mi]]
        samples += [DeltaSample(H1, d.delta_value) for d in decisions
                    if d.verdict != VERDICT_WARMING]
    points = roc(samples)
    with open(args.out, "w") as f:
        f.write("gamma,pfa,pd,pm\n")
        for p in points:
            f.write(f"{_g17(p.gamma)},{_g17(p.pfa)},{_g17(p.pd)},{_g17(p.pm)}\n")
    return 0


def _cmd_sweep(args) -> int:
    base = Scenario(
        carrier_hz=args.carrier_hz, path_count=args.paths,
        delay_spread_s=args.delay_spread_ns * 1e-9, k1=args.k1, k2=args.k2,
        bandwidth_hz=args.bandwidth_mhz * 1e6, n_taps=args.taps,
        snr_db=args.snr_db, sig_kind=args.sig_kind, norm=args.norm,
        history_size=args.history, delay=args.delay, n_h0=args.trials,
        n_h1=args.trials, target_pfa=args.target_pfa,
        move_step_m=args.move_step_mm * 1e-3,
    )
    if args.kind == "signature":
        grid = [v.strip() for v in args.grid.split(",")]
    else:
        grid = [float(v) if args.kind == "bandwidth" else int(v)
                for v in args.grid.split(",")]
    rows = sweep(args.kind, grid, base, args.seed)
    with open(args.out, "w") as f:
        f.write("value,pm,at_floor,n_h1_samples\n")
        for r in rows:
            f.write(f"{r.value},{_g17(r.pm)},{int(r.at_floor)},{r.n_h1_samples}\n")
    return 0


def _cmd_fit(args) -> int:
    import csv

    with open(args.infile) as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not {"value", "pm"} <= set(reader.fieldnames):
            raise TraceFormatError(f"{args.infile}: need columns value,pm")
        points = []
        for i, row in enumerate(reader, start=2):
            try:
                points.append((float(row["value"]), float(row["pm"])))
            except (TypeError, ValueError) as e:
                raise TraceFormatError(f"{args.infile}: bad row: {e}", i) from e
    fit = fit_power_law(points)
    with open(args.out, "w") as f:
        f.write("b,m,residual\n")
        f.write(f"{_g17(fit.b)},{_g17(fit.m)},{_g17(fit.residual)}\n")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="linksig", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("simulate", help="closed-form channel walk to a trace")
    _add_scenario_flags(p)
    _add_motion_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("sound", help="waveform-level sounding to a trace")
    _add_scenario_flags(p)
    _add_motion_flags(p)
    p.add_argument("--method", choices=("multitone", "ofdm"), required=True)
    p.add_argument("--jitter-samples", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_sound)

    def add_detector_flags(q):
        q.add_argument("--history", type=int, default=5)
        q.add_argument("--delay", type=int, default=1)
        q.add_argument("--threshold", type=float, default=1.0)
        q.add_argument("--norm", choices=(NORM_L2, NORM_PHI2), default=NORM_L2)
        q.add_argument("--kind", choices=(KIND_COMPLEX, KIND_MAGNITUDE),
                       default=KIND_COMPLEX)
        q.add_argument("--sigma-mode",
                       choices=(SIGMA_PAPER, SIGMA_MEAN_PAIRWISE),
                       default=SIGMA_PAPER)

    p = sub.add_parser("detect", help="run the detector over a trace")
    p.add_argument("--in", dest="infile", required=True)
    add_detector_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_detect)

    p = sub.add_parser("roc", help="empirical ROC from labeled traces")
    p.add_argument("--h0", nargs="+", required=True)
    p.add_argument("--h1", nargs="+", required=True)
    add_detector_flags(p)
    p.add_argument("--h1-score", choices=("first-move", "all"),
                   default="first-move")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_roc)

    p = sub.add_parser("sweep", help="miss rate over a parameter grid")
    _add_scenario_flags(p)
    p.add_argument("--kind", required=True,
                   choices=("history", "delay", "antennas", "bandwidth",
                            "signature"))
    p.add_argument("--grid", required=True, help="comma-separated values")
    p.add_argument("--target-pfa", type=float, default=1e-2)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--history", type=int, default=5)
    p.add_argument("--delay", type=int, default=1)
    p.add_argument("--norm", choices=(NORM_L2, NORM_PHI2), default=NORM_L2)
    p.add_argument("--sig-kind", choices=(KIND_COMPLEX, KIND_MAGNITUDE),
                   default=KIND_COMPLEX)
    p.add_argument("--move-step-mm", type=float, default=1.016)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("fit", help="inverse-power-law fit of a sweep CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_fit)

    return parser


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except _UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except (TraceFormatError, OSError) as e:
        print(f"linksig: data error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"linksig: error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    entry()
