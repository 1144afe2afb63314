"""Line-oriented text format for measurement traces.

Line 1 is a JSON header; every following line is one measurement record:

    {"n": 3, "t": 0.0096, "pos": [x, y], "h": [[[ [re, im], ... ]]]}

``h`` is nested k1 x k2 x M with one [re, im] pair per tap. All reals are
written with 17 significant digits, so write-then-read reproduces values
bit-exactly. The header's record_count makes truncated files detectable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSnapshot
from .errors import TraceFormatError

FORMAT_VERSION = 1
KIND_SNAPSHOT = "snapshot"
KIND_SIGNATURE = "signature"

_HEADER_FIELDS = ("format_version", "kind", "k1", "k2", "M",
                  "sample_period_s", "carrier_hz", "record_count")


@dataclass(frozen=True)
class TraceHeader:
    kind: str
    k1: int
    k2: int
    n_taps: int
    sample_period_s: float
    carrier_hz: float
    record_count: int
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.kind not in (KIND_SNAPSHOT, KIND_SIGNATURE):
            raise ValueError(f"unknown trace kind {self.kind!r}")
        if min(self.k1, self.k2, self.n_taps) < 1 or self.record_count < 0:
            raise ValueError("dimensions must be positive, record_count >= 0")


@dataclass(frozen=True)
class TraceFile:
    header: TraceHeader
    snapshots: list  # ChannelSnapshot per record, meas_index from "n"
    times_s: list


def _g17(x: float) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # normalize -0.0, which would parse back as integer 0
    return "%.17g" % x


def _record_line(n: int, t: float, pos, taps) -> str:
    k1, k2, _ = taps.shape

    def taps_of(vec):
        return "[" + ",".join(f"[{_g17(c.real)},{_g17(c.imag)}]" for c in vec) + "]"

    grid = ",".join(
        "[" + ",".join(taps_of(taps[i, j]) for j in range(k2)) + "]"
        for i in range(k1)
    )
    return (
        f'{{"n":{int(n)},"t":{_g17(t)},"pos":[{_g17(pos[0])},{_g17(pos[1])}],'
        f'"h":[{grid}]}}'
    )


def write_trace(path, header: TraceHeader, snapshots, times_s=None) -> None:
    """Serialize snapshots under the given header; record times default to
    each snapshot's measurement index in seconds-as-count."""
    snapshots = list(snapshots)
    if len(snapshots) != header.record_count:
        raise ValueError(
            f"{len(snapshots)} records but header says {header.record_count}"
        )
    if times_s is None:
        times_s = [float(s.meas_index) for s in snapshots]
    if len(times_s) != len(snapshots):
        raise ValueError("need one time per record")
    with open(path, "w") as f:
        f.write(
            '{"format_version":%d,"kind":"%s","k1":%d,"k2":%d,"M":%d,'
            '"sample_period_s":%s,"carrier_hz":%s,"record_count":%d}\n'
            % (header.format_version, header.kind, header.k1, header.k2,
               header.n_taps, _g17(header.sample_period_s),
               _g17(header.carrier_hz), header.record_count)
        )
        for snap, t in zip(snapshots, times_s):
            if snap.taps.shape != (header.k1, header.k2, header.n_taps):
                raise ValueError(
                    f"record {snap.meas_index}: taps shape {snap.taps.shape} "
                    f"does not match header {header.k1}x{header.k2}x{header.n_taps}"
                )
            f.write(_record_line(snap.meas_index, t, snap.position_m,
                                 snap.taps) + "\n")


def _parse_header(line: str) -> TraceHeader:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise TraceFormatError(f"header is not valid JSON: {e}", 1) from e
    if not isinstance(obj, dict):
        raise TraceFormatError("header must be an object", 1)
    missing = [k for k in _HEADER_FIELDS if k not in obj]
    if missing:
        raise TraceFormatError(f"header missing fields {missing}", 1)
    if obj["format_version"] != FORMAT_VERSION:
        raise TraceFormatError(
            f"unsupported format_version {obj['format_version']}", 1
        )
    try:
        return TraceHeader(
            kind=obj["kind"], k1=int(obj["k1"]), k2=int(obj["k2"]),
            n_taps=int(obj["M"]), sample_period_s=float(obj["sample_period_s"]),
            carrier_hz=float(obj["carrier_hz"]),
            record_count=int(obj["record_count"]),
        )
    except (TypeError, ValueError) as e:
        raise TraceFormatError(f"bad header field: {e}", 1) from e


def _parse_record(line: str, lineno: int, header: TraceHeader):
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise TraceFormatError(f"record is not valid JSON: {e}", lineno) from e
    for key in ("n", "t", "pos", "h"):
        if key not in obj:
            raise TraceFormatError(f"record missing field {key!r}", lineno)
    pos = obj["pos"]
    if not (isinstance(pos, list) and len(pos) == 2):
        raise TraceFormatError("pos must be [x, y]", lineno)
    try:
        h = np.asarray(obj["h"], dtype=float)
    except ValueError as e:
        raise TraceFormatError(f"ragged or non-numeric h: {e}", lineno) from e
    want = (header.k1, header.k2, header.n_taps, 2)
    if h.shape != want:
        raise TraceFormatError(
            f"dimension mismatch: h has shape {h.shape}, header implies {want}",
            lineno,
        )
    taps = h[..., 0] + 1j * h[..., 1]
    snap = ChannelSnapshot(
        taps=taps, sample_period_s=header.sample_period_s,
        meas_index=int(obj["n"]), position_m=(float(pos[0]), float(pos[1])),
    )
    return snap, float(obj["t"])


def read_trace(path) -> TraceFile:
    """Parse and validate a trace file; errors carry 1-based line numbers."""
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise TraceFormatError("empty file", 1)
    header = _parse_header(lines[0])
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != header.record_count:
        raise TraceFormatError(
            f"header says {header.record_count} records, file has {len(body)}",
            len(lines),
        )
    snapshots, times = [], []
    for i, ln in enumerate(body):
        snap, t = _parse_record(ln, i + 2, header)
        snapshots.append(snap)
        times.append(t)
    return TraceFile(header=header, snapshots=snapshots, times_s=times)
