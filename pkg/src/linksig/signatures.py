"""Link-signature algebra: extraction, distances, history normalization.

A link signature concatenates the per-antenna-pair band-limited impulse
responses, row-major over the pair set {1..k1} x {1..k2}. The complex form
keeps the raw taps; the magnitude form takes their elementwise modulus. The
difference metric normalizes the minimum distance from the current signature
to a FIFO history by the average pairwise distance within that history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSnapshot
from .errors import DimensionMismatch, InsufficientHistory

KIND_COMPLEX = "ctls"
KIND_MAGNITUDE = "tls"

NORM_L2 = "l2"
NORM_PHI2 = "phi2"

SIGMA_PAPER = "paper"
SIGMA_MEAN_PAIRWISE = "mean-pairwise"

# Below this, a history's internal spread is treated as exactly degenerate.
DEGENERATE_SIGMA = 1e-12


@dataclass(frozen=True)
class LinkSignature:
    kind: str
    values: np.ndarray
    k1: int
    k2: int
    n_taps: int

    def __post_init__(self):
        if self.kind not in (KIND_COMPLEX, KIND_MAGNITUDE):
            raise ValueError(f"unknown signature kind {self.kind!r}")
        if self.values.shape != (self.k1 * self.k2 * self.n_taps,):
            raise DimensionMismatch(
                f"values length {self.values.shape} != k1*k2*M ="
                f" {self.k1 * self.k2 * self.n_taps}"
            )
        if self.kind == KIND_MAGNITUDE and np.any(self.values < 0):
            raise ValueError("magnitude signature has negative entries")

    @property
    def pair_order(self):
        """Row-major enumeration of the antenna-pair set."""
        return [(i, j) for i in range(1, self.k1 + 1) for j in range(1, self.k2 + 1)]

    def metadata(self):
        return (self.kind, self.k1, self.k2, self.n_taps)


def _check_match(a: LinkSignature, b: LinkSignature):
    if a.metadata() != b.metadata():
        raise DimensionMismatch(f"signature metadata differ: {a.metadata()} vs {b.metadata()}")


def ctls_from_snapshot(
    snapshot: ChannelSnapshot, k1_sub: int | None = None, k2_sub: int | None = None
) -> LinkSignature:
    """Complex signature over the first k1_sub x k2_sub antenna pairs."""
    k1 = snapshot.k1 if k1_sub is None else k1_sub
    k2 = snapshot.k2 if k2_sub is None else k2_sub
    if not (1 <= k1 <= snapshot.k1 and 1 <= k2 <= snapshot.k2):
        raise ValueError(
            f"requested {k1}x{k2} subset of a {snapshot.k1}x{snapshot.k2} snapshot"
        )
    values = np.ascontiguousarray(snapshot.taps[:k1, :k2]).reshape(-1)
    return LinkSignature(kind=KIND_COMPLEX, values=values, k1=k1, k2=k2,
                         n_taps=snapshot.n_taps)


def tls_from_ctls(sig: LinkSignature) -> LinkSignature:
    """Elementwise modulus; metadata preserved."""
    if sig.kind != KIND_COMPLEX:
        raise ValueError("input must be a complex signature")
    return LinkSignature(kind=KIND_MAGNITUDE, values=np.abs(sig.values),
                         k1=sig.k1, k2=sig.k2, n_taps=sig.n_taps)


def l2_dist(a: LinkSignature, b: LinkSignature) -> float:
    _check_match(a, b)
    return float(np.linalg.norm(a.values - b.values))


def phi2_dist(a: LinkSignature, b: LinkSignature) -> float:
    """Distance minimized over a global phase rotation of one operand.

    min_phi ||a - b e^{j phi}|| is attained at phi = -arg<a, b>; the norm is
    evaluated on the rotated difference vector rather than via the expanded
    quadratic form, which loses half the significant digits to cancellation
    for nearly phase-aligned operands. Operands are ordered canonically so
    the result is exactly symmetric.
    """
    if a.kind != KIND_COMPLEX or b.kind != KIND_COMPLEX:
        raise ValueError("phase-invariant distance requires complex signatures")
    _check_match(a, b)
    x, y = a.values, b.values
    if x.tobytes() > y.tobytes():
        x, y = y, x
    cross = np.vdot(x, y)
    phi = 0.0 if cross == 0 else -np.angle(cross)
    return float(np.linalg.norm(x - y * np.exp(1j * phi)))


def distance(a: LinkSignature, b: LinkSignature, norm: str) -> float:
    if norm == NORM_L2:
        return l2_dist(a, b)
    if norm == NORM_PHI2:
        return phi2_dist(a, b)
    raise ValueError(f"unknown norm {norm!r}")


def sigma(history, norm: str, mode: str = SIGMA_PAPER) -> float:
    """Average distance between history entries.

    ``paper`` mode scales the sum of unordered pairwise distances by
    1/((N-1)(N-2)); ``mean-pairwise`` uses the true pair count 2/(N(N-1)).
    """
    entries = list(history)
    n = len(entries)
    if n < 3:
        raise InsufficientHistory(f"history has {n} entries; need >= 3")
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += distance(entries[i], entries[j], norm)
    if mode == SIGMA_PAPER:
        return total / ((n - 1) * (n - 2))
    if mode == SIGMA_MEAN_PAIRWISE:
        return 2.0 * total / (n * (n - 1))
    raise ValueError(f"unknown sigma mode {mode!r}")


def delta(
    current: LinkSignature, history, norm: str, sigma_mode: str = SIGMA_PAPER
) -> float:
    """Normalized minimum distance from the current signature to the history.

    With a degenerate (all-identical) history, an identical repeat scores 0
    and anything else scores +inf.
    """
    entries = list(history)
    s = sigma(entries, norm, sigma_mode)
    dmin = min(distance(e, current, norm) for e in entries)
    if s < DEGENERATE_SIGMA:
        return 0.0 if dmin < DEGENERATE_SIGMA else math.inf
    return dmin / s
