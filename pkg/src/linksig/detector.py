"""Real-time location-distinction state machine.

Each incoming signature is scored against a FIFO history of older
signatures, then pushed through a FIFO delay buffer before it may enter the
history itself. The delay keeps the history spatially separated from the
current measurement when measurements are dense.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import DimensionMismatch
from .signatures import (
    LinkSignature,
    SIGMA_MEAN_PAIRWISE,
    SIGMA_PAPER,
    NORM_L2,
    NORM_PHI2,
    delta,
)

VERDICT_ALARM = "alarm"
VERDICT_NO_ALARM = "no_alarm"
VERDICT_WARMING = "warming"


@dataclass(frozen=True)
class DetectorConfig:
    history_size: int
    delay: int
    threshold: float
    norm: str = NORM_L2
    sigma_mode: str = SIGMA_PAPER

    def __post_init__(self):
        if self.history_size < 3:
            raise ValueError("history_size must be >= 3 (sigma needs 3 entries)")
        if self.delay < 1:
            raise ValueError("delay must be >= 1")
        if self.threshold <= 0:
            raise ValueError("threshold must be > 0")
        if self.norm not in (NORM_L2, NORM_PHI2):
            raise ValueError(f"unknown norm {self.norm!r}")
        if self.sigma_mode not in (SIGMA_PAPER, SIGMA_MEAN_PAIRWISE):
            raise ValueError(f"unknown sigma mode {self.sigma_mode!r}")


@dataclass(frozen=True)
class Decision:
    verdict: str
    delta_value: float | None
    meas_index: int


class Detector:
    """Single-owner mutable detector state; use one per link."""

    def __init__(self, config: DetectorConfig):
        self.config = config
        self.history: deque = deque()
        self.delay_buffer: deque = deque()
        self.steps_seen = 0

    def step(self, sig: LinkSignature, meas_index: int | None = None) -> Decision:
        """Score the signature against the history, then update the buffers.

        Warm-up (history < 3 entries) yields a ``warming`` verdict with no
        delta; buffers are updated regardless. Alarm requires delta strictly
        above the threshold; a tie is scored as no alarm.
        """
        if meas_index is None:
            meas_index = self.steps_seen
        reference = self.history[0] if self.history else (
            self.delay_buffer[0] if self.delay_buffer else None
        )
        if reference is not None and reference.metadata() != sig.metadata():
            raise DimensionMismatch(
                f"signature metadata {sig.metadata()} does not match "
                f"stream metadata {reference.metadata()}"
            )

        if len(self.history) >= 3:
            d = delta(sig, self.history, self.config.norm, self.config.sigma_mode)
            verdict = VERDICT_ALARM if d > self.config.threshold else VERDICT_NO_ALARM
            decision = Decision(verdict=verdict, delta_value=d, meas_index=meas_index)
        else:
            decision = Decision(verdict=VERDICT_WARMING, delta_value=None,
                                meas_index=meas_index)

        self.delay_buffer.append(sig)
        if len(self.delay_buffer) > self.config.delay:
            self.history.append(self.delay_buffer.popleft())
            if len(self.history) > self.config.history_size:
                self.history.popleft()
        self.steps_seen += 1
        return decision


def run_trace(config: DetectorConfig, sigs) -> list:
    """Fold a signature trace through a fresh detector."""
    sigs = list(sigs)
    if not sigs:
        raise ValueError("empty signature trace")
    det = Detector(config)
    return [det.step(sig, meas_index=n) for n, sig in enumerate(sigs)]
