"""Hypothesis-test evaluation: empirical ROC curves and parameter sweeps.

Monte-Carlo scenarios generate difference-metric samples under H0 (receiver
did not move) and H1 (receiver moved), either as a jump after a stationary
segment or as continuous dense motion. Empirical complementary CDFs give
ROC operating points; miss rate at a target false-alarm rate summarizes each
configuration, and an inverse power law is fitted to miss rate versus the
antenna-pair count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import channel as chanmod
from .channel import ArrayGeometry, ChannelSnapshot, make_random_channel
from .detector import VERDICT_WARMING, DetectorConfig, run_trace
from .signatures import (
    KIND_COMPLEX,
    KIND_MAGNITUDE,
    NORM_L2,
    SIGMA_PAPER,
    ctls_from_snapshot,
    distance,
    tls_from_ctls,
)

H0 = 0
H1 = 1

MODE_JUMP = "jump"  # long-stationary transmitter, then one relocation
MODE_MOVING = "moving"  # continuously moving transmitter, dense sampling

SWEEP_KINDS = ("history", "delay", "antennas", "bandwidth", "signature")


@dataclass(frozen=True)
class DeltaSample:
    hypothesis: int  # H0 or H1
    delta: float
    config_tag: str = ""

    def __post_init__(self):
        if self.hypothesis not in (H0, H1):
            raise ValueError("hypothesis must be H0 (0) or H1 (1)")
        if not (self.delta >= 0.0 or math.isinf(self.delta)):
            raise ValueError("delta must be >= 0 or +inf")


@dataclass(frozen=True)
class RocPoint:
    gamma: float
    pfa: float
    pd: float

    @property
    def pm(self) -> float:
        return 1.0 - self.pd


@dataclass(frozen=True)
class PowerLawFit:
    """pm = b / x**m, least squares in the log10 domain."""

    b: float
    m: float
    residual: float

    def predict(self, x: float) -> float:
        return self.b / x**self.m


@dataclass(frozen=True)
class Scenario:
    """Synthetic end-to-end configuration for one evaluation run."""

    carrier_hz: float = 2.4e9
    path_count: int = 32
    delay_spread_s: float = 100e-9
    k1: int = 1
    k2: int = 1
    array_kind: str = "uniform-circular"
    tx_spacing_wl: float = 0.5
    rx_spacing_wl: float = 0.5
    bandwidth_hz: float = 40e6
    n_taps: int = 40
    snr_db: float = 25.0
    jitter_std_s: float = 0.0
    sig_kind: str = KIND_COMPLEX
    norm: str = NORM_L2
    sigma_mode: str = SIGMA_PAPER
    history_size: int = 5
    delay: int = 1
    n_h0: int = 500
    n_h1: int = 500
    jump_min_wl: float = 0.005
    jump_max_wl: float = 0.05
    move_step_m: float = 1.016e-3
    extra_steps: int = 2
    target_pfa: float = 2e-3

    def __post_init__(self):
        if self.n_h0 < 1 or self.n_h1 < 1:
            raise ValueError("need at least one trial per hypothesis")
        if not (0.0 < self.target_pfa < 1.0):
            raise ValueError("target_pfa must be in (0, 1)")
        if self.jump_min_wl > self.jump_max_wl or self.jump_min_wl < 0:
            raise ValueError("need 0 <= jump_min_wl <= jump_max_wl")

    @property
    def wavelength_m(self) -> float:
        return chanmod.SPEED_OF_LIGHT / self.carrier_hz

    def detector_config(self) -> DetectorConfig:
        # threshold is irrelevant for delta collection; ROC sweeps it
        return DetectorConfig(history_size=self.history_size, delay=self.delay,
                              threshold=1.0, norm=self.norm,
                              sigma_mode=self.sigma_mode)

    def arrays(self):
        tx = ArrayGeometry(self.array_kind, self.k1, self.tx_spacing_wl)
        rx = ArrayGeometry(self.array_kind, self.k2, self.rx_spacing_wl)
        return tx, rx


def standard_scenario(**overrides) -> Scenario:
    """Default 500+500-trial jump scenario at 25 dB SNR (the stand-in for
    the fixed measurement count per location in the motivating experiments)."""
    return Scenario(**overrides)


# ---------------------------------------------------------------------------
# delta collection

def _trace_deltas(sigs, config: DetectorConfig, move_index: int | None = None):
    """Post-warm-up delta values of one trace; only the first post-move one
    when a move index is given."""
    decisions = run_trace(config, sigs)
    if move_index is None:
        out = [d.delta_value for d in decisions if d.verdict != VERDICT_WARMING]
        if not out:
            raise ValueError("trace too short: never exits warm-up")
        return out
    if move_index >= len(decisions):
        raise ValueError("move_index beyond end of trace")
    d = decisions[move_index]
    if d.verdict == VERDICT_WARMING:
        raise ValueError("trace too short: still warming at the move")
    return [d.delta_value]


def collect_deltas(
    h0_traces,
    h1_traces,
    config: DetectorConfig,
    h1_move_indices=None,
    config_tag: str = "",
):
    """Label detector outputs by hypothesis.

    Each trace is a sequence of link signatures. H0 traces contribute every
    post-warm-up delta. H1 traces contribute every post-warm-up delta when
    ``h1_move_indices`` is None (continuous motion), or exactly the first
    post-move delta per trace when move indices are given (jump traces).
    """
    samples = []
    for sigs in h0_traces:
        for d in _trace_deltas(sigs, config):
            samples.append(DeltaSample(H0, d, config_tag))
    if h1_move_indices is None:
        h1_move_indices = [None] * len(h1_traces)
    if len(h1_move_indices) != len(h1_traces):
        raise ValueError("need one move index per H1 trace")
    for sigs, mi in zip(h1_traces, h1_move_indices):
        for d in _trace_deltas(sigs, config, mi):
            samples.append(DeltaSample(H1, d, config_tag))
    return samples


# ---------------------------------------------------------------------------
# ROC and summaries

def roc(samples) -> list:
    """Empirical ROC: one point per distinct delta value plus both infinities.

    False-alarm and detection rates count samples strictly above gamma,
    matching the detector's alarm rule.
    """
    d0 = np.sort([s.delta for s in samples if s.hypothesis == H0])
    d1 = np.sort([s.delta for s in samples if s.hypothesis == H1])
    if len(d0) == 0 or len(d1) == 0:
        raise ValueError("need at least one sample under each hypothesis")
    gammas = np.concatenate([[-np.inf], np.unique(np.concatenate([d0, d1])),
                             [np.inf]])
    pfa = 1.0 - np.searchsorted(d0, gammas, side="right") / len(d0)
    pd = 1.0 - np.searchsorted(d1, gammas, side="right") / len(d1)
    # searchsorted puts +inf samples above gamma=+inf; force the endpoint
    pfa[-1] = 0.0
    pd[-1] = 0.0
    return [RocPoint(float(g), float(a), float(b))
            for g, a, b in zip(gammas, pfa, pd)]


def pm_at_pfa(roc_points, target_pfa: float) -> float:
    """Miss rate at the best achievable operating point with pfa <= target.

    Conservative step rule: no interpolation between operating points.
    """
    if not roc_points:
        raise ValueError("empty ROC")
    eligible = [p.pm for p in roc_points if p.pfa <= target_pfa]
    if not eligible:
        raise ValueError("no operating point at or below the target pfa")
    return min(eligible)


def pm_floor(n_h1_samples: int) -> float:
    """Smallest resolvable nonzero miss rate with this many H1 samples."""
    return 1.0 / n_h1_samples


def fit_power_law(points) -> PowerLawFit:
    """Least squares for pm = b / x**m on log10(pm) vs log10(x)."""
    pts = [(float(x), float(pm)) for x, pm in points]
    if len(pts) < 2:
        raise ValueError("need at least 2 points to fit")
    if any(x <= 0 or pm <= 0 for x, pm in pts):
        raise ValueError("points must have x > 0 and pm > 0 (clamp at the "
                         "measurable floor first)")
    lx = np.log10([x for x, _ in pts])
    ly = np.log10([pm for _, pm in pts])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return PowerLawFit(b=float(10.0**intercept), m=float(-slope), residual=resid)


# ---------------------------------------------------------------------------
# synthetic trace generation

def _trial_taps(scenario: Scenario, seed: int, hypothesis: int, trial: int,
                mode: str, n_steps: int, move_index: int, n_bins: int):
    """Noisy tap trajectories for one trial, shape (n_steps, k1, k2, n_bins).

    Randomness derives from (seed, hypothesis, trial) only, so paired sweeps
    see identical channels. Timing jitter is a per-step frequency-domain
    phase ramp applied before any bin subsetting, i.e. in absolute time.
    """
    tx, rx = scenario.arrays()
    channel = make_random_channel(
        seed=[seed, hypothesis, trial], path_count=scenario.path_count,
        delay_spread_s=scenario.delay_spread_s, carrier_hz=scenario.carrier_hz,
        tx_array=tx, rx_array=rx,
    )
    aux = np.random.default_rng([seed, hypothesis, trial, 1])
    positions = np.zeros((n_steps, 2))
    if hypothesis == H1:
        theta = aux.uniform(0.0, 2.0 * np.pi)
        u = np.array([np.cos(theta), np.sin(theta)])
        if mode == MODE_JUMP:
            dist = aux.uniform(scenario.jump_min_wl, scenario.jump_max_wl)
            positions[move_index:] = dist * scenario.wavelength_m * u
        else:
            steps = np.arange(n_steps)[:, None] * scenario.move_step_m
            positions = steps * u[None, :]
    freqs = chanmod.snapshot_grid_hz(scenario.bandwidth_hz, scenario.n_taps)
    weights = chanmod.path_weight_matrix(channel, freqs)
    phases = chanmod.displacement_phases(channel, positions)
    h = (phases @ weights).reshape(n_steps, scenario.k1, scenario.k2,
                                   scenario.n_taps)
    if scenario.jitter_std_s > 0:
        t0 = aux.normal(0.0, scenario.jitter_std_s, n_steps)
        h = h * np.exp(-2j * np.pi * freqs[None, :] * t0[:, None])[:, None, None, :]
    taps = np.fft.ifft(h[..., :n_bins], axis=-1)
    if not np.isposinf(scenario.snr_db):
        power = np.mean(np.abs(taps) ** 2, axis=-1, keepdims=True)
        var = power / 10.0 ** (scenario.snr_db / 10.0)
        noise = aux.standard_normal(taps.shape) + 1j * aux.standard_normal(taps.shape)
        taps = taps + noise * np.sqrt(var / 2.0)
    return taps, positions


def _taps_to_sigs(taps, positions, scenario, sig_kind, k1_sub, k2_sub):
    sigs = []
    for n in range(taps.shape[0]):
        snap = ChannelSnapshot(
            taps=taps[n], sample_period_s=scenario.n_taps / scenario.bandwidth_hz
            / taps.shape[-1], meas_index=n,
            position_m=(float(positions[n, 0]), float(positions[n, 1])),
        )
        sig = ctls_from_snapshot(snap, k1_sub, k2_sub)
        if sig_kind == KIND_MAGNITUDE:
            sig = tls_from_ctls(sig)
        sigs.append(sig)
    return sigs


def _deltas_for_variants(scenario: Scenario, seed: int, mode: str, variants):
    """Delta samples per variant, sharing trial channels and noise.

    Each variant is (tag, sig_kind, k1_sub, k2_sub); all are scored on the
    same generated snapshot streams, mirroring post-hoc subsetting of one
    measurement campaign.
    """
    n, d = scenario.history_size, scenario.delay
    move_index = n + d  # first step scored against a full history
    plans = [(H0, scenario.n_h0, move_index + 1 + scenario.extra_steps, None)]
    if mode == MODE_JUMP:
        plans.append((H1, scenario.n_h1, move_index + 1, move_index))
    else:
        plans.append((H1, scenario.n_h1, move_index + 1 + scenario.extra_steps,
                      None))
    config = scenario.detector_config()
    out = {tag: [] for tag, _, _, _ in variants}
    for hyp, count, n_steps, mi in plans:
        for trial in range(count):
            taps, positions = _trial_taps(scenario, seed, hyp, trial, mode,
                                          n_steps, move_index, scenario.n_taps)
            for tag, sig_kind, k1_sub, k2_sub in variants:
                sigs = _taps_to_sigs(taps, positions, scenario, sig_kind,
                                     k1_sub, k2_sub)
                for dv in _trace_deltas(sigs, config, mi):
                    out[tag].append(DeltaSample(hyp, dv, tag))
    return out


def scenario_deltas(scenario: Scenario, seed: int, mode: str = MODE_JUMP):
    """End-to-end delta samples for one scenario (single variant)."""
    tag = scenario.sig_kind
    variants = [(tag, scenario.sig_kind, scenario.k1, scenario.k2)]
    return _deltas_for_variants(scenario, seed, mode, variants)[tag]


def consecutive_distance_inflation(
    scenario: Scenario, seed: int, trials: int = 200, steps: int = 8
) -> float:
    """Factor by which timing jitter inflates the mean distance between
    consecutive stationary signatures.

    Uses the raw signature distance rather than the normalized difference
    metric: the history-spread normalizer absorbs jitter common to history
    and current signature, masking exactly the sensitivity this quantifies.
    """
    if scenario.jitter_std_s <= 0:
        raise ValueError("scenario must set jitter_std_s > 0")

    def mean_consecutive(sc):
        total = count = 0.0
        for t in range(trials):
            taps, pos = _trial_taps(sc, seed, H0, t, MODE_JUMP, steps, steps,
                                    sc.n_taps)
            sigs = _taps_to_sigs(taps, pos, sc, sc.sig_kind, sc.k1, sc.k2)
            for a, b in zip(sigs, sigs[1:]):
                total += distance(a, b, sc.norm)
                count += 1
        return total / count

    return mean_consecutive(scenario) / mean_consecutive(
        replace(scenario, jitter_std_s=0.0)
    )


# ---------------------------------------------------------------------------
# spatial-decorrelation statistic

def avg_distance_vs_separation(
    separations_m, norm: str, trials: int, seed: int,
    scenario: Scenario | None = None,
):
    """Monte-Carlo mean signature distance between displacement 0 and d.

    Averages over random channels from the scenario's channel family;
    noiseless, so the d = 0 entry is exactly 0.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if scenario is None:
        scenario = Scenario(k1=8, k2=8, path_count=64, snr_db=np.inf)
    seps = np.asarray(list(separations_m), dtype=float)
    displacements = np.zeros((len(seps) + 1, 2))
    displacements[1:, 0] = seps
    tx, rx = scenario.arrays()
    freqs = chanmod.snapshot_grid_hz(scenario.bandwidth_hz, scenario.n_taps)
    totals = np.zeros(len(seps))
    for t in range(trials):
        channel = make_random_channel(
            seed=[seed, t], path_count=scenario.path_count,
            delay_spread_s=scenario.delay_spread_s,
            carrier_hz=scenario.carrier_hz, tx_array=tx, rx_array=rx,
        )
        weights = chanmod.path_weight_matrix(channel, freqs)
        phases = chanmod.displacement_phases(channel, displacements)
        taps = np.fft.ifft(
            (phases @ weights).reshape(len(displacements), scenario.k1,
                                       scenario.k2, scenario.n_taps), axis=-1)
        sigs = _taps_to_sigs(taps, displacements, scenario, scenario.sig_kind,
                             scenario.k1, scenario.k2)
        totals += [distance(sigs[0], s, norm) for s in sigs[1:]]
    return list(zip(seps.tolist(), (totals / trials).tolist()))


# ---------------------------------------------------------------------------
# parameter sweeps

@dataclass(frozen=True)
class SweepRow:
    value: object
    pm: float
    at_floor: bool
    n_h1_samples: int
    points: tuple = field(repr=False, default=())


def _summarize(samples, target_pfa, value):
    points = roc(samples)
    n1 = sum(1 for s in samples if s.hypothesis == H1)
    raw = pm_at_pfa(points, target_pfa)
    floor = pm_floor(n1)
    return SweepRow(value=value, pm=max(raw, floor), at_floor=raw < floor,
                    n_h1_samples=n1, points=tuple(points))


def sweep(kind: str, grid, base: Scenario, seed: int, mode: str | None = None):
    """Miss rate at the scenario's target false-alarm rate per grid value.

    ``antennas`` (values = antenna-pair products k*k) and ``signature``
    sweeps subset one shared snapshot stream; ``history``, ``delay``, and
    ``bandwidth`` (values in MHz, subsetting the frequency bins) regenerate
    per value from the same seed, so channels stay paired across values.
    Miss rates below the resolvable floor report the floor, flagged.
    """
    grid = list(grid)
    if kind not in SWEEP_KINDS:
        raise ValueError(f"unknown sweep kind {kind!r}")
    if not grid:
        raise ValueError("empty grid")

    if kind == "antennas":
        variants = []
        for v in grid:
            k = math.isqrt(int(v))
            if k * k != int(v) or not (1 <= k <= min(base.k1, base.k2)):
                raise ValueError(
                    f"antenna grid value {v} is not a square k*k with "
                    f"k <= {min(base.k1, base.k2)}"
                )
            variants.append((int(v), base.sig_kind, k, k))
        per_tag = _deltas_for_variants(base, seed, mode or MODE_JUMP, variants)
        return [_summarize(per_tag[tag], base.target_pfa, tag)
                for tag, _, _, _ in variants]

    if kind == "signature":
        for v in grid:
            if v not in (KIND_COMPLEX, KIND_MAGNITUDE):
                raise ValueError(f"signature grid value {v!r} is not a kind")
        variants = [(v, v, base.k1, base.k2) for v in grid]
        per_tag = _deltas_for_variants(base, seed, mode or MODE_JUMP, variants)
        return [_summarize(per_tag[tag], base.target_pfa, tag)
                for tag, _, _, _ in variants]

    rows = []
    for v in grid:
        if kind == "history":
            if int(v) < 3:
                raise ValueError(f"history grid value {v} below the floor of 3")
            sub = replace(base, history_size=int(v))
            run_mode = mode or MODE_JUMP
        elif kind == "delay":
            if int(v) < 1:
                raise ValueError(f"delay grid value {v} must be >= 1")
            sub = replace(base, delay=int(v))
            run_mode = mode or MODE_MOVING
        else:  # bandwidth, MHz
            bin_hz = base.bandwidth_hz / base.n_taps
            n_bins = float(v) * 1e6 / bin_hz
            if abs(n_bins - round(n_bins)) > 1e-9 or not (
                2 <= round(n_bins) <= base.n_taps
            ):
                raise ValueError(
                    f"bandwidth grid value {v} MHz does not subset the "
                    f"{base.n_taps} bins of {base.bandwidth_hz / 1e6:g} MHz"
                )
            sub = base
            run_mode = mode or MODE_JUMP
        tag = str(v)
        variants = [(tag, sub.sig_kind, sub.k1, sub.k2)]
        if kind == "bandwidth":
            samples = _deltas_with_bins(sub, seed, run_mode, int(round(n_bins)),
                                        tag)
        else:
            samples = _deltas_for_variants(sub, seed, run_mode, variants)[tag]
        rows.append(_summarize(samples, base.target_pfa, v))
    return rows


def _deltas_with_bins(scenario, seed, mode, n_bins, tag):
    """Single-variant collection on a frequency-bin subset."""
    n, d = scenario.history_size, scenario.delay
    move_index = n + d
    plans = [(H0, scenario.n_h0, move_index + 1 + scenario.extra_steps, None)]
    if mode == MODE_JUMP:
        plans.append((H1, scenario.n_h1, move_index + 1, move_index))
    else:
        plans.append((H1, scenario.n_h1, move_index + 1 + scenario.extra_steps,
                      None))
    config = scenario.detector_config()
    samples = []
    for hyp, count, n_steps, mi in plans:
        for trial in range(count):
            taps, positions = _trial_taps(scenario, seed, hyp, trial, mode,
                                          n_steps, move_index, n_bins)
            sigs = _taps_to_sigs(taps, positions, scenario, scenario.sig_kind,
                                 scenario.k1, scenario.k2)
            for dv in _trace_deltas(sigs, config, mi):
                samples.append(DeltaSample(hyp, dv, tag))
    return samples
