"""Channel-sounding chains: multitone probing and OFDM training estimation.

Two estimation pipelines produce band-limited impulse responses from
simulated waveforms:

* multitone: a Gaussian-windowed sum of cosines at half-integer-MHz-style
  tone offsets; the frequency response is the ratio of received to
  transmitted DFT at the tone bins, inverse-transformed to taps.
* ofdm: periodic short/long preambles (coarse/fine acquisition, Moose
  carrier recovery) followed by Walsh-Hadamard orthogonal training symbols
  inverted per subcarrier.

Waveform-domain channel application is block-circular (per DFT grid), which
is exact for periodic probes and for OFDM symbols whose cyclic prefix covers
the channel memory. Timing jitter is a frequency-domain phase ramp, exact
for band-limited signals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import hadamard

from . import channel as chanmod
from .channel import ChannelSnapshot, MultipathChannel
from .errors import DegenerateProbe, SyncFailure


# ---------------------------------------------------------------------------
# multitone probe

@dataclass(frozen=True)
class MultitoneProbe:
    tone_hz: np.ndarray
    phases_rad: np.ndarray
    window_frac: float
    sample_rate_hz: float
    duration_s: float
    waveform: np.ndarray  # real samples

    @property
    def b_max(self) -> int:
        return len(self.tone_hz) - 1


def make_multitone(
    b_max: int,
    seed: int,
    sample_rate_hz: float | None = None,
    duration_s: float | None = None,
    window_frac: float = 0.25,
    tone_spacing_hz: float = 1e6,
    phases_rad: np.ndarray | None = None,
) -> MultitoneProbe:
    """Probe with tones at (i + 0.5) * spacing for i = 0..b_max.

    Tone phases are uniform on [0, pi], drawn from ``seed`` unless given
    explicitly. Defaults put every tone exactly on a DFT bin (two tone-grid
    periods at four times the probe span).
    """
    if b_max < 0:
        raise ValueError("b_max must be >= 0")
    tones = (np.arange(b_max + 1) + 0.5) * tone_spacing_hz
    span = (b_max + 1) * tone_spacing_hz
    if sample_rate_hz is None:
        sample_rate_hz = 4.0 * span
    if duration_s is None:
        duration_s = 2.0 / tone_spacing_hz
    if sample_rate_hz <= 2.0 * tones[-1]:
        raise ValueError(
            f"sample rate {sample_rate_hz} violates Nyquist for top tone {tones[-1]}"
        )
    if phases_rad is None:
        rng = np.random.default_rng(seed)
        phases_rad = rng.uniform(0.0, np.pi, b_max + 1)
    else:
        phases_rad = np.asarray(phases_rad, dtype=float)
        if phases_rad.shape != (b_max + 1,):
            raise ValueError("need one phase per tone")
    n = int(round(sample_rate_hz * duration_s))
    t = np.arange(n) / sample_rate_hz
    x = np.cos(2.0 * np.pi * np.outer(tones, t) + phases_rad[:, None]).sum(axis=0)
    if window_frac > 0:
        center = (n - 1) / 2.0
        x = x * np.exp(-0.5 * ((np.arange(n) - center) / (window_frac * n)) ** 2)
    return MultitoneProbe(
        tone_hz=tones,
        phases_rad=phases_rad,
        window_frac=window_frac,
        sample_rate_hz=sample_rate_hz,
        duration_s=duration_s,
        waveform=x,
    )


def _tone_bins(probe: MultitoneProbe, n: int) -> np.ndarray:
    return np.round(probe.tone_hz * n / probe.sample_rate_hz).astype(int)


def estimate_freq_response(rx_waveform: np.ndarray, probe: MultitoneProbe) -> np.ndarray:
    """Per-tone complex gains: RX DFT over TX DFT at the tone bins."""
    rx = np.asarray(rx_waveform)
    if len(rx) != len(probe.waveform):
        raise ValueError("rx length must match the probe waveform length")
    n = len(rx)
    tx_f = np.fft.fft(probe.waveform)
    rx_f = np.fft.fft(rx)
    bins = _tone_bins(probe, n)
    scale = np.sqrt(np.mean(np.abs(tx_f) ** 2))
    if scale == 0.0 or np.any(np.abs(tx_f[bins]) < 1e-9 * scale):
        raise DegenerateProbe("probe has near-zero energy at a tone bin")
    return rx_f[bins] / tx_f[bins]


def freq_to_cir(
    gains: np.ndarray, n_taps: int, bin_offset: float = 0.0
) -> np.ndarray:
    """Impulse response from uniformly spaced frequency bins.

    NaN entries mark missing (null) bins and are zero-filled. ``bin_offset``
    is the grid offset in bin widths (0.5 for half-bin tone grids); the
    matching post-transform phase correction makes the shifted DFT exact.
    A flat all-ones input maps to a unit impulse at tap 0.
    """
    g = np.asarray(gains, dtype=complex)
    if g.shape[-1] < 2:
        raise ValueError("need at least 2 frequency bins")
    if g.shape[-1] != n_taps:
        raise ValueError("bin count must equal n_taps")
    g = np.where(np.isnan(g), 0.0, g)
    taps = np.fft.ifft(g, axis=-1)
    if bin_offset != 0.0:
        taps = taps * np.exp(2j * np.pi * bin_offset * np.arange(n_taps) / n_taps)
    return taps


# ---------------------------------------------------------------------------
# OFDM configuration, preamble, training

@dataclass(frozen=True)
class OfdmConfig:
    n_subcarriers: int = 64
    subcarrier_spacing_hz: float = 312.5e3
    cp_s: float = 0.8e-6
    symbol_s: float = 4.0e-6
    null_indices: tuple = (-32, -31, 0, 31)
    n_train_symbols: int = 4

    def __post_init__(self):
        lo = -(self.n_subcarriers // 2)
        hi = self.n_subcarriers // 2 - 1
        for s in self.null_indices:
            if not (lo <= s <= hi):
                raise ValueError(f"null index {s} outside [{lo}, {hi}]")
        if self.n_train_symbols < 1:
            raise ValueError("n_train_symbols must be >= 1")

    @property
    def sample_rate_hz(self) -> float:
        return self.n_subcarriers * self.subcarrier_spacing_hz

    @property
    def cp_len(self) -> int:
        return int(round(self.cp_s * self.sample_rate_hz))

    @property
    def symbol_len(self) -> int:
        return int(round(self.symbol_s * self.sample_rate_hz))

    def subcarrier_indices(self) -> np.ndarray:
        n = self.n_subcarriers
        return np.arange(-(n // 2), n - n // 2)

    def active_indices(self) -> np.ndarray:
        sc = self.subcarrier_indices()
        return sc[~np.isin(sc, self.null_indices)]


@dataclass(frozen=True)
class PreambleConfig:
    short_period_s: float = 0.8e-6
    short_total_s: float = 8.0e-6
    long_period_s: float = 3.2e-6
    long_total_s: float = 8.0e-6

    def __post_init__(self):
        reps = self.short_total_s / self.short_period_s
        if abs(reps - round(reps)) > 1e-9:
            raise ValueError("short_total_s must be a multiple of short_period_s")
        if self.long_total_s < 2.0 * self.long_period_s:
            raise ValueError("long_total_s must cover at least two long periods")


@dataclass(frozen=True)
class Preamble:
    config: PreambleConfig
    sample_rate_hz: float
    short_period: np.ndarray
    long_period: np.ndarray
    waveform: np.ndarray = field(repr=False)

    @property
    def short_len(self) -> int:
        return int(round(self.config.short_total_s * self.sample_rate_hz))

    @property
    def long_len(self) -> int:
        return int(round(self.config.long_total_s * self.sample_rate_hz))

    @property
    def long_period_len(self) -> int:
        return len(self.long_period)


def _tile_to(period: np.ndarray, total: int) -> np.ndarray:
    reps = int(np.ceil(total / len(period)))
    return np.tile(period, reps)[:total]


def make_preamble(
    config: PreambleConfig, sample_rate_hz: float, seed: int
) -> Preamble:
    """Generic periodic acquisition preamble with the configured periods.

    One unit-modulus random-phase base period each for the short and long
    parts, tiled to the configured totals.
    """
    rng = np.random.default_rng(seed)
    p_short = int(round(config.short_period_s * sample_rate_hz))
    p_long = int(round(config.long_period_s * sample_rate_hz))
    short = np.exp(2j * np.pi * rng.random(p_short))
    long_ = np.exp(2j * np.pi * rng.random(p_long))
    n_short = int(round(config.short_total_s * sample_rate_hz))
    n_long = int(round(config.long_total_s * sample_rate_hz))
    wf = np.concatenate([_tile_to(short, n_short), _tile_to(long_, n_long)])
    return Preamble(config=config, sample_rate_hz=sample_rate_hz,
                    short_period=short, long_period=long_, waveform=wf)


def moose_cfo_estimate(
    rx: np.ndarray, period_samples: int, sample_rate_hz: float
) -> float:
    """Carrier offset from the phase between two repeats of a periodic signal.

    Unambiguous over +/- sample_rate / (2 * period).
    """
    rx = np.asarray(rx)
    p = period_samples
    if len(rx) < 2 * p:
        raise ValueError("need at least two periods of input")
    corr = np.vdot(rx[:-p], rx[p:])  # sum rx[n+P] * conj(rx[n])
    power = np.sum(np.abs(rx) ** 2)
    if power == 0.0 or abs(corr) < 1e-12 * power:
        raise ValueError("degenerate input: no periodic correlation")
    return float(np.angle(corr) * sample_rate_hz / (2.0 * np.pi * p))


def frame_sync(
    rx: np.ndarray, preamble: Preamble, threshold: float = 0.5
) -> int:
    """Locate the preamble start: coarse periodic autocorrelation at the
    short period, refined by cross-correlation against the known long part."""
    rx = np.asarray(rx)
    p = len(preamble.short_period)
    win = preamble.short_len - p
    if len(rx) < preamble.short_len + preamble.long_len:
        raise ValueError("input shorter than one full preamble")
    n_pos = len(rx) - (preamble.short_len + preamble.long_len) + 1
    # coarse: normalized lag-p autocorrelation over the short-preamble window
    prod = rx[p:] * np.conj(rx[:-p])
    power = np.abs(rx) ** 2
    cs = np.concatenate([[0.0 + 0.0j], np.cumsum(prod)])
    ps = np.concatenate([[0.0], np.cumsum(power)])
    starts = np.arange(n_pos)
    corr = cs[starts + win] - cs[starts]
    energy = ps[starts + win + p] - ps[starts]
    metric = 2.0 * np.abs(corr) / np.maximum(energy, 1e-30)
    coarse = int(np.argmax(metric))
    if metric[coarse] < threshold:
        raise SyncFailure(
            f"coarse sync metric {metric[coarse]:.3f} below threshold {threshold}"
        )
    # fine: cross-correlate with the known long reference around the coarse hit
    ref = _tile_to(preamble.long_period, preamble.long_len)
    ref_norm = np.linalg.norm(ref)
    lo = max(0, coarse - 2 * p)
    hi = min(n_pos - 1, coarse + 2 * p)
    best, best_val = coarse, -1.0
    for d in range(lo, hi + 1):
        seg = rx[d + preamble.short_len : d + preamble.short_len + preamble.long_len]
        seg_norm = np.linalg.norm(seg)
        val = abs(np.vdot(ref, seg)) / max(ref_norm * seg_norm, 1e-30)
        if val > best_val:
            best, best_val = d, val
    if best_val < threshold:
        raise SyncFailure(f"fine sync metric {best_val:.3f} below threshold {threshold}")
    return best


def make_walsh_training(k1: int, n_symbols: int) -> np.ndarray:
    """First k1 rows of the +/-1 Walsh-Hadamard matrix of order n_symbols."""
    if n_symbols < 1 or (n_symbols & (n_symbols - 1)) != 0:
        raise ValueError("n_symbols must be a power of 2")
    if n_symbols < k1:
        raise ValueError("n_symbols must be >= k1")
    return hadamard(n_symbols)[:k1].astype(float)


def ofdm_training_waveform(cfg: OfdmConfig, walsh: np.ndarray) -> np.ndarray:
    """Per-antenna training waveform, shape (k1, n_symbols * symbol_len).

    Symbol m of antenna a carries walsh[a, m] on every active subcarrier.
    """
    k1, n_sym = walsh.shape
    n = cfg.n_subcarriers
    active = cfg.active_indices()
    out = np.zeros((k1, n_sym * cfg.symbol_len), dtype=complex)
    for m in range(n_sym):
        bins = np.zeros(n, dtype=complex)
        bins[active % n] = 1.0
        body = np.fft.ifft(bins)  # one shared body scaled per antenna
        sym = np.concatenate([body[-cfg.cp_len:], body])
        out[:, m * cfg.symbol_len : (m + 1) * cfg.symbol_len] = walsh[:, m][:, None] * sym
    return out


def estimate_mimo_ofdm_channel(
    rx_training: np.ndarray, walsh: np.ndarray, cfg: OfdmConfig
):
    """Per-subcarrier channel matrices from Walsh-orthogonal training.

    ``rx_training`` has shape (k2, n_symbols * symbol_len) and must be
    frame-synced and carrier-corrected. Returns (active subcarrier indices,
    H) with H of shape (n_active, k2, k1); exact on noiseless input.
    """
    k1, n_sym = walsh.shape
    rx = np.atleast_2d(np.asarray(rx_training))
    k2 = rx.shape[0]
    if rx.shape[1] != n_sym * cfg.symbol_len:
        raise ValueError(
            f"rx length {rx.shape[1]} != n_symbols*symbol_len ="
            f" {n_sym * cfg.symbol_len}"
        )
    n = cfg.n_subcarriers
    active = cfg.active_indices()
    y = np.empty((k2, n_sym, len(active)), dtype=complex)
    for m in range(n_sym):
        block = rx[:, m * cfg.symbol_len + cfg.cp_len : (m + 1) * cfg.symbol_len]
        spec = np.fft.fft(block, axis=-1)
        y[:, m, :] = spec[:, active % n]
    # H(s) = Y(s) W^H / n_symbols, exact by row orthogonality
    h = np.einsum("jms,am->sja", y, walsh) / n_sym
    return active, h


# ---------------------------------------------------------------------------
# end-to-end sounding of a synthetic channel

def _signed_bin_freqs(n: int, sample_rate_hz: float) -> np.ndarray:
    return np.fft.fftfreq(n, d=1.0 / sample_rate_hz)


def reference_snapshot(
    channel: MultipathChannel,
    rx_displacement_m,
    method: str,
    bandwidth_hz: float,
    n_taps: int,
    ofdm_cfg: OfdmConfig | None = None,
    meas_index: int = 0,
) -> ChannelSnapshot:
    """Ground-truth band-limited snapshot on the measurement grid of a sounder.

    Multitone samples the response at the half-bin tone grid; OFDM samples
    the signed subcarrier grid with null bins zeroed. Serves as the
    independent closed-form oracle for ``sound_snapshot`` round trips.
    """
    if method == "multitone":
        spacing = bandwidth_hz / n_taps
        freqs = (np.arange(n_taps) + 0.5) * spacing
        h = chanmod.freq_response(channel, rx_displacement_m, freqs)
        taps = freq_to_cir(h, n_taps, bin_offset=0.5)
    elif method == "ofdm":
        cfg = ofdm_cfg or OfdmConfig()
        if n_taps != cfg.n_subcarriers:
            raise ValueError("ofdm n_taps must equal the subcarrier count")
        sc = cfg.subcarrier_indices()
        freqs = sc * cfg.subcarrier_spacing_hz
        h = chanmod.freq_response(channel, rx_displacement_m, freqs)
        bins = np.full((h.shape[0], h.shape[1], cfg.n_subcarriers), np.nan + 0j)
        bins[:, :, sc % cfg.n_subcarriers] = h
        bins[:, :, np.asarray(cfg.null_indices) % cfg.n_subcarriers] = np.nan
        taps = freq_to_cir(bins, n_taps)
    else:
        raise ValueError(f"unknown sounding method {method!r}")
    d = np.asarray(rx_displacement_m, dtype=float)
    return ChannelSnapshot(taps=taps, sample_period_s=1.0 / bandwidth_hz,
                           meas_index=meas_index,
                           position_m=(float(d[0]), float(d[1])))


def _awgn_like(rng, shape, power_per_sample):
    n = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return n * np.sqrt(power_per_sample / 2.0)


def _sound_multitone(channel, displacement, bandwidth_hz, n_taps, snr_db,
                     jitter_taps, rng):
    spacing = bandwidth_hz / n_taps
    probe = make_multitone(n_taps - 1, seed=0, tone_spacing_hz=spacing,
                           phases_rad=rng.uniform(0.0, np.pi, n_taps))
    n = len(probe.waveform)
    bin_freqs = _signed_bin_freqs(n, probe.sample_rate_hz)
    tx_f = np.fft.fft(probe.waveform)
    h_grid = chanmod.freq_response(channel, displacement, bin_freqs)  # (k1,k2,n)
    t0 = jitter_taps / bandwidth_hz
    ramp = np.exp(-2j * np.pi * bin_freqs * t0)
    k1, k2 = h_grid.shape[0], h_grid.shape[1]
    taps = np.empty((k1, k2, n_taps), dtype=complex)
    for i in range(k1):
        for j in range(k2):
            rx = np.fft.ifft(tx_f * h_grid[i, j] * ramp)
            if not np.isposinf(snr_db):
                p = np.mean(np.abs(rx) ** 2)
                rx = rx + _awgn_like(rng, n, p / 10.0 ** (snr_db / 10.0))
            gains = estimate_freq_response(rx, probe)
            taps[i, j] = freq_to_cir(gains, n_taps, bin_offset=0.5)
    return taps


def _sound_ofdm(channel, displacement, cfg, preamble_cfg, snr_db, jitter_taps, rng):
    fs = cfg.sample_rate_hz
    n = cfg.n_subcarriers
    sc = cfg.subcarrier_indices()
    freqs = sc * cfg.subcarrier_spacing_hz
    h = chanmod.freq_response(channel, displacement, freqs)  # (k1,k2,n) by sc order
    t0 = jitter_taps / fs
    h = h * np.exp(-2j * np.pi * freqs * t0)
    h_bins = np.empty_like(h)
    h_bins[:, :, sc % n] = h  # reorder to FFT bin layout
    k1 = channel.tx_array.element_count
    k2 = channel.rx_array.element_count

    walsh = make_walsh_training(k1, cfg.n_train_symbols)
    tx_train = ofdm_training_waveform(cfg, walsh)  # (k1, L)
    pre = make_preamble(preamble_cfg, fs, seed=12345)

    def through_channel(block, h_pair):
        """Circular application of one antenna pair's 64-bin response."""
        reps = len(block) // n
        out = np.empty_like(block, dtype=complex)
        for r in range(reps):
            seg = block[r * n : (r + 1) * n]
            out[r * n : (r + 1) * n] = np.fft.ifft(np.fft.fft(seg) * h_pair)
        return out

    # preamble blocks: tile channel-filtered base blocks to the exact totals
    short_block = _tile_to(pre.short_period, n)
    long_block = _tile_to(pre.long_period, n)
    n_short = pre.short_len
    n_long = pre.long_len

    # per tx antenna: filtered training with CP handled per symbol
    def filtered_training(i, j):
        out = np.empty(tx_train.shape[1], dtype=complex)
        for m in range(cfg.n_train_symbols):
            body = np.fft.ifft(
                np.fft.fft(tx_train[i, m * cfg.symbol_len + cfg.cp_len :
                                    (m + 1) * cfg.symbol_len]) * h_bins[i, j]
            )
            out[m * cfg.symbol_len : m * cfg.symbol_len + cfg.cp_len] = body[-cfg.cp_len:]
            out[m * cfg.symbol_len + cfg.cp_len : (m + 1) * cfg.symbol_len] = body
        return out

    taps = np.empty((k1, k2, n), dtype=complex)
    long_p = len(pre.long_period)
    for i in range(k1):
        for j in range(k2):
            rx_long = _tile_to(through_channel(long_block, h_bins[i, j]), n_long)
            rx_short = _tile_to(through_channel(short_block, h_bins[i, j]), n_short)
            rx_train = filtered_training(i, j)
            rx = np.concatenate([rx_short, rx_long, rx_train])
            if not np.isposinf(snr_db):
                p = np.mean(np.abs(rx) ** 2)
                rx = rx + _awgn_like(rng, len(rx), p / 10.0 ** (snr_db / 10.0))
            # carrier recovery on the long preamble (known frame timing)
            seg = rx[n_short : n_short + n_long]
            cfo = moose_cfo_estimate(seg, long_p, fs)
            t = np.arange(len(rx)) / fs
            rx = rx * np.exp(-2j * np.pi * cfo * t)
            active, h_est = estimate_mimo_ofdm_channel(
                rx[np.newaxis, n_short + n_long :], walsh[i : i + 1], cfg
            )
            bins = np.full(n, np.nan + 0j)
            bins[active % n] = h_est[:, 0, 0]
            taps[i, j] = freq_to_cir(bins, n)
    return taps


def sound_snapshot(
    channel: MultipathChannel,
    rx_displacement_m,
    method: str,
    bandwidth_hz: float | None = None,
    n_taps: int = 40,
    snr_db: float = np.inf,
    sync_jitter_samples: float = 0.0,
    seed: int = 0,
    ofdm_cfg: OfdmConfig | None = None,
    preamble_cfg: PreambleConfig | None = None,
    meas_index: int = 0,
) -> ChannelSnapshot:
    """Estimate a channel snapshot through a simulated sounding waveform.

    ``sync_jitter_samples`` is a timing offset in units of the output tap
    period. Noiseless, jitter-free output matches ``reference_snapshot`` to
    numerical precision.
    """
    rng = np.random.default_rng(seed)
    if method == "multitone":
        if bandwidth_hz is None:
            bandwidth_hz = n_taps * 1e6
        taps = _sound_multitone(channel, rx_displacement_m, bandwidth_hz,
                                n_taps, snr_db, sync_jitter_samples, rng)
        period = 1.0 / bandwidth_hz
    elif method == "ofdm":
        cfg = ofdm_cfg or OfdmConfig()
        n_taps = cfg.n_subcarriers
        taps = _sound_ofdm(channel, rx_displacement_m, cfg,
                           preamble_cfg or PreambleConfig(), snr_db,
                           sync_jitter_samples, rng)
        period = 1.0 / cfg.sample_rate_hz
    else:
        raise ValueError(f"unknown sounding method {method!r}")
    d = np.asarray(rx_displacement_m, dtype=float)
    return ChannelSnapshot(taps=taps, sample_period_s=period,
                           meas_index=meas_index,
                           position_m=(float(d[0]), float(d[1])))
