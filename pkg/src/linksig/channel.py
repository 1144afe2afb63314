"""Synthetic MIMO multipath channels and band-limited snapshot sampling.

The channel is a finite set of plane-wave paths (delay, complex gain, angle
of departure/arrival) between two antenna arrays. Moving the whole receive
array by a displacement d multiplies each path by the plane-wave phase
exp(-j*2*pi*<u(aoa), d>/lambda), which for uniformly distributed angles of
arrival reproduces Clarke-model spatial decorrelation. Band-limited impulse
responses are obtained by sampling the frequency response on a uniform grid
and inverse-transforming, so the channel model and the sounder simulations
share one band-limitation code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

_ARRAY_KINDS = ("uniform-circular", "uniform-linear")


@dataclass(frozen=True)
class ArrayGeometry:
    """Planar antenna array; element spacing is given in carrier wavelengths."""

    kind: str
    element_count: int
    spacing_wavelengths: float

    def __post_init__(self):
        if self.kind not in _ARRAY_KINDS:
            raise ValueError(f"unknown array kind {self.kind!r}")
        if self.element_count < 1:
            raise ValueError("element_count must be >= 1")
        if self.spacing_wavelengths <= 0:
            raise ValueError("spacing_wavelengths must be > 0")

    def element_positions(self) -> np.ndarray:
        """(K, 2) element coordinates in wavelengths, deterministic."""
        k = self.element_count
        if self.kind == "uniform-linear":
            x = self.spacing_wavelengths * np.arange(k, dtype=float)
            return np.stack([x, np.zeros(k)], axis=1)
        if k == 1:
            return np.zeros((1, 2))
        # circumradius such that adjacent elements sit one spacing apart
        radius = self.spacing_wavelengths / (2.0 * np.sin(np.pi / k))
        ang = 2.0 * np.pi * np.arange(k) / k
        return radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)


@dataclass(frozen=True)
class Path:
    delay_s: float
    gain: complex
    aod_rad: float
    aoa_rad: float

    def __post_init__(self):
        if self.delay_s < 0:
            raise ValueError("delay_s must be >= 0")
        if not np.isfinite(abs(self.gain)):
            raise ValueError("gain must be finite")


@dataclass(frozen=True)
class MultipathChannel:
    carrier_hz: float
    paths: tuple
    tx_array: ArrayGeometry
    rx_array: ArrayGeometry

    def __post_init__(self):
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be > 0")
        if len(self.paths) == 0:
            raise ValueError("channel needs at least one path")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    def path_arrays(self):
        """Path parameters as (delays, gains, aod, aoa) vectors."""
        delays = np.array([p.delay_s for p in self.paths])
        gains = np.array([p.gain for p in self.paths], dtype=complex)
        aod = np.array([p.aod_rad for p in self.paths])
        aoa = np.array([p.aoa_rad for p in self.paths])
        return delays, gains, aod, aoa


@dataclass(frozen=True)
class Trajectory:
    """Uniform linear motion sampled once per probe interval."""

    start_m: tuple
    velocity_mps: tuple
    probe_interval_s: float
    count: int

    def __post_init__(self):
        if self.probe_interval_s <= 0:
            raise ValueError("probe_interval_s must be > 0")
        if self.count < 1:
            raise ValueError("count must be >= 1")

    def positions(self) -> np.ndarray:
        n = np.arange(self.count)[:, None]
        start = np.asarray(self.start_m, dtype=float)
        vel = np.asarray(self.velocity_mps, dtype=float)
        return start[None, :] + n * self.probe_interval_s * vel[None, :]


@dataclass(frozen=True)
class ChannelSnapshot:
    """Grid of band-limited impulse responses at one measurement instant."""

    taps: np.ndarray  # (k1, k2, M) complex
    sample_period_s: float
    meas_index: int = 0
    position_m: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.taps.ndim != 3:
            raise ValueError("taps must have shape (k1, k2, M)")
        if self.taps.shape[2] < 1:
            raise ValueError("need at least one tap")

    @property
    def k1(self) -> int:
        return self.taps.shape[0]

    @property
    def k2(self) -> int:
        return self.taps.shape[1]

    @property
    def n_taps(self) -> int:
        return self.taps.shape[2]


def _steering(array: ArrayGeometry, angles_rad: np.ndarray) -> np.ndarray:
    """(P, K) unit-modulus steering phases for plane waves at the given angles."""
    pos = array.element_positions()  # wavelengths
    u = np.stack([np.cos(angles_rad), np.sin(angles_rad)], axis=1)  # (P, 2)
    return np.exp(2j * np.pi * (u @ pos.T))


def make_random_channel(
    seed: int,
    path_count: int,
    delay_spread_s: float,
    carrier_hz: float,
    tx_array: ArrayGeometry,
    rx_array: ArrayGeometry,
) -> MultipathChannel:
    """Draw a random multipath channel.

    Delays are exponential with mean ``delay_spread_s``; gains are circular
    complex Gaussian with standard deviation decaying exponentially in delay
    (normalized to unit total mean power); angles of departure and arrival
    are i.i.d. uniform on [0, 2*pi).
    """
    if path_count < 1:
        raise ValueError("path_count must be >= 1")
    if delay_spread_s <= 0:
        raise ValueError("delay_spread_s must be > 0")
    rng = np.random.default_rng(seed)
    delays = rng.exponential(delay_spread_s, path_count)
    std = np.exp(-delays / (2.0 * delay_spread_s))
    std /= np.sqrt(np.sum(std**2))
    gains = std * (rng.standard_normal(path_count) + 1j * rng.standard_normal(path_count))
    gains /= np.sqrt(2.0)
    aod = rng.uniform(0.0, 2.0 * np.pi, path_count)
    aoa = rng.uniform(0.0, 2.0 * np.pi, path_count)
    paths = tuple(
        Path(delay_s=float(delays[p]), gain=complex(gains[p]),
             aod_rad=float(aod[p]), aoa_rad=float(aoa[p]))
        for p in range(path_count)
    )
    return MultipathChannel(carrier_hz=carrier_hz, paths=paths,
                            tx_array=tx_array, rx_array=rx_array)


def freq_response(
    channel: MultipathChannel,
    rx_displacement_m: Sequence[float],
    freqs_hz: np.ndarray,
) -> np.ndarray:
    """Exact frequency response, shape (k1, k2, F).

    H[i, j, f] = sum_p gain_p a_tx(aod_p, i) a_rx(aoa_p, j)
                 exp(-j 2 pi f delay_p) exp(-j 2 pi <u(aoa_p), d> / lambda)
    """
    delays, gains, aod, aoa = channel.path_arrays()
    d = np.asarray(rx_displacement_m, dtype=float)
    u = np.stack([np.cos(aoa), np.sin(aoa)], axis=1)
    disp_phase = np.exp(-2j * np.pi * (u @ d) / channel.wavelength_m)
    a_tx = _steering(channel.tx_array, aod)
    a_rx = _steering(channel.rx_array, aoa)
    delay_phase = np.exp(-2j * np.pi * np.outer(delays, np.asarray(freqs_hz)))
    return np.einsum("p,pi,pj,pf->ijf", gains * disp_phase, a_tx, a_rx, delay_phase)


def path_weight_matrix(
    channel: MultipathChannel, freqs_hz: np.ndarray
) -> np.ndarray:
    """(P, k1*k2*F) per-path frequency-response contributions at zero displacement.

    The response at displacement d is then ``disp_phases @ weights`` with
    disp_phases[p] = exp(-j 2 pi <u(aoa_p), d> / lambda); used to batch many
    displacements of the same channel cheaply.
    """
    delays, gains, aod, aoa = channel.path_arrays()
    a_tx = _steering(channel.tx_array, aod)
    a_rx = _steering(channel.rx_array, aoa)
    delay_phase = np.exp(-2j * np.pi * np.outer(delays, np.asarray(freqs_hz)))
    w = np.einsum("p,pi,pj,pf->pijf", gains, a_tx, a_rx, delay_phase)
    return w.reshape(len(channel.paths), -1)


def displacement_phases(
    channel: MultipathChannel, displacements_m: np.ndarray
) -> np.ndarray:
    """(N, P) plane-wave phase factors for a batch of rigid rx displacements."""
    _, _, _, aoa = channel.path_arrays()
    u = np.stack([np.cos(aoa), np.sin(aoa)], axis=1)  # (P, 2)
    proj = np.asarray(displacements_m, dtype=float) @ u.T  # (N, P)
    return np.exp(-2j * np.pi * proj / channel.wavelength_m)


def snapshot_grid_hz(bandwidth_hz: float, n_taps: int) -> np.ndarray:
    """Canonical frequency grid: n_taps bins spanning bandwidth_hz from 0."""
    return np.arange(n_taps) * (bandwidth_hz / n_taps)


def snapshot_at(
    channel: MultipathChannel,
    rx_displacement_m: Sequence[float],
    bandwidth_hz: float,
    n_taps: int,
    meas_index: int = 0,
) -> ChannelSnapshot:
    """Band-limited snapshot: sample H on the canonical grid, inverse-transform."""
    if n_taps < 2:
        raise ValueError("n_taps must be >= 2")
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth_hz must be > 0")
    freqs = snapshot_grid_hz(bandwidth_hz, n_taps)
    h = np.fft.ifft(freq_response(channel, rx_displacement_m, freqs), axis=-1)
    d = np.asarray(rx_displacement_m, dtype=float)
    return ChannelSnapshot(
        taps=h,
        sample_period_s=1.0 / bandwidth_hz,
        meas_index=meas_index,
        position_m=(float(d[0]), float(d[1])),
    )


def walk_snapshots(
    channel: MultipathChannel,
    trajectory: Trajectory,
    bandwidth_hz: float,
    n_taps: int,
) -> list:
    """Noiseless snapshots along a uniform-motion trajectory (batched)."""
    if n_taps < 2:
        raise ValueError("n_taps must be >= 2")
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth_hz must be > 0")
    positions = trajectory.positions()
    freqs = snapshot_grid_hz(bandwidth_hz, n_taps)
    weights = path_weight_matrix(channel, freqs)
    phases = displacement_phases(channel, positions)
    k1 = channel.tx_array.element_count
    k2 = channel.rx_array.element_count
    flat = phases @ weights  # (count, k1*k2*M)
    taps = np.fft.ifft(flat.reshape(trajectory.count, k1, k2, n_taps), axis=-1)
    return [
        ChannelSnapshot(
            taps=taps[n],
            sample_period_s=1.0 / bandwidth_hz,
            meas_index=n,
            position_m=(float(positions[n, 0]), float(positions[n, 1])),
        )
        for n in range(trajectory.count)
    ]


def add_noise(snapshot: ChannelSnapshot, snr_db: float, seed: int) -> ChannelSnapshot:
    """Additive circular complex Gaussian tap noise at the given per-pair SNR.

    snr_db = +inf is the no-noise sentinel and returns the input unchanged.
    """
    if np.isposinf(snr_db):
        return snapshot
    sig_power = np.sum(np.abs(snapshot.taps) ** 2, axis=-1)  # (k1, k2)
    if np.any(sig_power == 0.0):
        raise ValueError("snapshot has an all-zero antenna pair; SNR undefined")
    m = snapshot.n_taps
    var = sig_power / (m * 10.0 ** (snr_db / 10.0))  # per complex tap
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(snapshot.taps.shape) + 1j * rng.standard_normal(
        snapshot.taps.shape
    )
    noise *= np.sqrt(var / 2.0)[:, :, None]
    return ChannelSnapshot(
        taps=snapshot.taps + noise,
        sample_period_s=snapshot.sample_period_s,
        meas_index=snapshot.meas_index,
        position_m=snapshot.position_m,
    )
