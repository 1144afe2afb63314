import numpy as np
import pytest

from linksig.channel import (
    ArrayGeometry,
    MultipathChannel,
    Path,
    Trajectory,
    add_noise,
    freq_response,
    make_random_channel,
    snapshot_at,
    walk_snapshots,
)

UCA1 = ArrayGeometry("uniform-circular", 1, 0.5)


def single_path_channel(delay_s=0.0, gain=1.0, aod=0.0, aoa=0.0,
                        carrier_hz=2.4e9, tx=UCA1, rx=UCA1):
    return MultipathChannel(carrier_hz=carrier_hz,
                            paths=(Path(delay_s, gain, aod, aoa),),
                            tx_array=tx, rx_array=rx)


class TestArrayGeometry:
    def test_linear_positions(self):
        arr = ArrayGeometry("uniform-linear", 3, 0.5)
        np.testing.assert_allclose(
            arr.element_positions(), [[0, 0], [0.5, 0], [1.0, 0]]
        )

    def test_circular_adjacent_spacing(self):
        arr = ArrayGeometry("uniform-circular", 8, 0.5)
        pos = arr.element_positions()
        gaps = np.linalg.norm(np.diff(np.vstack([pos, pos[:1]]), axis=0), axis=1)
        np.testing.assert_allclose(gaps, 0.5)

    def test_positions_reproducible(self):
        arr = ArrayGeometry("uniform-circular", 8, 0.5)
        np.testing.assert_array_equal(arr.element_positions(),
                                      arr.element_positions())

    def test_validation(self):
        with pytest.raises(ValueError):
            ArrayGeometry("hexagonal", 4, 0.5)
        with pytest.raises(ValueError):
            ArrayGeometry("uniform-linear", 0, 0.5)
        with pytest.raises(ValueError):
            ArrayGeometry("uniform-linear", 4, 0.0)


class TestMakeRandomChannel:
    def test_path_count_passthrough(self):
        ch = make_random_channel(7, 1, 100e-9, 2.4e9, UCA1, UCA1)
        assert len(ch.paths) == 1

    def test_deterministic(self):
        a = make_random_channel(7, 16, 100e-9, 2.4e9, UCA1, UCA1)
        b = make_random_channel(7, 16, 100e-9, 2.4e9, UCA1, UCA1)
        assert a == b

    def test_mean_delay_matches_spread(self):
        ch = make_random_channel(7, 200, 100e-9, 2.4e9, UCA1, UCA1)
        mean_delay = np.mean([p.delay_s for p in ch.paths])
        assert abs(mean_delay - 100e-9) / 100e-9 < 0.15

    def test_unit_mean_power(self):
        # gain standard deviations are normalized before the Gaussian draw
        powers = []
        for seed in range(300):
            ch = make_random_channel(seed, 16, 100e-9, 2.4e9, UCA1, UCA1)
            powers.append(sum(abs(p.gain) ** 2 for p in ch.paths))
        assert abs(np.mean(powers) - 1.0) < 0.1

    def test_validation(self):
        with pytest.raises(ValueError):
            make_random_channel(7, 0, 100e-9, 2.4e9, UCA1, UCA1)
        with pytest.raises(ValueError):
            make_random_channel(7, 4, 0.0, 2.4e9, UCA1, UCA1)


class TestSnapshotAt:
    def test_impulse_for_flat_channel(self):
        ch = single_path_channel()
        snap = snapshot_at(ch, (0.0, 0.0), 40e6, 40)
        assert abs(snap.taps[0, 0, 0] - 1.0) < 1e-9
        assert np.all(np.abs(snap.taps[0, 0, 1:]) < 1e-9)

    def test_pure(self):
        ch = single_path_channel(delay_s=30e-9, gain=0.7 + 0.1j, aoa=1.0)
        a = snapshot_at(ch, (0.01, 0.02), 40e6, 40)
        b = snapshot_at(ch, (0.01, 0.02), 40e6, 40)
        np.testing.assert_array_equal(a.taps, b.taps)

    def test_plane_wave_phase(self):
        # moving a quarter wavelength along the arrival direction shifts the
        # whole response by exactly -pi/2
        ch = single_path_channel(delay_s=25e-9, aoa=0.0)
        lam = ch.wavelength_m
        base = snapshot_at(ch, (0.0, 0.0), 40e6, 40)
        moved = snapshot_at(ch, (lam / 4, 0.0), 40e6, 40)
        np.testing.assert_allclose(moved.taps, base.taps * np.exp(-1j * np.pi / 2),
                                   atol=1e-12)

    def test_magnitude_independent_of_displacement(self):
        ch = single_path_channel(delay_s=25e-9, aoa=0.3)
        n0 = np.linalg.norm(snapshot_at(ch, (0.0, 0.0), 40e6, 40).taps)
        n1 = np.linalg.norm(snapshot_at(ch, (0.13, -0.07), 40e6, 40).taps)
        assert abs(n0 - n1) < 1e-9

    def test_validation(self):
        ch = single_path_channel()
        with pytest.raises(ValueError):
            snapshot_at(ch, (0, 0), 40e6, 1)
        with pytest.raises(ValueError):
            snapshot_at(ch, (0, 0), 0.0, 40)


class TestWalkSnapshots:
    def test_stationary_identical(self):
        ch = make_random_channel(3, 8, 100e-9, 2.4e9, UCA1, UCA1)
        traj = Trajectory((0.0, 0.0), (0.0, 0.0), 3.2e-3, 5)
        snaps = walk_snapshots(ch, traj, 40e6, 40)
        assert len(snaps) == 5
        for s in snaps[1:]:
            np.testing.assert_array_equal(s.taps, snaps[0].taps)

    def test_probe_spacing(self):
        traj = Trajectory((0.0, 0.0), (0.3175, 0.0), 3.2e-3, 10)
        pos = traj.positions()
        steps = np.linalg.norm(np.diff(pos, axis=0), axis=1)
        np.testing.assert_allclose(steps, 1.016e-3)

    def test_count(self):
        ch = make_random_channel(3, 4, 100e-9, 2.4e9, UCA1, UCA1)
        traj = Trajectory((0.0, 0.0), (0.3175, 0.0), 3.2e-3, 390)
        assert len(walk_snapshots(ch, traj, 40e6, 8)) == 390

    def test_matches_snapshot_at(self):
        tx = ArrayGeometry("uniform-circular", 2, 0.5)
        ch = make_random_channel(9, 8, 100e-9, 2.4e9, tx, tx)
        traj = Trajectory((0.0, 0.0), (0.3175, 0.0), 3.2e-3, 4)
        snaps = walk_snapshots(ch, traj, 40e6, 16)
        for n, pos in enumerate(traj.positions()):
            direct = snapshot_at(ch, pos, 40e6, 16)
            np.testing.assert_allclose(snaps[n].taps, direct.taps, atol=1e-12)


class TestAddNoise:
    def test_infinite_snr_sentinel(self):
        ch = single_path_channel()
        snap = snapshot_at(ch, (0, 0), 40e6, 8)
        assert add_noise(snap, np.inf, seed=0) is snap

    def test_deterministic(self):
        snap = snapshot_at(single_path_channel(), (0, 0), 40e6, 8)
        a = add_noise(snap, 20.0, seed=5)
        b = add_noise(snap, 20.0, seed=5)
        np.testing.assert_array_equal(a.taps, b.taps)

    def test_noise_power_ratio(self):
        snap = snapshot_at(single_path_channel(), (0, 0), 40e6, 8)
        sig_power = np.sum(np.abs(snap.taps) ** 2)
        ratios = []
        for seed in range(10_000):
            noisy = add_noise(snap, 20.0, seed=seed)
            ratios.append(np.sum(np.abs(noisy.taps - snap.taps) ** 2) / sig_power)
        assert abs(np.mean(ratios) - 0.01) / 0.01 < 0.05

    def test_zero_power_rejected(self):
        from linksig.channel import ChannelSnapshot

        snap = ChannelSnapshot(taps=np.zeros((1, 1, 4), dtype=complex),
                               sample_period_s=1e-7)
        with pytest.raises(ValueError):
            add_noise(snap, 20.0, seed=0)


def test_freq_response_superposition():
    # response of a two-path channel is the sum of its single-path parts
    p1 = Path(10e-9, 0.8 + 0.1j, 0.3, 1.1)
    p2 = Path(55e-9, -0.2 + 0.5j, 2.0, 4.0)
    tx = ArrayGeometry("uniform-circular", 2, 0.5)
    both = MultipathChannel(2.4e9, (p1, p2), tx, tx)
    one = MultipathChannel(2.4e9, (p1,), tx, tx)
    two = MultipathChannel(2.4e9, (p2,), tx, tx)
    freqs = np.linspace(0, 40e6, 17)
    d = (0.03, -0.01)
    np.testing.assert_allclose(
        freq_response(both, d, freqs),
        freq_response(one, d, freqs) + freq_response(two, d, freqs),
        atol=1e-12,
    )
