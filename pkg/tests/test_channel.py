import math

import numpy as np
import pytest

from gmacsec import channel as ch


class TestBpsk:
    def test_mapping(self):
        assert np.array_equal(ch.bpsk(np.array([0, 1, 0])), np.array([1.0, -1.0, 1.0]))

    def test_all_zero(self):
        assert np.all(ch.bpsk(np.zeros(8, dtype=np.uint8)) == 1.0)

    def test_involution(self, rng):
        s = rng.choice([-1.0, 1.0], size=64)
        assert np.array_equal(ch.bpsk(ch.bpsk_demap(s)), s)


class TestTransmit:
    def test_noiseless_superposition(self, rng):
        params = ch.ChannelParams(1.0, 1.0, 0.0, 0.0)
        ones = np.ones(16)
        y = ch.transmit(ones, ones, params, ch.BOB, rng)
        assert np.allclose(y, 2.0)

    def test_noiseless_unequal_power(self, rng):
        params = ch.ChannelParams(1.5, 0.5, 0.0, 0.0)
        y = ch.transmit(np.ones(4), -np.ones(4), params, ch.EVE, rng)
        assert np.allclose(y, math.sqrt(1.5) - math.sqrt(0.5))
        assert y[0] == pytest.approx(0.5176, abs=1e-4)

    def test_noise_moments(self):
        rng = np.random.default_rng(3)
        params = ch.ChannelParams(1.0, 1.0, 0.49, 1.0)
        n = 1_000_000
        x1 = np.ones(n)
        x2 = -np.ones(n)
        y = ch.transmit(x1, x2, params, ch.BOB, rng)
        noise = y - (math.sqrt(1.0) - math.sqrt(1.0))
        se_mean = math.sqrt(0.49 / n)
        assert abs(noise.mean()) < 3 * se_mean
        se_var = 0.49 * math.sqrt(2.0 / n)
        assert abs(noise.var() - 0.49) < 3 * se_var

    def test_length_mismatch(self, rng):
        params = ch.ChannelParams(1.0, 1.0, 0.1, 0.2)
        with pytest.raises(ValueError):
            ch.transmit(np.ones(4), np.ones(5), params, ch.BOB, rng)


class TestSnr:
    def test_zero_db(self):
        params = ch.ChannelParams(1.0, 1.0, 2.0, 2.0)
        assert ch.snr_db(params, ch.BOB) == pytest.approx(0.0, abs=1e-12)

    def test_reference_bob_point(self):
        params = ch.ChannelParams(1.0, 1.0, 0.1778, 1.0)
        assert ch.snr_db(params, ch.BOB) == pytest.approx(10.51, abs=5e-3)

    def test_reference_eve_point(self):
        params = ch.ChannelParams(1.5, 0.5, 0.1, 0.5136)
        assert ch.snr_db(params, ch.EVE) == pytest.approx(5.90, abs=5e-3)

    def test_gap_equals_snr_difference(self):
        # variance-ratio gap equals the SNR difference at fixed powers
        params = ch.ChannelParams(1.3, 0.7, 0.21, 1.7)
        gap = 10 * math.log10(params.sigma2_eve / params.sigma2_bob)
        assert gap == pytest.approx(ch.snr_db(params, ch.BOB) - ch.snr_db(params, ch.EVE),
                                    abs=1e-12)

    def test_degraded_warning(self):
        with pytest.warns(UserWarning, match="degraded"):
            ch.ChannelParams(1.0, 1.0, 1.0, 0.5)

    def test_bad_powers(self):
        with pytest.raises(ValueError):
            ch.ChannelParams(0.0, 1.0, 0.1, 0.2)
