"""Tests for mapping, shaping, BER and RMS-deviation metrics."""

import numpy as np
import pytest

from fopaeq import dsp


CONST = dsp.qam16()


class TestConstellation:
    def test_unit_power(self):
        assert np.mean(np.abs(CONST.points) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_all_zero_bits_hit_the_corner(self):
        sym = dsp.map_bits([0, 0, 0, 0])
        assert sym[0] == pytest.approx((-3 - 3j) / np.sqrt(10), abs=1e-15)

    def test_gray_adjacency(self):
        # along each axis, neighbors in level differ by exactly one bit
        levels = np.array([-3.0, -1.0, 1.0, 3.0]) / np.sqrt(10)
        for axis in range(2):
            prev_bits = None
            for lv in levels:
                point = lv + 1j * levels[0] if axis == 0 else levels[0] + 1j * lv
                _, idx = dsp.nearest_points([point], CONST)
                bits = CONST.bits[idx[0]]
                if prev_bits is not None:
                    assert np.sum(bits != prev_bits) == 1
                prev_bits = bits

    def test_full_round_trip(self):
        bits = ((np.arange(16)[:, None] >> np.array([3, 2, 1, 0])) & 1).ravel()
        np.testing.assert_array_equal(dsp.demap_symbols(dsp.map_bits(bits)), bits)

    def test_large_random_round_trip(self):
        rng = np.random.default_rng(0)
        bits = rng.integers(0, 2, size=10**6).astype(np.uint8)
        np.testing.assert_array_equal(dsp.demap_symbols(dsp.map_bits(bits)), bits)

    def test_bit_count_must_divide(self):
        with pytest.raises(ValueError):
            dsp.map_bits([0, 1, 0])


class TestBer:
    def test_identical(self):
        assert dsp.count_ber([0, 1, 1], [0, 1, 1]) == (0, 3, 0.0)

    def test_one_in_400(self):
        tx = np.zeros(400, dtype=np.uint8)
        rx = tx.copy()
        rx[123] = 1
        assert dsp.count_ber(tx, rx)[2] == pytest.approx(0.0025)

    def test_complement(self):
        tx = np.resize([0, 1], 100)
        assert dsp.count_ber(tx, 1 - tx)[2] == 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a = rng.integers(0, 2, 500)
        b = rng.integers(0, 2, 500)
        assert dsp.count_ber(a, b) == dsp.count_ber(b, a)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            dsp.count_ber([0, 1], [0])


class TestRmsDeviation:
    def setup_method(self):
        rng = np.random.default_rng(2)
        self.tx = CONST.points[rng.integers(0, 16, 4000)]

    def test_identity(self):
        rp, ra = dsp.rms_deviation(self.tx, self.tx)
        assert rp == pytest.approx(0.0, abs=1e-12)
        assert ra == pytest.approx(0.0, abs=1e-12)

    def test_pure_rotation(self):
        rp, ra = dsp.rms_deviation(self.tx, self.tx * np.exp(1j * 0.1))
        assert rp == pytest.approx(0.1, abs=1e-12)
        assert ra == pytest.approx(0.0, abs=1e-12)

    def test_pure_scaling(self):
        rp, ra = dsp.rms_deviation(self.tx, 1.05 * self.tx)
        assert rp == pytest.approx(0.0, abs=1e-12)
        assert ra == pytest.approx(0.05, abs=1e-12)

    def test_wrap_invariance(self):
        rx = self.tx * np.exp(1j * 0.2)
        rp1, _ = dsp.rms_deviation(self.tx, rx)
        # adding full turns to the received phase must not change the metric
        rp2, _ = dsp.rms_deviation(self.tx, rx * np.exp(1j * 2 * np.pi))
        assert rp1 == pytest.approx(rp2, rel=1e-12)

    @pytest.mark.filterwarnings("ignore:constellation class")
    def test_near_pi_differences_wrap(self):
        tx = np.full(50, CONST.points[0])
        rx = tx * np.exp(1j * (np.pi - 0.05))
        rp, _ = dsp.rms_deviation(tx, rx)
        assert rp == pytest.approx(np.pi - 0.05, rel=1e-12)

    def test_empty_class_warns_and_excludes(self):
        tx = np.full(10, CONST.points[3])
        with pytest.warns(UserWarning):
            rp, ra = dsp.rms_deviation(tx, tx)
        assert rp == pytest.approx(0.0, abs=1e-12)
        assert ra == pytest.approx(0.0, abs=1e-12)


class TestShaping:
    CFG = dsp.ShapingConfig()

    def test_rolloff_domain(self):
        with pytest.raises(ValueError):
            dsp.ShapingConfig(rolloff=0.0)
        with pytest.raises(ValueError):
            dsp.ShapingConfig(rolloff=1.5)

    def test_combined_center_tap_is_unity(self):
        h = dsp.rrc_taps(self.CFG)
        comb = np.convolve(h, h)
        assert comb[comb.size // 2] == pytest.approx(1.0, abs=1e-3)

    def test_nyquist_isi_below_minus_40db(self):
        h = dsp.rrc_taps(self.CFG)
        comb = np.convolve(h, h)
        center = comb.size // 2
        sps = self.CFG.samples_per_symbol
        sym_taps = np.concatenate([comb[center::sps][1:], comb[center::-sps][1:]])
        assert 20 * np.log10(np.max(np.abs(sym_taps))) < -40.0

    def test_impulse_through_chain(self):
        sym = np.zeros(64, dtype=complex)
        sym[32] = 1.0
        out = dsp.symbol_samples(
            dsp.rrc_matched_filter(dsp.rrc_shape(sym, self.CFG), self.CFG), self.CFG
        )
        assert abs(out[32]) == pytest.approx(1.0, abs=1e-3)
        others = np.delete(np.abs(out), 32)
        assert 20 * np.log10(others.max()) < -40.0

    def test_random_symbols_evm(self):
        rng = np.random.default_rng(3)
        sym = CONST.points[rng.integers(0, 16, 4096)]
        out = dsp.symbol_samples(
            dsp.rrc_matched_filter(dsp.rrc_shape(sym, self.CFG), self.CFG), self.CFG
        )
        margin = self.CFG.filter_span_symbols
        err = out[margin:-margin] - sym[margin:-margin]
        evm_db = 10 * np.log10(np.mean(np.abs(err) ** 2) / np.mean(np.abs(sym) ** 2))
        assert evm_db < -40.0

    def test_occupied_bandwidth(self):
        rng = np.random.default_rng(4)
        sym = CONST.points[rng.integers(0, 16, 2**14)]
        wf = dsp.rrc_shape(sym, self.CFG)
        spec = np.abs(np.fft.fft(wf)) ** 2
        freqs = np.fft.fftfreq(wf.size, d=1.0 / self.CFG.sample_rate)
        total = spec.sum()
        edge = (1 + self.CFG.rolloff) * self.CFG.symbol_rate / 2  # 15.4 GHz
        inside = spec[np.abs(freqs) <= edge].sum()
        assert inside / total > 0.99


class TestSerialization:
    def test_binary_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        x = rng.normal(size=257) + 1j * rng.normal(size=257)
        path = tmp_path / "seq.bin"
        dsp.write_cseq(path, x)
        np.testing.assert_array_equal(dsp.read_cseq(path), x)

    def test_csv_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        x = rng.normal(size=40) + 1j * rng.normal(size=40)
        path = tmp_path / "seq.csv"
        dsp.write_cseq_csv(path, x)
        np.testing.assert_array_equal(dsp.read_cseq_csv(path), x)
