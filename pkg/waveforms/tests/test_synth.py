import numpy as np
from django.test import SimpleTestCase
from scipy import stats

from waveforms.core import IqSignal
from waveforms.exceptions import InvalidInputError
from waveforms.synth import (
    BARKER_CODES,
    COSTAS_ARRAYS,
    ChannelKind,
    ChannelModel,
    ClassParams,
    WaveformClass,
    WaveformSpec,
    apply_channel,
    barker_code,
    draw_spec,
    phase_function,
    place_in_frame,
    propagate,
    synthesize,
)

FS = 100e6


def lfm_spec(**overrides):
    values = dict(
        waveform_class=WaveformClass.LFM,
        carrier_hz=15e6,
        pulse_width_s=10e-6,
        class_params=ClassParams(bandwidth_hz=10e6, sweep_direction=1),
    )
    values.update(overrides)
    return WaveformSpec(**values)


def barker13_spec(carrier_hz=0.0):
    # 650 échantillons : 50 par bribe
    return WaveformSpec(
        waveform_class=WaveformClass.BPSK_BARKER,
        carrier_hz=carrier_hz,
        pulse_width_s=6.5e-6,
        class_params=ClassParams(code_bits=13),
    )


class WaveformClassTests(SimpleTestCase):

    def test_stable_codes(self):
        self.assertEqual(len(WaveformClass), 12)
        self.assertEqual(WaveformClass.LFM, 0)
        self.assertEqual(WaveformClass.T1, 6)
        self.assertEqual(WaveformClass.LFM_BPSK, 11)

    def test_published_barker_13(self):
        self.assertEqual(BARKER_CODES[13], (1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1))

    def test_costas_arrays_are_permutations_with_distinct_differences(self):
        for order, array in COSTAS_ARRAYS.items():
            self.assertEqual(sorted(array), list(range(1, order + 1)))
            for shift in range(1, order):
                differences = [array[i + shift] - array[i] for i in range(order - shift)]
                self.assertEqual(len(differences), len(set(differences)))

    def test_compound_barker_lengths(self):
        for length in (4, 9, 16):
            self.assertEqual(barker_code(length, compound=True).size, length)
        with self.assertRaises(InvalidInputError):
            barker_code(5)


class WaveformSpecTests(SimpleTestCase):

    def test_short_pulse_rejected(self):
        with self.assertRaises(InvalidInputError):
            lfm_spec(pulse_width_s=1e-7)

    def test_aliasing_carrier_rejected(self):
        with self.assertRaises(InvalidInputError):
            lfm_spec(carrier_hz=45e6)


class PhaseFunctionTests(SimpleTestCase):

    def test_lfm_zero_time_phase(self):
        self.assertEqual(phase_function(lfm_spec(), 0), 0.0)

    def test_out_of_range_index(self):
        spec = lfm_spec()
        with self.assertRaises(InvalidInputError):
            phase_function(spec, spec.num_samples)
        with self.assertRaises(InvalidInputError):
            phase_function(spec, -1)

    def test_barker_13_chip_phases(self):
        spec = barker13_spec()
        phases = [phase_function(spec, 25 + 50 * chip) for chip in range(13)]
        expected = [np.pi if bit < 0 else 0.0 for bit in BARKER_CODES[13]]
        np.testing.assert_allclose(phases, expected)
        jumps = np.abs(np.diff(phases))
        sign_changes = np.diff(BARKER_CODES[13]) != 0
        np.testing.assert_allclose(jumps[sign_changes], np.pi)
        np.testing.assert_allclose(jumps[~sign_changes], 0.0)

    def test_polytime_phases_have_two_states(self):
        rng = np.random.default_rng(4)
        for cls in (WaveformClass.T1, WaveformClass.T2, WaveformClass.T3, WaveformClass.T4):
            spec = draw_spec(cls, rng)
            phases = np.array([phase_function(spec, k) for k in range(0, spec.num_samples, 7)])
            distance = np.min(np.abs(phases[:, None] - np.array([0.0, np.pi, 2 * np.pi])), axis=1)
            self.assertLess(distance.max(), 1e-9, msg=cls.label)


class SynthesizeTests(SimpleTestCase):

    def test_unit_modulus_for_every_class(self):
        rng = np.random.default_rng(0)
        for cls in WaveformClass:
            for _ in range(5):
                signal = synthesize(draw_spec(cls, rng))
                np.testing.assert_allclose(np.abs(signal.samples), 1.0, atol=1e-12)

    def test_lfm_sweep_endpoints(self):
        spec = lfm_spec()
        signal = synthesize(spec)
        inst_freq = np.diff(np.unwrap(np.angle(signal.samples))) * FS / (2 * np.pi)
        bandwidth = spec.class_params.bandwidth_hz
        self.assertLess(abs(inst_freq[0] - spec.carrier_hz), 0.02 * bandwidth)
        self.assertLess(abs(inst_freq[-1] - (spec.carrier_hz + bandwidth)), 0.02 * bandwidth)

    def test_lfm_down_sweep(self):
        spec = lfm_spec(carrier_hz=25e6, class_params=ClassParams(bandwidth_hz=10e6, sweep_direction=-1))
        inst_freq = np.diff(np.unwrap(np.angle(synthesize(spec).samples))) * FS / (2 * np.pi)
        self.assertLess(abs(inst_freq[-1] - 15e6), 0.2e6)

    def test_nlfm_down_sweep(self):
        spec = lfm_spec(
            waveform_class=WaveformClass.NLFM,
            carrier_hz=25e6,
            class_params=ClassParams(bandwidth_hz=10e6, sweep_direction=-1),
        )
        inst_freq = np.diff(np.unwrap(np.angle(synthesize(spec).samples))) * FS / (2 * np.pi)
        self.assertLess(abs(inst_freq[0] - 25e6), 0.2e6)
        self.assertLess(abs(inst_freq[-1] - 15e6), 0.2e6)
        self.assertEqual(spec.frequency_extent_hz(), (15e6, 25e6))

    def test_barker_13_autocorrelation(self):
        samples = synthesize(barker13_spec()).samples
        acf = np.abs(np.correlate(samples, samples, mode="full"))
        center = samples.size - 1
        sidelobe = acf[center + 50:].max()
        self.assertAlmostEqual(acf[center] / sidelobe, 13.0, delta=13.0 * 0.05)

    def test_phase_delay_is_a_global_phase(self):
        first = synthesize(lfm_spec(phase_delay_rad=0.0)).samples
        second = synthesize(lfm_spec(phase_delay_rad=1.3)).samples
        np.testing.assert_allclose(second, first * np.exp(1.3j), atol=1e-12)

    def test_fsk_tones_inside_band(self):
        rng = np.random.default_rng(5)
        spec = draw_spec(WaveformClass.FSK4, rng)
        spectrum = np.abs(np.fft.fft(synthesize(spec).samples, 8192))
        freqs = np.fft.fftfreq(8192, d=1 / FS)
        occupied = freqs[spectrum >= spectrum.max() * 0.1]
        low, high = spec.frequency_extent_hz()
        separation = spec.class_params.freq_separation_hz
        self.assertGreaterEqual(occupied.min(), low - separation)
        self.assertLessEqual(occupied.max(), high + separation)


class DrawSpecTests(SimpleTestCase):

    def test_lfm_ranges(self):
        rng = np.random.default_rng(1)
        specs = [draw_spec(WaveformClass.LFM, rng) for _ in range(10_000)]
        carriers = np.array([spec.carrier_hz for spec in specs])
        widths = np.array([spec.pulse_width_s for spec in specs])
        self.assertTrue(np.all((carriers >= 10e6) & (carriers <= 20e6)))
        self.assertTrue(np.all((widths >= 5e-6) & (widths <= 10e-6)))
        self.assertGreater(stats.kstest(carriers, "uniform", args=(10e6, 10e6)).pvalue, 0.01)
        self.assertGreater(stats.kstest(widths, "uniform", args=(5e-6, 5e-6)).pvalue, 0.01)

    def test_wide_carrier_classes(self):
        rng = np.random.default_rng(2)
        carriers = [draw_spec(WaveformClass.T3, rng).carrier_hz for _ in range(500)]
        self.assertGreater(max(carriers), 20e6)
        self.assertLessEqual(max(carriers), 30e6)

    def test_costas_hops(self):
        rng = np.random.default_rng(3)
        hops = {draw_spec(WaveformClass.COSTAS_FM, rng).class_params.num_hops for _ in range(200)}
        self.assertEqual(hops, {5, 7, 10})

    def test_sweep_direction_drawn_for_lfm_and_nlfm(self):
        rng = np.random.default_rng(4)
        for cls in (WaveformClass.LFM, WaveformClass.NLFM):
            directions = {draw_spec(cls, rng).class_params.sweep_direction for _ in range(200)}
            self.assertEqual(directions, {1, -1})

    def test_fixed_seed_is_deterministic(self):
        for cls in WaveformClass:
            first = draw_spec(cls, np.random.default_rng(42))
            second = draw_spec(cls, np.random.default_rng(42))
            self.assertEqual(first, second)


class ChannelTests(SimpleTestCase):

    def setUp(self):
        self.signal = synthesize(lfm_spec())

    def test_degenerate_free_space_is_identity(self):
        channel = ChannelModel(p0=1.0, path_delay_samples=0, path_attenuation=1.0)
        out = apply_channel(self.signal, channel, np.random.default_rng(0))
        np.testing.assert_array_equal(out.samples, self.signal.samples)

    def test_pure_delay(self):
        channel = ChannelModel(p0=1.0, path_delay_samples=5, path_attenuation=1.0)
        out = apply_channel(self.signal, channel, np.random.default_rng(0))
        np.testing.assert_array_equal(out.samples[5:], self.signal.samples[:-5])
        np.testing.assert_array_equal(out.samples[:5], 0)

    def test_rayleigh_average_power(self):
        rng = np.random.default_rng(6)
        short = IqSignal(np.ones(64), FS)
        channel = ChannelModel(p0=0.0, max_doppler_hz=300.0)
        ratios = [np.mean(np.abs(apply_channel(short, channel, rng).samples) ** 2) for _ in range(2000)]
        self.assertAlmostEqual(np.mean(ratios), 1.0, delta=0.1)

    def test_propagate_kinds(self):
        channel = ChannelModel(p0=0.5, path_attenuation=0.5)
        free = propagate(self.signal, channel, ChannelKind.FREE_SPACE, np.random.default_rng(0))
        np.testing.assert_allclose(np.abs(free.samples), 0.5)

    def test_channel_model_invariants(self):
        with self.assertRaises(ValueError):
            ChannelModel(p0=1.5)
        with self.assertRaises(ValueError):
            ChannelModel(num_sinusoids=4)


class PlaceInFrameTests(SimpleTestCase):

    def test_random_offset_within_slack(self):
        pulse = IqSignal(np.ones(600), FS)
        rng = np.random.default_rng(0)
        for _ in range(50):
            framed, offset = place_in_frame(pulse, 1024, rng)
            self.assertEqual(len(framed), 1024)
            self.assertTrue(0 <= offset <= 424)
            self.assertEqual(np.count_nonzero(framed.samples), 600)
            self.assertEqual(framed.samples[offset], 1.0)
