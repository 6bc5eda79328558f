from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from scipy import stats

from waveforms import augmentation
from waveforms.augmentation import (
    AugmentationParams,
    AugmentationPolicy,
    StrengthTier,
    Transform,
    add_noise_aug,
    apply_policy,
    clarke_gain,
    complex_conjugate,
    draw_fading_phases,
    draw_noise_gain,
    draw_params,
    fit_to_frame,
    freq_offset,
    random_resample,
    rayleigh_fade,
    time_mask,
)
from waveforms.core import IqSignal, support_power
from waveforms.exceptions import InvalidInputError
from waveforms.synth import COSTAS_ARRAYS, ClassParams, WaveformClass, WaveformSpec, synthesize

FS = 100e6
DOPPLER_BINS = 8192

# Impulsions de 1000 échantillons, une par famille de modulation
TEMPLATE_SPECS = (
    WaveformSpec(
        waveform_class=WaveformClass.LFM, carrier_hz=15e6, pulse_width_s=10e-6,
        class_params=ClassParams(bandwidth_hz=15e6, sweep_direction=1),
    ),
    WaveformSpec(
        waveform_class=WaveformClass.BPSK_BARKER, carrier_hz=15e6, pulse_width_s=10e-6,
        class_params=ClassParams(code_bits=13),
    ),
    WaveformSpec(
        waveform_class=WaveformClass.COSTAS_FM, carrier_hz=15e6, pulse_width_s=10e-6,
        class_params=ClassParams(bandwidth_hz=15e6, num_hops=7, hop_sequence=COSTAS_ARRAYS[7]),
    ),
    WaveformSpec(
        waveform_class=WaveformClass.FSK2, carrier_hz=15e6, pulse_width_s=10e-6,
        class_params=ClassParams(freq_separation_hz=8e6, num_hops=8, hop_sequence=(0, 1, 1, 0, 1, 0, 0, 1)),
    ),
)


def tone(freq_hz, length=1024):
    k = np.arange(length)
    return IqSignal(np.exp(2j * np.pi * freq_hz / FS * k), FS)


def random_frame(seed=0, length=1024):
    rng = np.random.default_rng(seed)
    return IqSignal(rng.standard_normal(length) + 1j * rng.standard_normal(length), FS)


def pulse_frame(spec, length=1024):
    samples = synthesize(spec).samples
    return np.pad(samples, (0, length - samples.size))


def matched_filter_class(samples, templates):
    """Classe du gabarit de plus forte corrélation normalisée, à retard nul.

    Recherche Doppler par FFT ; la conjuguée est aussi essayée.
    """
    scores = []
    for template in templates:
        best = 0.0
        for candidate in (samples, np.conj(samples)):
            peak = np.abs(np.fft.fft(candidate * np.conj(template), DOPPLER_BINS)).max()
            best = max(best, peak / (np.linalg.norm(candidate) * np.linalg.norm(template)))
        scores.append(best)
    return int(np.argmax(scores))


class FreqOffsetTests(SimpleTestCase):

    def test_zero_offset_is_identity(self):
        signal = random_frame()
        np.testing.assert_array_equal(freq_offset(signal, 0.0, 0.0).samples, signal.samples)

    def test_magnitude_preserved(self):
        signal = random_frame(1)
        out = freq_offset(signal, 3.7e6, 1.1)
        np.testing.assert_allclose(np.abs(out.samples), np.abs(signal.samples), rtol=1e-12)

    def test_tone_moves_by_offset(self):
        out = freq_offset(tone(10e6), 5e6, 0.0)
        freqs = np.fft.fftfreq(1024, d=1 / FS)
        peak = freqs[np.argmax(np.abs(np.fft.fft(out.samples)))]
        self.assertLessEqual(abs(peak - 15e6), FS / 1024)


class NoiseTests(SimpleTestCase):

    def test_zero_gain_is_identity(self):
        signal = random_frame()
        out = add_noise_aug(signal, 0.0, np.random.default_rng(0))
        np.testing.assert_array_equal(out.samples, signal.samples)

    def test_negative_gain_rejected(self):
        with self.assertRaises(InvalidInputError):
            add_noise_aug(random_frame(), -1.0, np.random.default_rng(0))

    def test_noise_to_signal_ratio_range(self):
        signal = tone(8e6)
        rng = np.random.default_rng(3)
        power = support_power(signal)
        ratios = np.array([draw_noise_gain(signal, rng) ** 2 / power for _ in range(10_000)])
        self.assertGreaterEqual(ratios.min(), np.exp(-1.0) * (1 - 1e-9))
        self.assertLessEqual(ratios.max(), np.exp(0.5) * (1 + 1e-9))

    def test_fixed_seed_is_deterministic(self):
        signal = random_frame()
        first = add_noise_aug(signal, 0.7, np.random.default_rng(5))
        second = add_noise_aug(signal, 0.7, np.random.default_rng(5))
        np.testing.assert_array_equal(first.samples, second.samples)


class ConjugateTests(SimpleTestCase):

    def test_involution(self):
        signal = random_frame()
        np.testing.assert_array_equal(complex_conjugate(complex_conjugate(signal)).samples, signal.samples)

    def test_real_input_unchanged(self):
        signal = IqSignal(np.linspace(-1, 1, 64), FS)
        np.testing.assert_array_equal(complex_conjugate(signal).samples, signal.samples)

    def test_spectrum_mirrored(self):
        spec = WaveformSpec(
            waveform_class=WaveformClass.LFM,
            carrier_hz=12e6,
            pulse_width_s=8e-6,
            class_params=ClassParams(bandwidth_hz=15e6),
        )
        signal = synthesize(spec)
        n = len(signal)
        original = np.abs(np.fft.fft(signal.samples))
        mirrored = np.abs(np.fft.fft(complex_conjugate(signal).samples))
        np.testing.assert_allclose(mirrored, original[(-np.arange(n)) % n], atol=1e-8)


class TimeMaskTests(SimpleTestCase):

    def test_empty_mask_is_identity(self):
        signal = random_frame()
        np.testing.assert_array_equal(time_mask(signal, 200, 200).samples, signal.samples)

    def test_full_mask_zeroes_everything(self):
        signal = random_frame()
        self.assertFalse(np.any(time_mask(signal, 0, len(signal)).samples))

    def test_partial_mask(self):
        signal = random_frame()
        out = time_mask(signal, 100, 250).samples
        self.assertFalse(np.any(out[100:250]))
        np.testing.assert_array_equal(out[:100], signal.samples[:100])
        np.testing.assert_array_equal(out[250:], signal.samples[250:])

    def test_reversed_bounds_rejected(self):
        with self.assertRaises(InvalidInputError):
            time_mask(random_frame(), 300, 200)

    def test_drawn_mask_lengths(self):
        signal = random_frame()
        rng = np.random.default_rng(2)
        for _ in range(1000):
            params = draw_params(signal, rng)
            self.assertTrue(100 <= params.mask_end - params.mask_start <= 300)
            self.assertLessEqual(params.mask_end, len(signal))

    def test_params_validate_mask_order(self):
        with self.assertRaises(InvalidInputError):
            AugmentationParams(mask_start=10, mask_end=5)


class RandomResampleTests(SimpleTestCase):

    def test_identity_rate(self):
        signal = tone(7e6)
        out = random_resample(signal, FS, 1024)
        error = np.linalg.norm(out.samples - signal.samples) / np.linalg.norm(signal.samples)
        self.assertLessEqual(error, 1e-3)

    def test_half_rate_halves_support(self):
        samples = np.zeros(1024, dtype=complex)
        samples[312:712] = np.exp(2j * np.pi * 5e6 / FS * np.arange(400))
        out = random_resample(IqSignal(samples, FS), FS / 2, 1024)
        self.assertEqual(len(out), 1024)
        support = np.count_nonzero(np.abs(out.samples) > 0.5)
        self.assertLessEqual(abs(support - 200), 4)

    def test_frame_length_constant(self):
        signal = random_frame()
        for rate in (50e6, 73.3e6, 120e6, 150e6):
            self.assertEqual(len(random_resample(signal, rate, 1024)), 1024)

    def test_fit_to_frame_centres(self):
        np.testing.assert_array_equal(fit_to_frame(np.arange(1, 5), 8), [0, 0, 1, 2, 3, 4, 0, 0])
        np.testing.assert_array_equal(fit_to_frame(np.arange(10), 4), [3, 4, 5, 6])


class RayleighFadingTests(SimpleTestCase):

    def test_unit_mean_power(self):
        rng = np.random.default_rng(11)
        alpha, beta, theta = draw_fading_phases(rng, 32, realizations=10_000)
        gain = clarke_gain(100, 200.0, FS, alpha, beta, theta)
        self.assertEqual(gain.shape, (10_000, 100))
        self.assertAlmostEqual(np.mean(np.abs(gain) ** 2), 1.0, delta=0.05)

    def test_envelope_is_rayleigh(self):
        rng = np.random.default_rng(12)
        alpha, beta, theta = draw_fading_phases(rng, 128, realizations=100_000)
        envelope = np.abs(clarke_gain(1, 100.0, FS, alpha, beta, theta)[:, 0])
        result = stats.kstest(envelope, "rayleigh", args=(0, 1 / np.sqrt(2)))
        self.assertGreater(result.pvalue, 0.01)

    def test_default_sinusoid_count_has_small_ks_distance(self):
        """Avec 32 sinusoïdes, distance de Kolmogorov-Smirnov à la loi de Rayleigh inférieure à 0,01."""
        rng = np.random.default_rng(13)
        alpha, beta, theta = draw_fading_phases(rng, 32, realizations=100_000)
        envelope = np.abs(clarke_gain(1, 100.0, FS, alpha, beta, theta)[:, 0])
        self.assertLess(stats.kstest(envelope, "rayleigh", args=(0, 1 / np.sqrt(2))).statistic, 0.01)

    def test_zero_doppler_freezes_gain(self):
        signal = random_frame()
        out = rayleigh_fade(signal, 0.0, 32, np.random.default_rng(0))
        ratio = out.samples / signal.samples
        np.testing.assert_allclose(ratio, ratio[0], rtol=1e-10)

    def test_invalid_parameters(self):
        with self.assertRaises(InvalidInputError):
            rayleigh_fade(random_frame(), 10.0, 0, np.random.default_rng(0))


class PolicyTests(SimpleTestCase):

    def test_tier_table(self):
        weak = AugmentationPolicy.for_tier("weak")
        self.assertEqual(weak.probability(Transform.RESAMPLE), 0.0)
        self.assertEqual(weak.probability(Transform.FADING), 0.0)
        moderate = AugmentationPolicy.for_tier(StrengthTier.MODERATE)
        self.assertEqual(moderate.probability(Transform.NOISE), 1.0)
        self.assertEqual(moderate.probability(Transform.FADING), 0.3)
        strong = AugmentationPolicy.for_tier("strong")
        self.assertEqual(
            [p for _, p in strong.probabilities], [0.5, 1.0, 0.5, 0.5, 0.5, 0.5]
        )
        self.assertEqual([t for t, _ in strong.probabilities], list(Transform))

    def test_invalid_probability_rejected(self):
        probabilities = [(transform, 0.5) for transform in Transform]
        probabilities[0] = (Transform.FREQ_OFFSET, 1.5)
        with self.assertRaises(InvalidInputError):
            AugmentationPolicy(tier="weak", probabilities=probabilities)

    def test_weak_never_resamples_or_fades(self):
        policy = AugmentationPolicy.for_tier("weak")
        rng = np.random.default_rng(0)
        signal = tone(9e6)
        with mock.patch.object(augmentation, "random_resample") as resample_mock, \
                mock.patch.object(augmentation, "clarke_gain") as gain_mock:
            for _ in range(200):
                apply_policy(signal, policy, rng)
        resample_mock.assert_not_called()
        gain_mock.assert_not_called()

    def test_zero_probabilities_is_identity(self):
        policy = AugmentationPolicy(tier="strong", probabilities=[(t, 0.0) for t in Transform])
        signal = random_frame()
        out = apply_policy(signal, policy, np.random.default_rng(0))
        np.testing.assert_array_equal(out.samples, signal.samples)

    def test_fixed_seed_is_byte_identical(self):
        policy = AugmentationPolicy.for_tier("strong")
        signal = tone(11e6)
        first = apply_policy(signal, policy, np.random.default_rng(21))
        second = apply_policy(signal, policy, np.random.default_rng(21))
        self.assertEqual(first.samples.tobytes(), second.samples.tobytes())

    def test_frame_length_preserved(self):
        policy = AugmentationPolicy.for_tier("strong")
        rng = np.random.default_rng(8)
        signal = tone(11e6)
        for _ in range(30):
            self.assertEqual(len(apply_policy(signal, policy, rng, frame_len=1024)), 1024)


class MatchedFilterTests(SimpleTestCase):

    def setUp(self):
        self.templates = [pulse_frame(spec) for spec in TEMPLATE_SPECS]
        weak = AugmentationPolicy.for_tier(StrengthTier.WEAK)
        # Niveau faible sans bruit : décalage, conjugaison et masque seuls
        self.policy = AugmentationPolicy(
            tier=StrengthTier.WEAK,
            probabilities=[(t, 0.0 if t == Transform.NOISE else p) for t, p in weak.probabilities],
        )

    def test_clean_pulses_match_their_own_template(self):
        for index, template in enumerate(self.templates):
            self.assertEqual(matched_filter_class(template, self.templates), index)

    def test_weak_views_keep_the_matched_class(self):
        rng = np.random.default_rng(30)
        for index, template in enumerate(self.templates):
            for _ in range(10):
                view = apply_policy(IqSignal(template, FS), self.policy, rng)
                self.assertEqual(matched_filter_class(view.samples, self.templates), index)
