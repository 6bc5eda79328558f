# waveforms/core.py
"""Primitives IQ complexes partagées par tous les modules DSP.

Conteneur de signal, puissance et RSB, filtrage FIR passe-bas et
rééchantillonnage rationnel.
"""
import logging
from fractions import Fraction

import numpy as np
from attrs import evolve, field, frozen
from scipy import signal as sp

from waveforms.exceptions import InvalidInputError

logger = logging.getLogger(__name__)

# Borne du dénominateur L/M pour le chemin polyphase
MAX_RATIONAL_DENOMINATOR = 1000
# Longueur du FIR de rééchantillonnage : TAPS_PER_RATE * max(L, M) + 1
RESAMPLE_TAPS_PER_RATE = 40


def _as_samples(value):
    return np.atleast_1d(np.asarray(value, dtype=np.complex128))


@frozen(eq=False)
class IqSignal:
    """Suite d'échantillons complexes en bande de base et sa fréquence d'échantillonnage."""

    samples: np.ndarray = field(converter=_as_samples)
    sample_rate_hz: float = field(converter=float)

    @samples.validator
    def _check_samples(self, attribute, value):
        if value.ndim != 1 or value.size == 0:
            raise InvalidInputError("Un signal IQ doit être un vecteur non vide.")

    @sample_rate_hz.validator
    def _check_rate(self, attribute, value):
        if not value > 0:
            raise InvalidInputError(f"Fréquence d'échantillonnage invalide : {value}")

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self):
        return self.samples.size / self.sample_rate_hz

    def with_samples(self, samples):
        return evolve(self, samples=samples)


@frozen(eq=False)
class FirFilter:
    taps: np.ndarray = field(converter=lambda taps: np.asarray(taps, dtype=np.float64))
    cutoff_hz: float = field(converter=float)
    sample_rate_hz: float = field(converter=float)

    @taps.validator
    def _check_taps(self, attribute, value):
        if value.ndim != 1 or value.size % 2 == 0:
            raise InvalidInputError("Un FIR à phase linéaire exige un nombre impair de coefficients.")

    @property
    def group_delay(self):
        return (self.taps.size - 1) // 2

    def response(self, freqs_hz):
        """Réponse fréquentielle complexe aux fréquences demandées (Hz)."""
        _, h = sp.freqz(self.taps, worN=np.atleast_1d(np.asarray(freqs_hz, dtype=float)), fs=self.sample_rate_hz)
        return h

    def apply(self, samples):
        # Retard de groupe compensé : la sortie reste alignée sur l'entrée
        samples = np.asarray(samples)
        full = np.convolve(samples, self.taps)
        return full[self.group_delay:self.group_delay + samples.size]


def _samples_of(signal):
    if isinstance(signal, IqSignal):
        return signal.samples
    return np.asarray(signal)


def signal_power(signal):
    """Moyenne de |x|² sur tous les échantillons."""
    samples = _samples_of(signal)
    if samples.size == 0:
        raise InvalidInputError("Puissance d'un signal vide indéfinie.")
    return float(np.mean(np.abs(samples) ** 2))


def support_power(signal):
    """Puissance moyenne sur le support non nul (l'impulsion, sans le padding)."""
    samples = _samples_of(signal)
    support = samples[np.abs(samples) > 0]
    if support.size == 0:
        return 0.0
    return float(np.mean(np.abs(support) ** 2))


def complex_gaussian(size, rng):
    """Bruit gaussien complexe circulaire de puissance unitaire."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def add_awgn(signal, snr_db, rng):
    noise_power = support_power(signal) / 10.0 ** (snr_db / 10.0)
    noise = np.sqrt(noise_power) * complex_gaussian(len(signal), rng)
    return signal.with_samples(signal.samples + noise)


def design_lowpass(cutoff_hz, sample_rate_hz, num_taps):
    """Passe-bas à sinus cardinal fenêtré (Hamming), gain continu normalisé à 1."""
    if not sample_rate_hz > 0:
        raise InvalidInputError(f"Fréquence d'échantillonnage invalide : {sample_rate_hz}")
    if num_taps < 1 or num_taps % 2 == 0:
        raise InvalidInputError(f"Nombre de coefficients pair ou nul : {num_taps}")
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise InvalidInputError(
            f"Coupure {cutoff_hz} Hz hors de ]0, {sample_rate_hz / 2}[ Hz"
        )
    taps = sp.firwin(num_taps, cutoff_hz, window="hamming", fs=sample_rate_hz)
    taps = taps / taps.sum()
    return FirFilter(taps=taps, cutoff_hz=cutoff_hz, sample_rate_hz=sample_rate_hz)


def rational_ratio(old_rate_hz, new_rate_hz):
    """Meilleure approximation L/M de new/old avec M <= MAX_RATIONAL_DENOMINATOR."""
    ratio = Fraction(new_rate_hz / old_rate_hz).limit_denominator(MAX_RATIONAL_DENOMINATOR)
    if ratio.numerator == 0:
        raise InvalidInputError(f"Rapport de fréquences trop faible : {new_rate_hz}/{old_rate_hz}")
    return ratio.numerator, ratio.denominator


def _fit_length(samples, length):
    if samples.size >= length:
        return samples[:length]
    return np.concatenate([samples, np.zeros(length - samples.size, dtype=samples.dtype)])


def resample(signal, new_rate_hz):
    """Interpolation par L, FIR passe-bas, décimation par M."""
    if not new_rate_hz > 0:
        raise InvalidInputError(f"Nouvelle fréquence invalide : {new_rate_hz}")
    up, down = rational_ratio(signal.sample_rate_hz, new_rate_hz)
    if up == down:
        return IqSignal(signal.samples.copy(), new_rate_hz)

    target_length = max(1, int(round(len(signal) * up / down)))
    upsampled_rate = signal.sample_rate_hz * up
    widest = max(up, down)
    lowpass = design_lowpass(
        cutoff_hz=upsampled_rate / (2 * widest),
        sample_rate_hz=upsampled_rate,
        num_taps=RESAMPLE_TAPS_PER_RATE * widest + 1,
    )
    # resample_poly multiplie les coefficients par L et compense le retard de groupe
    out = sp.resample_poly(signal.samples, up, down, window=lowpass.taps)
    logger.debug("resample %s -> %s Hz (L=%d, M=%d)", signal.sample_rate_hz, new_rate_hz, up, down)
    return IqSignal(_fit_length(out, target_length), new_rate_hz)
