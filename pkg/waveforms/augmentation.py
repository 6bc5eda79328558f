# waveforms/augmentation.py
"""Les six transformations IQ indépendantes de la classe et les politiques
weak / moderate / strong qui les enchaînent.
"""
import logging

import numpy as np
from attrs import field, frozen, validators
from django.db import models

from waveforms.core import IqSignal, complex_gaussian, resample, support_power
from waveforms.exceptions import InvalidInputError

logger = logging.getLogger(__name__)

FREQ_OFFSET_RANGE_HZ = (-10e6, 10e6)
# Rapport bruit / signal tiré log-uniformément sur [e^-1, e^0.5]
NOISE_LOG_RATIO_RANGE = (-1.0, 0.5)
MASK_LENGTH_RANGE = (100, 300)
RESAMPLE_RATE_RANGE_HZ = (50e6, 150e6)
FADING_DOPPLER_RANGE_HZ = (50.0, 500.0)
DEFAULT_NUM_SINUSOIDS = 32


class Transform(models.TextChoices):
    # L'ordre de déclaration est l'ordre d'application
    FREQ_OFFSET = "freq_offset", "Décalage de fréquence"
    NOISE = "noise", "Bruit additif"
    CONJUGATE = "conjugate", "Conjugaison complexe"
    TIME_MASK = "time_mask", "Masquage temporel"
    RESAMPLE = "resample", "Rééchantillonnage"
    FADING = "fading", "Évanouissement de Rayleigh"


class StrengthTier(models.TextChoices):
    WEAK = "weak", "Faible"
    MODERATE = "moderate", "Modérée"
    STRONG = "strong", "Forte"


TIER_PROBABILITIES = {
    StrengthTier.WEAK: (0.5, 0.5, 0.5, 0.5, 0.0, 0.0),
    StrengthTier.MODERATE: (0.5, 1.0, 0.5, 0.5, 0.3, 0.3),
    StrengthTier.STRONG: (0.5, 1.0, 0.5, 0.5, 0.5, 0.5),
}


def _check_probabilities(instance, attribute, value):
    if len(value) != len(Transform.values):
        raise InvalidInputError(f"{len(Transform.values)} probabilités attendues, {len(value)} reçues")
    for transform, probability in value:
        if transform not in Transform.values:
            raise InvalidInputError(f"Transformation inconnue : {transform}")
        if not 0.0 <= probability <= 1.0:
            raise InvalidInputError(f"Probabilité hors de [0, 1] pour {transform} : {probability}")


@frozen
class AugmentationPolicy:
    tier: StrengthTier = field(converter=StrengthTier)
    probabilities: tuple = field(converter=tuple, validator=_check_probabilities)

    @classmethod
    def for_tier(cls, tier):
        tier = StrengthTier(tier)
        return cls(tier=tier, probabilities=tuple(zip(Transform, TIER_PROBABILITIES[tier])))

    def probability(self, transform):
        return dict(self.probabilities)[Transform(transform)]


@frozen(eq=False)
class AugmentationParams:
    """Paramètres tirés pour une application de politique."""

    freq_offset_hz: float = 0.0
    phase_rad: float = 0.0
    noise_gain: float = field(default=0.0, validator=validators.ge(0.0))
    mask_start: int = field(default=0, validator=validators.ge(0))
    mask_end: int = field(default=0)
    resample_rate_hz: float = field(default=100e6, validator=validators.gt(0.0))
    doppler_hz: float = field(default=0.0, validator=validators.ge(0.0))
    num_sinusoids: int = field(default=DEFAULT_NUM_SINUSOIDS, validator=validators.ge(1))
    # Phases α_m, β_m et θ du modèle somme-de-sinusoïdes
    fading_alpha: np.ndarray | None = None
    fading_beta: np.ndarray | None = None
    fading_theta: float = 0.0

    @mask_end.validator
    def _check_mask(self, attribute, value):
        if value < self.mask_start:
            raise InvalidInputError(f"Masque invalide : L={self.mask_start} > U={value}")


# -----------------
# Transformations élémentaires
# -----------------

def freq_offset(signal, f0_hz, theta_rad):
    k = np.arange(len(signal))
    rotation = np.exp(1j * (2 * np.pi * (f0_hz / signal.sample_rate_hz) * k + theta_rad))
    return signal.with_samples(signal.samples * rotation)


def draw_noise_gain(signal, rng):
    """γ tel que γ² vaille 0.3679 à 1.6487 fois la puissance du signal."""
    ratio = np.exp(rng.uniform(*NOISE_LOG_RATIO_RANGE))
    return float(np.sqrt(ratio * support_power(signal)))


def add_noise_aug(signal, gamma, rng):
    if gamma < 0:
        raise InvalidInputError(f"Gain de bruit négatif : {gamma}")
    if gamma == 0:
        return signal.with_samples(signal.samples.copy())
    return signal.with_samples(signal.samples + gamma * complex_gaussian(len(signal), rng))


def complex_conjugate(signal):
    return signal.with_samples(np.conj(signal.samples))


def time_mask(signal, start, end):
    """Met à zéro les échantillons [start, end)."""
    if start > end:
        raise InvalidInputError(f"Masque invalide : L={start} > U={end}")
    if start < 0 or end > len(signal):
        raise InvalidInputError(f"Masque [{start}, {end}) hors du signal de longueur {len(signal)}")
    masked = signal.samples.copy()
    masked[start:end] = 0
    return signal.with_samples(masked)


def fit_to_frame(samples, frame_len):
    """Recadrage centré ou zero-padding centré à frame_len échantillons."""
    size = samples.size
    if size >= frame_len:
        start = (size - frame_len) // 2
        return samples[start:start + frame_len]
    left = (frame_len - size) // 2
    framed = np.zeros(frame_len, dtype=samples.dtype)
    framed[left:left + size] = samples
    return framed


def random_resample(signal, new_rate_hz, frame_len=None):
    frame_len = frame_len or len(signal)
    resampled = resample(signal, new_rate_hz)
    # La trame reste interprétée à la fréquence nominale
    return IqSignal(fit_to_frame(resampled.samples, frame_len), signal.sample_rate_hz)


def draw_fading_phases(rng, num_sinusoids=DEFAULT_NUM_SINUSOIDS, realizations=None):
    """(α, β, θ) uniformes sur [0, 2π) ; une ligne par réalisation si demandé."""
    shape = (num_sinusoids,) if realizations is None else (realizations, num_sinusoids)
    alpha = rng.uniform(0.0, 2 * np.pi, size=shape)
    beta = rng.uniform(0.0, 2 * np.pi, size=shape)
    theta = rng.uniform(0.0, 2 * np.pi, size=None if realizations is None else realizations)
    return alpha, beta, theta


def clarke_gain(num_samples, doppler_hz, sample_rate_hz, alpha, beta, theta):
    """Processus h(k) = h_I(k) + j h_Q(k) de puissance moyenne unitaire.

    alpha/beta de forme (..., M), theta de forme (...) : la sortie est (..., num_samples).
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    theta = np.asarray(theta, dtype=float)
    num_sinusoids = alpha.shape[-1]
    k = np.arange(num_samples)
    shape = alpha.shape[:-1] + (num_samples,)
    h_i = np.zeros(shape)
    h_q = np.zeros(shape)
    step = 2 * np.pi * doppler_hz / sample_rate_hz
    for m in range(1, num_sinusoids + 1):
        spread = np.cos(((2 * m - 1) * np.pi + theta) / (4 * num_sinusoids))
        argument = step * spread[..., None] * k
        h_i += np.cos(argument + alpha[..., m - 1, None])
        h_q += np.sin(argument + beta[..., m - 1, None])
    return (h_i + 1j * h_q) / np.sqrt(num_sinusoids)


def rayleigh_fade(signal, doppler_hz, num_sinusoids, rng):
    """Évanouissement plat multiplicatif y(k)·h(k)."""
    if num_sinusoids < 1 or doppler_hz < 0:
        raise InvalidInputError(f"Canal de Rayleigh invalide : M={num_sinusoids}, fD={doppler_hz}")
    alpha, beta, theta = draw_fading_phases(rng, num_sinusoids)
    gain = clarke_gain(len(signal), doppler_hz, signal.sample_rate_hz, alpha, beta, theta)
    return signal.with_samples(signal.samples * gain)


# -----------------
# Politiques
# -----------------

def draw_params(signal, rng, num_sinusoids=DEFAULT_NUM_SINUSOIDS):
    length = len(signal)
    mask_length = min(int(rng.integers(MASK_LENGTH_RANGE[0], MASK_LENGTH_RANGE[1] + 1)), length)
    mask_start = int(rng.integers(0, length - mask_length + 1))
    alpha, beta, theta = draw_fading_phases(rng, num_sinusoids)
    return AugmentationParams(
        freq_offset_hz=rng.uniform(*FREQ_OFFSET_RANGE_HZ),
        phase_rad=rng.uniform(0.0, 2 * np.pi),
        noise_gain=draw_noise_gain(signal, rng),
        mask_start=mask_start,
        mask_end=mask_start + mask_length,
        resample_rate_hz=rng.uniform(*RESAMPLE_RATE_RANGE_HZ),
        doppler_hz=rng.uniform(*FADING_DOPPLER_RANGE_HZ),
        num_sinusoids=num_sinusoids,
        fading_alpha=alpha,
        fading_beta=beta,
        fading_theta=float(theta),
    )


def apply_policy(signal, policy, rng, frame_len=None):
    """Applique chaque transformation, dans l'ordre fixe, avec la probabilité du niveau."""
    frame_len = frame_len or len(signal)
    gates = rng.random(len(policy.probabilities)) < np.array([p for _, p in policy.probabilities])
    params = draw_params(signal, rng)
    out = signal
    for (transform, _), selected in zip(policy.probabilities, gates):
        if not selected:
            continue
        if transform == Transform.FREQ_OFFSET:
            out = freq_offset(out, params.freq_offset_hz, params.phase_rad)
        elif transform == Transform.NOISE:
            out = add_noise_aug(out, params.noise_gain, rng)
        elif transform == Transform.CONJUGATE:
            out = complex_conjugate(out)
        elif transform == Transform.TIME_MASK:
            out = time_mask(out, min(params.mask_start, len(out)), min(params.mask_end, len(out)))
        elif transform == Transform.RESAMPLE:
            out = random_resample(out, params.resample_rate_hz, frame_len)
        else:
            gain = clarke_gain(
                len(out), params.doppler_hz, out.sample_rate_hz,
                params.fading_alpha, params.fading_beta, params.fading_theta,
            )
            out = out.with_samples(out.samples * gain)
    return out.with_samples(fit_to_frame(out.samples, frame_len))
