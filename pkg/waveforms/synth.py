# waveforms/synth.py
"""Synthèse des 12 formes d'onde intra-impulsion et du canal de propagation.

Modèle : y(k) = exp(j(θ(k) + 2π fc/fs k + θp)) ⊗ h(k) + n(k). Seule la loi de
phase θ(k) dépend de la classe ; porteuse, largeur, phase de propagation et
canal sont des paramètres indépendants de la classe.
"""
import logging
import math

import numpy as np
from attrs import field, frozen, validators
from django.db import models

from waveforms.augmentation import rayleigh_fade
from waveforms.core import IqSignal
from waveforms.exceptions import InvalidInputError

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE_HZ = 100e6
FRAME_LENGTH = 1024
MIN_PULSE_SAMPLES = 16

CARRIER_RANGE_HZ = (10e6, 20e6)
WIDE_CARRIER_RANGE_HZ = (10e6, 30e6)
PULSE_WIDTH_RANGE_S = (5e-6, 10e-6)
BANDWIDTH_RANGE_HZ = (10e6, 20e6)
POLYTIME_BANDWIDTH_RANGE_HZ = (5e6, 10e6)
FREQ_SEPARATION_RANGE_HZ = (5e6, 10e6)
BARKER_LENGTHS = (7, 11, 13)
COMPOUND_BARKER_LENGTHS = (4, 9, 16)
COSTAS_HOPS = (5, 7, 10)
POLYTIME_SEGMENTS = (18, 20, 22)
POLYTIME_PHASE_STATES = 2
FSK_SYMBOLS = 8

# Atténuation, retard et Doppler du canal : absents de la table des paramètres
PATH_ATTENUATION_RANGE = (0.5, 1.0)
MAX_PATH_DELAY_SAMPLES = 10
DOPPLER_RANGE_HZ = (50.0, 500.0)


class WaveformClass(models.IntegerChoices):
    LFM = 0, "LFM"
    NLFM = 1, "NLFM"
    BPSK_BARKER = 2, "BPSK"
    COSTAS_FM = 3, "CostasFM"
    FSK2 = 4, "2FSK"
    FSK4 = 5, "4FSK"
    T1 = 6, "T1"
    T2 = 7, "T2"
    T3 = 8, "T3"
    T4 = 9, "T4"
    LFM_FSK2 = 10, "LFM-2FSK"
    LFM_BPSK = 11, "LFM-BPSK"


class ChannelKind(models.TextChoices):
    FREE_SPACE = "free_space", "Espace libre"
    RAYLEIGH = "rayleigh", "Rayleigh"


BARKER_CODES = {
    2: (1, -1),
    3: (1, 1, -1),
    4: (1, 1, -1, 1),
    7: (1, 1, 1, -1, -1, 1, -1),
    11: (1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1),
    13: (1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1),
}

# Codes composés (Barker ⊗ Barker) pour la composante BPSK du LFM-BPSK
COMPOUND_BARKER_FACTORS = {4: 2, 9: 3, 16: 4}

# Welch (ordres 5 et 10, p = 7 et 11) et Lempel sur GF(9) (ordre 7)
COSTAS_ARRAYS = {
    5: (2, 1, 5, 3, 4),
    7: (2, 1, 6, 4, 7, 3, 5),
    10: (2, 4, 8, 5, 10, 9, 7, 3, 6, 1),
}

_WIDE_CARRIER_CLASSES = {WaveformClass.T3, WaveformClass.T4, WaveformClass.LFM_FSK2}
_POLYTIME_CLASSES = {WaveformClass.T1, WaveformClass.T2, WaveformClass.T3, WaveformClass.T4}


def barker_code(length, compound=False):
    if compound:
        factor = COMPOUND_BARKER_FACTORS.get(length)
        if factor is None:
            raise InvalidInputError(f"Pas de code Barker composé de longueur {length}")
        base = np.array(BARKER_CODES[factor])
        return np.kron(base, base)
    if length not in BARKER_CODES:
        raise InvalidInputError(f"Pas de code Barker de longueur {length}")
    return np.array(BARKER_CODES[length])


@frozen
class ClassParams:
    bandwidth_hz: float | None = None
    sweep_direction: int = field(default=1, validator=validators.in_((1, -1)))
    code_bits: int | None = None
    num_hops: int | None = None
    freq_separation_hz: float | None = None
    num_phase_states: int | None = None
    num_segments: int | None = None
    # Ordre des sauts (Costas) ou suite des symboles (FSK)
    hop_sequence: tuple = field(default=(), converter=tuple)


@frozen
class WaveformSpec:
    waveform_class: WaveformClass = field(converter=WaveformClass)
    carrier_hz: float = field(converter=float)
    pulse_width_s: float = field(converter=float)
    class_params: ClassParams = field(factory=ClassParams)
    sample_rate_hz: float = field(default=DEFAULT_SAMPLE_RATE_HZ, converter=float)
    phase_delay_rad: float = field(default=0.0, converter=float)

    def __attrs_post_init__(self):
        if self.num_samples < MIN_PULSE_SAMPLES:
            raise InvalidInputError(
                f"Impulsion de {self.num_samples} échantillons (< {MIN_PULSE_SAMPLES})"
            )
        nyquist = self.sample_rate_hz / 2
        if self.carrier_hz + self.occupied_bandwidth_hz / 2 >= nyquist:
            raise InvalidInputError("Porteuse + B/2 au-delà de Nyquist")
        low, high = self.frequency_extent_hz()
        if low <= -nyquist or high >= nyquist:
            raise InvalidInputError(f"Excursion [{low}, {high}] Hz repliée (fs={self.sample_rate_hz})")

    @property
    def num_samples(self):
        return int(round(self.pulse_width_s * self.sample_rate_hz))

    @property
    def occupied_bandwidth_hz(self):
        params = self.class_params
        cls = self.waveform_class
        if cls in (WaveformClass.FSK2, WaveformClass.FSK4):
            return (_num_tones(cls) - 1) * params.freq_separation_hz
        if cls == WaveformClass.LFM_FSK2:
            return params.bandwidth_hz + params.freq_separation_hz
        return params.bandwidth_hz or 0.0

    def frequency_extent_hz(self):
        """Fréquences instantanées extrêmes (porteuse comprise)."""
        params = self.class_params
        cls = self.waveform_class
        low = high = 0.0
        if cls in (WaveformClass.LFM, WaveformClass.NLFM):
            if params.sweep_direction > 0:
                high = params.bandwidth_hz
            else:
                low = -params.bandwidth_hz
        elif cls in (WaveformClass.COSTAS_FM, WaveformClass.FSK2, WaveformClass.FSK4):
            offsets = _hop_offsets(self)
            low, high = float(offsets.min()), float(offsets.max())
        elif cls == WaveformClass.T3:
            high = params.bandwidth_hz
        elif cls == WaveformClass.T4:
            low, high = -params.bandwidth_hz / 2, params.bandwidth_hz / 2
        elif cls == WaveformClass.LFM_FSK2:
            half = params.bandwidth_hz / 2 + params.freq_separation_hz / 2
            low, high = -half, half
        elif cls == WaveformClass.LFM_BPSK:
            low, high = -params.bandwidth_hz / 2, params.bandwidth_hz / 2
        return self.carrier_hz + low, self.carrier_hz + high


@frozen
class ChannelModel:
    p0: float = field(default=0.5, validator=[validators.ge(0.0), validators.le(1.0)])
    path_delay_samples: int = field(default=0, validator=validators.ge(0))
    path_attenuation: float = field(default=1.0, validator=validators.gt(0.0))
    max_doppler_hz: float = field(default=100.0, validator=validators.ge(0.0))
    num_sinusoids: int = field(default=32, validator=validators.ge(8))


# -----------------
# Lois de phase
# -----------------

def _num_tones(waveform_class):
    return 4 if waveform_class == WaveformClass.FSK4 else 2


def _hop_offsets(spec):
    """Décalage de fréquence (Hz, relatif à la porteuse) de chaque saut/symbole."""
    params = spec.class_params
    sequence = np.asarray(params.hop_sequence, dtype=float)
    if spec.waveform_class == WaveformClass.COSTAS_FM:
        step = params.bandwidth_hz / params.num_hops
        return (sequence - (params.num_hops + 1) / 2) * step
    tones = 2 if spec.waveform_class == WaveformClass.LFM_FSK2 else _num_tones(spec.waveform_class)
    return (sequence - (tones - 1) / 2) * params.freq_separation_hz


def _segment_index(t, duration, count):
    return np.minimum((t * count / duration).astype(int), count - 1)


def _lfm_phase(t, duration, bandwidth, direction=1):
    return direction * np.pi * (bandwidth / duration) * t ** 2


def _centered_lfm_phase(t, duration, bandwidth):
    # Balayage de -B/2 à +B/2 autour de la porteuse
    return np.pi * (bandwidth / duration) * t ** 2 - np.pi * bandwidth * t


def _nlfm_phase(t, duration, bandwidth, direction=1):
    # Loi sinusoïdale en S, excursion totale B
    return direction * 2 * np.pi * (bandwidth / 2) * (t - (duration / np.pi) * np.sin(np.pi * t / duration))


def _code_phase(t, duration, code):
    chips = _segment_index(t, duration, code.size)
    return np.where(code[chips] < 0, np.pi, 0.0)


def _hop_phase(t, duration, offsets):
    hops = _segment_index(t, duration, offsets.size)
    return 2 * np.pi * offsets[hops] * t


def _polytime_phase(t, duration, waveform_class, states, segments, bandwidth):
    n, k = states, segments
    if waveform_class == WaveformClass.T1:
        j = _segment_index(t, duration, k)
        argument = (k * t - j * duration) * (j * n / duration)
    elif waveform_class == WaveformClass.T2:
        j = _segment_index(t, duration, k)
        argument = (k * t - j * duration) * ((2 * j - k + 1) / duration) * (n / 2)
    elif waveform_class == WaveformClass.T3:
        argument = n * bandwidth * t ** 2 / (2 * duration)
    else:
        argument = n * bandwidth * t ** 2 / (2 * duration) - n * bandwidth * t / 2
    return np.mod((2 * np.pi / n) * np.floor(argument), 2 * np.pi)


def _phase_law(spec, k):
    """θ(k) vectorisé pour des indices d'échantillons dans l'impulsion."""
    t = np.asarray(k, dtype=float) / spec.sample_rate_hz
    duration = spec.num_samples / spec.sample_rate_hz
    params = spec.class_params
    cls = spec.waveform_class

    if cls == WaveformClass.LFM:
        return _lfm_phase(t, duration, params.bandwidth_hz, params.sweep_direction)
    if cls == WaveformClass.NLFM:
        return _nlfm_phase(t, duration, params.bandwidth_hz, params.sweep_direction)
    if cls == WaveformClass.BPSK_BARKER:
        return _code_phase(t, duration, barker_code(params.code_bits))
    if cls in (WaveformClass.COSTAS_FM, WaveformClass.FSK2, WaveformClass.FSK4):
        return _hop_phase(t, duration, _hop_offsets(spec))
    if cls in _POLYTIME_CLASSES:
        return _polytime_phase(
            t, duration, cls, params.num_phase_states, params.num_segments, params.bandwidth_hz
        )
    if cls == WaveformClass.LFM_FSK2:
        return _centered_lfm_phase(t, duration, params.bandwidth_hz) + _hop_phase(t, duration, _hop_offsets(spec))
    # LFM-BPSK
    return _centered_lfm_phase(t, duration, params.bandwidth_hz) + _code_phase(
        t, duration, barker_code(params.code_bits, compound=True)
    )


def phase_function(spec, k):
    """Phase instantanée θ(k) propre à la classe (radians, sans porteuse)."""
    if not 0 <= k < spec.num_samples:
        raise InvalidInputError(f"Indice {k} hors de l'impulsion [0, {spec.num_samples})")
    return float(_phase_law(spec, np.array([k]))[0])


def synthesize(spec):
    """Impulsion sans bruit ni canal, module constant égal à 1."""
    k = np.arange(spec.num_samples)
    phase = _phase_law(spec, k) + 2 * np.pi * (spec.carrier_hz / spec.sample_rate_hz) * k + spec.phase_delay_rad
    return IqSignal(np.exp(1j * phase), spec.sample_rate_hz)


# -----------------
# Tirage des paramètres
# -----------------

def _fsk_symbols(tones, rng):
    # Chaque tonalité apparaît, l'ordre est aléatoire
    return tuple(int(s) for s in rng.permutation(np.tile(np.arange(tones), FSK_SYMBOLS // tones)))


def _draw_class_params(waveform_class, rng):
    cls = waveform_class
    if cls in (WaveformClass.LFM, WaveformClass.NLFM):
        bandwidth = rng.uniform(*BANDWIDTH_RANGE_HZ)
        direction = int(rng.choice((1, -1)))
        return ClassParams(bandwidth_hz=bandwidth, sweep_direction=direction)
    if cls == WaveformClass.BPSK_BARKER:
        return ClassParams(code_bits=int(rng.choice(BARKER_LENGTHS)))
    if cls == WaveformClass.COSTAS_FM:
        hops = int(rng.choice(COSTAS_HOPS))
        return ClassParams(
            bandwidth_hz=rng.uniform(*BANDWIDTH_RANGE_HZ),
            num_hops=hops,
            hop_sequence=COSTAS_ARRAYS[hops],
        )
    if cls in (WaveformClass.FSK2, WaveformClass.FSK4):
        tones = _num_tones(cls)
        return ClassParams(
            freq_separation_hz=rng.uniform(*FREQ_SEPARATION_RANGE_HZ),
            num_hops=FSK_SYMBOLS,
            hop_sequence=_fsk_symbols(tones, rng),
        )
    if cls in (WaveformClass.T1, WaveformClass.T2):
        return ClassParams(
            num_phase_states=POLYTIME_PHASE_STATES,
            num_segments=int(rng.choice(POLYTIME_SEGMENTS)),
        )
    if cls in (WaveformClass.T3, WaveformClass.T4):
        return ClassParams(
            num_phase_states=POLYTIME_PHASE_STATES,
            num_segments=int(rng.choice(POLYTIME_SEGMENTS)),
            bandwidth_hz=rng.uniform(*POLYTIME_BANDWIDTH_RANGE_HZ),
        )
    if cls == WaveformClass.LFM_FSK2:
        return ClassParams(
            bandwidth_hz=rng.uniform(*BANDWIDTH_RANGE_HZ),
            freq_separation_hz=rng.uniform(*FREQ_SEPARATION_RANGE_HZ),
            num_hops=FSK_SYMBOLS,
            hop_sequence=_fsk_symbols(2, rng),
        )
    return ClassParams(
        bandwidth_hz=rng.uniform(*BANDWIDTH_RANGE_HZ),
        code_bits=int(rng.choice(COMPOUND_BARKER_LENGTHS)),
    )


def draw_spec(waveform_class, rng, sample_rate_hz=DEFAULT_SAMPLE_RATE_HZ):
    cls = WaveformClass(waveform_class)
    carrier_range = WIDE_CARRIER_RANGE_HZ if cls in _WIDE_CARRIER_CLASSES else CARRIER_RANGE_HZ
    carrier = rng.uniform(*carrier_range)
    pulse_width = rng.uniform(*PULSE_WIDTH_RANGE_S)
    params = _draw_class_params(cls, rng)
    phase_delay = rng.uniform(0.0, 2 * math.pi)
    return WaveformSpec(
        waveform_class=cls,
        carrier_hz=carrier,
        pulse_width_s=pulse_width,
        class_params=params,
        sample_rate_hz=sample_rate_hz,
        phase_delay_rad=phase_delay,
    )


def place_in_frame(signal, frame_len, rng):
    """Zero-padding jusqu'à frame_len avec un décalage de départ aléatoire."""
    samples = signal.samples[:frame_len]
    offset = int(rng.integers(0, frame_len - samples.size + 1))
    framed = np.zeros(frame_len, dtype=np.complex128)
    framed[offset:offset + samples.size] = samples
    return signal.with_samples(framed), offset


# -----------------
# Canal
# -----------------

def draw_channel(rng, p0=0.5):
    return ChannelModel(
        p0=p0,
        path_delay_samples=int(rng.integers(0, MAX_PATH_DELAY_SAMPLES + 1)),
        path_attenuation=rng.uniform(*PATH_ATTENUATION_RANGE),
        max_doppler_hz=rng.uniform(*DOPPLER_RANGE_HZ),
    )


def choose_path(channel, rng):
    if rng.random() < channel.p0:
        return ChannelKind.FREE_SPACE
    return ChannelKind.RAYLEIGH


def propagate(signal, channel, kind, rng):
    if kind == ChannelKind.FREE_SPACE:
        delay = min(channel.path_delay_samples, len(signal))
        delayed = np.zeros_like(signal.samples)
        delayed[delay:] = signal.samples[:len(signal) - delay]
        return signal.with_samples(channel.path_attenuation * delayed)
    return rayleigh_fade(signal, channel.max_doppler_hz, channel.num_sinusoids, rng)


def apply_channel(signal, channel, rng):
    """Espace libre (A·δ(k-k0)) avec la probabilité p0, sinon Rayleigh."""
    return propagate(signal, channel, choose_path(channel, rng), rng)
