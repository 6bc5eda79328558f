# waveforms/datasets.py
"""Génération des datasets 1 et 2 (et des variantes jouet) et format disque.

Format : `<name>.iq.bin` (float32 little-endian, I/Q entrelacés, trames
consécutives) et `<name>.manifest.json` (DatasetManifest).
"""
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from attrs import field, frozen, validators
from django.conf import settings
from rest_framework.exceptions import ParseError
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from waveforms.core import add_awgn
from waveforms.exceptions import (
    CorruptManifestError,
    DatasetLoadError,
    LengthMismatchError,
    ManifestValidationError,
    NonFiniteFrameError,
)
from waveforms.models import DatasetKind
from waveforms.serializers import DatasetManifestSerializer
from waveforms.synth import (
    DEFAULT_SAMPLE_RATE_HZ,
    FRAME_LENGTH,
    ChannelKind,
    WaveformClass,
    choose_path,
    draw_channel,
    draw_spec,
    place_in_frame,
    propagate,
    synthesize,
)

logger = logging.getLogger(__name__)

IQ_SUFFIX = ".iq.bin"
MANIFEST_SUFFIX = ".manifest.json"
IQ_DTYPE = np.dtype("<f4")

DATASET1_PER_CLASS = 1000
DATASET1_SNR_RANGE_DB = (5.0, 15.0)
DATASET2_PER_LEVEL = 200
DATASET2_SNR_LEVELS_DB = tuple(range(-10, 11))
RAYLEIGH_MIX_P0 = 0.5

TOY_CLASSES = (
    WaveformClass.LFM,
    WaveformClass.BPSK_BARKER,
    WaveformClass.FSK2,
    WaveformClass.COSTAS_FM,
)
TOY_PER_CLASS = 200
TOY_SWEEP_SNR_LEVELS_DB = (-10, -5, 0, 5, 10)


@frozen
class SampleRecord:
    class_id: int = field(converter=int, validator=[validators.ge(0), validators.le(11)])
    snr_db: float = field(converter=float)
    channel_kind: str = field(converter=lambda value: str(ChannelKind(value)))
    seed: int = field(converter=int)


@frozen
class DatasetManifest:
    name: str
    num_samples: int = field(converter=int)
    frame_len: int = field(converter=int)
    sample_rate_hz: float = field(converter=float)
    records: tuple = field(converter=tuple)
    kind: str = ""
    seed: int | None = None

    @records.validator
    def _check_count(self, attribute, value):
        if len(value) != self.num_samples:
            raise ManifestValidationError(
                f"{len(value)} enregistrements pour num_samples={self.num_samples}"
            )


@frozen(eq=False)
class LabeledFrame:
    iq: np.ndarray = field()
    class_id: int
    snr_db: float

    @iq.validator
    def _check_finite(self, attribute, value):
        if not np.all(np.isfinite(value)):
            raise NonFiniteFrameError("Trame contenant des valeurs non finies")


@frozen(eq=False)
class Dataset:
    manifest: DatasetManifest
    # (N, 2, frame_len) : ligne I puis ligne Q
    iq: np.ndarray = field()

    @iq.validator
    def _check_shape(self, attribute, value):
        expected = (self.manifest.num_samples, 2, self.manifest.frame_len)
        if value.shape != expected:
            raise LengthMismatchError(f"Trames de forme {value.shape}, attendu {expected}")

    def __len__(self):
        return self.manifest.num_samples

    @property
    def labels(self):
        return np.array([record.class_id for record in self.manifest.records], dtype=int)

    @property
    def snr_db(self):
        return np.array([record.snr_db for record in self.manifest.records], dtype=float)

    @property
    def channel_kinds(self):
        return [record.channel_kind for record in self.manifest.records]

    @property
    def num_classes(self):
        return len(set(self.labels.tolist()))

    def frame(self, index):
        record = self.manifest.records[index]
        return LabeledFrame(iq=self.iq[index], class_id=record.class_id, snr_db=record.snr_db)

    def complex_frames(self):
        return self.iq[:, 0, :].astype(np.float64) + 1j * self.iq[:, 1, :].astype(np.float64)

    def subset(self, indices, name=None):
        indices = np.asarray(indices, dtype=int)
        manifest = self.manifest
        records = tuple(manifest.records[i] for i in indices)
        sub = DatasetManifest(
            name=name or manifest.name,
            num_samples=len(records),
            frame_len=manifest.frame_len,
            sample_rate_hz=manifest.sample_rate_hz,
            records=records,
            kind=manifest.kind,
            seed=manifest.seed,
        )
        return Dataset(manifest=sub, iq=self.iq[indices])


@frozen(eq=False)
class SynthesizedFrame:
    noisy: np.ndarray
    # Trame reçue avant ajout du bruit
    clean: np.ndarray
    channel_kind: str
    snr_db: float
    offset: int


# -----------------
# Génération
# -----------------

def sample_seed(global_seed, index):
    """Graine propre à un échantillon, dérivée de (graine globale, indice)."""
    return int(np.random.SeedSequence([int(global_seed), int(index)]).generate_state(1)[0])


def synthesize_frame(class_id, snr_range_db, seed, p0=RAYLEIGH_MIX_P0,
                     frame_len=FRAME_LENGTH, sample_rate_hz=DEFAULT_SAMPLE_RATE_HZ):
    """Tirage → synthèse → placement dans la trame → canal → bruit."""
    rng = np.random.default_rng(seed)
    low, high = snr_range_db
    snr_db = float(rng.uniform(low, high)) if high > low else float(low)
    spec = draw_spec(class_id, rng, sample_rate_hz)
    framed, offset = place_in_frame(synthesize(spec), frame_len, rng)
    channel = draw_channel(rng, p0)
    kind = choose_path(channel, rng)
    received = propagate(framed, channel, kind, rng)
    noisy = add_awgn(received, snr_db, rng)
    return SynthesizedFrame(
        noisy=noisy.samples,
        clean=received.samples,
        channel_kind=str(kind),
        snr_db=snr_db,
        offset=offset,
    )


def _build_dataset(name, kind, plan, seed, p0=RAYLEIGH_MIX_P0, frame_len=FRAME_LENGTH,
                   sample_rate_hz=DEFAULT_SAMPLE_RATE_HZ, workers=None):
    """plan : liste de (class_id, (snr_min, snr_max)), un élément par échantillon."""
    workers = workers or settings.PULSECLUST["WORKERS"]
    total = len(plan)
    seeds = [sample_seed(seed, index) for index in range(total)]
    iq = np.empty((total, 2, frame_len), dtype=np.float32)
    records = []
    step = max(1, total // 10)

    def work(index):
        class_id, snr_range = plan[index]
        return synthesize_frame(class_id, snr_range, seeds[index], p0, frame_len, sample_rate_hz)

    logger.info("Génération de %s : %d échantillons, %d threads", name, total, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map conserve l'ordre des indices
        for index, frame in enumerate(pool.map(work, range(total))):
            iq[index, 0] = frame.noisy.real
            iq[index, 1] = frame.noisy.imag
            records.append(
                SampleRecord(
                    class_id=plan[index][0],
                    snr_db=frame.snr_db,
                    channel_kind=frame.channel_kind,
                    seed=seeds[index],
                )
            )
            if (index + 1) % step == 0:
                logger.info("%s : %d/%d", name, index + 1, total)

    manifest = DatasetManifest(
        name=name,
        num_samples=total,
        frame_len=frame_len,
        sample_rate_hz=sample_rate_hz,
        records=tuple(records),
        kind=str(kind),
        seed=int(seed),
    )
    return Dataset(manifest=manifest, iq=iq)


def scaled_count(count, scale):
    return max(1, int(round(count * scale)))


def generate_dataset1(seed, scale=1.0, **kwargs):
    per_class = scaled_count(DATASET1_PER_CLASS, scale)
    plan = [
        (int(cls), DATASET1_SNR_RANGE_DB)
        for cls in WaveformClass
        for _ in range(per_class)
    ]
    return _build_dataset("dataset1", DatasetKind.DATASET1, plan, seed, **kwargs)


def generate_dataset2(seed, scale=1.0, **kwargs):
    per_level = scaled_count(DATASET2_PER_LEVEL, scale)
    plan = [
        (int(cls), (float(level), float(level)))
        for level in DATASET2_SNR_LEVELS_DB
        for cls in WaveformClass
        for _ in range(per_level)
    ]
    return _build_dataset("dataset2", DatasetKind.DATASET2, plan, seed, **kwargs)


def generate_toy_dataset(seed, per_class=TOY_PER_CLASS, classes=TOY_CLASSES,
                         snr_range_db=DATASET1_SNR_RANGE_DB, **kwargs):
    plan = [(int(cls), tuple(snr_range_db)) for cls in classes for _ in range(per_class)]
    return _build_dataset("toy", DatasetKind.TOY, plan, seed, **kwargs)


def generate_toy_sweep(seed, per_level=50, classes=TOY_CLASSES,
                       snr_levels_db=TOY_SWEEP_SNR_LEVELS_DB, **kwargs):
    plan = [
        (int(cls), (float(level), float(level)))
        for level in snr_levels_db
        for cls in classes
        for _ in range(per_level)
    ]
    return _build_dataset("toy-sweep", DatasetKind.TOY_SWEEP, plan, seed, **kwargs)


def generate(kind, seed, scale=1.0, **kwargs):
    kind = DatasetKind(kind)
    if kind == DatasetKind.DATASET1:
        return generate_dataset1(seed, scale, **kwargs)
    if kind == DatasetKind.DATASET2:
        return generate_dataset2(seed, scale, **kwargs)
    if kind == DatasetKind.TOY:
        return generate_toy_dataset(seed, per_class=scaled_count(TOY_PER_CLASS, scale), **kwargs)
    return generate_toy_sweep(seed, per_level=scaled_count(50, scale), **kwargs)


# -----------------
# Lecture / écriture
# -----------------

def dataset_paths(path):
    """(fichier IQ, manifeste) à partir du préfixe ou de l'un des deux fichiers."""
    path = Path(path)
    name = path.name
    for suffix in (IQ_SUFFIX, MANIFEST_SUFFIX):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
            break
    stem = path.with_name(name)
    return stem.with_name(name + IQ_SUFFIX), stem.with_name(name + MANIFEST_SUFFIX)


def write_dataset(dataset, directory):
    """Écrit les deux fichiers dans directory ; renvoie le préfixe commun."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = directory / dataset.manifest.name
    iq_path, manifest_path = dataset_paths(stem)

    interleaved = np.ascontiguousarray(dataset.iq.transpose(0, 2, 1), dtype=IQ_DTYPE)
    interleaved.tofile(iq_path)

    data = DatasetManifestSerializer(dataset.manifest).data
    manifest_path.write_bytes(JSONRenderer().render(data, renderer_context={"indent": 2}))
    logger.info("Dataset %s écrit dans %s", dataset.manifest.name, directory)
    return stem


def _read_manifest(manifest_path):
    try:
        raw = manifest_path.read_bytes()
    except OSError as exc:
        raise DatasetLoadError(f"Manifeste illisible : {manifest_path}") from exc
    try:
        data = JSONParser().parse(io.BytesIO(raw))
    except ParseError as exc:
        raise CorruptManifestError(f"Manifeste corrompu : {manifest_path}") from exc
    if not isinstance(data, dict):
        raise CorruptManifestError(f"Manifeste corrompu : {manifest_path}")

    serializer = DatasetManifestSerializer(data=data)
    if not serializer.is_valid():
        raise ManifestValidationError(f"Manifeste invalide : {manifest_path}", detail=serializer.errors)
    return serializer.save()


def read_dataset(path):
    iq_path, manifest_path = dataset_paths(path)
    manifest = _read_manifest(manifest_path)
    try:
        flat = np.fromfile(iq_path, dtype=IQ_DTYPE)
    except OSError as exc:
        raise DatasetLoadError(f"Fichier IQ illisible : {iq_path}") from exc

    expected = manifest.num_samples * manifest.frame_len * 2
    if flat.size != expected:
        raise LengthMismatchError(f"{iq_path} : {flat.size} valeurs, attendu {expected}")
    if not np.all(np.isfinite(flat)):
        raise NonFiniteFrameError(f"{iq_path} contient des valeurs non finies")

    iq = flat.reshape(manifest.num_samples, manifest.frame_len, 2).transpose(0, 2, 1)
    return Dataset(manifest=manifest, iq=np.ascontiguousarray(iq, dtype=np.float32))


def resolve_dataset(source, seed, scale=1.0, **kwargs):
    """Un type de dataset (1, 2, toy, toy-sweep) est généré, tout autre chemin est lu."""
    if str(source) in DatasetKind.values:
        return generate(str(source), seed, scale=scale, **kwargs)
    return read_dataset(source)
