# waveforms/exceptions.py


class PulseclustError(Exception):
    """Racine de toutes les erreurs métier du projet."""


class InvalidInputError(PulseclustError, ValueError):
    """Précondition d'une opération violée (taux, bornes, tailles...)."""


class DatasetLoadError(PulseclustError):
    """Un dataset sur disque ne peut pas être relu."""


class CorruptManifestError(DatasetLoadError):
    pass


class ManifestValidationError(DatasetLoadError):
    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail or {}


class LengthMismatchError(DatasetLoadError):
    pass


class NonFiniteFrameError(DatasetLoadError):
    pass
