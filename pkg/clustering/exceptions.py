# clustering/exceptions.py

from waveforms.exceptions import InvalidInputError, PulseclustError


class ShapeError(InvalidInputError):
    """Formes de tenseurs incompatibles ; le message nomme les deux formes."""


class ContractViolationError(PulseclustError):
    """Entrée d'une perte hors contrat (normes, lignes de probabilités)."""


class ConfigurationError(PulseclustError):
    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail or {}


class CheckpointError(PulseclustError):
    pass
