import json
import logging
import os

import numpy as np

from hear.models.calibration import CalibrationModel
from hear.models.config import HearConfig
from hear.utils.error_handler import (
    FingerprintAbsent, Inconsistency, InvalidModel, NotFoundError, VersionMismatch
)

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


class ModelService:
    """Service class for calibration model persistence."""

    @staticmethod
    def save_model(model: CalibrationModel, path: str) -> None:
        """
        Write a model as JSON. Floats are written with full precision, so
        load_model returns an equal model.
        """
        document = {
            'format_version': MODEL_FORMAT_VERSION,
            'montage_fingerprint': model.montage_fingerprint,
            'config': model.config.to_dict(),
            'mu_s2': [float(value) for value in model.mu_s2],
        }
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(document, handle, indent=2)
        logger.info(f"Saved {model.n_channels}-channel model to {path}")

    @staticmethod
    def load_model(path: str) -> CalibrationModel:
        """
        Read a model written by save_model.

        Raises:
            NotFoundError: If the file does not exist
            VersionMismatch: If the format version is not supported
            FingerprintAbsent: If the model is not bound to a montage
            InvalidModel: If a reference variance is not positive
        """
        if not os.path.isfile(path):
            raise NotFoundError(f"Model file '{path}' not found")
        with open(path, encoding='utf-8') as handle:
            try:
                document = json.load(handle)
            except json.JSONDecodeError as e:
                raise Inconsistency(f"Unreadable model file: {e}")

        version = document.get('format_version')
        if version != MODEL_FORMAT_VERSION:
            raise VersionMismatch(f"Model format version {version} is not supported")
        if not document.get('montage_fingerprint'):
            raise FingerprintAbsent(f"Model '{path}' carries no montage fingerprint")
        if 'mu_s2' not in document or 'config' not in document:
            raise InvalidModel(f"Model '{path}' lacks mu_s2 or config")

        return CalibrationModel(
            mu_s2=np.array(document['mu_s2'], dtype=np.float64),
            montage_fingerprint=str(document['montage_fingerprint']),
            config=HearConfig.from_dict(document['config']),
        )
