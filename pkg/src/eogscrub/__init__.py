"""Ocular (EOG) artifact removal for 19-channel EEG.

Signals are turned into grayscale planes, cleaned by a U-Net written in plain
NumPy, and decoded back to microvolts. Submodules:

``signal``   records, pairs, splits, MSE and the EEGR file format
``synth``    seeded semi-simulated datasets
``codec``    signal <-> image conversion and the EIMG file format
``unet``     network layers, model and checkpoints
``trainer``  Adam, early stopping and the three training schemes
``report``   evaluation tables and SVG figures
``cli``      the ``eogscrub`` command
"""

from .codec import CodecConfig, ImageSample, NormParams
from .errors import EogScrubError
from .signal import CHANNEL_LABELS, EegRecord, SignalPair, mse, split_dataset
from .synth import ContaminationCoeffs, SynthConfig, default_coeffs, make_dataset
from .trainer import SchemeId, TrainConfig, denoise, fit, train_scheme

__version__ = "0.1.0"

__all__ = [
    "CHANNEL_LABELS", "CodecConfig", "ContaminationCoeffs", "EegRecord", "EogScrubError",
    "ImageSample", "NormParams", "SchemeId", "SignalPair", "SynthConfig", "TrainConfig",
    "default_coeffs", "denoise", "fit", "make_dataset", "mse", "split_dataset", "train_scheme",
]
