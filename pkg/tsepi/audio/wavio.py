#!/usr/bin/env python3
"""
WAV read/write for mono clips (16-bit PCM or 32-bit float).
"""

import logging
import os

import numpy as np
import soundfile as sf

from tsepi.audio.core import AudioClip
from tsepi.errors import InvalidArgumentError, ManifestError

logger = logging.getLogger(__name__)

SUBTYPES = {
    "pcm16": "PCM_16",
    "float32": "FLOAT",
}


def read_wav(path):
    """Read a mono WAV file into an AudioClip; multichannel files are rejected"""
    if not os.path.exists(path):
        raise ManifestError(f"audio file not found: {path}", path=path)
    samples, sample_rate = sf.read(path, dtype="float64", always_2d=True)
    if samples.shape[1] != 1:
        raise InvalidArgumentError(
            f"{path} has {samples.shape[1]} channels; only mono audio is supported")
    return AudioClip(samples[:, 0], sample_rate)


def write_wav(path, clip, subtype="float32"):
    """Write an AudioClip as WAV; subtype is 'pcm16' or 'float32'"""
    if subtype not in SUBTYPES:
        raise InvalidArgumentError(f"unknown WAV subtype {subtype!r}, expected one of {sorted(SUBTYPES)}")
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    samples = clip.samples
    if subtype == "pcm16":
        peak = np.max(np.abs(samples)) if len(samples) else 0.0
        if peak > 1.0:
            logger.warning(f"Clipping {path}: peak {peak:.3f} exceeds full scale")
        samples = np.clip(samples, -1.0, 1.0)
    sf.write(path, samples.astype(np.float32), clip.sample_rate, subtype=SUBTYPES[subtype])
    return path
