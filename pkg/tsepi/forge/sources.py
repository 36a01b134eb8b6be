#!/usr/bin/env python3
"""
Class-labelled source events.

Synthetic events are harmonic complexes: the class sets the f0 band, the number
of partials, the envelope shape and the noise floor, so that class identity is
audible and recoverable from pitch alone. File-backed events wrap real clips.
"""

import logging
from dataclasses import dataclass

import numpy as np

from tsepi.audio.core import CLIP_SECONDS, SAMPLE_RATE, AudioClip, resample
from tsepi.audio.wavio import read_wav
from tsepi.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

N_CLASSES = 27
SILENCE_RMS = 1e-5
BASE_F0 = 80.0
MAX_PARTIAL_HZ = 7800.0
PEAK_LEVEL = 0.5

ENVELOPES = ("sustained", "decaying", "pulsed")


@dataclass(frozen=True, eq=False)
class SourceEvent:
    clip: AudioClip
    class_label: int
    origin: str = "synthetic"

    def __post_init__(self):
        check_class(self.class_label)
        if self.clip.rms() <= SILENCE_RMS:
            raise InvalidArgumentError(f"source event from {self.origin} is silent")


def check_class(class_label, n_classes=N_CLASSES):
    if int(class_label) != class_label or not 0 <= class_label < n_classes:
        raise InvalidArgumentError(f"class id must be an integer in [0, {n_classes}), got {class_label}")
    return int(class_label)


def f0_band(class_label):
    """One-octave f0 band [low, 2*low) for a class; bands repeat every nine classes"""
    low = BASE_F0 * 2.0 ** ((class_label % 9) / 3.0)
    return low, 2.0 * low


def timbre(class_label):
    """Partial count, envelope name and noise floor (dB below peak) for a class"""
    n_partials = 3 + 3 * (class_label // 9) + (class_label % 2)
    envelope = ENVELOPES[class_label % 3]
    noise_floor_db = 35.0 + 5.0 * (class_label % 4)
    return n_partials, envelope, noise_floor_db


def _ramp(n_samples, fs, seconds):
    width = max(1, min(n_samples // 2, int(seconds * fs)))
    env = np.ones(n_samples)
    fade = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, width)))
    env[:width] = fade
    env[-width:] = np.minimum(env[-width:], fade[::-1])
    return env


def _envelope(kind, n_samples, fs, rng):
    if kind == "sustained":
        return _ramp(n_samples, fs, 0.05)
    if kind == "decaying":
        t = np.arange(n_samples) / fs
        tau = rng.uniform(0.8, 1.6)
        return _ramp(n_samples, fs, 0.01) * np.exp(-t / tau)

    env = np.zeros(n_samples)
    position = int(rng.uniform(0.0, 0.2) * fs)
    while position < n_samples:
        length = int(rng.uniform(0.3, 0.5) * fs)
        stop = min(n_samples, position + length)
        env[position:stop] = _ramp(stop - position, fs, 0.01)
        position = stop + int(rng.uniform(0.15, 0.3) * fs)
    return env


def _f0_track(class_label, n_samples, fs, rng):
    """Log-linear glide inside the class band with a light vibrato"""
    low, high = f0_band(class_label)
    log_low, log_high = np.log(low * 1.06), np.log(high / 1.06)
    start, end = rng.uniform(log_low, log_high, size=2)
    t = np.arange(n_samples) / fs
    track = np.linspace(start, end, n_samples)
    track += 0.01 * np.sin(2.0 * np.pi * rng.uniform(4.0, 6.0) * t + rng.uniform(0.0, 2.0 * np.pi))
    return np.exp(np.clip(track, np.log(low), np.log(high)))


def synth_source(class_label, rng, fs=SAMPLE_RATE, duration=CLIP_SECONDS):
    """Harmonic-complex event for class_label; deterministic under rng"""
    class_label = check_class(class_label)
    n_samples = int(round(duration * fs))
    n_partials, envelope, noise_floor_db = timbre(class_label)

    f0 = _f0_track(class_label, n_samples, fs, rng)
    phase = 2.0 * np.pi * np.cumsum(f0) / fs
    samples = np.zeros(n_samples)
    nyquist_limit = min(MAX_PARTIAL_HZ, 0.5 * fs * 0.95)
    for k in range(1, n_partials + 1):
        if k * f0.max() >= nyquist_limit:
            break
        samples += np.sin(k * phase + rng.uniform(0.0, 2.0 * np.pi)) / k

    samples *= _envelope(envelope, n_samples, fs, rng)
    peak = np.max(np.abs(samples))
    samples *= PEAK_LEVEL / peak
    samples += PEAK_LEVEL * 10.0 ** (-noise_floor_db / 20.0) * rng.standard_normal(n_samples)

    return SourceEvent(AudioClip(samples, fs), class_label, "synthetic")


def load_source(path, class_label, fs=SAMPLE_RATE, duration=CLIP_SECONDS):
    """File-backed event: resampled to fs and cropped or zero-padded to duration"""
    class_label = check_class(class_label)
    clip = resample(read_wav(path), fs).fit_length(int(round(duration * fs)))
    logger.debug(f"Loaded source {path} as class {class_label}")
    return SourceEvent(clip, class_label, str(path))
