#!/usr/bin/env python3
"""
Signal primitives shared by every stage: clips, resampling, framing,
magnitude spectrograms, convolution and SNR-controlled mixing.
"""

import logging
from dataclasses import dataclass
from math import gcd

import numpy as np
from scipy import signal

from tsepi.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

SAMPLE_RATE = 16000
CLIP_SECONDS = 4.0
CLIP_SAMPLES = int(SAMPLE_RATE * CLIP_SECONDS)
STFT_WINDOW = 1024
STFT_HOP = 160


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono sample sequence plus its sample rate"""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidArgumentError(f"AudioClip expects mono samples, got shape {samples.shape}")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise InvalidArgumentError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise InvalidArgumentError("AudioClip samples must be finite")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate

    def energy(self):
        return float(np.dot(self.samples, self.samples))

    def rms(self):
        if len(self.samples) == 0:
            return 0.0
        return float(np.sqrt(np.mean(self.samples ** 2)))

    def with_samples(self, samples):
        return AudioClip(samples, self.sample_rate)

    def fit_length(self, n_samples):
        """Zero-pad or crop to exactly n_samples"""
        if len(self.samples) >= n_samples:
            return self.with_samples(self.samples[:n_samples])
        return self.with_samples(np.pad(self.samples, (0, n_samples - len(self.samples))))


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Magnitude frames (n_frames x n_bins) of a Hann-windowed STFT"""

    frames: np.ndarray
    window_size: int
    hop: int
    sample_rate: int

    @property
    def n_frames(self):
        return self.frames.shape[0]

    @property
    def n_bins(self):
        return self.frames.shape[1]

    def log_compressed(self):
        """log(1 + magnitude), the pitch extractor's input"""
        return np.log1p(self.frames)


def n_frames_for(n_samples, window=STFT_WINDOW, hop=STFT_HOP):
    """Frame count of a valid (unpadded) framing"""
    if n_samples < window:
        return 0
    return (n_samples - window) // hop + 1


def resample(clip, target_rate):
    """Band-limited polyphase resampling to target_rate"""
    if int(target_rate) != target_rate or target_rate <= 0:
        raise InvalidArgumentError(f"target rate must be a positive integer, got {target_rate}")
    target_rate = int(target_rate)
    if target_rate == clip.sample_rate:
        return AudioClip(clip.samples.copy(), clip.sample_rate)

    divisor = gcd(target_rate, clip.sample_rate)
    up = target_rate // divisor
    down = clip.sample_rate // divisor
    samples = signal.resample_poly(clip.samples, up, down)
    logger.debug(f"Resampled {clip.sample_rate} Hz -> {target_rate} Hz ({len(clip)} -> {len(samples)} samples)")
    return AudioClip(samples, target_rate)


def stft_magnitude(clip, window=STFT_WINDOW, hop=STFT_HOP):
    """Hann-windowed magnitude STFT without padding"""
    if hop <= 0 or window <= 0 or hop > window:
        raise InvalidArgumentError(f"need 0 < hop <= window, got hop={hop}, window={window}")
    if len(clip) < window:
        raise InvalidArgumentError(f"clip of {len(clip)} samples is shorter than the {window}-sample window")

    frames = np.lib.stride_tricks.sliding_window_view(clip.samples, window)[::hop]
    taper = signal.get_window("hann", window)
    magnitudes = np.abs(np.fft.rfft(frames * taper, axis=-1))
    return Spectrogram(magnitudes, window, hop, clip.sample_rate)


def mix_at_snr(target, interference, snr_db):
    """
    Scale interference so that target-to-interference energy ratio equals snr_db.
    Returns the mixture and the applied scale.
    """
    if target.sample_rate != interference.sample_rate:
        raise InvalidArgumentError(
            f"sample rates differ: {target.sample_rate} vs {interference.sample_rate}")
    if len(target) != len(interference):
        raise InvalidArgumentError(f"lengths differ: {len(target)} vs {len(interference)}")

    target_energy = target.energy()
    interference_energy = interference.energy()
    if target_energy <= 0.0:
        raise InvalidArgumentError("target has zero energy")
    if interference_energy <= 0.0:
        raise InvalidArgumentError("interference has zero energy")

    scale = float(np.sqrt(target_energy / (interference_energy * 10.0 ** (snr_db / 10.0))))
    mixture = target.samples + scale * interference.samples
    return AudioClip(mixture, target.sample_rate), scale


def convolve(clip, kernel):
    """Linear convolution truncated to the input length (same-start alignment)"""
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 1 or kernel.size == 0:
        raise InvalidArgumentError("convolution kernel must be a non-empty 1-D sequence")
    if len(clip) == 0:
        return AudioClip(np.zeros(0), clip.sample_rate)
    full = signal.convolve(clip.samples, kernel, mode="full")
    return AudioClip(full[:len(clip)], clip.sample_rate)
