"""
Signal primitives and WAV I/O
"""

from tsepi.audio.core import (
    AudioClip,
    Spectrogram,
    SAMPLE_RATE,
    CLIP_SAMPLES,
    STFT_WINDOW,
    STFT_HOP,
    n_frames_for,
    resample,
    stft_magnitude,
    mix_at_snr,
    convolve,
)
from tsepi.audio.wavio import read_wav, write_wav
