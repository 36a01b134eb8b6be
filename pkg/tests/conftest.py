import numpy as np
import pytest

from tsepi.audio.core import AudioClip, SAMPLE_RATE
from tsepi.forge.mixture import build_mixture
from tsepi.forge.sources import SourceEvent
from tsepi.pitch.grid import PitchGrid
from tsepi.room.scene import Geometry, RoomSpec, Scene


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid():
    return PitchGrid()


def sine(freq, seconds=1.0, amplitude=0.5, fs=SAMPLE_RATE, phase=0.0):
    t = np.arange(int(seconds * fs)) / fs
    return AudioClip(amplitude * np.sin(2 * np.pi * freq * t + phase), fs)


@pytest.fixture
def tone():
    """One second of a 220 Hz sine at 16 kHz"""
    return sine(220.0)


def harmonic(f0, partials=3, seconds=1.0, amplitude=0.5, fs=SAMPLE_RATE):
    """Harmonic complex with 1/k partial amplitudes"""
    t = np.arange(int(seconds * fs)) / fs
    samples = sum(np.sin(2 * np.pi * k * f0 * t) / k for k in range(1, partials + 1))
    return AudioClip(amplitude * samples / np.max(np.abs(samples)), fs)


def two_source_scene():
    mic = (2.5, 2.5, 1.5)
    return Scene(RoomSpec((5.0, 5.0, 3.0), 0.4),
                 [Geometry((3.5, 2.5, 1.5), mic), Geometry((2.5, 3.7, 1.5), mic)], anechoic=True)


def two_source_mixture(target, interferer, seed=0, target_index=0):
    """Anechoic mixture of two SourceEvents at 0 dB SNR, noise 40 dB down"""
    return build_mixture([target, interferer], two_source_scene(), 0.0, 40.0, np.random.default_rng(seed),
                         target_index=target_index)


def tone_mixture(target_hz, interferer_hz, target_class, seed=0):
    """Two-tone mixture; the interferer takes the next class id"""
    return two_source_mixture(SourceEvent(sine(target_hz), target_class),
                              SourceEvent(sine(interferer_hz, amplitude=0.4), (target_class + 1) % 27), seed)
