#!/usr/bin/env python3
"""
Image-source room impulse responses for a point receiver in a shoebox room.

Image positions and reflection orders come from pyroomacoustics. Walls share
one frequency-independent absorption derived from the room's RT60, every
arrival is rendered with an 81-tap Hann-windowed sinc and reflections invert
polarity, as with a negative pressure reflection coefficient.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pyroomacoustics as pra

from tsepi.errors import InvalidArgumentError, UndefinedResultError
from tsepi.room.scene import SPEED_OF_SOUND

logger = logging.getLogger(__name__)

SINC_HALF_WIDTH = 40
ABSORPTION_FORMULAS = ("eyring", "sabine")
RENDER_CHUNK = 20000
_OFFSETS = np.arange(-SINC_HALF_WIDTH, SINC_HALF_WIDTH + 1)
_ALPHA_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class RIR:
    taps: np.ndarray
    sample_rate: int
    direct_delay: int
    truncated: bool = False

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 1 or not np.all(np.isfinite(taps)):
            raise InvalidArgumentError("RIR taps must be a finite 1-D sequence")
        object.__setattr__(self, "taps", taps)

    def __len__(self):
        return len(self.taps)


def absorption_from_rt60(room, formula="eyring", c=SPEED_OF_SOUND):
    """Uniform wall absorption coefficient reproducing room.rt60"""
    if formula == "sabine":
        try:
            alpha, _ = pra.inverse_sabine(room.rt60, list(room.dimensions), c=c)
        except ValueError as e:
            raise InvalidArgumentError(f"no Sabine absorption gives rt60={room.rt60}s in {room.dimensions}: {e}")
    elif formula == "eyring":
        sabine = 24.0 * np.log(10.0) / c * room.volume / (room.surface * room.rt60)
        alpha = 1.0 - np.exp(-sabine)
    else:
        raise InvalidArgumentError(f"absorption formula must be one of {ABSORPTION_FORMULAS}, got {formula!r}")
    return float(np.clip(alpha, _ALPHA_FLOOR, 1.0 - _ALPHA_FLOOR))


def default_max_order(room, c=SPEED_OF_SOUND):
    """Reflection order reaching rt60 seconds along the narrowest dimension"""
    return max(int(np.ceil(c * room.rt60 / min(room.dimensions) - 1.0)), 1)


def _render(delays, amplitudes, n_taps):
    """Sum unit-energy windowed-sinc arrivals at fractional delays into n_taps"""
    taps = np.zeros(n_taps)
    for start in range(0, len(delays), RENDER_CHUNK):
        delay = delays[start:start + RENDER_CHUNK]
        amplitude = amplitudes[start:start + RENDER_CHUNK]
        index = np.rint(delay).astype(int)[:, None] + _OFFSETS[None, :]
        t = index - delay[:, None]
        kernel = 0.5 * (1.0 + np.cos(np.pi * t / (SINC_HALF_WIDTH + 1))) * np.sinc(t)
        kernel *= (amplitude / np.linalg.norm(kernel, axis=1))[:, None]
        inside = (index >= 0) & (index < n_taps)
        taps += np.bincount(index[inside], weights=kernel[inside], minlength=n_taps)[:n_taps]
    return taps


def direct_path_rir(geo, fs, c=SPEED_OF_SOUND):
    """Single arrival of amplitude 1/(4 pi r) at the fractional delay r/c"""
    distance = geo.distance
    if distance <= 0:
        raise InvalidArgumentError("source and microphone coincide")
    delay = fs * distance / c
    direct_delay = int(round(delay))
    taps = _render(np.array([delay]), np.array([1.0 / (4.0 * np.pi * distance)]),
                   direct_delay + SINC_HALF_WIDTH + 1)
    return RIR(taps, fs, direct_delay)


def image_sources(room, geo, fs, max_order, absorption):
    """Visible image positions (3, K) and their reflection orders from pyroomacoustics"""
    shoebox = pra.ShoeBox(list(room.dimensions), fs=fs, materials=pra.Material(float(absorption)),
                          max_order=int(max_order), air_absorption=False)
    shoebox.add_source(np.asarray(geo.source_pos, dtype=float))
    shoebox.add_microphone(np.asarray(geo.mic_pos, dtype=float))
    shoebox.image_source_model()
    source = shoebox.sources[0]
    visible = np.asarray(shoebox.visibility[0][0]).astype(bool)
    return source.images[:, visible], np.asarray(source.orders)[visible]


def simulate_rir(room, geo, fs, max_order=None, absorption=None, formula="eyring", c=SPEED_OF_SOUND):
    """
    Image-source RIR lasting rt60 seconds past the direct arrival.

    absorption overrides the RT60-derived coefficient; absorption=1 leaves only
    the direct path.
    """
    if absorption is None:
        absorption = absorption_from_rt60(room, formula, c)
    if not 0.0 < absorption <= 1.0:
        raise InvalidArgumentError(f"absorption must lie in (0, 1], got {absorption}")
    distance = geo.distance
    if distance <= 0:
        raise InvalidArgumentError("source and microphone coincide")

    needed_order = default_max_order(room, c)
    if max_order is None:
        max_order = needed_order
    truncated = absorption < 1.0 and max_order < needed_order
    if truncated:
        logger.warning(f"max_order {max_order} cannot cover rt60={room.rt60:.2f}s (needs {needed_order})")
    if absorption >= 1.0:
        max_order = 0

    direct_delay = int(round(fs * distance / c))
    n_taps = direct_delay + int(np.ceil(room.rt60 * fs)) + SINC_HALF_WIDTH + 1

    images, orders = image_sources(room, geo, fs, max_order, absorption)
    dist = np.linalg.norm(images - np.asarray(geo.mic_pos, dtype=float)[:, None], axis=0)
    delays = dist * fs / c
    keep = np.rint(delays) - SINC_HALF_WIDTH < n_taps
    delays, dist, orders = delays[keep], dist[keep], orders[keep]

    beta = np.sqrt(1.0 - absorption)
    amplitudes = (-beta) ** orders / (4.0 * np.pi * dist)
    taps = _render(delays, amplitudes, n_taps)

    logger.debug(f"RIR: {len(delays)} images up to order {max_order}, alpha={absorption:.3f}, {n_taps} taps")
    return RIR(taps, fs, direct_delay, truncated)


def energy_decay_curve(rir):
    """Schroeder backward-integrated energy in dB, starting at the direct arrival"""
    start = max(0, rir.direct_delay - SINC_HALF_WIDTH)
    energy = rir.taps[start:] ** 2
    edc = np.cumsum(energy[::-1])[::-1]
    if edc[0] <= 0:
        raise UndefinedResultError("RIR has no energy after the direct arrival")
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(edc / edc[0])


def measure_rt60(rir, fit_start_db=-5.0, fit_stop_db=-25.0):
    """T20 estimate: slope of the decay between -5 and -25 dB, extrapolated to 60 dB"""
    edc_db = energy_decay_curve(rir)
    start = np.nonzero(edc_db <= fit_start_db)[0]
    stop = np.nonzero(edc_db <= fit_stop_db)[0]
    if start.size == 0 or stop.size == 0 or stop[0] - start[0] < 2:
        raise UndefinedResultError(f"energy decay never reaches {fit_stop_db} dB")

    segment = slice(start[0], stop[0] + 1)
    times = np.arange(len(edc_db))[segment] / rir.sample_rate
    slope, _ = np.polyfit(times, edc_db[segment], 1)
    if slope >= 0:
        raise UndefinedResultError("energy decay curve is not decreasing")
    return float(-60.0 / slope)
