#!/usr/bin/env python3
"""
YIN fundamental-frequency estimator used as the ground-truth pitch labeler.

Frames follow the STFT framing (1024-sample frames, 10 ms hop at 16 kHz) so that
labels line up one-to-one with the pitch extractor's input frames.
"""

import logging

import numpy as np

from tsepi.audio.core import STFT_HOP, STFT_WINDOW, n_frames_for
from tsepi.errors import InvalidArgumentError
from tsepi.pitch.grid import PitchGrid, PitchSequence

logger = logging.getLogger(__name__)

YIN_THRESHOLD = 0.15
SILENCE_ENERGY = 1e-10


def difference_function(frames, max_lag):
    """YIN squared-difference function d(tau), tau = 0..max_lag, per frame"""
    window = frames.shape[1] - max_lag
    head = frames[:, :window]
    diff = np.zeros((frames.shape[0], max_lag + 1))
    for lag in range(1, max_lag + 1):
        delta = head - frames[:, lag:lag + window]
        diff[:, lag] = np.einsum("ij,ij->i", delta, delta)
    return diff


def cumulative_mean_normalized(diff):
    """d'(tau) = d(tau) * tau / sum_{j<=tau} d(j), with d'(0) = 1"""
    lags = np.arange(diff.shape[1])
    running = np.cumsum(diff[:, 1:], axis=1)
    cmnd = np.ones_like(diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = diff[:, 1:] * lags[1:] / running
    cmnd[:, 1:] = np.where(running > 0, ratio, 1.0)
    return cmnd


def _pick_lag(cmnd_row, min_lag, threshold):
    """First dip below threshold, followed down to its local minimum"""
    below = np.nonzero(cmnd_row[min_lag:] < threshold)[0]
    if below.size == 0:
        return None
    lag = min_lag + below[0]
    while lag + 1 < len(cmnd_row) and cmnd_row[lag + 1] < cmnd_row[lag]:
        lag += 1
    return lag


def _refine(cmnd_row, lag):
    """Parabolic interpolation around the selected lag"""
    if lag <= 0 or lag >= len(cmnd_row) - 1:
        return float(lag)
    left, centre, right = cmnd_row[lag - 1], cmnd_row[lag], cmnd_row[lag + 1]
    denominator = left - 2.0 * centre + right
    if denominator <= 0:
        return float(lag)
    return lag + 0.5 * (left - right) / denominator


def yin_f0(clip, window=STFT_WINDOW, hop=STFT_HOP, min_f0=None, max_f0=None,
           threshold=YIN_THRESHOLD):
    """Per-frame f0 in Hz, 0 for unvoiced frames; the search range defaults to the pitch grid's"""
    fs = clip.sample_rate
    min_f0 = min_f0 or PitchGrid().f_min
    max_f0 = max_f0 or PitchGrid().f_max
    if not 0 < min_f0 < max_f0 < fs / 2:
        raise InvalidArgumentError(f"need 0 < min_f0 < max_f0 < fs/2, got {min_f0}, {max_f0}")

    max_lag = int(np.ceil(fs / min_f0))
    min_lag = max(2, int(np.floor(fs / max_f0)))
    if max_lag >= window:
        raise InvalidArgumentError(f"min_f0 {min_f0} Hz needs a window longer than {window} samples")

    n_frames = n_frames_for(len(clip), window, hop)
    if n_frames == 0:
        return np.zeros(0)

    frames = np.lib.stride_tricks.sliding_window_view(clip.samples, window)[::hop][:n_frames]
    energy = np.einsum("ij,ij->i", frames, frames)
    cmnd = cumulative_mean_normalized(difference_function(frames, max_lag))

    f0 = np.zeros(n_frames)
    for index in range(n_frames):
        if energy[index] < SILENCE_ENERGY:
            continue
        lag = _pick_lag(cmnd[index], min_lag, threshold)
        if lag is None:
            continue
        f0[index] = fs / _refine(cmnd[index], lag)
    return f0


def f0_oracle(clip, grid=None, threshold=YIN_THRESHOLD, min_f0=None):
    """YIN pitch labels quantized to the pitch grid, 10 ms frames"""
    grid = grid or PitchGrid()
    f0 = yin_f0(clip, min_f0=min_f0 or grid.f_min, max_f0=grid.f_max, threshold=threshold)
    voiced = np.count_nonzero(f0)
    logger.debug(f"YIN labelled {voiced}/{len(f0)} frames as voiced")
    return PitchSequence.from_hz(f0, grid, hop=STFT_HOP / clip.sample_rate)
