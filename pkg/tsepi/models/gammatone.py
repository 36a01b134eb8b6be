#!/usr/bin/env python3
"""
Gammatone filterbank encoder with fixed or learnable filter parameters.

kernel_k[t] = amp_k * shape_k[t] / ||shape_k||, where
shape_k[t] = (t/fs)^(n-1) * exp(-2 pi b_k ERB(fc_k) t/fs) * cos(2 pi fc_k t/fs + phase_k).
Centre frequencies are stored on the ERB-rate scale behind a sigmoid and
bandwidth scales behind a softplus, so any raw parameter value is legal.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from tsepi.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

GAMMATONE_ORDER = 4
BANDWIDTH_SCALE = 1.019
F_LOW = 50.0
F_HIGH = 7800.0
_ERB_Q = 1000.0 / (24.7 * 4.37)
_FRACTION_EPS = 1e-6


def erb(f):
    """Equivalent rectangular bandwidth in Hz (Glasberg-Moore)"""
    if torch.is_tensor(f):
        if torch.any(f < 0):
            raise InvalidArgumentError("ERB is undefined for negative frequencies")
        return 24.7 * (4.37 * f / 1000.0 + 1.0)
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise InvalidArgumentError("ERB is undefined for negative frequencies")
    value = 24.7 * (4.37 * f / 1000.0 + 1.0)
    return float(value) if value.ndim == 0 else value


def erb_rate(f):
    """ERB-rate (number of ERBs below f)"""
    if torch.is_tensor(f):
        return _ERB_Q * torch.log1p(4.37 * f / 1000.0)
    return _ERB_Q * np.log1p(4.37 * np.asarray(f, dtype=np.float64) / 1000.0)


def inverse_erb_rate(rate):
    if torch.is_tensor(rate):
        return torch.expm1(rate / _ERB_Q) * 1000.0 / 4.37
    return np.expm1(np.asarray(rate, dtype=np.float64) / _ERB_Q) * 1000.0 / 4.37


def init_center_freqs(n_filters, f_low=F_LOW, f_high=F_HIGH, fs=16000):
    """n_filters centre frequencies equally spaced on the ERB-rate scale"""
    if n_filters < 1:
        raise InvalidArgumentError(f"need at least one filter, got {n_filters}")
    if not 0 < f_low < f_high < fs / 2:
        raise InvalidArgumentError(f"need 0 < f_low < f_high < fs/2, got {f_low}, {f_high} at {fs} Hz")
    rates = np.linspace(erb_rate(f_low), erb_rate(f_high), n_filters)
    fc = inverse_erb_rate(rates)
    fc[0] = f_low
    if n_filters > 1:
        fc[-1] = f_high
    return fc


def build_kernels(fc, bw_scale, amp, phase, length, fs, order=GAMMATONE_ORDER):
    """length x K kernel matrix, differentiable in all four parameter vectors"""
    fc, bw_scale, amp, phase = (torch.as_tensor(p) for p in (fc, bw_scale, amp, phase))
    dtype = fc.dtype if fc.is_floating_point() else torch.float64
    fc, bw_scale, amp, phase = (p.to(dtype) for p in (fc, bw_scale, amp, phase))
    if torch.any(fc <= 0) or torch.any(fc >= fs / 2):
        raise InvalidArgumentError(f"centre frequencies must lie in (0, {fs / 2}) Hz")
    if torch.any(bw_scale < 0):
        raise InvalidArgumentError("bandwidth scales must be non-negative")
    if length < 1:
        raise InvalidArgumentError(f"kernel length must be positive, got {length}")

    t = (torch.arange(length, dtype=dtype, device=fc.device) / fs).unsqueeze(1)
    envelope = t ** (order - 1) * torch.exp(-2.0 * math.pi * bw_scale * erb(fc) * t)
    shape = envelope * torch.cos(2.0 * math.pi * fc * t + phase)
    return amp * shape / shape.norm(dim=0, keepdim=True)


@dataclass
class GammatoneParams:
    fc: np.ndarray
    bw_scale: np.ndarray
    amp: np.ndarray
    phase: np.ndarray
    length: int
    sample_rate: int = 16000
    order: int = GAMMATONE_ORDER
    learnable: bool = True

    @property
    def n_filters(self):
        return len(self.fc)

    def kernels(self):
        return build_kernels(self.fc, self.bw_scale, self.amp, self.phase, self.length, self.sample_rate,
                             self.order).numpy()


@dataclass(frozen=True, eq=False)
class EncodedFrames:
    features: np.ndarray
    stride: int

    @property
    def n_frames(self):
        return self.features.shape[1]


def _logit(p):
    return math.log(p / (1.0 - p))


def _softplus_inverse(y):
    return math.log(math.expm1(y))


class GammatoneFilterbank(nn.Module):
    """
    Strided gammatone analysis; parameters are nn.Parameters when learnable and
    buffers otherwise, so the fixed bank never moves under an optimizer.
    """

    def __init__(self, n_filters, length, fs=16000, stride=None, learnable=True, f_low=F_LOW, f_high=F_HIGH,
                 order=GAMMATONE_ORDER):
        super().__init__()
        self.n_filters = n_filters
        self.length = length
        self.fs = fs
        self.stride = stride or max(1, length // 2)
        self.order = order
        self.learnable = learnable

        top = float(erb_rate(fs / 2.0))
        fc = init_center_freqs(n_filters, f_low, f_high, fs)
        fc_raw = torch.tensor([_logit(float(erb_rate(f)) / top) for f in fc], dtype=torch.float32)
        bw_raw = torch.full((n_filters,), _softplus_inverse(BANDWIDTH_SCALE))
        amp = torch.ones(n_filters)
        phase = torch.zeros(n_filters)

        for name, value in (('fc_raw', fc_raw), ('bw_raw', bw_raw), ('amp', amp), ('phase', phase)):
            if learnable:
                setattr(self, name, nn.Parameter(value))
            else:
                self.register_buffer(name, value)

    def center_frequencies(self):
        top = erb_rate(torch.tensor(self.fs / 2.0, dtype=self.fc_raw.dtype))
        # saturated sigmoids would land exactly on 0 Hz or Nyquist
        fraction = torch.sigmoid(self.fc_raw).clamp(_FRACTION_EPS, 1.0 - _FRACTION_EPS)
        return inverse_erb_rate(fraction * top)

    def bandwidth_scales(self):
        return F.softplus(self.bw_raw)

    def kernels(self):
        """length x K"""
        return build_kernels(self.center_frequencies(), self.bandwidth_scales(), self.amp, self.phase,
                             self.length, self.fs, self.order)

    def forward(self, waveform):
        """(B, T) or (B, 1, T) -> pre-activation features (B, K, n_frames)"""
        if waveform.dim() == 2:
            waveform = waveform.unsqueeze(1)
        if waveform.shape[-1] < self.length:
            raise InvalidArgumentError(f"waveform of {waveform.shape[-1]} samples is shorter than the "
                                       f"{self.length}-tap kernels")
        weight = self.kernels().t().unsqueeze(1).to(waveform.dtype)
        return F.conv1d(waveform, weight, stride=self.stride)

    def params(self):
        with torch.no_grad():
            return GammatoneParams(
                fc=self.center_frequencies().double().cpu().numpy(),
                bw_scale=self.bandwidth_scales().double().cpu().numpy(),
                amp=self.amp.double().cpu().numpy(),
                phase=self.phase.double().cpu().numpy(),
                length=self.length,
                sample_rate=self.fs,
                order=self.order,
                learnable=self.learnable,
            )


def encode(clip, bank, stride=None):
    """Strided gammatone analysis followed by ReLU; bank is a GammatoneFilterbank or GammatoneParams"""
    if isinstance(bank, GammatoneParams):
        kernels = torch.from_numpy(bank.kernels())
        length = bank.length
    else:
        with torch.no_grad():
            kernels = bank.kernels().double()
        length = bank.length
        stride = stride or bank.stride
    stride = stride or max(1, length // 2)
    if len(clip) < length:
        raise InvalidArgumentError(f"clip of {len(clip)} samples is shorter than the {length}-tap kernels")

    waveform = torch.from_numpy(clip.samples).view(1, 1, -1)
    with torch.no_grad():
        features = F.relu(F.conv1d(waveform, kernels.t().unsqueeze(1), stride=stride))
    return EncodedFrames(features[0].numpy(), stride)


def magnitude_responses(params, n_fft=1024):
    """K x (n_fft/2 + 1) magnitude responses of the zero-padded kernels"""
    kernels = params.kernels()
    return np.abs(np.fft.rfft(kernels, n=n_fft, axis=0)).T
