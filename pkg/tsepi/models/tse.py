#!/usr/bin/env python3
"""
Target sound extractor: waveform encoder (1-D conv or gammatone bank), pitch
concatenation, a causal dilated-conv stack, a label-conditioned mask head and a
transposed-conv decoder.
"""

import logging

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from tsepi.audio.core import STFT_HOP, STFT_WINDOW, AudioClip
from tsepi.config import TSEConfig
from tsepi.errors import InvalidArgumentError
from tsepi.models.gammatone import GammatoneFilterbank
from tsepi.pitch.grid import PitchGrid

logger = logging.getLogger(__name__)

# STFT framing stops a few frames short of the last encoder frame
PITCH_FRAME_SLACK = 6


class ConvEncoder(nn.Module):
    """Free 1-D conv analysis filters"""

    def __init__(self, n_filters, length, stride):
        super().__init__()
        self.length = length
        self.stride = stride
        self.conv = nn.Conv1d(1, n_filters, length, stride=stride, bias=False)

    def forward(self, waveform):
        if waveform.dim() == 2:
            waveform = waveform.unsqueeze(1)
        return self.conv(waveform)


def make_encoder(config):
    if config.encoder_type == 'conv':
        return ConvEncoder(config.n_filters, config.kernel_length, config.stride)
    return GammatoneFilterbank(config.n_filters, config.kernel_length, fs=config.sample_rate, stride=config.stride,
                               learnable=config.encoder_type == 'gtfb_learnable', f_low=config.f_low,
                               f_high=config.f_high)


def pitch_frame_index(n_frames, stride, length, hop=STFT_HOP, window=STFT_WINDOW, device=None):
    """
    Pitch frame nearest to each encoder frame. Encoder frame n is centred on
    sample n * stride - length / 2 and pitch frame p on p * hop + window / 2;
    ties go to the later pitch frame. Indices are not clamped.
    """
    centres = torch.arange(n_frames, device=device) * stride - length // 2
    return torch.div(2 * (centres - window // 2) + hop, 2 * hop, rounding_mode='floor')


def align_pitch(pitch, n_frames, stride, length, hop=STFT_HOP, window=STFT_WINDOW):
    """Hold pitch frames (B, P, C) onto n_frames encoder frames, nearest frame centre first"""
    n_pitch = pitch.shape[1]
    index = pitch_frame_index(n_frames, stride, length, hop, window, device=pitch.device)
    needed = max(int(index[-1]), 0) + 1
    if n_pitch == 0 or abs(n_pitch - needed) > PITCH_FRAME_SLACK:
        raise InvalidArgumentError(
            f"pitch has {n_pitch} frames but {n_frames} encoder frames at stride {stride} need about {needed}")
    return pitch[:, torch.clamp(index, 0, n_pitch - 1), :]


def concat_pitch(features, pitch, projection, stride, length, hop=STFT_HOP):
    """
    Append projected pitch vectors to encoded features along the channel axis.
    features (B, K, N); pitch (B, P, C) one-hot or posterior; projection maps C
    to the pitch channels, or is None to skip pitch entirely.
    """
    if projection is None:
        return features
    aligned = align_pitch(pitch, features.shape[-1], stride, length, hop)
    projected = projection(aligned.to(features.dtype)).transpose(1, 2)
    return torch.cat([features, projected], dim=1)


class DCCBlock(nn.Module):
    """Causal dilated conv -> channel LayerNorm -> ReLU, residual"""

    def __init__(self, channels, dilation, kernel=3):
        super().__init__()
        self.left_pad = dilation * (kernel - 1)
        self.conv = nn.Conv1d(channels, channels, kernel, dilation=dilation)
        self.norm = nn.LayerNorm(channels)

    def forward(self, x):
        y = self.conv(F.pad(x, (self.left_pad, 0)))
        y = self.norm(y.transpose(1, 2)).transpose(1, 2)
        return x + F.relu(y)


class TSENet(nn.Module):
    def __init__(self, config=None, grid=None):
        super().__init__()
        self.config = (config or TSEConfig()).validate()
        self.grid = grid or PitchGrid()
        cfg = self.config
        self.length = cfg.kernel_length
        self.stride = cfg.stride

        self.encoder = make_encoder(cfg)
        self.pitch_proj = nn.Linear(self.grid.n_classes, cfg.pitch_proj_dim, bias=False) if cfg.pitch_proj_dim else None
        self.bottleneck = nn.Conv1d(cfg.n_filters + cfg.pitch_proj_dim, cfg.dcc_channels, 1)
        self.dcc = nn.ModuleList([DCCBlock(cfg.dcc_channels, 2 ** layer) for layer in range(cfg.dcc_layers)])
        self.to_filters = nn.Conv1d(cfg.dcc_channels, cfg.n_filters, 1)
        self.label_embedding = nn.Embedding(cfg.n_classes, cfg.label_dim)

        head = []
        for _ in range(cfg.decoder_layers):
            head += [nn.Conv1d(cfg.n_filters, cfg.n_filters, 1), nn.ReLU()]
        head.append(nn.Conv1d(cfg.n_filters, cfg.n_filters, 1))
        self.mask_head = nn.Sequential(*head)
        self.decoder = nn.ConvTranspose1d(cfg.n_filters, 1, self.length, stride=self.stride, bias=False)

    def parameter_groups(self):
        return {
            'encoder': list(self.encoder.parameters()),
            'pitch_proj': list(self.pitch_proj.parameters()) if self.pitch_proj is not None else [],
            'label_embedding': list(self.label_embedding.parameters()),
            'dcc': list(self.bottleneck.parameters()) + list(self.dcc.parameters())
                   + list(self.to_filters.parameters()),
            'mask_head': list(self.mask_head.parameters()),
            'decoder': list(self.decoder.parameters()),
        }

    def pad_signal(self, waveform):
        """Left-pad by L and right-pad to a whole number of strides"""
        if waveform.dim() == 3:
            waveform = waveform.squeeze(1)
        if waveform.dim() != 2:
            raise InvalidArgumentError(f"waveform batch must be (B, T), got {tuple(waveform.shape)}")
        rest = (-waveform.shape[-1]) % self.stride
        return F.pad(waveform, (self.length, rest)), rest

    def _pitch_input(self, pitch, batch):
        if pitch is None:
            raise InvalidArgumentError("pitch input is required when pitch_proj_dim > 0")
        if pitch.dtype in (torch.long, torch.int32, torch.int64):
            if pitch.min() < 0 or pitch.max() >= self.grid.n_classes:
                raise InvalidArgumentError(f"pitch bins must lie in [0, {self.grid.n_classes})")
            return F.one_hot(pitch, self.grid.n_classes).float()
        if pitch.dim() != 3 or pitch.shape[0] != batch or pitch.shape[-1] != self.grid.n_classes:
            raise InvalidArgumentError(f"pitch posterior must be (B, P, {self.grid.n_classes})")
        return pitch

    def masks(self, mixture, labels, pitch=None, conditioned=True):
        """Returns (encoded features, masks), both (B, K, N)"""
        if labels.min() < 0 or labels.max() >= self.config.n_classes:
            raise InvalidArgumentError(f"class ids must lie in [0, {self.config.n_classes}), got {labels.tolist()}")
        padded, _ = self.pad_signal(mixture)
        encoded = F.relu(self.encoder(padded))

        h = encoded
        if self.pitch_proj is not None:
            one_hot = self._pitch_input(pitch, encoded.shape[0])
            if not conditioned:
                one_hot = torch.zeros_like(one_hot)
            h = concat_pitch(encoded, one_hot, self.pitch_proj, self.stride, self.length)
        h = self.bottleneck(h)
        for block in self.dcc:
            h = block(h)
        h = self.to_filters(h)

        label = self.label_embedding(labels)
        if not conditioned:
            label = torch.zeros_like(label)
        mask = torch.sigmoid(self.mask_head(h * label.unsqueeze(-1)))
        return encoded, mask

    def forward(self, mixture, labels, pitch=None, conditioned=True):
        """mixture (B, T), labels (B,), pitch bins (B, P) or posteriors (B, P, C) -> (B, T)"""
        n_samples = mixture.shape[-1]
        if n_samples < 1:
            raise InvalidArgumentError("empty mixture")
        encoded, mask = self.masks(mixture, labels, pitch, conditioned)
        output = self.decoder(encoded * mask).squeeze(1)
        return output[:, self.length:self.length + n_samples]


def decode_to_waveform(masked_features, decoder_weight, stride):
    """Overlap-add transposed convolution of (K, N) or (B, K, N) features with (K, 1, L) weights"""
    features = torch.as_tensor(masked_features)
    squeeze = features.dim() == 2
    if squeeze:
        features = features.unsqueeze(0)
    output = F.conv_transpose1d(features, decoder_weight.to(features.dtype), stride=stride).squeeze(1)
    return output[0] if squeeze else output


@torch.no_grad()
def extract(model, clip, class_label, pitch, conditioned=True):
    """Estimate the target in clip given its class and a pitch sequence"""
    was_training = model.training
    model.eval()
    try:
        device = next(model.parameters()).device
        mixture = torch.from_numpy(clip.samples.astype(np.float32)).unsqueeze(0).to(device)
        labels = torch.tensor([class_label], dtype=torch.long, device=device)
        bins = torch.from_numpy(pitch.bins).unsqueeze(0).to(device)
        estimate = model(mixture, labels, bins, conditioned)[0].double().cpu().numpy()
    finally:
        model.train(was_training)
    return AudioClip(estimate, clip.sample_rate)
