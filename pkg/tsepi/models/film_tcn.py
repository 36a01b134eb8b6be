#!/usr/bin/env python3
"""
Class-conditional pitch extractor: a dilated temporal convolutional network
whose every block is FiLM-modulated by an embedding of the target class.

Input is log(1 + |STFT|) with 513 bins per 10 ms frame; output is a per-frame
posterior over the pitch grid's voiced bins plus the unvoiced class.
"""

import logging
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from tsepi.audio.core import STFT_HOP, STFT_WINDOW, stft_magnitude
from tsepi.config import PitchNetConfig
from tsepi.errors import InvalidArgumentError
from tsepi.pitch.grid import PITCH_HOP_SECONDS, PitchGrid, PitchSequence

logger = logging.getLogger(__name__)

N_FREQ_BINS = STFT_WINDOW // 2 + 1
FILM_INIT_STD = 0.01
LOG_FLOOR = 1e-12


def film_modulate(features, gamma, beta):
    """out[..., c, t] = gamma[..., c] * features[..., c, t] + beta[..., c]"""
    if gamma.shape != beta.shape:
        raise InvalidArgumentError(f"gamma {tuple(gamma.shape)} and beta {tuple(beta.shape)} differ in shape")
    if features.dim() < 2 or gamma.shape[-1] != features.shape[-2]:
        raise InvalidArgumentError(
            f"FiLM expects {features.shape[-2] if features.dim() >= 2 else '?'} channels, "
            f"got gamma of shape {tuple(gamma.shape)}")
    if gamma.dim() != features.dim() - 1:
        raise InvalidArgumentError(
            f"gamma of shape {tuple(gamma.shape)} does not broadcast over features {tuple(features.shape)}")
    return gamma.unsqueeze(-1) * features + beta.unsqueeze(-1)


def receptive_field(depth, kernel=3, dilation_cycle=8):
    """Receptive field in frames of `depth` blocks with dilation 2^(l mod cycle)"""
    return PitchNetConfig(depth=depth, kernel=kernel, dilation_cycle=dilation_cycle).receptive_field()


class FiLMGenerator(nn.Module):
    """Class id -> embedding -> per-layer (gamma, beta)"""

    def __init__(self, n_classes, embed_dim, channels, depth):
        super().__init__()
        self.n_classes = n_classes
        self.embedding = nn.Embedding(n_classes, embed_dim)
        self.gamma_maps = nn.ModuleList([nn.Linear(embed_dim, channels) for _ in range(depth)])
        self.beta_maps = nn.ModuleList([nn.Linear(embed_dim, channels) for _ in range(depth)])
        for gamma_map, beta_map in zip(self.gamma_maps, self.beta_maps):
            nn.init.normal_(gamma_map.weight, std=FILM_INIT_STD)
            nn.init.ones_(gamma_map.bias)
            nn.init.normal_(beta_map.weight, std=FILM_INIT_STD)
            nn.init.zeros_(beta_map.bias)

    def forward(self, labels):
        if labels.min() < 0 or labels.max() >= self.n_classes:
            raise InvalidArgumentError(f"class ids must lie in [0, {self.n_classes}), got {labels.tolist()}")
        embedded = self.embedding(labels)
        return [(g(embedded), b(embedded)) for g, b in zip(self.gamma_maps, self.beta_maps)]

    @torch.no_grad()
    def reset_identity(self):
        """gamma = 1, beta = 0 for every class"""
        for gamma_map, beta_map in zip(self.gamma_maps, self.beta_maps):
            gamma_map.weight.zero_()
            gamma_map.bias.fill_(1.0)
            beta_map.weight.zero_()
            beta_map.bias.zero_()


class FiLMBlock(nn.Module):
    """Dilated conv -> FiLM -> PReLU -> 1x1 conv, with a residual connection"""

    def __init__(self, channels, kernel, dilation):
        super().__init__()
        self.dilated = nn.Conv1d(channels, channels, kernel, dilation=dilation,
                                 padding=dilation * (kernel - 1) // 2)
        self.activation = nn.PReLU(channels)
        self.pointwise = nn.Conv1d(channels, channels, 1)

    def forward(self, x, gamma, beta):
        y = film_modulate(self.dilated(x), gamma, beta)
        return x + self.pointwise(self.activation(y))


class PitchTCN(nn.Module):
    def __init__(self, config=None, grid=None, n_freq_bins=N_FREQ_BINS):
        super().__init__()
        self.config = (config or PitchNetConfig()).validate()
        self.grid = grid or PitchGrid()
        channels = self.config.channels

        self.input_proj = nn.Conv1d(n_freq_bins, channels, 1)
        self.film = FiLMGenerator(self.config.n_classes, self.config.embed_dim, channels, self.config.depth)
        self.blocks = nn.ModuleList([
            FiLMBlock(channels, self.config.kernel, 2 ** (layer % self.config.dilation_cycle))
            for layer in range(self.config.depth)
        ])
        self.head = nn.Conv1d(channels, self.grid.n_classes, 1)

    @property
    def receptive_field(self):
        return self.config.receptive_field()

    def forward(self, log_spec, labels):
        """log_spec (B, F, T), labels (B,) -> logits (B, T, n_bins + 1)"""
        x = self.input_proj(log_spec)
        for block, (gamma, beta) in zip(self.blocks, self.film(labels)):
            x = block(x, gamma, beta)
        return self.head(x).transpose(1, 2)

    def posterior(self, log_spec, labels):
        return torch.softmax(self.forward(log_spec, labels), dim=-1)


@dataclass(frozen=True, eq=False)
class PitchPosterior:
    """frames x (n_bins + 1) probabilities"""

    probs: np.ndarray
    hop: float = PITCH_HOP_SECONDS

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 2:
            raise InvalidArgumentError(f"posterior must be 2-D, got shape {probs.shape}")
        if probs.size and (np.any(probs < -1e-9) or np.any(probs > 1 + 1e-9)
                           or not np.allclose(probs.sum(axis=1), 1.0, atol=1e-5)):
            raise InvalidArgumentError("posterior rows must be probability distributions")
        object.__setattr__(self, 'probs', probs)

    def __len__(self):
        return self.probs.shape[0]


def spectrogram_features(clip):
    """log(1 + |STFT|) as a (1, F, T) float tensor"""
    spec = stft_magnitude(clip, STFT_WINDOW, STFT_HOP).log_compressed()
    return torch.from_numpy(spec.T.astype(np.float32)).unsqueeze(0)


@torch.no_grad()
def extract_pitch_posterior(model, clip, class_label):
    """Posterior for one clip and target class in inference mode"""
    was_training = model.training
    model.eval()
    try:
        features = spectrogram_features(clip).to(next(model.parameters()).device)
        labels = torch.tensor([class_label], dtype=torch.long, device=features.device)
        probs = model.posterior(features, labels)[0].double().cpu().numpy()
    finally:
        model.train(was_training)
    return PitchPosterior(probs, STFT_HOP / clip.sample_rate)


def pitch_ce_loss(probs, ref):
    """Mean per-frame -log p(reference bin); probs (..., T, C), ref (..., T) bin indices"""
    probs = torch.as_tensor(probs)
    ref = torch.as_tensor(ref, dtype=torch.long, device=probs.device)
    if probs.shape[:-1] != ref.shape:
        raise InvalidArgumentError(
            f"posterior frames {tuple(probs.shape[:-1])} do not match reference frames {tuple(ref.shape)}")
    picked = torch.gather(probs, -1, ref.unsqueeze(-1)).squeeze(-1)
    return -torch.log(picked.clamp_min(LOG_FLOOR)).mean()


def pitch_ce_from_logits(logits, ref):
    """Same loss computed from logits with a stable log-softmax"""
    if logits.shape[:-1] != ref.shape:
        raise InvalidArgumentError(
            f"logit frames {tuple(logits.shape[:-1])} do not match reference frames {tuple(ref.shape)}")
    return F.cross_entropy(logits.reshape(-1, logits.shape[-1]), ref.reshape(-1))


def decode(posterior, unvoiced_threshold=0.0, grid=None):
    """Argmax bin per frame; the unvoiced class or a peak under the threshold means unvoiced"""
    grid = grid or PitchGrid()
    if isinstance(posterior, PitchPosterior):
        probs, hop = posterior.probs, posterior.hop
    else:
        probs, hop = np.asarray(posterior, dtype=np.float64), PITCH_HOP_SECONDS
    if probs.shape[-1] != grid.n_classes:
        raise InvalidArgumentError(f"posterior has {probs.shape[-1]} classes, grid needs {grid.n_classes}")
    bins = np.argmax(probs, axis=-1)
    peak = np.max(probs, axis=-1)
    bins = np.where(peak < unvoiced_threshold, grid.unvoiced_index, bins)
    return PitchSequence(bins, hop)


def decode_batch(probs, unvoiced_threshold=0.0, grid=None):
    """Torch (B, T, C) probabilities -> list of PitchSequence"""
    probs = probs.detach().double().cpu().numpy()
    return [decode(p, unvoiced_threshold, grid) for p in probs]
