#!/usr/bin/env python3
"""
torch Dataset over mixture samples, loaded from a manifest or held in memory.
"""

import logging

import numpy as np
import torch
from torch.utils.data import Dataset

from tsepi.forge.manifest import load_sample, read_manifest

logger = logging.getLogger(__name__)


class MixtureDataset(Dataset):
    """Items are dicts of mixture, target, class and pitch-bin tensors"""

    def __init__(self, samples, pitch_override=None):
        self.samples = list(samples)
        self.pitch_override = pitch_override or {}

    @classmethod
    def from_manifest(cls, path, grid=None, limit=None):
        records = read_manifest(path)
        if limit is not None:
            records = records[:limit]
        samples = [load_sample(path, record, grid) for record in records]
        logger.info(f"Loaded {len(samples)} samples from {path}")
        return cls(samples)

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, index):
        sample = self.samples[index]
        pitch = self.pitch_override.get(index, sample.pitch_ref)
        return {
            'index': index,
            'mixture': torch.from_numpy(sample.mixture.samples.astype(np.float32)),
            'target': torch.from_numpy(sample.target_direct.samples.astype(np.float32)),
            'class': torch.tensor(sample.target_class, dtype=torch.long),
            'pitch': torch.from_numpy(pitch.bins.astype(np.int64)),
        }

    def with_pitch(self, pitch_by_index):
        """Same samples with the pitch labels replaced (e.g. by stage-1 predictions)"""
        return MixtureDataset(self.samples, pitch_by_index)
