#!/usr/bin/env python3
"""
Stage 1: train the FiLM-conditioned pitch extractor with frame-wise cross-entropy.
"""

import logging

import numpy as np
import torch
from torch.utils.data import Dataset

from tsepi.errors import UndefinedResultError
from tsepi.models.film_tcn import PitchTCN, decode_batch, pitch_ce_from_logits, spectrogram_features
from tsepi.pitch.grid import PitchSequence
from tsepi.pitch.metrics import rpa
from tsepi.training.trainer import Trainer, seed_everything

logger = logging.getLogger(__name__)


class PitchFeatureDataset(Dataset):
    """log-magnitude spectrogram, class and pitch bins per sample"""

    def __init__(self, mixtures):
        self.mixtures = mixtures

    def __len__(self):
        return len(self.mixtures)

    def __getitem__(self, index):
        sample = self.mixtures.samples[index]
        features = spectrogram_features(sample.mixture)[0]
        bins = torch.from_numpy(sample.pitch_ref.bins.astype(np.int64))
        return {
            'features': features,
            'class': torch.tensor(sample.target_class, dtype=torch.long),
            'pitch': bins[:features.shape[-1]],
        }


class PitchTrainer(Trainer):
    kind = 'pitch'
    checkpoint_name = 'pitch.ckpt'

    def __init__(self, run_config, run_dir, train_mixtures, val_mixtures=None, overfit=None):
        seed_everything(run_config.seed)
        model = PitchTCN(run_config.pitch_net)
        self.unvoiced_threshold = run_config.eval.unvoiced_threshold
        super().__init__(model, run_config.pitch_train, run_dir, run_config.seed,
                         PitchFeatureDataset(train_mixtures),
                         PitchFeatureDataset(val_mixtures) if val_mixtures is not None else None,
                         overfit)

    def train_step(self, batch):
        logits = self.model(batch['features'], batch['class'])
        return pitch_ce_from_logits(logits, batch['pitch'])

    @torch.no_grad()
    def validate(self):
        self.model.eval()
        losses, scores = [], []
        for index in range(len(self.val_set)):
            item = self.val_set[index]
            logits = self.model(item['features'].unsqueeze(0), item['class'].unsqueeze(0))
            losses.append(float(pitch_ce_from_logits(logits, item['pitch'].unsqueeze(0))))
            est = decode_batch(torch.softmax(logits, dim=-1), self.unvoiced_threshold, self.model.grid)[0]
            try:
                scores.append(rpa(est, PitchSequence(item['pitch'].numpy()), grid=self.model.grid))
            except UndefinedResultError:
                continue
        metrics = {'val_loss': float(np.mean(losses)) if losses else None,
                   'val_rpa': float(np.mean(scores)) if scores else None}
        logger.info(f"Epoch {self.epoch}: val loss {metrics['val_loss']}, val RPA {metrics['val_rpa']}")
        return metrics


def train_pitch(run_config, run_dir, train_mixtures, val_mixtures=None, resume=None, overfit=None):
    """Train stage 1; returns (checkpoint path, trainer)"""
    trainer = PitchTrainer(run_config, run_dir, train_mixtures, val_mixtures, overfit)
    if resume:
        trainer.resume(resume)
    return trainer.fit(), trainer
