#!/usr/bin/env python3
"""
Stage 2: train the target sound extractor on the weighted SNR / SI-SNR loss,
with ground-truth pitch or pitch predicted by a stage-1 checkpoint.
"""

import logging
import os

import numpy as np
import torch

from tsepi.errors import InvalidArgumentError
from tsepi.metrics import combined_loss, improvement, si_snr_db
from tsepi.models.checkpoint import load_model
from tsepi.models.film_tcn import decode, extract_pitch_posterior
from tsepi.models.tse import TSENet, extract
from tsepi.training.trainer import Trainer, seed_everything

logger = logging.getLogger(__name__)


def predicted_pitch(pitch_model, mixtures, unvoiced_threshold=0.0):
    """Stage-1 pitch for every sample, keyed by dataset index"""
    predictions = {}
    for index, sample in enumerate(mixtures.samples):
        posterior = extract_pitch_posterior(pitch_model, sample.mixture, sample.target_class)
        predictions[index] = decode(posterior, unvoiced_threshold, pitch_model.grid)
    return predictions


def load_pitch_source(pitch_checkpoint, grid):
    """Load a stage-1 model whose grid must match the one the extractor uses"""
    pitch_model, _ = load_model(pitch_checkpoint, 'pitch')
    if pitch_model.grid != grid:
        raise InvalidArgumentError(
            f"pitch checkpoint grid {pitch_model.grid.to_dict()} does not match {grid.to_dict()}")
    return pitch_model


class TSETrainer(Trainer):
    kind = 'tse'
    checkpoint_name = 'tse.ckpt'

    def __init__(self, run_config, run_dir, train_mixtures, val_mixtures=None, overfit=None, w1=None, w2=None,
                 pitch_checkpoint=None):
        seed_everything(run_config.seed)
        model = TSENet(run_config.tse_net)
        self.w1 = run_config.loss.w1 if w1 is None else w1
        self.w2 = run_config.loss.w2 if w2 is None else w2
        if abs(self.w1 + self.w2 - 1.0) > 1e-9 or self.w1 < 0 or self.w2 < 0:
            raise InvalidArgumentError(f"loss weights must be non-negative and sum to 1, got ({self.w1}, {self.w2})")

        pitch_source = 'ground_truth'
        if pitch_checkpoint:
            pitch_model = load_pitch_source(pitch_checkpoint, model.grid)
            threshold = run_config.eval.unvoiced_threshold
            train_mixtures = train_mixtures.with_pitch(predicted_pitch(pitch_model, train_mixtures, threshold))
            if val_mixtures is not None:
                val_mixtures = val_mixtures.with_pitch(predicted_pitch(pitch_model, val_mixtures, threshold))
            pitch_source = os.path.abspath(pitch_checkpoint)
            logger.info(f"Training on stage-1 pitch from {pitch_checkpoint}")

        super().__init__(model, run_config.tse_train, run_dir, run_config.seed, train_mixtures, val_mixtures,
                         overfit, extra={'w1': self.w1, 'w2': self.w2, 'pitch_source': pitch_source})

    def train_step(self, batch):
        estimate = self.model(batch['mixture'], batch['class'], batch['pitch'])
        return combined_loss(estimate, batch['target'], self.w1, self.w2)

    @torch.no_grad()
    def validate(self):
        gains = []
        for index in range(len(self.val_set)):
            gains.append(self.si_snri(self.val_set, index))
        metrics = {'val_si_snri': float(np.mean(gains)) if gains else None}
        logger.info(f"Epoch {self.epoch}: val SI-SNRi {metrics['val_si_snri']}")
        return metrics

    def si_snri(self, dataset, index, conditioned=True):
        """SI-SNR improvement of the current model on one dataset item"""
        sample = dataset.samples[index]
        pitch = dataset.pitch_override.get(index, sample.pitch_ref)
        estimate = extract(self.model, sample.mixture, sample.target_class, pitch, conditioned)
        return improvement(si_snr_db, estimate, sample.target_direct, sample.mixture)


def train_tse(run_config, run_dir, train_mixtures, val_mixtures=None, resume=None, overfit=None, w1=None, w2=None,
              pitch_checkpoint=None):
    """Train stage 2; returns (checkpoint path, trainer)"""
    trainer = TSETrainer(run_config, run_dir, train_mixtures, val_mixtures, overfit, w1, w2, pitch_checkpoint)
    if resume:
        trainer.resume(resume)
    return trainer.fit(), trainer


def train_tse_sweep(run_config, run_dir, train_mixtures, val_mixtures=None, overfit=None, pitch_checkpoint=None):
    """One run per (w1, w2) pair in run_config.loss.sweep, each in sweep_<w1>_<w2>/"""
    results = {}
    for w1, w2 in run_config.loss.sweep:
        sweep_dir = os.path.join(run_dir, f'sweep_{w1:g}_{w2:g}')
        logger.info(f"Loss sweep: w1={w1}, w2={w2} -> {sweep_dir}")
        path, _ = train_tse(run_config, sweep_dir, train_mixtures, val_mixtures, overfit=overfit, w1=w1, w2=w2,
                            pitch_checkpoint=pitch_checkpoint)
        results[(w1, w2)] = path
    return results
