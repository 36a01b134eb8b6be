#!/usr/bin/env python3
"""
Epoch loop shared by both training stages: seeded shuffling, gradient clipping,
lr schedule, JSON-lines training log and resumable checkpoints.
"""

import json
import logging
import math
import os
import random
from dataclasses import replace

import numpy as np
import torch
from torch.utils.data import DataLoader, Subset
from tqdm import tqdm

from tsepi.models.checkpoint import read_checkpoint, restore_rng_state, save_checkpoint

logger = logging.getLogger(__name__)

LOG_NAME = 'train_log.jsonl'
OVERFIT_STEPS = 500


def seed_everything(seed):
    random.seed(seed)
    np.random.seed(seed % 2 ** 32)
    torch.manual_seed(seed)


class TrainLog:
    """Append-only JSON lines"""

    def __init__(self, path):
        self.path = path
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)

    def write(self, **entry):
        with open(self.path, 'a', encoding='utf-8') as f:
            f.write(json.dumps(entry, sort_keys=True) + '\n')

    def read(self):
        if not os.path.exists(self.path):
            return []
        with open(self.path, 'r', encoding='utf-8') as f:
            return [json.loads(line) for line in f if line.strip()]


class Trainer:
    """Subclasses provide kind, train_step(batch) -> loss tensor and validate() -> dict"""

    kind = None
    checkpoint_name = None

    def __init__(self, model, train_config, run_dir, seed, train_set, val_set=None, overfit=None, extra=None):
        if overfit:
            train_set = Subset(train_set, range(min(overfit, len(train_set))))
            steps = train_config.max_steps or OVERFIT_STEPS
            train_config = replace(train_config, epochs=steps, batch_size=len(train_set), lr_milestones=[],
                                   max_steps=steps, checkpoint_every=steps)
            val_set = None
        self.model = model
        self.config = train_config.validate()
        self.run_dir = run_dir
        self.seed = seed
        self.train_set = train_set
        self.val_set = val_set
        self.overfit = overfit
        self.extra = extra or {}

        self.optimizer = torch.optim.Adam(model.parameters(), lr=train_config.lr)
        self.scheduler = torch.optim.lr_scheduler.MultiStepLR(
            self.optimizer, milestones=list(train_config.lr_milestones), gamma=train_config.lr_gamma)
        self.log = TrainLog(os.path.join(run_dir, LOG_NAME))
        self.checkpoint_path = os.path.join(run_dir, self.checkpoint_name)
        self.epoch = 0
        self.step = 0
        self.history = []

        n_params = sum(p.numel() for p in model.parameters() if p.requires_grad)
        logger.info(f"{self.kind} model: {n_params:,} trainable parameters, {len(train_set)} training samples")

    def loader(self, epoch):
        generator = torch.Generator()
        generator.manual_seed(self.seed + epoch)
        return DataLoader(self.train_set, batch_size=self.config.batch_size, shuffle=not self.overfit,
                          generator=generator, num_workers=self.config.num_workers)

    def train_step(self, batch):
        raise NotImplementedError

    def validate(self):
        return {}

    def resume(self, path):
        """Restore weights, optimizer, scheduler, RNG state and counters"""
        payload = read_checkpoint(path, self.kind, self.model.config)
        self.model.load_state_dict(payload['state_dict'])
        if payload['optimizer'] is not None:
            self.optimizer.load_state_dict(payload['optimizer'])
        if payload['scheduler'] is not None:
            self.scheduler.load_state_dict(payload['scheduler'])
        restore_rng_state(payload['rng'])
        self.epoch = payload['epoch']
        self.step = payload['step']
        logger.info(f"Resumed {self.kind} training from {path} at epoch {self.epoch}, step {self.step}")
        return payload

    def save(self):
        return save_checkpoint(self.checkpoint_path, self.kind, self.model, self.seed, self.optimizer,
                               self.scheduler, self.epoch, self.step, self.extra)

    def _steps_exhausted(self):
        return self.config.max_steps is not None and self.step >= self.config.max_steps

    def fit(self):
        """Train until the configured epochs or max_steps; returns the checkpoint path"""
        self.model.train()
        while self.epoch < self.config.epochs and not self._steps_exhausted():
            epoch = self.epoch
            total, count = 0.0, 0
            progress = tqdm(self.loader(epoch), desc=f"{self.kind} epoch {epoch + 1}", disable=bool(self.overfit))
            for batch in progress:
                loss = self.train_step(batch)
                self.optimizer.zero_grad()
                loss.backward()
                if self.config.grad_clip:
                    torch.nn.utils.clip_grad_norm_(self.model.parameters(), self.config.grad_clip)
                self.optimizer.step()

                value = float(loss.item())
                if not math.isfinite(value):
                    logger.warning(f"Non-finite loss at step {self.step}")
                self.step += 1
                total += value
                count += 1
                self.history.append(value)
                progress.set_postfix({'loss': f"{value:.4f}"})
                self.log.write(kind=self.kind, epoch=epoch + 1, step=self.step, loss=value)
                if self._steps_exhausted():
                    break

            lr_before = self.optimizer.param_groups[0]['lr']
            self.scheduler.step()
            lr_after = self.optimizer.param_groups[0]['lr']
            if lr_after != lr_before:
                logger.info(f"Learning rate changed from {lr_before:g} to {lr_after:g} after epoch {epoch + 1}")
                self.log.write(kind=self.kind, epoch=epoch + 1, step=self.step, event='lr', lr=lr_after)

            self.epoch = epoch + 1
            metrics = self.validate() if self.val_set is not None else {}
            self.model.train()
            self.log.write(kind=self.kind, epoch=self.epoch, step=self.step,
                           train_loss=total / max(1, count), **metrics)

            last = self.epoch >= self.config.epochs or self._steps_exhausted()
            if last or self.epoch % self.config.checkpoint_every == 0:
                self.save()

        return self.checkpoint_path
