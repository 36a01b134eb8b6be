#!/usr/bin/env python3
"""
Versioned checkpoints shared by both stages: weights plus the network config,
the pitch grid, the seed and the optimizer/scheduler/RNG state needed to resume.
"""

import logging
import os
import random
from dataclasses import asdict

import numpy as np
import torch

from tsepi.config import PitchNetConfig, TSEConfig
from tsepi.errors import CheckpointError, ManifestError
from tsepi.models.film_tcn import PitchTCN
from tsepi.models.tse import TSENet
from tsepi.pitch.grid import PitchGrid

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 'tsepi-checkpoint'
CHECKPOINT_VERSION = 1
KINDS = {
    'pitch': PitchNetConfig,
    'tse': TSEConfig,
}


def rng_state():
    return {
        'torch': torch.get_rng_state(),
        'numpy': np.random.get_state(),
        'python': random.getstate(),
    }


def restore_rng_state(state):
    torch.set_rng_state(state['torch'])
    np.random.set_state(state['numpy'])
    random.setstate(state['python'])


def save_checkpoint(path, kind, model, seed, optimizer=None, scheduler=None, epoch=0, step=0, extra=None):
    """Write a checkpoint for a 'pitch' or 'tse' model"""
    if kind not in KINDS:
        raise CheckpointError(f"unknown checkpoint kind {kind!r}")
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    payload = {
        'format': CHECKPOINT_FORMAT,
        'version': CHECKPOINT_VERSION,
        'kind': kind,
        'config': asdict(model.config),
        'grid': model.grid.to_dict(),
        'seed': seed,
        'state_dict': model.state_dict(),
        'optimizer': optimizer.state_dict() if optimizer is not None else None,
        'scheduler': scheduler.state_dict() if scheduler is not None else None,
        'rng': rng_state(),
        'epoch': epoch,
        'step': step,
        'extra': extra or {},
    }
    torch.save(payload, path)
    logger.info(f"Saved {kind} checkpoint (epoch {epoch}) to {path}")
    return path


def read_checkpoint(path, kind=None, expected_config=None):
    """Load and validate the header; a wrong kind, version or config raises CheckpointError"""
    if not os.path.exists(path):
        raise ManifestError(f"checkpoint not found: {path}", path=path)
    try:
        payload = torch.load(path, map_location='cpu', weights_only=False)
    except Exception as e:
        raise CheckpointError(f"unreadable checkpoint {path}: {e}")

    if not isinstance(payload, dict) or payload.get('format') != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a tsepi checkpoint")
    if payload.get('version') != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path} has checkpoint version {payload.get('version')}, "
                              f"expected {CHECKPOINT_VERSION}")
    if kind is not None and payload.get('kind') != kind:
        raise CheckpointError(f"{path} holds a {payload.get('kind')!r} model, expected {kind!r}")
    if expected_config is not None and payload['config'] != asdict(expected_config):
        raise CheckpointError(f"{path} was trained with a different {payload['kind']} configuration")
    return payload


def load_model(path, kind, expected_config=None):
    """Rebuild the model stored in a checkpoint; returns (model, payload)"""
    payload = read_checkpoint(path, kind, expected_config)
    config = KINDS[kind](**payload['config'])
    grid = PitchGrid.from_dict(payload['grid'])
    model = PitchTCN(config, grid) if kind == 'pitch' else TSENet(config, grid)
    try:
        model.load_state_dict(payload['state_dict'])
    except RuntimeError as e:
        raise CheckpointError(f"weights in {path} do not fit the stored configuration: {e}")
    model.eval()
    logger.info(f"Loaded {kind} model from {path} (epoch {payload['epoch']})")
    return model, payload
