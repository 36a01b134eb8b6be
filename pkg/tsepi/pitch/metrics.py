#!/usr/bin/env python3
"""
Pitch-sequence metrics: raw pitch accuracy and cosine similarity.
"""

import numpy as np

from tsepi.errors import InvalidArgumentError, UndefinedResultError
from tsepi.pitch.grid import PitchGrid

RPA_THRESHOLD_CENTS = 50.0


def _check_pair(est, ref):
    if len(est) != len(ref):
        raise InvalidArgumentError(f"pitch sequences differ in length: {len(est)} vs {len(ref)}")


def rpa(est, ref, threshold=RPA_THRESHOLD_CENTS, grid=None):
    """Fraction of reference-voiced frames whose estimate is within threshold cents"""
    grid = grid or PitchGrid()
    _check_pair(est, ref)
    if est.hop != ref.hop:
        raise InvalidArgumentError(f"pitch hops differ: {est.hop} vs {ref.hop}")
    est.validate(grid)
    ref.validate(grid)

    ref_voiced = ref.voiced_mask(grid)
    if not np.any(ref_voiced):
        raise UndefinedResultError("raw pitch accuracy is undefined without reference-voiced frames")

    est_voiced = est.voiced_mask(grid)
    error_cents = np.abs(est.bins - ref.bins) * grid.step
    correct = ref_voiced & est_voiced & (error_cents <= threshold)
    return float(np.count_nonzero(correct) / np.count_nonzero(ref_voiced))


def coss_hz(est_hz, ref_hz):
    """Cosine similarity between two per-frame frequency vectors"""
    est_hz = np.asarray(est_hz, dtype=np.float64)
    ref_hz = np.asarray(ref_hz, dtype=np.float64)
    if est_hz.shape != ref_hz.shape:
        raise InvalidArgumentError(f"frequency vectors differ in shape: {est_hz.shape} vs {ref_hz.shape}")

    est_norm = np.linalg.norm(est_hz)
    ref_norm = np.linalg.norm(ref_hz)
    if est_norm == 0.0 and ref_norm == 0.0:
        raise UndefinedResultError("cosine similarity is undefined for two all-unvoiced sequences")
    if est_norm == 0.0 or ref_norm == 0.0:
        return 0.0
    return float(np.clip(np.dot(est_hz, ref_hz) / (est_norm * ref_norm), -1.0, 1.0))


def coss(est, ref, grid=None):
    """Cosine similarity of the sequences in Hz, unvoiced frames mapped to 0 Hz"""
    grid = grid or PitchGrid()
    _check_pair(est, ref)
    return coss_hz(est.to_hz(grid), ref.to_hz(grid))
