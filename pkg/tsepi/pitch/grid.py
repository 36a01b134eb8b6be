#!/usr/bin/env python3
"""
Log-frequency pitch grid (20-cent bins from C1 to B6) and per-frame pitch sequences.
"""

import logging
from dataclasses import dataclass

import numpy as np

from tsepi.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

PITCH_HOP_SECONDS = 0.01


@dataclass(frozen=True)
class PitchGrid:
    f_min: float = 32.7
    f_max: float = 1975.5
    step: float = 20.0

    def __post_init__(self):
        if not 0 < self.f_min < self.f_max:
            raise InvalidArgumentError(f"need 0 < f_min < f_max, got {self.f_min}, {self.f_max}")
        if self.step <= 0:
            raise InvalidArgumentError(f"grid step must be positive, got {self.step} cents")

    @property
    def n_bins(self):
        """Voiced bin count"""
        return int(round(1200.0 * np.log2(self.f_max / self.f_min) / self.step)) + 1

    @property
    def unvoiced_index(self):
        return self.n_bins

    @property
    def n_classes(self):
        """Voiced bins plus the unvoiced class"""
        return self.n_bins + 1

    def to_dict(self):
        return {"f_min": self.f_min, "f_max": self.f_max, "step": self.step}

    @classmethod
    def from_dict(cls, data):
        return cls(float(data["f_min"]), float(data["f_max"]), float(data["step"]))

    def centers(self):
        return self.bin_to_hz(np.arange(self.n_bins))

    def bin_to_hz(self, bins):
        """Center frequency of voiced bins; the unvoiced index maps to 0 Hz"""
        bins = np.asarray(bins)
        hz = self.f_min * 2.0 ** (bins * self.step / 1200.0)
        return np.where(bins == self.unvoiced_index, 0.0, hz)

    def hz_to_bin(self, f):
        """Nearest bin by cents distance; 0 Hz is the unvoiced sentinel"""
        bins = self.hz_to_bins(np.asarray([f], dtype=np.float64))
        return int(bins[0])

    def hz_to_bins(self, hz):
        hz = np.asarray(hz, dtype=np.float64)
        if np.any(hz < 0) or not np.all(np.isfinite(hz)):
            raise InvalidArgumentError("frequencies must be finite and non-negative")
        voiced = hz > 0
        cents = np.zeros_like(hz)
        cents[voiced] = 1200.0 * np.log2(hz[voiced] / self.f_min)
        bins = np.clip(np.rint(cents / self.step), 0, self.n_bins - 1).astype(np.int64)
        return np.where(voiced, bins, self.unvoiced_index)


@dataclass(frozen=True, eq=False)
class PitchSequence:
    """Per-frame bin labels; the grid's unvoiced index marks unvoiced frames"""

    bins: np.ndarray
    hop: float = PITCH_HOP_SECONDS

    def __post_init__(self):
        bins = np.asarray(self.bins)
        if bins.ndim != 1:
            raise InvalidArgumentError(f"pitch bins must be 1-D, got shape {bins.shape}")
        if bins.size and not np.issubdtype(bins.dtype, np.integer):
            if not np.all(np.equal(np.mod(bins, 1), 0)):
                raise InvalidArgumentError("pitch bins must be integers")
        if self.hop <= 0:
            raise InvalidArgumentError(f"pitch hop must be positive, got {self.hop}")
        object.__setattr__(self, "bins", bins.astype(np.int64))

    def __len__(self):
        return len(self.bins)

    def __eq__(self, other):
        if not isinstance(other, PitchSequence):
            return NotImplemented
        return self.hop == other.hop and np.array_equal(self.bins, other.bins)

    def validate(self, grid):
        if np.any(self.bins < 0) or np.any(self.bins > grid.unvoiced_index):
            raise InvalidArgumentError(
                f"pitch bins must lie in [0, {grid.unvoiced_index}], got range "
                f"[{self.bins.min()}, {self.bins.max()}]")
        return self

    def voiced_mask(self, grid):
        return self.bins != grid.unvoiced_index

    def to_hz(self, grid):
        self.validate(grid)
        return grid.bin_to_hz(self.bins)

    @classmethod
    def from_hz(cls, hz, grid, hop=PITCH_HOP_SECONDS):
        return cls(grid.hz_to_bins(hz), hop)

    @classmethod
    def unvoiced(cls, n_frames, grid, hop=PITCH_HOP_SECONDS):
        return cls(np.full(n_frames, grid.unvoiced_index, dtype=np.int64), hop)


def one_hot(seq, grid):
    """Frames x (n_bins + 1) one-hot matrix"""
    seq.validate(grid)
    matrix = np.zeros((len(seq), grid.n_classes), dtype=np.float32)
    matrix[np.arange(len(seq)), seq.bins] = 1.0
    return matrix
