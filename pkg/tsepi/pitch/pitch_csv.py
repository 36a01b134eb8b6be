#!/usr/bin/env python3
"""
Pitch sequences as CSV: frame_index, f0_hz (0 for unvoiced), bin_index.
"""

import csv
import logging
import os

import numpy as np

from tsepi.errors import ManifestError
from tsepi.pitch.grid import PITCH_HOP_SECONDS, PitchGrid, PitchSequence

logger = logging.getLogger(__name__)

HEADER = ["frame_index", "f0_hz", "bin_index"]


def write_pitch_csv(path, seq, grid=None):
    """Write one row per frame"""
    grid = grid or PitchGrid()
    hz = seq.to_hz(grid)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(HEADER)
        for index, (f0, b) in enumerate(zip(hz, seq.bins)):
            writer.writerow([index, f"{f0:.4f}", int(b)])
    return path


def read_pitch_csv(path, grid=None, hop=PITCH_HOP_SECONDS):
    """Read the bin column back into a PitchSequence"""
    grid = grid or PitchGrid()
    if not os.path.exists(path):
        raise ManifestError(f"pitch file not found: {path}", path=path)

    bins = []
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        for line_number, row in enumerate(reader, start=1):
            if line_number == 1 and row == HEADER:
                continue
            if len(row) != 3:
                raise ManifestError(f"malformed pitch row in {path}: {row}", path=path, line=line_number)
            try:
                frame_index, bin_index = int(row[0]), int(row[2])
            except ValueError:
                raise ManifestError(f"non-integer pitch row in {path}: {row}", path=path, line=line_number)
            if frame_index != len(bins):
                raise ManifestError(f"frame index {frame_index} out of order in {path}",
                                    path=path, line=line_number)
            bins.append(bin_index)

    return PitchSequence(np.asarray(bins, dtype=np.int64), hop).validate(grid)
