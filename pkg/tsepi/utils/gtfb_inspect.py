#!/usr/bin/env python3
"""
Dump a gammatone bank's per-filter parameters and magnitude responses to CSV,
optionally with a PNG heatmap of the responses.
"""

import csv
import logging
import os

import numpy as np

from tsepi.models.gammatone import erb, magnitude_responses
from tsepi.utils.image_generator import ChartGenerator

logger = logging.getLogger(__name__)


def inspect_bank(params, out_dir, n_fft=1024, image=False):
    """Writes filters.csv and responses.csv (and responses.png); returns the paths"""
    os.makedirs(out_dir, exist_ok=True)
    responses = magnitude_responses(params, n_fft)
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / params.sample_rate)

    filters_path = os.path.join(out_dir, 'filters.csv')
    with open(filters_path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['filter', 'fc_hz', 'bw_scale', 'bandwidth_hz', 'amp', 'phase', 'peak_hz'])
        for k in range(params.n_filters):
            writer.writerow([k, f'{params.fc[k]:.4f}', f'{params.bw_scale[k]:.6f}',
                             f'{params.bw_scale[k] * erb(params.fc[k]):.4f}', f'{params.amp[k]:.6f}',
                             f'{params.phase[k]:.6f}', f'{freqs[np.argmax(responses[k])]:.2f}'])

    responses_path = os.path.join(out_dir, 'responses.csv')
    with open(responses_path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['filter'] + [f'{hz:.2f}' for hz in freqs])
        for k, row in enumerate(responses):
            writer.writerow([k] + [f'{v:.6e}' for v in row])

    paths = [filters_path, responses_path]
    if image:
        title = f'{params.n_filters} filters, {params.length} taps, {"learnable" if params.learnable else "fixed"}'
        paths.append(ChartGenerator().heatmap(responses, title, os.path.join(out_dir, 'responses.png')))
    logger.info(f"Filterbank inspection written to {out_dir}")
    return paths
