#!/usr/bin/env python3
"""
Dataset manifests: one JSON record per line referencing mixture/target WAVs and
the pitch CSV, plus the class, seed, SNRs and scene of the sample.
"""

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from functools import partial

from tqdm import tqdm

from tsepi.audio.core import STFT_HOP
from tsepi.audio.wavio import read_wav, write_wav
from tsepi.errors import ManifestError
from tsepi.forge.mixture import MixtureSample, synthesize_sample
from tsepi.pitch.grid import PitchGrid
from tsepi.pitch.pitch_csv import read_pitch_csv, write_pitch_csv
from tsepi.room.cache import save_rir
from tsepi.room.scene import Geometry, RoomSpec

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.jsonl'
FILE_KEYS = ('mixture', 'target', 'pitch')


def _relative_paths(index):
    stem = f'{index:05d}'
    return {
        'mixture': os.path.join('mixture', f'{stem}.wav'),
        'target': os.path.join('target', f'{stem}.wav'),
        'pitch': os.path.join('pitch', f'{stem}.csv'),
    }


def sample_record(index, sample):
    """Manifest record for one sample (paths relative to the manifest directory)"""
    record = {'index': index}
    record.update(_relative_paths(index))
    record['target_class'] = int(sample.target_class)
    record['n_frames'] = len(sample.pitch_ref)
    record['sample_rate'] = sample.mixture.sample_rate
    record.update(sample.meta)
    return record


def write_sample(out_dir, index, sample, grid=None):
    """Write the audio and pitch files of one sample; returns its record"""
    record = sample_record(index, sample)
    write_wav(os.path.join(out_dir, record['mixture']), sample.mixture, subtype='float32')
    write_wav(os.path.join(out_dir, record['target']), sample.target_direct, subtype='float32')
    write_pitch_csv(os.path.join(out_dir, record['pitch']), sample.pitch_ref, grid)
    return record


def write_manifest(samples, path, grid=None):
    """Write samples next to path and the manifest itself; returns the records"""
    out_dir = os.path.dirname(path) or '.'
    records = [write_sample(out_dir, index, sample, grid) for index, sample in enumerate(samples)]
    write_records(records, path)
    return records


def write_records(records, path):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + '\n')
    logger.info(f"Wrote {len(records)} records to {path}")


def read_manifest(path, check_files=True):
    """Read manifest records; missing or corrupt entries raise ManifestError with the line number"""
    if not os.path.exists(path):
        raise ManifestError(f"manifest not found: {path}", path=path)

    base = os.path.dirname(path) or '.'
    records = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ManifestError(f"corrupt manifest record in {path}: {e}", path=path, line=line_number)
            missing = [key for key in FILE_KEYS if key not in record]
            if missing:
                raise ManifestError(f"manifest record lacks {missing}", path=path, line=line_number)
            if check_files:
                for key in FILE_KEYS:
                    referenced = os.path.join(base, record[key])
                    if not os.path.exists(referenced):
                        raise ManifestError(f"missing {key} file {referenced}", path=referenced, line=line_number)
            records.append(record)
    return records


def resolve(path, record, key):
    return os.path.join(os.path.dirname(path) or '.', record[key])


def load_sample(path, record, grid=None):
    """Rebuild a MixtureSample (without RIRs) from a manifest record"""
    mixture = read_wav(resolve(path, record, 'mixture'))
    target = read_wav(resolve(path, record, 'target'))
    pitch = read_pitch_csv(resolve(path, record, 'pitch'), grid, hop=mixture_hop(mixture.sample_rate))
    meta = {k: v for k, v in record.items() if k not in FILE_KEYS}
    return MixtureSample(mixture, target, int(record['target_class']), pitch, meta)


def mixture_hop(sample_rate):
    return STFT_HOP / sample_rate


def synthesize_split(out_dir, num, seed, n_sources=2, noise_snr_db=40.0, anechoic=False,
                     formula='eyring', workers=1, save_rirs=False, split='train', grid=None):
    """
    Synthesize num samples with seeds seed, seed+1, ... into out_dir.
    Workers only synthesize; this process writes every file and the manifest.
    """
    grid = grid or PitchGrid()
    make = partial(synthesize_sample, n_sources=n_sources, noise_snr_db=noise_snr_db,
                   anechoic=anechoic, formula=formula, grid=grid)
    seeds = [seed + index for index in range(num)]
    logger.info(f"Synthesizing {num} {split} samples into {out_dir} (seed {seed}, {workers} workers)")

    records = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            samples = pool.map(make, seeds)
            for index, sample in enumerate(tqdm(samples, total=num, desc=f'synth {split}')):
                records.append(_store(out_dir, index, sample, split, save_rirs, grid))
    else:
        for index, sample_seed in enumerate(tqdm(seeds, desc=f'synth {split}')):
            records.append(_store(out_dir, index, make(sample_seed), split, save_rirs, grid))

    manifest_path = os.path.join(out_dir, MANIFEST_NAME)
    write_records(records, manifest_path)
    return manifest_path


def _store(out_dir, index, sample, split, save_rirs, grid):
    record = write_sample(out_dir, index, sample, grid)
    record['split'] = split
    if save_rirs:
        room = RoomSpec.from_dict(sample.meta['scene']['room'])
        for source_index, (rir, geo) in enumerate(zip(sample.rirs, sample.meta['scene']['geometries'])):
            save_rir(os.path.join(out_dir, 'rir'), f'{index:05d}_{source_index}', rir, room,
                     Geometry.from_dict(geo))
    return record
