#!/usr/bin/env python3
"""
Reverberant mixtures with a direct-path target and YIN pitch labels.

mixture = sum_i s_i * h_i + noise, where the interferers are scaled against the
reverberant target to reach snr_db and white noise sits noise_snr_db below the
reverberant sum. The target reference is the source convolved with its
direct-path response only.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from tsepi.audio.core import AudioClip, convolve, mix_at_snr
from tsepi.errors import InvalidArgumentError
from tsepi.forge.sources import N_CLASSES, synth_source
from tsepi.pitch.grid import PitchGrid, PitchSequence
from tsepi.pitch.yin import f0_oracle
from tsepi.room.rir import direct_path_rir, simulate_rir
from tsepi.room.scene import Scene, sample_scene

logger = logging.getLogger(__name__)

SNR_RANGE = (-5.0, 5.0)
NOISE_SNR_DB = 40.0
MAX_SOURCES = 4
PEAK_LIMIT = 0.99


@dataclass(frozen=True, eq=False)
class MixtureSample:
    mixture: AudioClip
    target_direct: AudioClip
    target_class: int
    pitch_ref: PitchSequence
    meta: dict = field(default_factory=dict)
    rirs: tuple = ()

    def __post_init__(self):
        if len(self.mixture) != len(self.target_direct):
            raise InvalidArgumentError(
                f"mixture and target differ in length: {len(self.mixture)} vs {len(self.target_direct)}")
        if self.mixture.sample_rate != self.target_direct.sample_rate:
            raise InvalidArgumentError("mixture and target differ in sample rate")


def _check_sources(sources, scene):
    if not sources:
        raise InvalidArgumentError("build_mixture needs at least one source")
    if len(sources) > MAX_SOURCES:
        raise InvalidArgumentError(f"at most {MAX_SOURCES} sources per mixture, got {len(sources)}")
    classes = [s.class_label for s in sources]
    if len(set(classes)) != len(classes):
        raise InvalidArgumentError(f"sources must come from distinct classes, got {classes}")
    if len(scene.geometries) != len(sources):
        raise InvalidArgumentError(
            f"scene has {len(scene.geometries)} geometries for {len(sources)} sources")
    first = sources[0].clip
    for source in sources[1:]:
        if len(source.clip) != len(first) or source.clip.sample_rate != first.sample_rate:
            raise InvalidArgumentError("all sources must share length and sample rate")


def add_noise(clip, noise_snr_db, rng):
    """White Gaussian noise at exactly noise_snr_db below the clip; inf adds nothing"""
    if math.isinf(noise_snr_db) and noise_snr_db > 0:
        return clip, np.zeros(len(clip))
    noise = rng.standard_normal(len(clip))
    scale = np.sqrt(clip.energy() / (np.dot(noise, noise) * 10.0 ** (noise_snr_db / 10.0)))
    noise *= scale
    return clip.with_samples(clip.samples + noise), noise


def build_mixture(sources, scene, snr_db, noise_snr_db, rng, target_index=0, absorption=None,
                  formula="eyring", max_order=None, grid=None):
    """Mix sources in scene; sources[target_index] is the target"""
    _check_sources(sources, scene)
    grid = grid or PitchGrid()
    fs = sources[0].clip.sample_rate
    if not 0 <= target_index < len(sources):
        raise InvalidArgumentError(f"target index {target_index} out of range")

    rirs = []
    reverberant = []
    for source, geo in zip(sources, scene.geometries):
        if scene.anechoic:
            rir = direct_path_rir(geo, fs)
        else:
            rir = simulate_rir(scene.room, geo, fs, max_order=max_order, absorption=absorption, formula=formula)
        rirs.append(rir)
        reverberant.append(convolve(source.clip, rir.taps))

    target_rev = reverberant[target_index]
    interferers = [clip for i, clip in enumerate(reverberant) if i != target_index]
    if interferers:
        interference = target_rev.with_samples(np.sum([clip.samples for clip in interferers], axis=0))
        clean, scale = mix_at_snr(target_rev, interference, snr_db)
    else:
        clean, scale = target_rev, 0.0

    mixture, _ = add_noise(clean, noise_snr_db, rng)
    target_geo = scene.geometries[target_index]
    target_direct = convolve(sources[target_index].clip, direct_path_rir(target_geo, fs).taps)

    gain = 1.0
    peak = np.max(np.abs(mixture.samples))
    if peak > 1.0:
        gain = PEAK_LIMIT / peak
        logger.warning(f"Mixture peak {peak:.3f} exceeds full scale; rescaling by {gain:.4f}")
        mixture = mixture.with_samples(mixture.samples * gain)
        target_direct = target_direct.with_samples(target_direct.samples * gain)

    meta = {
        "scene": scene.to_dict(),
        "classes": [s.class_label for s in sources],
        "origins": [s.origin for s in sources],
        "target_index": target_index,
        "snr_db": float(snr_db),
        "noise_snr_db": float(noise_snr_db),
        "interference_scale": float(scale),
        "gain": float(gain),
        "truncated": any(r.truncated for r in rirs),
    }
    pitch_ref = f0_oracle(target_direct, grid)
    return MixtureSample(mixture, target_direct, sources[target_index].class_label, pitch_ref, meta, tuple(rirs))


def synthesize_sample(seed, n_sources=2, snr_range=SNR_RANGE, noise_snr_db=NOISE_SNR_DB, anechoic=False,
                      formula="eyring", n_classes=N_CLASSES, grid=None):
    """Draw scene, classes, sources and SNR from one seed and build the mixture"""
    rng = np.random.default_rng(seed)
    room, geometries = sample_scene(rng, n_sources)
    scene = Scene(room, geometries, anechoic)
    classes = rng.choice(n_classes, size=n_sources, replace=False)
    sources = [synth_source(int(c), rng) for c in classes]
    snr_db = rng.uniform(*snr_range)
    sample = build_mixture(sources, scene, snr_db, noise_snr_db, rng, formula=formula, grid=grid)
    sample.meta["seed"] = int(seed)
    return sample
