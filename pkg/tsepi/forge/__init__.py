"""
Supervised example synthesis: sources, mixtures, manifests and the training dataset
"""

from tsepi.forge.sources import N_CLASSES, SourceEvent, f0_band, load_source, synth_source
from tsepi.forge.mixture import MixtureSample, add_noise, build_mixture, synthesize_sample
from tsepi.forge.manifest import (MANIFEST_NAME, load_sample, read_manifest, synthesize_split,
                                  write_manifest)
from tsepi.forge.dataset import MixtureDataset
