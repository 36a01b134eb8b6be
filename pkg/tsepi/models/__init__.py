"""
Networks: FiLM-conditioned pitch extractor, gammatone encoder, target sound extractor
"""

from tsepi.models.film_tcn import (FiLMGenerator, PitchPosterior, PitchTCN, decode, extract_pitch_posterior,
                                   film_modulate, pitch_ce_loss, receptive_field)
from tsepi.models.gammatone import (GammatoneFilterbank, GammatoneParams, build_kernels, encode, erb,
                                    init_center_freqs)
from tsepi.models.tse import TSENet, concat_pitch, decode_to_waveform, extract
from tsepi.models.checkpoint import load_model, read_checkpoint, save_checkpoint
