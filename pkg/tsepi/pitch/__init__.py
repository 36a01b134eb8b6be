"""
Pitch grid, pitch metrics and the YIN pitch labeler
"""

from tsepi.pitch.grid import PitchGrid, PitchSequence, one_hot, PITCH_HOP_SECONDS
from tsepi.pitch.metrics import rpa, coss, coss_hz, RPA_THRESHOLD_CENTS
from tsepi.pitch.yin import f0_oracle, yin_f0
from tsepi.pitch.pitch_csv import read_pitch_csv, write_pitch_csv
