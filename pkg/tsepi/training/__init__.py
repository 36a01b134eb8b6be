"""
Training loops for both stages and the two-stage evaluation
"""

from tsepi.training.trainer import Trainer, TrainLog, seed_everything
from tsepi.training.pitch_trainer import PitchTrainer, train_pitch
from tsepi.training.tse_trainer import TSETrainer, train_tse, train_tse_sweep
from tsepi.training.evaluate import evaluate, evaluate_checkpoints
