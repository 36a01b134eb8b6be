import os

import numpy as np
import pytest

from tsepi.config import LossConfig, PitchNetConfig, RunConfig, TrainConfig, TSEConfig
from tsepi.errors import InvalidArgumentError
from tsepi.forge.dataset import MixtureDataset
from tsepi.forge.sources import SourceEvent, synth_source
from tsepi.models.checkpoint import read_checkpoint, save_checkpoint
from tsepi.models.film_tcn import PitchTCN, decode, extract_pitch_posterior
from tsepi.pitch.grid import PitchGrid
from tsepi.pitch.metrics import rpa
from tsepi.training.pitch_trainer import PitchFeatureDataset, train_pitch
from tsepi.training.trainer import LOG_NAME, TrainLog
from tsepi.training.tse_trainer import TSETrainer, load_pitch_source, train_tse, train_tse_sweep

from conftest import harmonic, tone_mixture, two_source_mixture


@pytest.fixture(scope='module')
def mixtures():
    pairs = [(220.0, 330.0, 0), (150.0, 415.0, 4), (300.0, 196.0, 9), (260.0, 520.0, 13)]
    return MixtureDataset([tone_mixture(a, b, c, seed) for seed, (a, b, c) in enumerate(pairs)])


def tiny_config(seed=3, pitch_train=None, tse_train=None, sweep=None):
    return RunConfig(
        seed=seed,
        pitch_net=PitchNetConfig(depth=4, channels=8, embed_dim=4),
        tse_net=TSEConfig(kernel_length=32, n_filters=16, dcc_layers=5, dcc_channels=16, pitch_proj_dim=8),
        pitch_train=pitch_train or TrainConfig(epochs=2, batch_size=2, lr=1e-3),
        tse_train=tse_train or TrainConfig(epochs=2, batch_size=2, lr=1e-3),
        loss=LossConfig(sweep=sweep or [[0.5, 0.5], [0.9, 0.1]]),
    ).validate()


def test_pitch_features_line_up_with_labels(mixtures):
    item = PitchFeatureDataset(mixtures)[0]
    assert item['features'].shape == (513, 94)
    assert item['pitch'].shape == (94,)
    assert int(item['class']) == 0


def test_pitch_training_writes_log_and_checkpoint(tmp_path, mixtures):
    path, trainer = train_pitch(tiny_config(), str(tmp_path), mixtures, mixtures)
    assert os.path.exists(path)
    assert len(trainer.history) == 4
    assert all(np.isfinite(trainer.history))

    entries = TrainLog(str(tmp_path / LOG_NAME)).read()
    steps = [e for e in entries if 'loss' in e]
    epochs = [e for e in entries if 'train_loss' in e]
    assert [e['step'] for e in steps] == [1, 2, 3, 4]
    assert [e['epoch'] for e in epochs] == [1, 2]
    assert 0.0 <= epochs[-1]['val_rpa'] <= 1.0
    assert epochs[-1]['val_loss'] > 0

    payload = read_checkpoint(path, 'pitch')
    assert payload['epoch'] == 2 and payload['step'] == 4


def test_resume_continues_the_same_trajectory(tmp_path, mixtures):
    _, straight = train_pitch(tiny_config(), str(tmp_path / 'straight'), mixtures)

    first_half = tiny_config(pitch_train=TrainConfig(epochs=1, batch_size=2, lr=1e-3))
    checkpoint, _ = train_pitch(first_half, str(tmp_path / 'half'), mixtures)
    _, resumed = train_pitch(tiny_config(), str(tmp_path / 'resumed'), mixtures, resume=checkpoint)

    assert resumed.step == straight.step == 4
    assert resumed.history == pytest.approx(straight.history[2:], abs=1e-6)


def test_learning_rate_halving_is_logged(tmp_path, mixtures):
    config = tiny_config(tse_train=TrainConfig(epochs=2, batch_size=4, lr=1e-3, lr_milestones=[1]))
    _, trainer = train_tse(config, str(tmp_path), mixtures)
    events = [e for e in TrainLog(str(tmp_path / LOG_NAME)).read() if e.get('event') == 'lr']
    assert len(events) == 1
    assert events[0]['epoch'] == 1
    assert events[0]['lr'] == pytest.approx(5e-4)
    assert trainer.optimizer.param_groups[0]['lr'] == pytest.approx(5e-4)


def test_max_steps_stops_mid_epoch(tmp_path, mixtures):
    config = tiny_config(pitch_train=TrainConfig(epochs=5, batch_size=1, lr=1e-3, max_steps=3))
    path, trainer = train_pitch(config, str(tmp_path), mixtures)
    assert trainer.step == 3
    assert read_checkpoint(path)['step'] == 3


def test_tse_checkpoint_records_weights_and_pitch_source(tmp_path, mixtures):
    path, trainer = train_tse(tiny_config(), str(tmp_path), mixtures, mixtures, w1=0.7, w2=0.3)
    extra = read_checkpoint(path, 'tse')['extra']
    assert extra == {'w1': 0.7, 'w2': 0.3, 'pitch_source': 'ground_truth'}
    epochs = [e for e in TrainLog(str(tmp_path / LOG_NAME)).read() if 'train_loss' in e]
    assert np.isfinite(epochs[-1]['val_si_snri'])


def test_invalid_loss_weights_raise(tmp_path, mixtures):
    with pytest.raises(InvalidArgumentError):
        TSETrainer(tiny_config(), str(tmp_path), mixtures, w1=0.6, w2=0.6)


def test_sweep_trains_one_run_per_weight_pair(tmp_path, mixtures):
    config = tiny_config(tse_train=TrainConfig(epochs=1, batch_size=4, lr=1e-3))
    results = train_tse_sweep(config, str(tmp_path), mixtures)
    assert set(results) == {(0.5, 0.5), (0.9, 0.1)}
    assert os.path.exists(tmp_path / 'sweep_0.5_0.5' / 'tse.ckpt')
    assert os.path.exists(tmp_path / 'sweep_0.9_0.1' / 'tse.ckpt')
    assert read_checkpoint(results[(0.9, 0.1)])['extra']['w1'] == 0.9


def test_stage_one_pitch_feeds_stage_two(tmp_path, mixtures):
    pitch_path, _ = train_pitch(tiny_config(), str(tmp_path / 'pitch'), mixtures)
    config = tiny_config(tse_train=TrainConfig(epochs=1, batch_size=4, lr=1e-3))
    trainer = TSETrainer(config, str(tmp_path / 'tse'), mixtures, pitch_checkpoint=pitch_path)
    assert trainer.extra['pitch_source'] == os.path.abspath(pitch_path)
    assert set(trainer.train_set.pitch_override) == set(range(len(mixtures)))
    assert len(trainer.train_set.pitch_override[0]) == len(mixtures.samples[0].pitch_ref)


def test_pitch_source_grid_mismatch_raises(tmp_path):
    coarse = PitchTCN(PitchNetConfig(depth=4, channels=8, embed_dim=4), PitchGrid(step=40.0))
    path = save_checkpoint(str(tmp_path / 'pitch.ckpt'), 'pitch', coarse, seed=0)
    with pytest.raises(InvalidArgumentError):
        load_pitch_source(path, PitchGrid())


@pytest.mark.slow
def test_pitch_overfits_one_sample(tmp_path, mixtures):
    config = tiny_config(pitch_train=TrainConfig(lr=1e-3, max_steps=500))
    config.pitch_net = PitchNetConfig(depth=6, channels=32, embed_dim=8)
    _, trainer = train_pitch(config, str(tmp_path), mixtures, overfit=1)
    sample = mixtures.samples[0]
    posterior = extract_pitch_posterior(trainer.model, sample.mixture, sample.target_class)
    assert rpa(decode(posterior), sample.pitch_ref) >= 0.9


@pytest.mark.slow
def test_extractor_overfits_one_sample(tmp_path):
    single = MixtureDataset([tone_mixture(220.0, 2500.0, 0)])
    config = tiny_config(tse_train=TrainConfig(lr=1e-3, max_steps=500))
    config.tse_net = TSEConfig(kernel_length=64, n_filters=64, dcc_layers=6, dcc_channels=64, pitch_proj_dim=16)
    _, trainer = train_tse(config, str(tmp_path), single, overfit=1)
    assert trainer.si_snri(single, 0) > 5.0


def band_mixtures():
    """Class 0 (80-160 Hz) against class 6 (320-640 Hz); targets alternate between them"""
    mixtures, flipped = [], []
    for seed in range(4):
        rng = np.random.default_rng(100 + seed)
        sources = [synth_source(0, rng, duration=1.0), synth_source(6, rng, duration=1.0)]
        if seed % 2:
            sources.reverse()
        mixtures.append(two_source_mixture(*sources, seed=seed))
        flipped.append(two_source_mixture(*sources, seed=seed, target_index=1))
    return MixtureDataset(mixtures), flipped


@pytest.mark.slow
def test_pitch_extractor_follows_the_class_label(tmp_path):
    mixtures, flipped = band_mixtures()
    config = tiny_config(pitch_train=TrainConfig(lr=1e-3, max_steps=1500))
    config.pitch_net = PitchNetConfig(depth=6, channels=32, embed_dim=8)
    _, trainer = train_pitch(config, str(tmp_path), mixtures, overfit=len(mixtures))

    target_rpa, other_rpa = [], []
    for sample, other in zip(mixtures.samples, flipped):
        posterior = extract_pitch_posterior(trainer.model, sample.mixture, sample.target_class)
        target_rpa.append(rpa(decode(posterior), sample.pitch_ref))
        # same mixture, the other source's class
        posterior = extract_pitch_posterior(trainer.model, sample.mixture, other.target_class)
        other_rpa.append(rpa(decode(posterior), other.pitch_ref))
    assert np.mean(target_rpa) >= 0.9
    assert np.mean(other_rpa) >= 0.9


def ambiguous_mixtures(n, seed):
    """Class 0 is the low or the high harmonic source at random, so only pitch tells them apart"""
    rng = np.random.default_rng(seed)
    samples = []
    for index in range(n):
        low = harmonic(rng.uniform(150.0, 250.0))
        high = harmonic(rng.uniform(1200.0, 1800.0), amplitude=0.4)
        target, other = (low, high) if rng.random() < 0.5 else (high, low)
        samples.append(two_source_mixture(SourceEvent(target, 0), SourceEvent(other, 1), seed=seed + index))
    return MixtureDataset(samples)


@pytest.mark.slow
def test_pitch_input_beats_a_pitch_free_extractor(tmp_path):
    train, held_out = ambiguous_mixtures(8, 0), ambiguous_mixtures(4, 1000)
    scores = {}
    for proj in (16, 0):
        config = tiny_config(tse_train=TrainConfig(lr=1e-3, max_steps=600))
        config.tse_net = TSEConfig(kernel_length=32, n_filters=32, dcc_layers=6, dcc_channels=32, pitch_proj_dim=proj)
        _, trainer = train_tse(config, str(tmp_path / f'proj{proj}'), train, overfit=len(train))
        scores[proj] = np.mean([trainer.si_snri(held_out, i) for i in range(len(held_out))])
    assert scores[16] > scores[0] + 3.0
