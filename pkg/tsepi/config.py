#!/usr/bin/env python3
"""
Run configuration.

Values resolve in this order: built-in defaults, then the preset ('desk' or
'paper'), then the JSON config file, then command-line overrides, then the
TSEPI_SEED environment variable (seed only).
"""

import copy
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields

from tsepi.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = 'data/config.json'
SEED_ENV = 'TSEPI_SEED'
PRESETS = ('desk', 'paper')
ENCODER_TYPES = ('conv', 'gtfb_fixed', 'gtfb_learnable')
PITCH_DEPTH_RANGE = (4, 10)


@dataclass
class PitchNetConfig:
    depth: int = 9
    channels: int = 128
    kernel: int = 3
    dilation_cycle: int = 8
    embed_dim: int = 64
    n_classes: int = 27

    def receptive_field(self):
        """Receptive field in STFT frames"""
        return 1 + sum((self.kernel - 1) * 2 ** (layer % self.dilation_cycle) for layer in range(self.depth))

    def validate(self):
        low, high = PITCH_DEPTH_RANGE
        if not low <= self.depth <= high:
            raise InvalidArgumentError(f"pitch_net.depth must lie in [{low}, {high}], got {self.depth}")
        if self.channels < 1 or self.embed_dim < 1 or self.n_classes < 1:
            raise InvalidArgumentError("pitch_net channels, embed_dim and n_classes must be positive")
        if self.kernel < 2 or self.kernel % 2 == 0:
            raise InvalidArgumentError(f"pitch_net.kernel must be odd and >= 3, got {self.kernel}")
        # 10 ms frames, at least 100 ms of context
        if self.receptive_field() < 10:
            raise InvalidArgumentError(f"pitch_net receptive field {self.receptive_field()} frames is under 100 ms")
        return self


@dataclass
class TSEConfig:
    encoder_type: str = 'gtfb_learnable'
    kernel_length: int = 32
    n_filters: int = 256
    dcc_layers: int = 10
    dcc_channels: int = 256
    decoder_layers: int = 1
    label_embed_dim: int = None
    pitch_proj_dim: int = 64
    n_classes: int = 27
    f_low: float = 50.0
    f_high: float = 7800.0
    sample_rate: int = 16000

    @property
    def label_dim(self):
        """Label embeddings scale encoder channels, so they share n_filters"""
        return self.n_filters if self.label_embed_dim is None else self.label_embed_dim

    @property
    def stride(self):
        return self.kernel_length // 2

    def receptive_field(self):
        """Receptive field of the causal stack in seconds"""
        frames = 1 + 2 * sum(2 ** layer for layer in range(self.dcc_layers))
        return frames * self.stride / self.sample_rate

    def validate(self):
        if self.encoder_type not in ENCODER_TYPES:
            raise InvalidArgumentError(f"tse_net.encoder_type must be one of {ENCODER_TYPES}, got {self.encoder_type!r}")
        if self.kernel_length < 2 or self.kernel_length % 2:
            raise InvalidArgumentError(f"tse_net.kernel_length must be even, got {self.kernel_length}")
        if self.n_filters < 1 or self.dcc_channels < 1 or self.dcc_layers < 1 or self.decoder_layers < 1:
            raise InvalidArgumentError("tse_net layer and channel counts must be positive")
        if self.label_embed_dim is not None and self.label_embed_dim != self.n_filters:
            raise InvalidArgumentError(
                f"tse_net.label_embed_dim ({self.label_embed_dim}) must equal n_filters ({self.n_filters})")
        if self.pitch_proj_dim < 0:
            raise InvalidArgumentError(f"tse_net.pitch_proj_dim must be >= 0, got {self.pitch_proj_dim}")
        if not 0 < self.f_low < self.f_high < self.sample_rate / 2:
            raise InvalidArgumentError(f"need 0 < f_low < f_high < fs/2, got {self.f_low}, {self.f_high}")
        if self.receptive_field() < 0.05:
            raise InvalidArgumentError(f"tse_net causal stack sees {self.receptive_field() * 1000:.1f} ms, under 50 ms")
        return self


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 8
    lr: float = 1e-4
    lr_milestones: list = field(default_factory=list)
    lr_gamma: float = 0.5
    grad_clip: float = 5.0
    num_workers: int = 0
    checkpoint_every: int = 1
    max_steps: int = None

    def validate(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidArgumentError("epochs and batch_size must be positive")
        if self.lr <= 0:
            raise InvalidArgumentError(f"learning rate must be positive, got {self.lr}")
        if self.num_workers < 0:
            raise InvalidArgumentError("num_workers must be >= 0")
        if self.max_steps is not None and self.max_steps < 1:
            raise InvalidArgumentError(f"max_steps must be positive, got {self.max_steps}")
        return self


@dataclass
class DataConfig:
    train_num: int = 200
    val_num: int = 50
    test_num: int = 50
    n_sources: int = 2
    noise_snr_db: float = 40.0
    snr_low: float = -5.0
    snr_high: float = 5.0
    workers: int = 1

    def validate(self):
        if not 1 <= self.n_sources <= 4:
            raise InvalidArgumentError(f"data.n_sources must lie in [1, 4], got {self.n_sources}")
        if self.snr_low > self.snr_high:
            raise InvalidArgumentError("data.snr_low exceeds data.snr_high")
        if min(self.train_num, self.val_num, self.test_num) < 0:
            raise InvalidArgumentError("split sizes must be >= 0")
        return self


@dataclass
class RoomConfig:
    absorption_formula: str = 'eyring'
    max_order: int = None

    def validate(self):
        if self.absorption_formula not in ('eyring', 'sabine'):
            raise InvalidArgumentError(f"room.absorption_formula must be 'eyring' or 'sabine', got {self.absorption_formula!r}")
        return self


@dataclass
class LossConfig:
    w1: float = 0.9
    w2: float = 0.1
    sweep: list = field(default_factory=lambda: [[0.5, 0.5], [0.7, 0.3], [0.9, 0.1]])

    def validate(self):
        for w1, w2 in [(self.w1, self.w2)] + [tuple(pair) for pair in self.sweep]:
            if abs(w1 + w2 - 1.0) > 1e-9 or w1 < 0 or w2 < 0:
                raise InvalidArgumentError(f"loss weights must be non-negative and sum to 1, got ({w1}, {w2})")
        return self


@dataclass
class EvalConfig:
    unvoiced_threshold: float = 0.0
    plot: bool = False

    def validate(self):
        if not 0.0 <= self.unvoiced_threshold <= 1.0:
            raise InvalidArgumentError(f"eval.unvoiced_threshold must lie in [0, 1], got {self.unvoiced_threshold}")
        return self


SECTIONS = {
    'data': DataConfig,
    'room': RoomConfig,
    'pitch_net': PitchNetConfig,
    'tse_net': TSEConfig,
    'pitch_train': TrainConfig,
    'tse_train': TrainConfig,
    'loss': LossConfig,
    'eval': EvalConfig,
}


@dataclass
class RunConfig:
    seed: int = 17
    preset: str = 'desk'
    data: DataConfig = field(default_factory=DataConfig)
    room: RoomConfig = field(default_factory=RoomConfig)
    pitch_net: PitchNetConfig = field(default_factory=PitchNetConfig)
    tse_net: TSEConfig = field(default_factory=TSEConfig)
    pitch_train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=20, batch_size=8, lr=1e-4))
    tse_train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=5, batch_size=8, lr=5e-4,
                                                                       lr_milestones=[3]))
    loss: LossConfig = field(default_factory=LossConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def validate(self):
        if self.preset not in PRESETS:
            raise InvalidArgumentError(f"preset must be one of {PRESETS}, got {self.preset!r}")
        for name in SECTIONS:
            getattr(self, name).validate()
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        unknown = set(data) - {'seed', 'preset'} - set(SECTIONS)
        if unknown:
            raise InvalidArgumentError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        top = {f.name: f for f in fields(cls)}
        for key in ('seed', 'preset'):
            if key in data:
                _check_type('run', top[key], data[key])
                kwargs[key] = data[key]
        for name, section_cls in SECTIONS.items():
            if name in data:
                kwargs[name] = _section_from_dict(section_cls, name, data[name])
        return cls(**kwargs).validate()


def _check_type(name, f, value):
    """Reject values whose JSON type cannot stand for the field's declared type"""
    if value is None and f.default is None:
        return
    expected = f.type
    if expected is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif expected is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, expected)
    if not ok:
        raise InvalidArgumentError(f"{name}.{f.name} must be {expected.__name__}, got {type(value).__name__} {value!r}")


def _section_from_dict(section_cls, name, values):
    if not isinstance(values, dict):
        raise InvalidArgumentError(f"config section {name!r} must be an object, got {type(values).__name__}")
    known = {f.name: f for f in fields(section_cls)}
    unknown = set(values) - set(known)
    if unknown:
        raise InvalidArgumentError(f"unknown keys in config section {name!r}: {sorted(unknown)}")
    for key, value in values.items():
        _check_type(name, known[key], value)
    return section_cls(**values)


# Preset overlays applied on top of the defaults
PRESET_OVERRIDES = {
    'desk': {},
    'paper': {
        'data': {'train_num': 50000, 'val_num': 5000, 'test_num': 5000},
        'tse_net': {'n_filters': 512},
        'pitch_train': {'epochs': 100, 'batch_size': 32, 'lr': 1e-4},
        'tse_train': {'epochs': 80, 'batch_size': 32, 'lr': 5e-4, 'lr_milestones': [40]},
    },
}


def merge(base, overlay):
    """Recursive dict update; returns a new dict"""
    merged = copy.deepcopy(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(config_path):
    """Load configuration from JSON file; an unreadable file yields an empty overlay"""
    if not config_path:
        return {}
    try:
        with open(config_path, 'r') as f:
            config = json.load(f)
            logger.info(f"Configuration loaded from {config_path}")
            return config
    except Exception as e:
        logger.error(f"Error loading config {config_path}: {e}")
        logger.info("Using default configuration")
        return {}


def save_config(config, config_path):
    """Save configuration to JSON file"""
    directory = os.path.dirname(config_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(config_path, 'w') as f:
        json.dump(config.to_dict(), f, indent=4)
    logger.info(f"Configuration saved to {config_path}")
    return config_path


def resolve_config(config_path=None, preset=None, overrides=None, environ=None):
    """Build the RunConfig for a run from all configuration layers"""
    environ = os.environ if environ is None else environ
    file_values = load_config(config_path)
    overrides = overrides or {}

    preset = preset or overrides.get('preset') or file_values.get('preset') or 'desk'
    if preset not in PRESETS:
        raise InvalidArgumentError(f"preset must be one of {PRESETS}, got {preset!r}")

    values = RunConfig().to_dict()
    values = merge(values, PRESET_OVERRIDES[preset])
    values = merge(values, file_values)
    values = merge(values, overrides)
    values['preset'] = preset

    if environ.get(SEED_ENV):
        try:
            values['seed'] = int(environ[SEED_ENV])
        except ValueError:
            raise InvalidArgumentError(f"{SEED_ENV} must be an integer, got {environ[SEED_ENV]!r}")
    return RunConfig.from_dict(values)
