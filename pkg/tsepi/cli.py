#!/usr/bin/env python3
import os
import sys
import logging
import argparse

from tsepi.config import DEFAULT_CONFIG_PATH, resolve_config, save_config
from tsepi.errors import InvalidArgumentError, ManifestError, TsepiError, from_unexpected

# Set up logging
logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Splits draw from disjoint seed ranges for one --seed
SPLIT_SEED_OFFSETS = {'train': 0, 'val': 10000, 'test': 20000}


def configure_logging(run_dir, verbose=False):
    """Log to <run_dir>/tsepi.log and the console"""
    os.makedirs(run_dir, exist_ok=True)
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        handlers=[
            logging.FileHandler(os.path.join(run_dir, 'tsepi.log')),
            logging.StreamHandler()
        ],
        force=True
    )


def config_overrides(args):
    """Nested config values set on the command line"""
    overrides = {}

    def put(section, key, value):
        if value is not None:
            overrides.setdefault(section, {})[key] = value

    if getattr(args, 'seed', None) is not None:
        overrides['seed'] = args.seed
    if args.command == 'synth-data':
        put('data', 'n_sources', args.n_sources)
        put('data', 'noise_snr_db', args.noise_snr)
        put('data', 'workers', args.workers)
        put('room', 'absorption_formula', args.absorption)
    if args.command in ('train-pitch', 'train-tse'):
        section = 'pitch_train' if args.command == 'train-pitch' else 'tse_train'
        put(section, 'epochs', args.epochs)
        put(section, 'batch_size', args.batch_size)
        put(section, 'lr', args.lr)
        put(section, 'max_steps', args.max_steps)
    if args.command == 'train-pitch':
        put('pitch_net', 'depth', args.depth)
    if args.command == 'train-tse':
        put('tse_net', 'encoder_type', args.encoder)
        put('tse_net', 'kernel_length', args.kernel_length)
        put('tse_net', 'n_filters', args.n_filters)
        put('tse_net', 'pitch_proj_dim', args.pitch_proj_dim)
        put('loss', 'w1', args.w1)
        put('loss', 'w2', args.w2)
    if args.command in ('eval', 'extract', 'train-tse'):
        put('eval', 'unvoiced_threshold', args.threshold)
    return overrides


def load_mixtures(path, limit=None):
    from tsepi.forge.dataset import MixtureDataset

    return MixtureDataset.from_manifest(path, limit=limit)


def run_synth_data(args, config):
    """Synthesize one split into --out"""
    from tsepi.forge.manifest import synthesize_split

    num = args.num if args.num is not None else getattr(config.data, f'{args.split}_num')
    seed = config.seed + SPLIT_SEED_OFFSETS[args.split]
    path = synthesize_split(args.out, num, seed, n_sources=config.data.n_sources,
                            noise_snr_db=config.data.noise_snr_db, anechoic=args.anechoic,
                            formula=config.room.absorption_formula, workers=config.data.workers,
                            save_rirs=args.save_rirs, split=args.split)
    logger.info(f"Manifest written to {path}")
    return path


def run_train_pitch(args, config):
    from tsepi.training.pitch_trainer import train_pitch

    train = load_mixtures(args.train)
    val = load_mixtures(args.val) if args.val else None
    path, _ = train_pitch(config, args.run_dir, train, val, resume=args.resume, overfit=args.overfit)
    logger.info(f"Pitch checkpoint: {path}")
    return path


def run_train_tse(args, config):
    from tsepi.training.tse_trainer import train_tse, train_tse_sweep

    train = load_mixtures(args.train)
    val = load_mixtures(args.val) if args.val else None
    if args.sweep:
        results = train_tse_sweep(config, args.run_dir, train, val, overfit=args.overfit,
                                  pitch_checkpoint=args.pitch_from_checkpoint)
        for (w1, w2), path in results.items():
            logger.info(f"Sweep w1={w1} w2={w2}: {path}")
        return results
    path, _ = train_tse(config, args.run_dir, train, val, resume=args.resume, overfit=args.overfit,
                        pitch_checkpoint=args.pitch_from_checkpoint)
    logger.info(f"Extractor checkpoint: {path}")
    return path


def run_eval(args, config):
    from tsepi.training.evaluate import evaluate_checkpoints

    mixtures = load_mixtures(args.manifest, limit=args.limit)
    report, paths = evaluate_checkpoints(mixtures, args.run_dir, args.pitch_ckpt, args.tse_ckpt,
                                         config.eval.unvoiced_threshold, oracle=args.oracle,
                                         plot=args.plot or config.eval.plot)
    for path in paths:
        logger.info(f"Wrote {path}")
    return report


def run_extract(args, config):
    from tsepi.audio.core import SAMPLE_RATE, resample
    from tsepi.audio.wavio import read_wav, write_wav
    from tsepi.models.checkpoint import load_model
    from tsepi.models.film_tcn import decode, extract_pitch_posterior
    from tsepi.models.tse import extract
    from tsepi.training.evaluate import check_compatible

    pitch_model, _ = load_model(args.pitch_ckpt, 'pitch')
    tse_model, _ = load_model(args.tse_ckpt, 'tse')
    check_compatible(pitch_model, tse_model)
    if not 0 <= args.class_label < tse_model.config.n_classes:
        raise InvalidArgumentError(f"class id must lie in [0, {tse_model.config.n_classes}), got {args.class_label}")

    clip = resample(read_wav(args.mix), SAMPLE_RATE)
    posterior = extract_pitch_posterior(pitch_model, clip, args.class_label)
    pitch = decode(posterior, config.eval.unvoiced_threshold, pitch_model.grid)
    estimate = extract(tse_model, clip, args.class_label, pitch)
    write_wav(args.out, estimate, subtype='float32')
    logger.info(f"Extracted class {args.class_label} from {args.mix} into {args.out}")
    return args.out


def run_inspect_gtfb(args, config):
    from tsepi.models.checkpoint import load_model
    from tsepi.models.gammatone import GammatoneFilterbank
    from tsepi.utils.gtfb_inspect import inspect_bank

    if args.tse_ckpt:
        model, _ = load_model(args.tse_ckpt, 'tse')
        if not isinstance(model.encoder, GammatoneFilterbank):
            raise InvalidArgumentError(f"{args.tse_ckpt} uses a {model.config.encoder_type!r} encoder, not a gammatone bank")
        bank = model.encoder
    else:
        tse = config.tse_net
        bank = GammatoneFilterbank(args.n_filters or tse.n_filters, args.kernel_length or tse.kernel_length,
                                   fs=tse.sample_rate, learnable=False, f_low=tse.f_low, f_high=tse.f_high)
    return inspect_bank(bank.params(), args.out or args.run_dir, n_fft=args.n_fft, image=args.image)


COMMANDS = {
    'synth-data': run_synth_data,
    'train-pitch': run_train_pitch,
    'train-tse': run_train_tse,
    'eval': run_eval,
    'extract': run_extract,
    'inspect-gtfb': run_inspect_gtfb,
}


def build_parser():
    parser = argparse.ArgumentParser(description='Pitch-informed target sound extraction')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=DEFAULT_CONFIG_PATH, help='Path to config file')
    common.add_argument('--preset', choices=['desk', 'paper'], help='Configuration preset')
    common.add_argument('--run-dir', help='Directory for logs, config and outputs')
    common.add_argument('--seed', type=int, help='Random seed (TSEPI_SEED overrides)')
    common.add_argument('--verbose', action='store_true', help='Debug logging')

    sub = parser.add_subparsers(dest='command', required=True)

    synth = sub.add_parser('synth-data', parents=[common], help='Synthesize a mixture split')
    synth.add_argument('--split', choices=['train', 'val', 'test'], default='train')
    synth.add_argument('--num', type=int, help='Number of mixtures (default from config)')
    synth.add_argument('--out', required=True, help='Output directory')
    synth.add_argument('--workers', type=int, help='Synthesis worker processes')
    synth.add_argument('--n-sources', type=int, help='Sources per mixture')
    synth.add_argument('--noise-snr', type=float, help='Background noise SNR in dB')
    synth.add_argument('--absorption', choices=['eyring', 'sabine'], help='RT60-to-absorption formula')
    synth.add_argument('--anechoic', action='store_true', help='Direct-path-only mixtures')
    synth.add_argument('--save-rirs', action='store_true', help='Cache RIRs as WAV + JSON')

    for name, help_text in (('train-pitch', 'Train the conditional pitch extractor'),
                            ('train-tse', 'Train the target sound extractor')):
        train = sub.add_parser(name, parents=[common], help=help_text)
        train.add_argument('--train', required=True, help='Training manifest')
        train.add_argument('--val', help='Validation manifest')
        train.add_argument('--resume', help='Checkpoint to resume from')
        train.add_argument('--overfit', type=int, help='Overfit on the first N samples')
        train.add_argument('--epochs', type=int)
        train.add_argument('--batch-size', type=int)
        train.add_argument('--lr', type=float)
        train.add_argument('--max-steps', type=int)
        if name == 'train-pitch':
            train.add_argument('--depth', type=int, help='Number of FiLM blocks (4-10)')
        else:
            train.add_argument('--encoder', choices=['conv', 'gtfb_fixed', 'gtfb_learnable'])
            train.add_argument('--kernel-length', type=int)
            train.add_argument('--n-filters', type=int)
            train.add_argument('--pitch-proj-dim', type=int, help='0 disables the pitch input')
            train.add_argument('--w1', type=float, help='SNR loss weight')
            train.add_argument('--w2', type=float, help='SI-SNR loss weight')
            train.add_argument('--sweep', action='store_true', help='Run every loss.sweep weight pair')
            train.add_argument('--pitch-from-checkpoint', help='Train on stage-1 pitch from this checkpoint')
            train.add_argument('--threshold', type=float, help='Unvoiced threshold for stage-1 decoding')

    evaluation = sub.add_parser('eval', parents=[common], help='Evaluate both stages on a manifest')
    evaluation.add_argument('--manifest', required=True)
    evaluation.add_argument('--pitch-ckpt')
    evaluation.add_argument('--tse-ckpt')
    evaluation.add_argument('--oracle', action='store_true', help='Use the target as the estimate')
    evaluation.add_argument('--plot', action='store_true', help='Write per_class.png')
    evaluation.add_argument('--limit', type=int, help='Evaluate only the first N samples')
    evaluation.add_argument('--threshold', type=float, help='Unvoiced threshold for stage-1 decoding')

    extract = sub.add_parser('extract', parents=[common], help='Extract one class from a WAV file')
    extract.add_argument('--mix', required=True)
    extract.add_argument('--class', dest='class_label', type=int, required=True)
    extract.add_argument('--pitch-ckpt', required=True)
    extract.add_argument('--tse-ckpt', required=True)
    extract.add_argument('--out', required=True)
    extract.add_argument('--threshold', type=float, help='Unvoiced threshold for stage-1 decoding')

    inspect = sub.add_parser('inspect-gtfb', parents=[common], help='Dump gammatone filters and responses')
    inspect.add_argument('--tse-ckpt', help='Read the bank from an extractor checkpoint')
    inspect.add_argument('--n-filters', type=int)
    inspect.add_argument('--kernel-length', type=int)
    inspect.add_argument('--n-fft', type=int, default=1024)
    inspect.add_argument('--out', help='Output directory (default: run dir)')
    inspect.add_argument('--image', action='store_true', help='Also write responses.png')
    return parser


def main(argv=None):
    """Main function to parse arguments and run the appropriate command"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.run_dir is None:
        args.run_dir = args.out if args.command == 'synth-data' else os.path.join('runs', args.command)
    configure_logging(args.run_dir, args.verbose)

    try:
        config = resolve_config(args.config, args.preset, config_overrides(args))
        save_config(config, os.path.join(args.run_dir, 'config.json'))
        COMMANDS[args.command](args, config)
    except TsepiError as e:
        logger.error(e.one_line())
        print(e.one_line(), file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        logger.info("Received keyboard interrupt, shutting down...")
        return 1
    except Exception as e:
        error = from_unexpected(e)
        logger.exception(error.one_line())
        print(error.one_line(), file=sys.stderr)
        return 2 if isinstance(error, ManifestError) else 1

    return 0


if __name__ == "__main__":
    sys.exit(main())
