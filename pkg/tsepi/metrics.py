#!/usr/bin/env python3
"""
Separation metrics (SNR, SI-SNR and their improvements), the weighted training
loss, and the evaluation report.
"""

import csv
import json
import logging
import os
from collections import OrderedDict

import numpy as np
import torch

from tsepi.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

METRIC_CAP_DB = 60.0
LOSS_EPS = 1e-8
REPORT_VERSION = 1


def _as_array(x):
    return np.asarray(x.samples if hasattr(x, 'samples') else x, dtype=np.float64)


def _pair(est, ref):
    est, ref = _as_array(est), _as_array(ref)
    if est.shape != ref.shape:
        raise InvalidArgumentError(f"estimate and reference differ in length: {est.shape} vs {ref.shape}")
    return est, ref


def _capped_ratio_db(signal_energy, residual_energy):
    if residual_energy <= 0.0:
        return METRIC_CAP_DB
    return float(min(METRIC_CAP_DB, 10.0 * np.log10(signal_energy / residual_energy)))


def snr_db(est, ref):
    """10 log10(||ref||^2 / ||ref - est||^2), capped at 60 dB"""
    est, ref = _pair(est, ref)
    ref_energy = np.dot(ref, ref)
    if ref_energy <= 0.0:
        raise InvalidArgumentError("SNR reference has zero energy")
    residual = ref - est
    return _capped_ratio_db(ref_energy, np.dot(residual, residual))


def si_snr_db(est, ref):
    """Scale-invariant SNR after mean removal, capped at 60 dB"""
    est, ref = _pair(est, ref)
    est = est - est.mean()
    ref = ref - ref.mean()
    ref_energy = np.dot(ref, ref)
    if ref_energy <= 0.0:
        raise InvalidArgumentError("SI-SNR reference has zero energy")
    if np.dot(est, est) <= 0.0:
        raise InvalidArgumentError("SI-SNR estimate has zero energy")
    target = np.dot(est, ref) / ref_energy * ref
    error = est - target
    return _capped_ratio_db(np.dot(target, target), np.dot(error, error))


METRICS = {
    'snr': snr_db,
    'si_snr': si_snr_db,
}


def improvement(metric, est, ref, mixture):
    """metric(est, ref) - metric(mixture, ref); metric is a callable or 'snr' / 'si_snr'"""
    if isinstance(metric, str):
        if metric not in METRICS:
            raise InvalidArgumentError(f"unknown metric {metric!r}")
        metric = METRICS[metric]
    _pair(est, mixture)
    return metric(est, ref) - metric(mixture, ref)


def _check_weights(w1, w2):
    if w1 < 0 or w2 < 0 or abs(w1 + w2 - 1.0) > 1e-9:
        raise InvalidArgumentError(f"loss weights must be non-negative and sum to 1, got ({w1}, {w2})")


def snr_torch(est, ref, eps=LOSS_EPS):
    """Uncapped SNR in dB over the last axis"""
    residual = ref - est
    return 10.0 * torch.log10(ref.pow(2).sum(-1) / (residual.pow(2).sum(-1) + eps) + eps)


def si_snr_torch(est, ref, eps=LOSS_EPS):
    """Uncapped SI-SNR in dB over the last axis"""
    est = est - est.mean(dim=-1, keepdim=True)
    ref = ref - ref.mean(dim=-1, keepdim=True)
    scale = (est * ref).sum(-1, keepdim=True) / (ref.pow(2).sum(-1, keepdim=True) + eps)
    target = scale * ref
    error = est - target
    return 10.0 * torch.log10(target.pow(2).sum(-1) / (error.pow(2).sum(-1) + eps) + eps)


def combined_loss(est, ref, w1=0.9, w2=0.1):
    """-(w1 * SNR + w2 * SI-SNR), averaged over the batch"""
    _check_weights(w1, w2)
    if est.shape != ref.shape:
        raise InvalidArgumentError(f"estimate {tuple(est.shape)} and reference {tuple(ref.shape)} differ")
    return -(w1 * snr_torch(est, ref) + w2 * si_snr_torch(est, ref)).mean()


class EvalReport:
    """Per-sample metric records with per-class and global aggregates"""

    def __init__(self):
        self.records = []

    def add(self, index, class_label, snr_in, snr_out, si_snr_in, si_snr_out, **extra):
        record = OrderedDict(
            index=index,
            class_label=int(class_label),
            snr_in=snr_in,
            snr_out=snr_out,
            si_snr_in=si_snr_in,
            si_snr_out=si_snr_out,
            snri=snr_out - snr_in,
            si_snri=si_snr_out - si_snr_in,
        )
        record.update(extra)
        self.records.append(record)
        return record

    def __len__(self):
        return len(self.records)

    def metric_names(self):
        names = []
        for record in self.records:
            for key, value in record.items():
                if key not in ('index', 'class_label') and key not in names and isinstance(value, (int, float)):
                    names.append(key)
        return names

    def per_class(self):
        """{class: {'count': n, metric: mean}} over the classes present"""
        classes = OrderedDict()
        for record in sorted(self.records, key=lambda r: r['class_label']):
            classes.setdefault(record['class_label'], []).append(record)
        summary = OrderedDict()
        for label, records in classes.items():
            row = OrderedDict(count=len(records))
            for name in self.metric_names():
                values = [r[name] for r in records if r.get(name) is not None]
                row[name] = float(np.mean(values)) if values else None
            summary[label] = row
        return summary

    def global_means(self):
        means = OrderedDict(count=len(self.records))
        for name in self.metric_names():
            values = [r[name] for r in self.records if r.get(name) is not None]
            means[name] = float(np.mean(values)) if values else None
        return means

    def to_dict(self):
        return {
            'version': REPORT_VERSION,
            'global': self.global_means(),
            'per_class': {str(k): v for k, v in self.per_class().items()},
            'samples': self.records,
        }

    def write_json(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=4)
        logger.info(f"Report written to {path}")
        return path

    def write_csv(self, path):
        """One row per class present, metrics as columns"""
        names = self.metric_names()
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f)
            writer.writerow(['class_label', 'count'] + names)
            for label, row in self.per_class().items():
                writer.writerow([label, row['count']] + [row[name] for name in names])
        return path

    def write_samples_csv(self, path):
        names = self.metric_names()
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f)
            writer.writerow(['index', 'class_label'] + names)
            for record in self.records:
                writer.writerow([record['index'], record['class_label']] + [record.get(name) for name in names])
        return path

    def write(self, directory):
        os.makedirs(directory, exist_ok=True)
        return (self.write_json(os.path.join(directory, 'report.json')),
                self.write_csv(os.path.join(directory, 'per_class.csv')),
                self.write_samples_csv(os.path.join(directory, 'samples.csv')))
