import csv
import json

import numpy as np
import pytest
import torch

from tsepi.errors import InvalidArgumentError
from tsepi.metrics import (METRIC_CAP_DB, EvalReport, combined_loss, improvement, si_snr_db, si_snr_torch,
                           snr_db, snr_torch)


@pytest.fixture
def ref(rng):
    return rng.standard_normal(4000)


def test_snr_examples(ref, rng):
    assert snr_db(ref, ref) == METRIC_CAP_DB
    assert snr_db(np.zeros_like(ref), ref) == pytest.approx(0.0)
    noise = rng.standard_normal(len(ref))
    noise *= np.sqrt(np.dot(ref, ref) / (100 * np.dot(noise, noise)))
    assert snr_db(ref + noise, ref) == pytest.approx(20.0)


def test_snr_is_not_scale_invariant(ref):
    assert snr_db(2 * ref, ref) == pytest.approx(0.0)
    assert si_snr_db(2 * ref, ref) == METRIC_CAP_DB


def test_snr_errors(ref):
    with pytest.raises(InvalidArgumentError):
        snr_db(ref, np.zeros_like(ref))
    with pytest.raises(InvalidArgumentError):
        snr_db(ref[:10], ref)


def test_si_snr_scale_invariance(ref, rng):
    est = ref + 0.5 * rng.standard_normal(len(ref))
    base = si_snr_db(est, ref)
    for alpha in (0.1, 10.0):
        assert si_snr_db(alpha * est, ref) == pytest.approx(base, abs=1e-9)
    assert si_snr_db(3.7 * ref, ref) == METRIC_CAP_DB


def test_si_snr_with_orthogonal_noise(ref, rng):
    centred = ref - ref.mean()
    noise = rng.standard_normal(len(ref))
    noise -= noise.mean()
    noise -= np.dot(noise, centred) / np.dot(centred, centred) * centred
    rho = 8.0
    noise *= np.sqrt(np.dot(centred, centred) / (rho * np.dot(noise, noise)))
    assert si_snr_db(centred + noise, centred) == pytest.approx(10 * np.log10(rho), abs=1e-9)


def test_si_snr_errors(ref):
    with pytest.raises(InvalidArgumentError):
        si_snr_db(ref, np.zeros_like(ref))
    with pytest.raises(InvalidArgumentError):
        si_snr_db(np.full_like(ref, 3.0), ref)


def test_improvement(ref, rng):
    mixture = ref + rng.standard_normal(len(ref))
    assert improvement('snr', mixture, ref, mixture) == 0.0
    assert improvement(si_snr_db, mixture, ref, mixture) == 0.0
    assert improvement('snr', ref, ref, mixture) == pytest.approx(METRIC_CAP_DB - snr_db(mixture, ref))
    with pytest.raises(InvalidArgumentError):
        improvement('pesq', ref, ref, mixture)


def test_torch_metrics_agree_with_numpy(ref, rng):
    est = ref + 0.3 * rng.standard_normal(len(ref))
    est_t = torch.from_numpy(est)
    ref_t = torch.from_numpy(ref)
    assert snr_torch(est_t, ref_t).item() == pytest.approx(snr_db(est, ref), abs=1e-6)
    assert si_snr_torch(est_t, ref_t).item() == pytest.approx(si_snr_db(est, ref), abs=1e-6)


def test_combined_loss_weights(ref, rng):
    est = torch.from_numpy(ref + 0.3 * rng.standard_normal(len(ref))).unsqueeze(0)
    ref_t = torch.from_numpy(ref).unsqueeze(0)
    assert combined_loss(est, ref_t, 1.0, 0.0).item() == pytest.approx(-snr_torch(est, ref_t).item())
    mixed = combined_loss(est, ref_t, 0.9, 0.1).item()
    expected = -(0.9 * snr_torch(est, ref_t) + 0.1 * si_snr_torch(est, ref_t)).item()
    assert mixed == pytest.approx(expected)
    for w1, w2 in ((0.5, 0.6), (-0.1, 1.1)):
        with pytest.raises(InvalidArgumentError):
            combined_loss(est, ref_t, w1, w2)


def test_combined_loss_direction(ref, rng):
    ref_t = torch.from_numpy(ref).unsqueeze(0)
    close = ref_t + 1e-3 * torch.from_numpy(rng.standard_normal(len(ref))).unsqueeze(0)
    far = ref_t + torch.from_numpy(rng.standard_normal(len(ref))).unsqueeze(0)
    assert combined_loss(close, ref_t).item() < -50.0
    assert combined_loss(close, ref_t) < combined_loss(far, ref_t)


def test_combined_loss_gradcheck(rng):
    est = torch.from_numpy(rng.standard_normal((2, 64))).requires_grad_(True)
    ref = torch.from_numpy(rng.standard_normal((2, 64)))
    assert torch.autograd.gradcheck(lambda e: combined_loss(e, ref), (est,), eps=1e-6, atol=1e-6, rtol=1e-3)


def build_report():
    report = EvalReport()
    report.add(0, 3, 1.0, 6.0, 0.5, 5.5, rpa=0.9)
    report.add(1, 3, 2.0, 4.0, 1.5, 4.5, rpa=0.7)
    report.add(2, 1, -1.0, 5.0, -2.0, 3.0, rpa=None)
    return report


def test_report_differences_are_exact():
    record = build_report().records[0]
    assert record['snri'] == 5.0
    assert record['si_snri'] == 5.0


def test_report_aggregation():
    report = build_report()
    per_class = report.per_class()
    assert list(per_class) == [1, 3]
    assert per_class[3]['count'] == 2
    assert per_class[3]['snri'] == pytest.approx(3.5)
    means = report.global_means()
    weighted = sum(row['count'] * row['snri'] for row in per_class.values()) / len(report)
    assert means['snri'] == pytest.approx(weighted)
    assert means['rpa'] == pytest.approx(0.8)
    assert per_class[1]['rpa'] is None


def test_report_files(tmp_path):
    json_path, csv_path, samples_path = build_report().write(str(tmp_path))
    with open(json_path) as f:
        data = json.load(f)
    assert data['version'] == 1
    assert len(data['samples']) == 3
    assert set(data['per_class']) == {'1', '3'}
    with open(csv_path, newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0][:2] == ['class_label', 'count']
    assert 'si_snri' in rows[0]
    assert len(rows) == 3
    with open(samples_path, newline='') as f:
        samples = list(csv.DictReader(f))
    assert [row['index'] for row in samples] == ['0', '1', '2']
    assert float(samples[1]['snri']) == pytest.approx(2.0)
    assert samples[2]['rpa'] == ''
