import csv

import numpy as np
from PIL import Image

from tsepi.models.gammatone import GammatoneFilterbank
from tsepi.utils import image_generator
from tsepi.utils.gtfb_inspect import inspect_bank
from tsepi.utils.image_generator import ChartGenerator


def test_font_falls_back_to_pil_default(monkeypatch):
    monkeypatch.setattr(image_generator, 'CHART_FONTS', ['/nonexistent/font.ttf'])
    font = ChartGenerator.load_font(12)
    assert font is not None
    assert len(image_generator.CHART_FONTS) == 1


def test_bar_chart_handles_negative_and_missing_values(tmp_path):
    path = ChartGenerator(width=300, height=200).bar_chart([0, 3, 7], [4.5, -1.0, None], 'SI-SNRi',
                                                           str(tmp_path / 'charts' / 'bars.png'))
    with Image.open(path) as image:
        assert image.size == (300, 200)
        pixels = np.asarray(image.convert('RGB'))
    assert (pixels != 255).any()


def test_heatmap(tmp_path):
    matrix = np.abs(np.random.default_rng(0).standard_normal((6, 40)))
    path = ChartGenerator(width=240, height=130).heatmap(matrix, 'responses', str(tmp_path / 'heat.png'))
    with Image.open(path) as image:
        assert image.size == (240, 130)


def test_inspect_bank_reports_peaks_near_centres(tmp_path):
    bank = GammatoneFilterbank(8, 512, learnable=False)
    paths = inspect_bank(bank.params(), str(tmp_path), n_fft=2048)
    assert [p.split('/')[-1] for p in paths] == ['filters.csv', 'responses.csv']
    with open(paths[0], newline='') as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 8
    bin_width = 16000 / 2048
    # low filters are too broad relative to fc for a sharp peak
    for row in rows:
        if float(row['fc_hz']) < 500.0:
            continue
        assert abs(float(row['peak_hz']) - float(row['fc_hz'])) <= 2 * bin_width
    with open(paths[1], newline='') as f:
        header = next(csv.reader(f))
    assert len(header) == 1 + 2048 // 2 + 1
