#!/usr/bin/env python3
"""
PNG charts for run outputs: per-class bar charts of evaluation metrics and
filterbank magnitude-response heatmaps.
"""

import logging
import os

import numpy as np
from PIL import Image, ImageDraw, ImageFont

logger = logging.getLogger(__name__)

CHART_FONTS = [
    '/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf',
]

BAR_COLOR = (46, 104, 164)
NEGATIVE_COLOR = (196, 78, 82)
AXIS_COLOR = (0, 0, 0)
GRID_COLOR = (215, 215, 215)


class ChartGenerator:
    def __init__(self, width=900, height=480, font_size=14):
        self.width = width
        self.height = height
        self.font = self.load_font(font_size)

    @staticmethod
    def load_font(size):
        """DejaVu Sans when installed, PIL's default otherwise"""
        for font_path in CHART_FONTS:
            if os.path.exists(font_path):
                try:
                    return ImageFont.truetype(font_path, size)
                except OSError:
                    continue
        logger.debug("No system font found, using PIL default font")
        return ImageFont.load_default()

    def bar_chart(self, labels, values, title, path, y_label='dB'):
        """Vertical bars with a zero line; negative values drawn in red"""
        values = [0.0 if v is None else float(v) for v in values]
        image = Image.new('RGB', (self.width, self.height), 'white')
        draw = ImageDraw.Draw(image)

        left, right, top, bottom = 60, self.width - 20, 40, self.height - 50
        low = min(0.0, min(values, default=0.0))
        high = max(0.0, max(values, default=0.0))
        if high - low < 1e-9:
            high = low + 1.0
        span = high - low

        def y_of(value):
            return bottom - (value - low) / span * (bottom - top)

        for tick in np.linspace(low, high, 5):
            y = y_of(tick)
            draw.line([(left, y), (right, y)], fill=GRID_COLOR, width=1)
            draw.text((5, y - 7), f'{tick:.1f}', fill=AXIS_COLOR, font=self.font)

        zero = y_of(0.0)
        slot = (right - left) / max(1, len(values))
        for i, (label, value) in enumerate(zip(labels, values)):
            x0 = left + i * slot + slot * 0.15
            x1 = left + (i + 1) * slot - slot * 0.15
            y = y_of(value)
            color = BAR_COLOR if value >= 0 else NEGATIVE_COLOR
            draw.rectangle([x0, min(y, zero), x1, max(y, zero)], fill=color)
            draw.text((x0, bottom + 8), str(label), fill=AXIS_COLOR, font=self.font)

        draw.line([(left, zero), (right, zero)], fill=AXIS_COLOR, width=1)
        draw.line([(left, top), (left, bottom)], fill=AXIS_COLOR, width=1)
        draw.text((left, 10), title, fill=AXIS_COLOR, font=self.font)
        draw.text((5, 10), y_label, fill=AXIS_COLOR, font=self.font)

        return self.save(image, path)

    def heatmap(self, matrix, title, path):
        """Rows as image rows (row 0 at the bottom), values normalised to [0, 255] in dB"""
        matrix = np.asarray(matrix, dtype=np.float64)
        db = 20.0 * np.log10(np.maximum(matrix, 1e-12))
        db = np.clip(db - db.max(), -60.0, 0.0)
        pixels = ((db + 60.0) / 60.0 * 255.0).astype(np.uint8)[::-1]

        body = Image.fromarray(pixels).resize((self.width, self.height - 30), Image.NEAREST)
        image = Image.new('RGB', (self.width, self.height), 'white')
        image.paste(body.convert('RGB'), (0, 30))
        ImageDraw.Draw(image).text((10, 8), title, fill=AXIS_COLOR, font=self.font)
        return self.save(image, path)

    @staticmethod
    def save(image, path):
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        image.save(path)
        logger.info(f"Chart saved to {path}")
        return path
