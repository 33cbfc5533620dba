"""Result persistence: CSV, JSON, SVG and point files.

Floats are written with ``repr`` so that reading a CSV back returns the very
same doubles; JSON keys are sorted. Neither format carries timings.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from pinpat.errors import PinpatError


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise PinpatError("row length does not match the header")
        w.writerow([_cell(v) for v in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _parse(text: str):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path: str) -> tuple[list[str], list[list]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise PinpatError(f"{path}: empty CSV")
    return rows[0], [[_parse(c) for c in r] for r in rows[1:]]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f) or math.isinf(f):
            return None if math.isnan(f) else ("inf" if f > 0 else "-inf")
        return f
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_json(obj))


def read_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def read_points(path: str) -> np.ndarray:
    """One point per line, whitespace separated; blank lines and '#' comments skipped."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                rows.append([float(t) for t in line.split()])
            except ValueError:
                raise PinpatError(f"{path}:{ln}: not a list of numbers") from None
    if not rows:
        return np.zeros((0, 2))
    if len({len(r) for r in rows}) != 1:
        raise PinpatError(f"{path}: points have differing dimensions")
    return np.array(rows)


def write_points(path: str, pts: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in np.asarray(pts, dtype=float):
            fh.write(" ".join(repr(float(c)) for c in p) + "\n")


# --------------------------------------------------------------------- SVG


@dataclass
class SvgPlot:
    """A tiny static SVG 1.1 writer mapping a data box onto a fixed canvas."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    width: int = 640
    height: int = 480
    margin: int = 40
    title: str = ""
    items: list = field(default_factory=list)

    def _x(self, x: float) -> float:
        span = (self.xmax - self.xmin) or 1.0
        return self.margin + (x - self.xmin) / span * (self.width - 2 * self.margin)

    def _y(self, y: float) -> float:
        span = (self.ymax - self.ymin) or 1.0
        return self.height - self.margin - (y - self.ymin) / span * (self.height - 2 * self.margin)

    def polyline(self, xs, ys, color="black", width=1.0) -> None:
        pts = " ".join(f"{self._x(x):.3f},{self._y(y):.3f}" for x, y in zip(xs, ys))
        self.items.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def polygon(self, xs, ys, fill="#cfe3f7", stroke="#1f5f99") -> None:
        pts = " ".join(f"{self._x(x):.3f},{self._y(y):.3f}" for x, y in zip(xs, ys))
        self.items.append(f'<polygon points="{pts}" fill="{fill}" stroke="{stroke}"/>')

    def circle(self, x, y, r_px=3.0, color="red") -> None:
        self.items.append(f'<circle cx="{self._x(x):.3f}" cy="{self._y(y):.3f}" r="{r_px}" fill="{color}"/>')

    def ring(self, x, y, r, color="gray") -> None:
        sx = (self.width - 2 * self.margin) / ((self.xmax - self.xmin) or 1.0)
        self.items.append(
            f'<circle cx="{self._x(x):.3f}" cy="{self._y(y):.3f}" r="{abs(r) * sx:.3f}" '
            f'fill="none" stroke="{color}" stroke-dasharray="4,3"/>'
        )

    def text(self, x_px, y_px, s, size=12) -> None:
        self.items.append(f'<text x="{x_px}" y="{y_px}" font-size="{size}" font-family="sans-serif">{escape(s)}</text>')

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
            '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{self.width}" height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="white"/>\n'
        )
        body = "\n".join(self.items)
        title = f'<text x="{self.margin}" y="20" font-size="14" font-family="sans-serif">{escape(self.title)}</text>\n'
        return head + title + body + "\n</svg>\n"

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.render())


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
