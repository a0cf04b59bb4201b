"""Minimal SVG writer for scatter plots and polylines."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np


@dataclass
class Figure:
    width: int = 480
    height: int = 360
    margin: int = 40
    title: str = ""
    _layers: list[tuple[str, np.ndarray, str]] = field(default_factory=list)

    def scatter(self, x, y, color: str = "#1f77b4") -> "Figure":
        self._layers.append(("scatter", np.column_stack([x, y]).astype(float), color))
        return self

    def line(self, x, y, color: str = "#d62728") -> "Figure":
        self._layers.append(("line", np.column_stack([x, y]).astype(float), color))
        return self

    def _bounds(self):
        pts = np.vstack([p for _, p, _ in self._layers if len(p)]) if self._layers else np.zeros((1, 2))
        pts = pts[np.isfinite(pts).all(axis=1)]
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        return lo, span

    def render(self) -> str:
        lo, span = self._bounds()
        m, w, h = self.margin, self.width - 2 * self.margin, self.height - 2 * self.margin

        def tx(p):
            q = (p - lo) / span
            return m + q[:, 0] * w, m + (1 - q[:, 1]) * h

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}">']
        out.append(f'<rect x="{m}" y="{m}" width="{w}" height="{h}" fill="none" stroke="#888"/>')
        for kind, pts, color in self._layers:
            pts = pts[np.isfinite(pts).all(axis=1)]
            X, Y = tx(pts)
            if kind == "scatter":
                out.extend(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="1.2" fill="{color}"/>' for a, b in zip(X, Y))
            else:
                coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(X, Y))
                out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1"/>')
        if self.title:
            out.append(f'<text x="{m}" y="{m - 10}" font-size="13">{escape(self.title)}</text>')
        lab = f"x: [{lo[0]:.3g}, {lo[0] + span[0]:.3g}]  y: [{lo[1]:.3g}, {lo[1] + span[1]:.3g}]"
        out.append(f'<text x="{m}" y="{self.height - 10}" font-size="11">{lab}</text>')
        out.append("</svg>")
        return "\n".join(out)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.render())
        return path
