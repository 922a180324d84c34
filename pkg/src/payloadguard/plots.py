"""Minimal SVG writers for the report figures.

The figures are views only; the underlying numbers are always written as
CSV/JSON next to them. Output is plain text with fixed float formatting so
reruns produce identical files.
"""

from __future__ import annotations

from typing import Mapping, Sequence
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _svg(width: int, height: int, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">'
    )
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>"]) + "\n"


def _text(x: float, y: float, s: str, anchor: str = "middle", **attrs: str) -> str:
    extra = "".join(f' {k.replace("_", "-")}="{v}"' for k, v in attrs.items())
    return f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}"{extra}>{escape(s)}</text>'


def roc_svg(curves: Mapping[str, tuple[Sequence[float], Sequence[float], float]], size: int = 420) -> str:
    """``curves`` maps model name to (fpr, tpr, auc)."""
    pad = 50
    plot = size - 2 * pad

    def px(x: float) -> float:
        return pad + x * plot

    def py(y: float) -> float:
        return size - pad - y * plot

    body = [
        f'<rect x="{pad}" y="{pad}" width="{plot}" height="{plot}" fill="none" stroke="#333"/>',
        f'<line x1="{_f(px(0))}" y1="{_f(py(0))}" x2="{_f(px(1))}" y2="{_f(py(1))}" stroke="#999" stroke-dasharray="4 4"/>',
    ]
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        body.append(_text(px(t), size - pad + 16, f"{t:.2f}"))
        body.append(_text(pad - 6, py(t) + 4, f"{t:.2f}", anchor="end"))
    body.append(_text(size / 2, size - 10, "False positive rate"))
    body.append(_text(14, size / 2, "True positive rate", transform=f"rotate(-90 14 {size / 2:.2f})"))
    for k, (name, (fpr, tpr, auc)) in enumerate(curves.items()):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_f(px(x))},{_f(py(y))}" for x, y in zip(fpr, tpr))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = pad + plot - 12 - 16 * (len(curves) - 1 - k)
        body.append(f'<line x1="{px(0.55):.2f}" y1="{ly - 4:.2f}" x2="{px(0.62):.2f}" y2="{ly - 4:.2f}" stroke="{color}" stroke-width="2"/>')
        body.append(_text(px(0.64), ly, f"{name} (AUC {auc:.3f})", anchor="start"))
    return _svg(size, size, body)


def confusion_svg(matrices: Mapping[str, Mapping[str, int]], cell: int = 70) -> str:
    """One 2x2 heatmap per model, side by side; rows are true labels."""
    pad = 40
    gap = 50
    width = pad * 2 + len(matrices) * (2 * cell + gap)
    height = 2 * cell + pad * 2 + 30
    body = []
    for k, (name, cm) in enumerate(matrices.items()):
        grid = [[cm["tn"], cm["fp"]], [cm["fn"], cm["tp"]]]
        peak = max(max(r) for r in grid) or 1
        x0 = pad + k * (2 * cell + gap)
        y0 = pad + 20
        body.append(_text(x0 + cell, pad + 8, name, font_weight="bold"))
        for i in range(2):
            for j in range(2):
                v = grid[i][j]
                shade = int(255 - 200 * v / peak)
                fill = f"rgb({shade},{shade},255)"
                body.append(f'<rect x="{x0 + j * cell}" y="{y0 + i * cell}" width="{cell}" height="{cell}" fill="{fill}" stroke="#333"/>')
                color = "white" if v / peak > 0.6 else "black"
                body.append(_text(x0 + j * cell + cell / 2, y0 + i * cell + cell / 2 + 4, str(v), fill=color))
        body.append(_text(x0 + cell / 2, y0 + 2 * cell + 16, "pred 0"))
        body.append(_text(x0 + 1.5 * cell, y0 + 2 * cell + 16, "pred 1"))
        body.append(_text(x0 - 4, y0 + cell / 2 + 4, "0", anchor="end"))
        body.append(_text(x0 - 4, y0 + 1.5 * cell + 4, "1", anchor="end"))
    return _svg(width, height, body)


def importance_svg(names: Sequence[str], values: Sequence[float], bar: int = 18) -> str:
    """Horizontal bars, largest first."""
    order = sorted(range(len(names)), key=lambda i: (-values[i], names[i]))
    label_w, plot_w, pad = 230, 300, 20
    width = label_w + plot_w + 3 * pad + 50
    height = pad * 2 + bar * len(names) + 10
    peak = max(values) if len(values) and max(values) > 0 else 1.0
    body = []
    for row, i in enumerate(order):
        y = pad + row * bar
        w = plot_w * values[i] / peak
        body.append(_text(pad + label_w, y + bar * 0.7, names[i], anchor="end"))
        body.append(f'<rect x="{pad + label_w + 6}" y="{y + 2}" width="{_f(w)}" height="{bar - 4}" fill="{PALETTE[0]}"/>')
        body.append(_text(pad + label_w + 10 + w, y + bar * 0.7, f"{values[i]:.3f}", anchor="start"))
    return _svg(width, height, body)
