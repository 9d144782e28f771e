"""Static SVG line plots of 1D profile tables."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import UnsupportedTable
from .scan import ProfileTable, Quantity

WIDTH = 640
HEIGHT = 400
MARGIN_LEFT = 70
MARGIN_RIGHT = 20
MARGIN_TOP = 60
MARGIN_BOTTOM = 50

SVG_NS = "http://www.w3.org/2000/svg"


def _fmt(value: float) -> str:
    return f"{value:.3f}"


def _pi_label(multiple: Fraction) -> str:
    if multiple == 0:
        return "0"
    sign = "−" if multiple < 0 else ""
    m = abs(multiple)
    num = "" if m.numerator == 1 else str(m.numerator)
    if m.denominator == 1:
        return f"{sign}{num}π"
    return f"{sign}{num}π/{m.denominator}"


def _title_lines(table: ProfileTable) -> list[str]:
    meta = table.metadata
    drive = meta.get("drive", {})
    decay = meta.get("decay", {})
    probe = meta.get("probe", {})
    lines = [f"{'χ′' if table.quantity is Quantity.CHI_RE else 'χ″'} vs κx"]
    if meta.get("preset"):
        lines[0] += f" ({meta['preset']})"
    if drive:
        lines.append(
            "Ω₁={:g} Ω₂={:g} Ω₃={:g} φ={:.6g} γ₂={:g} Δ={:g}".format(
                drive.get("omega1", 0.0),
                drive.get("omega2", 0.0),
                drive.get("omega3", 0.0),
                drive.get("phi", 0.0),
                decay.get("gamma2", 0.0),
                probe.get("delta", 0.0),
            )
        )
    return lines


def render_svg(table: ProfileTable) -> str:
    """SVG text for a 1D table: one polyline, π/2 ticks, a κx = 0 guide."""
    if table.is_2d:
        raise UnsupportedTable("SVG output needs a 1D profile; export heatmaps as CSV or JSON")
    column = "chi_re" if table.quantity is Quantity.CHI_RE else "chi_im"
    x = np.asarray(table.data["kappa_x"], dtype=float)
    y = np.asarray(table.data[column], dtype=float)
    keep = table.defined & np.isfinite(y)
    if len(table) == 0 or not keep.any():
        raise UnsupportedTable("table has no defined rows to plot")
    x, y = x[keep], y[keep]

    x_lo, x_hi = float(x.min()), float(x.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    y_lo, y_hi = float(y.min()), float(y.max())
    pad = 0.05 * (y_hi - y_lo) if y_hi > y_lo else max(abs(y_hi), 1.0) * 0.05
    y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(v: float) -> float:
        return MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v: float) -> float:
        return MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h

    root = ET.Element(
        "svg",
        {
            "xmlns": SVG_NS,
            "width": str(WIDTH),
            "height": str(HEIGHT),
            "viewBox": f"0 0 {WIDTH} {HEIGHT}",
            "font-family": "sans-serif",
            "font-size": "12",
        },
    )
    title = ET.SubElement(root, "g", {"class": "title"})
    for i, line in enumerate(_title_lines(table)):
        text = ET.SubElement(title, "text", {"x": str(MARGIN_LEFT), "y": str(20 + 16 * i)})
        text.text = line

    bottom = MARGIN_TOP + plot_h
    ET.SubElement(
        root,
        "rect",
        {
            "class": "frame",
            "x": str(MARGIN_LEFT),
            "y": str(MARGIN_TOP),
            "width": str(plot_w),
            "height": str(plot_h),
            "fill": "none",
            "stroke": "black",
        },
    )

    ticks = ET.SubElement(root, "g", {"class": "ticks"})
    k_lo = math.ceil(x_lo / (math.pi / 2) - 1e-9)
    k_hi = math.floor(x_hi / (math.pi / 2) + 1e-9)
    for k in range(k_lo, k_hi + 1):
        tx = _fmt(px(k * math.pi / 2))
        ET.SubElement(ticks, "line", {"x1": tx, "y1": str(bottom), "x2": tx, "y2": str(bottom + 5), "stroke": "black"})
        label = ET.SubElement(ticks, "text", {"x": tx, "y": str(bottom + 20), "text-anchor": "middle"})
        label.text = _pi_label(Fraction(k, 2))
    for v in (y_lo + pad, y_hi - pad):
        ty = _fmt(py(v))
        label = ET.SubElement(ticks, "text", {"x": str(MARGIN_LEFT - 6), "y": ty, "text-anchor": "end"})
        label.text = f"{v:.4g}"

    if x_lo <= 0.0 <= x_hi:
        gx = _fmt(px(0.0))
        ET.SubElement(
            root,
            "line",
            {
                "class": "guide",
                "x1": gx,
                "y1": str(MARGIN_TOP),
                "x2": gx,
                "y2": str(bottom),
                "stroke": "gray",
                "stroke-dasharray": "4 4",
            },
        )

    points = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
    ET.SubElement(
        root,
        "polyline",
        {"class": "profile", "points": points, "fill": "none", "stroke": "#1f4e9c", "stroke-width": "1.5"},
    )
    xlabel = ET.SubElement(root, "text", {"x": str(MARGIN_LEFT + plot_w // 2), "y": str(HEIGHT - 8), "text-anchor": "middle"})
    xlabel.text = "κx"

    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def emit_svg(table: ProfileTable, output: str | Path | None = None) -> str:
    """Render ``table`` and, when ``output`` is given, write it there."""
    svg = render_svg(table)
    if output is not None:
        Path(output).write_text(svg, encoding="utf-8")
    return svg
