"""Minimal deterministic SVG line/band plots.

Kept dependency-free on purpose: the numerical pipeline never needs a
plotting stack, and hand-written SVG is byte-stable across runs.
"""

import numpy as np

WIDTH, HEIGHT = 860, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 30, 40


def _scale(values, lo, hi, out_lo, out_hi):
    span = hi - lo
    if span == 0:
        span = 1.0
    return out_lo + (np.asarray(values, dtype=float) - lo) * (out_hi - out_lo) / span


def _polyline(xs, ys, color, width=1.5, dash=None):
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash_attr} '
        f'points="{pts}"/>'
    )


def write_plot_svg(path, x, series, band=None, title="", xlabel="day", ylabel=""):
    """Write a single-panel plot.

    ``series`` maps label -> (values, color); ``band`` is an optional
    (lower, upper) pair drawn as a filled grey region.
    """
    x = np.asarray(x, dtype=float)
    all_y = [np.asarray(v, dtype=float) for v, _ in series.values()]
    if band is not None:
        all_y += [np.asarray(band[0], dtype=float), np.asarray(band[1], dtype=float)]
    y_lo = min(float(np.min(v)) for v in all_y)
    y_hi = max(float(np.max(v)) for v in all_y)
    if y_lo > 0:
        y_lo = 0.0
    x_lo, x_hi = float(x.min()), float(x.max())

    def sx(v):
        return _scale(v, x_lo, x_hi, MARGIN_L, WIDTH - MARGIN_R)

    def sy(v):
        return _scale(v, y_lo, y_hi, HEIGHT - MARGIN_B, MARGIN_T)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
    ]
    if band is not None:
        lower, upper = band
        xs = np.concatenate([sx(x), sx(x)[::-1]])
        ys = np.concatenate([sy(lower), sy(upper)[::-1]])
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(xs, ys))
        parts.append(f'<polygon fill="#d0d0d0" stroke="none" points="{pts}"/>')
    for label, (values, color) in series.items():
        parts.append(_polyline(sx(x), sy(np.asarray(values, dtype=float)), color))
    # axes
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{HEIGHT - MARGIN_B}" x2="{WIDTH - MARGIN_R}" '
        f'y2="{HEIGHT - MARGIN_B}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{HEIGHT - MARGIN_B}" '
        f'stroke="black"/>'
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        parts.append(
            f'<text x="{sx(xv):.1f}" y="{HEIGHT - MARGIN_B + 16}" text-anchor="middle" '
            f'font-size="11">{xv:.0f}</text>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 6}" y="{sy(yv):.1f}" text-anchor="end" '
            f'font-size="11">{yv:.0f}</text>'
        )
    parts.append(
        f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 8}" text-anchor="middle" '
        f'font-size="12">{xlabel}</text>'
    )
    # legend
    ly = MARGIN_T + 6
    for label, (_, color) in series.items():
        parts.append(
            f'<line x1="{WIDTH - 190}" y1="{ly}" x2="{WIDTH - 165}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{WIDTH - 160}" y="{ly + 4}" font-size="11">{label}</text>')
        ly += 16
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
