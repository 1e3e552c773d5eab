"""Hand-written SVG figures: wall elevation, Gantt chart, clearance plot.

Coordinates are printed with two decimals so output is byte-stable.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from ..schedule import Schedule
from ..wallplan import WallPlan

GRAY = "#9e9e9e"
TAIL = "#000000"
FONT = 'font-family="sans-serif" font-size="11"'


def brick_color(i: int) -> str:
    """Stable per-id colour (golden-angle hue walk)."""
    hue = (i * 137.508) % 360
    return f"hsl({hue:.1f},55%,62%)"


def _svg(width: float, height: float, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">\n'
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="white"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def _rect(x, y, w, h, fill, stroke="#333333", extra=""):
    return (
        f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" fill="{fill}" '
        f'stroke="{stroke}" stroke-width="0.5"{extra}/>'
    )


def _text(x, y, s, anchor="middle", extra=""):
    return f'<text x="{x:.2f}" y="{y:.2f}" text-anchor="{anchor}" {FONT}{extra}>{escape(s)}</text>'


def _nice_step(span: float, target: int = 10) -> float:
    if span <= 0:
        return 1.0
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        if m * mag >= raw:
            return m * mag
    return 10 * mag


def wall_svg(plan: WallPlan, px_per_m: float = 320.0) -> str:
    """Elevation view: bricks coloured by id, adhesion intervals as gray strips."""
    margin = 30.0
    L = plan.wall_length or max((b.x_end for b in plan.bricks), default=1.0)
    H = max((b.z_base + b.height for b in plan.bricks), default=0.1)
    W, Ht = L * px_per_m + 2 * margin, H * px_per_m + 2 * margin

    def X(x):
        return margin + x * px_per_m

    def Z(z):
        return margin + (H - z) * px_per_m

    body = []
    for b in plan.bricks:
        body.append(_rect(X(b.x_start), Z(b.z_base + b.height), b.width * px_per_m, b.height * px_per_m, brick_color(b.id)))
        cx, cz = b.center
        body.append(_text(X(cx), Z(cz) + 4, f"B{b.id}"))
    strip = 4.0
    for a in plan.adhesions:
        body.append(_rect(X(a.x_start), Z(a.z) - strip / 2, a.width * px_per_m, strip, GRAY, "none"))
        body.append(_text(X(a.x_start + a.width / 2), Z(a.z) + 3, f"A{a.id}", extra=' font-size="8"'))
    body.append(_text(margin, Ht - 8, f"{L:g} m x {H:g} m, {len(plan.bricks)} bricks, {len(plan.adhesions)} adhesions", "start"))
    return _svg(W, Ht, body)


def gantt_svg(s: Schedule, n_robots: int, d_brick: float, d_spray: float, width: float = 960.0) -> str:
    """One lane per brick robot plus one for the mortar UAV; logistics tails in black."""
    left, right, top, lane, gap = 110.0, 20.0, 20.0, 28.0, 8.0
    ends = [t + d_brick for t in s.brick_starts.values()]
    ends += [s.adhesion_starts[j] + s.adhesion_durations[j] for j in s.adhesion_starts]
    T = max(ends + [s.makespan, 1e-9])
    span = width - left - right

    def X(t):
        return left + t / T * span

    n_lanes = n_robots + 1
    height = top + n_lanes * (lane + gap) + 40
    body = []
    for k in range(n_lanes):
        y = top + k * (lane + gap)
        name = f"robot {k}" if k < n_robots else "mortar UAV"
        body.append(_text(left - 8, y + lane / 2 + 4, name, "end"))
        body.append(f'<line x1="{left:.2f}" y1="{y + lane:.2f}" x2="{width - right:.2f}" y2="{y + lane:.2f}" stroke="#dddddd"/>')
    for i in sorted(s.brick_starts):
        y = top + s.brick_assignments[i] * (lane + gap)
        t0 = s.brick_starts[i]
        body.append(_rect(X(t0), y, X(t0 + d_brick) - X(t0), lane, brick_color(i)))
        body.append(_text((X(t0) + X(t0 + d_brick)) / 2, y + lane / 2 + 4, f"B{i}"))
    y = top + n_robots * (lane + gap)
    for j in sorted(s.adhesion_starts):
        t0, dur = s.adhesion_starts[j], s.adhesion_durations[j]
        spray = min(d_spray, dur)
        body.append(_rect(X(t0), y, X(t0 + spray) - X(t0), lane, GRAY))
        if dur - spray > 1e-9:
            body.append(_rect(X(t0 + spray), y, X(t0 + dur) - X(t0 + spray), lane, TAIL, TAIL))
        body.append(_text((X(t0) + X(t0 + spray)) / 2, y + lane / 2 + 4, f"A{j}", extra=' font-size="8"'))
    axis_y = top + n_lanes * (lane + gap)
    body.append(f'<line x1="{left:.2f}" y1="{axis_y:.2f}" x2="{width - right:.2f}" y2="{axis_y:.2f}" stroke="#333333"/>')
    step = _nice_step(T)
    t = 0.0
    while t <= T + 1e-9:
        body.append(f'<line x1="{X(t):.2f}" y1="{axis_y:.2f}" x2="{X(t):.2f}" y2="{axis_y + 4:.2f}" stroke="#333333"/>')
        body.append(_text(X(t), axis_y + 16, f"{t:g}"))
        t += step
    body.append(_text(left + span / 2, axis_y + 32, f"time [s], makespan {s.makespan:.2f} s"))
    return _svg(width, height, body)


def clearance_svg(times, dmin, r_c: float, width: float = 960.0, height: float = 320.0) -> str:
    """Minimum pairwise distance over time (blue) against the clearance radius (red)."""
    left, right, top, bottom = 60.0, 20.0, 20.0, 40.0
    times = np.asarray(times, float)
    d = np.asarray(dmin, float)
    finite = d[np.isfinite(d)]
    T = float(times[-1]) if len(times) and times[-1] > 0 else 1.0
    ymax = max(float(finite.max()) if len(finite) else 0.0, 1.5 * r_c)
    ymax = _nice_step(ymax, 5) * math.ceil(ymax / _nice_step(ymax, 5))
    pw, ph = width - left - right, height - top - bottom

    def X(t):
        return left + t / T * pw

    def Y(v):
        return top + (1 - min(v, ymax) / ymax) * ph

    body = [_rect(left, top, pw, ph, "none", "#333333")]
    ystep = _nice_step(ymax, 5)
    v = 0.0
    while v <= ymax + 1e-9:
        body.append(_text(left - 6, Y(v) + 4, f"{v:g}", "end"))
        v += ystep
    tstep = _nice_step(T)
    t = 0.0
    while t <= T + 1e-9:
        body.append(_text(X(t), top + ph + 16, f"{t:g}"))
        t += tstep
    pts = []
    for t, v in zip(times, d):
        if math.isfinite(v):
            pts.append(f"{X(t):.2f},{Y(v):.2f}")
        elif pts:
            body.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="#1f4fd1" stroke-width="1"/>')
            pts = []
    if pts:
        body.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="#1f4fd1" stroke-width="1"/>')
    body.append(f'<line x1="{left:.2f}" y1="{Y(r_c):.2f}" x2="{left + pw:.2f}" y2="{Y(r_c):.2f}" stroke="#d11f1f" stroke-width="1.5"/>')
    body.append(_text(left + pw / 2, height - 8, f"time [s]; minimum distance [m], r_c = {r_c:g} m"))
    return _svg(width, height, body)
