"""Exact area of disc/rectangle intersections (used for clipped cell sums)."""

import numpy as np


def _S(t, r):
    # antiderivative of sqrt(r^2 - t^2)
    s = np.sqrt(np.maximum(r * r - t * t, 0.0))
    return 0.5 * (t * s + r * r * np.arcsin(np.clip(t / r, -1.0, 1.0)))


def _corner_area(x, y, r):
    """Area of {|X| < r} ∩ {X <= x, Y <= y} for a disc centred at the origin."""
    xc = np.clip(x, -r, r)
    yc = np.clip(y, -r, r)
    a = np.sqrt(np.maximum(r * r - yc * yc, 0.0))
    q1 = np.minimum(xc, -a)
    left = 2.0 * (_S(q1, r) - _S(-r, r))
    qm = np.clip(xc, -a, a)
    mid = yc * (qm + a) + _S(qm, r) - _S(-a, r)
    qr = np.maximum(xc, a)
    right = 2.0 * (_S(qr, r) - _S(a, r))
    return mid + np.where(y >= 0, left + right, 0.0)


def disc_rect_area(x0, x1, y0, y1, r):
    """Area of [x0, x1] x [y0, y1] ∩ B_r(0); coordinates relative to the disc centre."""
    area = (_corner_area(x1, y1, r) - _corner_area(x0, y1, r)
            - _corner_area(x1, y0, r) + _corner_area(x0, y0, r))
    return np.maximum(area, 0.0)
