"""Smooth Littlewood-Paley window pair on the dyadic frequency axis.

The profile ``a`` is C^inf, equals 1 on [0, 1/2], vanishes on [1, inf), and
decreases through a normalized bump-integral transition on (1/2, 1).  The
band window ``b(x) = a(x/2) - a(x)`` is supported on [1/2, 2] with b(1) = 1,
and the family ``b(x / 2^j)`` tiles the frequency axis:

    a(x) + sum_{j >= 0} b(x / 2^j) = 1   for every x >= 0.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

# Transition table resolution and the grid used to certify the band floor.
TRANSITION_INTERVALS = 4096
FLOOR_GRID_POINTS = 10_000
DEFAULT_SHARPNESS = 0.5
EVAL_TOL = 1e-10


def _bump(u: np.ndarray, sharpness: float) -> np.ndarray:
    """C^inf bump exp(-sharpness / (u (1 - u))) on (0, 1), zero outside."""
    out = np.zeros_like(u)
    inside = (u > 0.0) & (u < 1.0)
    ui = u[inside]
    out[inside] = np.exp(-sharpness / (ui * (1.0 - ui)))
    return out


class WindowPair:
    """Low-pass profile ``a`` and band window ``b`` built from one bump.

    Parameters
    ----------
    sharpness : float
        Decay constant of the transition bump exp(-sharpness / (u(1-u))).
        The default 0.5 keeps the certified floor of b on [1, 7/4] above
        0.05; sharpness 1.0 gives a steeper transition with floor ~0.032.

    Notes
    -----
    The normalized cumulative bump integral is precomputed once with
    cumulative Simpson weights on a uniform grid and interpolated with a
    cubic spline; evaluations are accurate to about 1e-10.  ``c_b_floor``
    holds the grid minimum of b over [1, 7/4], which is strictly positive
    for every sharpness.
    """

    def __init__(self, sharpness: float = DEFAULT_SHARPNESS):
        if not (sharpness > 0.0):
            raise ValueError(f"sharpness must be positive, got {sharpness!r}")
        self.sharpness = float(sharpness)
        grid = np.linspace(0.0, 1.0, TRANSITION_INTERVALS + 1)
        values = _bump(grid, self.sharpness)
        cum = cumulative_simpson(values, x=grid, initial=0.0)
        cum /= cum[-1]
        # Clamp the cumulative table into [0, 1]; Simpson roundoff can stray
        # by ~1e-16 which would leak negative b values after differencing.
        np.clip(cum, 0.0, 1.0, out=cum)
        self._transition = CubicSpline(grid, cum)
        self.c_b_floor = certify_floor(self)

    def a(self, x):
        return eval_a(self, x)

    def b(self, x):
        return eval_b(self, x)

    def __repr__(self) -> str:
        return f"WindowPair(sharpness={self.sharpness!r})"


def eval_a(window: WindowPair, x):
    """Low-pass profile: 1 on [0, 1/2], smooth descent, 0 on [1, inf)."""
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0.0):
        raise ValueError("window argument must be non-negative")
    out = np.ones_like(arr)
    out[arr >= 1.0] = 0.0
    mid = (arr > 0.5) & (arr < 1.0)
    if np.any(mid):
        s = window._transition(2.0 * arr[mid] - 1.0)
        out[mid] = np.clip(1.0 - s, 0.0, 1.0)
    return float(out[0]) if scalar else out


def eval_b(window: WindowPair, x):
    """Band window b(x) = a(x/2) - a(x), supported on [1/2, 2]."""
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    diff = eval_a(window, arr / 2.0) - eval_a(window, arr)
    out = np.maximum(diff, 0.0)
    return float(out[0]) if scalar else out


def certify_floor(window: WindowPair) -> float:
    """Grid minimum of b over [1, 7/4]; must be strictly positive.

    The value is the frame's lower-bound constant on the band where dyadic
    windows overlap; a non-positive floor voids the construction and raises.
    """
    grid = np.linspace(1.0, 1.75, FLOOR_GRID_POINTS)
    floor = float(np.min(eval_b(window, grid)))
    if floor <= 0.0:
        raise ValueError(
            f"band window floor {floor!r} on [1, 7/4] is not positive; "
            f"sharpness {window.sharpness!r} does not yield a usable frame"
        )
    return floor
