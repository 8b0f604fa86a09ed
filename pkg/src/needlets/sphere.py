"""Geometry, measure, sampling, and RNG utilities for the unit sphere.

Points on S^{d-1} are plain float64 numpy arrays of shape (d,); sample sets
are arrays of shape (n, d) with unit rows.  Only d >= 3 is supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Maximum deviation from unit norm accepted before renormalization.
NORM_TOL = 1e-8


class UnsupportedDimensionError(ValueError):
    """Requested dimension is outside the supported range (d >= 3)."""


def surface_measure(d: int) -> float:
    """Surface measure of S^{d-1}: 2 pi^{d/2} / Gamma(d/2).

    For d = 3 this is 4 pi, the area of the ordinary sphere.
    """
    if not isinstance(d, (int, np.integer)) or d < 3:
        raise UnsupportedDimensionError(f"dimension must be an integer >= 3, got {d!r}")
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True)
class SphereDim:
    """Ambient dimension d together with the surface measure of S^{d-1}."""

    d: int
    omega: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega", surface_measure(self.d))


def unit_vector(coords, *, tol: float = NORM_TOL) -> np.ndarray:
    """Validate and renormalize a point expected to lie on the sphere.

    Accepts any sequence of d >= 3 reals whose norm is within ``tol`` of 1
    and returns the exactly renormalized float64 vector.  Anything farther
    from the sphere is rejected rather than silently projected.
    """
    v = np.asarray(coords, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] < 3:
        raise ValueError(f"expected a 1-d vector with d >= 3 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("unit vector has non-finite components")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"norm {norm!r} deviates from 1 by more than {tol}")
    return v / norm


def check_samples(points, d: int) -> np.ndarray:
    """Validate an (n, d) array of near-unit rows, renormalizing each row."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != d:
        raise ValueError(f"expected an (n, {d}) sample array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample array has non-finite entries")
    norms = np.linalg.norm(arr, axis=1)
    if np.any(np.abs(norms - 1.0) > NORM_TOL):
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise ValueError(f"row {bad} has norm {norms[bad]!r}, more than {NORM_TOL} from 1")
    return arr / norms[:, None]


def geodesic_distance(x: np.ndarray, y: np.ndarray):
    """Great-circle distance arccos(x . y), clamped against roundoff.

    ``y`` may be a single point of shape (d,) or a batch of shape (n, d);
    the result is a scalar or a length-n array accordingly.
    """
    dots = np.clip(np.asarray(y) @ np.asarray(x), -1.0, 1.0)
    dist = np.arccos(dots)
    return float(dist) if dist.ndim == 0 else dist


def sample_uniform(sd: SphereDim, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n points uniformly on S^{d-1} by normalizing Gaussian vectors."""
    if n < 0:
        raise ValueError(f"sample size must be non-negative, got {n}")
    g = rng.standard_normal((n, sd.d))
    norms = np.linalg.norm(g, axis=1)
    # A zero Gaussian vector has probability 0; redraw defensively if it occurs.
    while np.any(norms == 0.0):
        bad = norms == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), sd.d))
        norms = np.linalg.norm(g, axis=1)
    return g / norms[:, None]


def rng_stream(seed: int, *path: int) -> np.random.Generator:
    """Named, splittable, counter-based random stream.

    Each (seed, path) pair selects an independent Philox stream; replications
    and sub-tasks pass distinct integer paths, e.g. ``rng_stream(seed, rep)``.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
