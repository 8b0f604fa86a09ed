"""Positive-weight cubature on S^2 exact for polynomials of dyadic degree.

The level-j rule integrates every spherical polynomial of degree at most
N = 2^{j+2} exactly.  It is a product construction: Gauss-Legendre nodes in
cos(theta) (N/2 + 1 of them, enough for degree N + 1 in the latitude
variable) crossed with N + 1 equispaced longitudes, which annihilate every
nonzero azimuthal frequency up to order N.  Nodes are ordered latitude-major
from the north pole, which fixes the atom indexing used everywhere else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .sphere import UnsupportedDimensionError, surface_measure

GL_TOL = 1e-14
GL_MAX_ITER = 100


def gauss_legendre(n: int, tol: float = GL_TOL, max_iter: int = GL_MAX_ITER):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].

    Roots of P_n are found by Newton iteration seeded with the Chebyshev
    angle estimate; P_n and P_n' come from the standard recurrence.  Nodes
    are returned in decreasing order with their positive weights.
    """
    if n < 1:
        raise ValueError(f"rule size must be positive, got {n}")
    k = np.arange(1, n + 1)
    x = np.cos(math.pi * (k - 0.25) / (n + 0.5))
    for _ in range(max_iter):
        p_prev = np.ones_like(x)
        p = x.copy()
        for m in range(2, n + 1):
            p_prev, p = p, ((2 * m - 1) * x * p - (m - 1) * p_prev) / m
        dp = n * (x * p - p_prev) / (x * x - 1.0)
        dx = p / dp
        x -= dx
        if np.max(np.abs(dx)) < tol:
            break
    else:
        raise RuntimeError(f"Gauss-Legendre Newton iteration failed to reach {tol} in {max_iter} steps")
    # One final recurrence pass at the converged nodes for the weights.
    p_prev = np.ones_like(x)
    p = x.copy()
    for m in range(2, n + 1):
        p_prev, p = p, ((2 * m - 1) * x * p - (m - 1) * p_prev) / m
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(-x)
    x, w = x[order], w[order]
    # Enforce the exact +/- symmetry of the rule; for odd n this pins the
    # middle node to 0, which downstream code relies on for equator nodes.
    x = (x - x[::-1]) / 2.0
    w = (w + w[::-1]) / 2.0
    return x, w


@dataclass(frozen=True)
class CubatureRule:
    """Positive cubature rule exact for spherical polynomials of ``degree``."""

    d: int
    level: int
    degree: int
    points: np.ndarray  # (n, d) unit rows, latitude-major from the north pole
    weights: np.ndarray  # (n,) positive, summing to the surface measure
    n_lat: int
    n_lon: int

    @property
    def size(self) -> int:
        return self.points.shape[0]


@lru_cache(maxsize=None)
def build_rule(d: int, j: int) -> CubatureRule:
    """Level-j product rule on S^{d-1}, exact for degree N = 2^{j+2}.

    Only d = 3 is supported; higher-dimensional rule construction is out of
    scope and raises.  Rules are cached and their arrays frozen.
    """
    if d != 3:
        raise UnsupportedDimensionError(f"cubature construction supports d = 3 only, got d = {d}")
    if j < 0:
        raise ValueError(f"rule level must be non-negative, got {j}")
    degree = 2 ** (j + 2)
    n_lat = degree // 2 + 1
    n_lon = degree + 1
    cos_t, w_lat = gauss_legendre(n_lat)
    sin_t = np.sqrt(np.maximum(0.0, 1.0 - cos_t * cos_t))
    phi = 2.0 * math.pi * np.arange(n_lon) / n_lon

    cos_p, sin_p = np.cos(phi), np.sin(phi)
    points = np.empty((n_lat * n_lon, 3))
    points[:, 0] = np.outer(sin_t, cos_p).ravel()
    points[:, 1] = np.outer(sin_t, sin_p).ravel()
    points[:, 2] = np.repeat(cos_t, n_lon)
    weights = np.repeat(w_lat * (2.0 * math.pi / n_lon), n_lon)

    points.setflags(write=False)
    weights.setflags(write=False)
    return CubatureRule(d=3, level=j, degree=degree, points=points, weights=weights,
                        n_lat=n_lat, n_lon=n_lon)


def integrate(rule: CubatureRule, f) -> float:
    """Apply the rule to a callable mapping an (n, d) array to n values."""
    values = np.asarray(f(rule.points), dtype=np.float64)
    if values.shape != (rule.size,):
        raise ValueError(f"integrand returned shape {values.shape}, expected ({rule.size},)")
    if not np.all(np.isfinite(values)):
        bad = int(np.argmax(~np.isfinite(values)))
        raise ValueError(f"integrand is not finite at node {bad} = {rule.points[bad].tolist()}")
    return float(rule.weights @ values)


def diagnostics(rule: CubatureRule) -> dict:
    """Mesh and weight-regularity constants of the rule.

    ``separation`` is the exact minimum pairwise geodesic distance: any two
    nodes on distinct rings are at least the smallest ring gap apart (the
    distance lower bound |theta_1 - theta_2| is attained at equal
    longitudes), so only ring gaps and within-ring neighbours compete.
    Ratios are normalized by the natural scales 2^{-j} and 2^{-j(d-1)}.
    """
    cos_t = rule.points[::rule.n_lon, 2]
    theta = np.arccos(np.clip(cos_t, -1.0, 1.0))
    gaps = np.diff(theta)
    dphi = 2.0 * math.pi / rule.n_lon
    within = np.arccos(np.clip(cos_t**2 + (1.0 - cos_t**2) * math.cos(dphi), -1.0, 1.0))
    separation = float(min(gaps.min() if gaps.size else math.inf, within.min()))

    scale = float(2**rule.level)
    area_scale = scale ** (rule.d - 1)
    w = rule.weights
    return {
        "separation": separation,
        "separation_ratio": separation * scale,
        "min_weight_ratio": float(w.min()) * area_scale,
        "median_weight_ratio": float(np.median(w)) * area_scale,
        "max_weight_ratio": float(w.max()) * area_scale,
        "weight_sum": float(w.sum()),
        "weight_sum_error": float(abs(w.sum() - surface_measure(rule.d))),
        "size": rule.size,
    }


def rule_to_csv(rule: CubatureRule, path) -> None:
    """Write nodes and weights as CSV columns x1..xd, weight (17 digits)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        cols = [f"x{i + 1}" for i in range(rule.d)] + ["weight"]
        fh.write(",".join(cols) + "\n")
        for p, w in zip(rule.points, rule.weights):
            row = [format(v, ".17g") for v in p] + [format(w, ".17g")]
            fh.write(",".join(row) + "\n")


def rule_from_csv(path, d: int = 3):
    """Read back (points, weights) written by ``rule_to_csv``, validating."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != d + 1:
        raise ValueError(f"expected {d + 1} columns in {path}, found {data.shape[1]}")
    points, weights = data[:, :d], data[:, d]
    if np.any(weights <= 0.0):
        raise ValueError("cubature weights must be positive")
    return points, weights
