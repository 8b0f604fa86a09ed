"""Zonal projector kernels via the Gegenbauer three-term recurrence.

The degree-k projector kernel on S^{d-1} is

    Z^k(x, y) = (2k + d - 2) / ((d - 2) omega_{d-1}) * C_k^{(d-2)/2}(x . y),

so every kernel here is a function of the single cosine s = x . y.  Window-
weighted sums over k (low-pass, band, and band-square-root kernels) are
accumulated in one forward pass of the recurrence.
"""

from __future__ import annotations

import math

import numpy as np

from .sphere import surface_measure
from .windows import WindowPair, eval_a, eval_b

# Window weights at or below this size contribute nothing at double precision.
WEIGHT_CUTOFF = 1e-15
# Levels at and above this use compensated (Kahan) accumulation.
COMPENSATED_LEVEL = 8


def gegenbauer_eval(k: int, lam: float, s):
    """Gegenbauer polynomial C_k^lam(s) by the stable forward recurrence.

    lam = 1/2 reproduces the Legendre polynomials.  ``s`` may be a scalar
    or an array with entries in [-1, 1].
    """
    if k < 0:
        raise ValueError(f"degree must be non-negative, got {k}")
    if lam <= 0.0:
        raise ValueError(f"Gegenbauer index must be positive, got {lam}")
    arr = np.asarray(s, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(np.abs(arr) > 1.0 + 1e-12):
        raise ValueError("cosine argument outside [-1, 1]")
    prev = np.ones_like(arr)
    if k == 0:
        return float(prev[0]) if scalar else prev
    cur = 2.0 * lam * arr
    for m in range(2, k + 1):
        prev, cur = cur, (2.0 * (m + lam - 1.0) * arr * cur - (m + 2.0 * lam - 2.0) * prev) / m
    return float(cur[0]) if scalar else cur


def dim_harmonic(d: int, k: int) -> int:
    """Dimension of the space of degree-k spherical harmonics on S^{d-1}."""
    if d < 3:
        raise ValueError(f"dimension must be >= 3, got {d}")
    if k < 0:
        raise ValueError(f"degree must be non-negative, got {k}")
    if k == 0:
        return 1
    return math.comb(d + k - 1, d - 1) - math.comb(d + k - 3, d - 1)


def zonal_norm(d: int, k: int) -> float:
    """Normalization (2k + d - 2) / ((d - 2) omega_{d-1}) of Z^k."""
    return (2.0 * k + d - 2.0) / ((d - 2.0) * surface_measure(d))


def zonal_eval(d: int, k: int, s):
    """Projector kernel Z^k evaluated at cosine s = x . y.

    On the diagonal (s = 1) this equals dim H_k / omega_{d-1}.
    """
    return zonal_norm(d, k) * gegenbauer_eval(k, (d - 2.0) / 2.0, s)


def weighted_zonal_sum(weights: np.ndarray, d: int, s, *, compensated: bool = False):
    """sum_k weights[k] * Z^k(s) in a single pass of the recurrence.

    Parameters
    ----------
    weights : array
        Coefficient of Z^k at index k; entries with magnitude at most
        ``WEIGHT_CUTOFF`` are skipped (their kernels are still advanced).
    d : int
        Ambient dimension; the recurrence runs with lam = (d - 2) / 2.
    compensated : bool
        Use Kahan summation for long, high-degree sums.
    """
    arr = np.asarray(s, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    lam = (d - 2.0) / 2.0
    coeff = np.asarray(weights, dtype=np.float64)
    kmax = coeff.shape[0] - 1

    total = np.zeros_like(arr)
    carry = np.zeros_like(arr) if compensated else None

    def accumulate(term):
        if carry is None:
            np.add(total, term, out=total)
        else:
            # Kahan update: carry tracks the low-order bits lost by total.
            y = term - carry
            t = total + y
            carry[...] = (t - total) - y
            total[...] = t

    prev = np.ones_like(arr)
    if abs(coeff[0]) > WEIGHT_CUTOFF:
        accumulate(coeff[0] * zonal_norm(d, 0) * prev)
    if kmax >= 1:
        cur = 2.0 * lam * arr
        if abs(coeff[1]) > WEIGHT_CUTOFF:
            accumulate(coeff[1] * zonal_norm(d, 1) * cur)
        for k in range(2, kmax + 1):
            prev, cur = cur, (2.0 * (k + lam - 1.0) * arr * cur - (k + 2.0 * lam - 2.0) * prev) / k
            if abs(coeff[k]) > WEIGHT_CUTOFF:
                accumulate(coeff[k] * zonal_norm(d, k) * cur)
    return float(total[0]) if scalar else total


def band_weights(window: WindowPair, d: int, j: int, kind: str) -> np.ndarray:
    """Window weights over k for the level-j kernel of the given kind.

    kind 'A': a(k / 2^j) for k = 0 .. 2^j (the top weight a(1) is 0);
    kind 'B': b(k / 2^j) on the open band 2^{j-1} < k < 2^{j+1};
    kind 'C': sqrt of the 'B' weights on the same band.
    """
    if j < 0:
        raise ValueError(f"level must be non-negative, got {j}")
    scale = float(2**j)
    if kind == "A":
        ks = np.arange(0, 2**j + 1)
        return eval_a(window, ks / scale)
    if kind in ("B", "C"):
        lo, hi = 2 ** max(j - 1, 0), 2 ** (j + 1)
        weights = np.zeros(hi)
        ks = np.arange(lo + 1 if j >= 1 else 1, hi)
        weights[ks] = eval_b(window, ks / scale)
        if kind == "C":
            np.sqrt(weights, out=weights)
        return weights
    raise ValueError(f"kernel kind must be 'A', 'B', or 'C', got {kind!r}")


def kernel_sum(window: WindowPair, d: int, j: int, kind: str, s):
    """Level-j window-weighted kernel at cosine s.

    'A' is the low-pass approximation kernel, 'B' the band kernel, and 'C'
    the square-root band kernel whose samples form the needlet atoms.
    """
    weights = band_weights(window, d, j, kind)
    return weighted_zonal_sum(weights, d, s, compensated=j >= COMPENSATED_LEVEL)
