"""Needlet density estimators: the linear projection estimator, the hard
thresholded estimator with its explicit threshold constant, and the
data-driven confidence interval built from the surviving coefficients.

Conventions fixed here once: "log n" is the natural logarithm everywhere,
the truncation level J is the largest with 2^{J(d-1)} <= n / ln n, the
threshold is 2 kappa_1 sqrt(ln n / n) with
kappa_v = max(14 v / (3 sqrt(omega)), sup_f sqrt(omega)), and the interval
half-width is 1.01 sigma_hat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .frame import (CoefficientTable, NeedletFrame, build_rule, psi_values,
                    synthesize)
from .sphere import SphereDim, unit_vector

# Number of top-coefficient atoms refined locally by plug_in_sup.
PLUG_IN_REFINE_ATOMS = 20
CI_INFLATION = 1.01


def choose_J(n: int, d: int) -> int:
    """Largest J >= 0 with 2^{J(d-1)} <= n / ln n."""
    if n < 2:
        raise ValueError(f"sample size must be at least 2, got {n}")
    if d < 3:
        raise ValueError(f"dimension must be at least 3, got {d}")
    target = n / math.log(n)
    J = 0
    while 2.0 ** ((J + 1) * (d - 1)) <= target:
        J += 1
    return J


def choose_linear_J(n: int, d: int, t: float) -> int:
    """Bias-variance balancing level for the linear estimator when the
    smoothness t is known: 2^J of the order n^{1/(2t+d-1)}."""
    if n < 2:
        raise ValueError(f"sample size must be at least 2, got {n}")
    if t <= 0.0:
        raise ValueError(f"smoothness must be positive, got {t}")
    return max(1, int(math.floor(math.log2(n) / (2.0 * t + d - 1.0) + 0.5)))


def kappa(v: float, sup_f: float, sd: SphereDim) -> float:
    """max(14 v / (3 sqrt(omega)), sup_f sqrt(omega))."""
    if v <= 0.0:
        raise ValueError(f"tail exponent must be positive, got {v}")
    if sup_f <= 0.0:
        raise ValueError(f"sup norm must be positive, got {sup_f}")
    root = math.sqrt(sd.omega)
    return max(14.0 * v / (3.0 * root), sup_f * root)


@dataclass(frozen=True)
class EstimatorConfig:
    """Everything the thresholded estimator and its interval need."""

    sd: SphereDim
    n: int
    J: int
    alpha: float
    w: float
    kappa1: float
    kappa_w: float
    gamma_n: float
    sup_f: float
    sup_norm_source: str = "known"

    @property
    def threshold(self) -> float:
        return 2.0 * self.kappa1 * math.sqrt(math.log(self.n) / self.n)

    @property
    def coefficient_scale(self) -> float:
        """kappa_w gamma_n sqrt(ln n / n), the per-survivor width factor."""
        return self.kappa_w * self.gamma_n * math.sqrt(math.log(self.n) / self.n)


def make_config(sd: SphereDim, n: int, sup_f: float, *, alpha: float = 0.05,
                J: int | None = None, gamma_n: float | None = None,
                sup_norm_source: str = "known") -> EstimatorConfig:
    """Assemble a config with the default rules.

    J defaults to choose_J; w solves n^{-w} = alpha / n; gamma_n defaults
    to ln n.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    d = sd.d
    if J is None:
        J = choose_J(n, d)
    w = 1.0 + math.log(1.0 / alpha) / math.log(n)
    return EstimatorConfig(sd=sd, n=int(n), J=int(J), alpha=float(alpha), w=w,
                           kappa1=kappa(1.0, sup_f, sd),
                           kappa_w=kappa(w, sup_f, sd),
                           gamma_n=float(gamma_n) if gamma_n is not None else math.log(n),
                           sup_f=float(sup_f), sup_norm_source=sup_norm_source)


def with_survivor_w(config: EstimatorConfig, n_survivors: int) -> EstimatorConfig:
    """Recalibrate w so n^{-w} = alpha / #survivors.

    The survivor set itself depends only on kappa_1, so this is a clean
    second pass: threshold first, then tighten the interval.
    """
    count = max(int(n_survivors), 1)
    w = (math.log(count) + math.log(1.0 / config.alpha)) / math.log(config.n)
    return replace(config, w=w, kappa_w=kappa(w, config.sup_f, config.sd))


def _require_levels(table: CoefficientTable, J: int) -> None:
    missing = [i for i in range(J) if i not in table.entries]
    if missing:
        raise ValueError(f"coefficient table is missing levels {missing} needed for J = {J}")


def linear_estimate(frame: NeedletFrame, table: CoefficientTable, J: int, x, *,
                    method: str = "exact"):
    """1/omega + sum_{i<J} sum_eta beta_hat psi(x), no thresholding."""
    _require_levels(table, J)
    return synthesize(frame, table, x, levels=range(J), method=method)


def apply_threshold(table: CoefficientTable, config: EstimatorConfig) -> CoefficientTable:
    """Keep levels i < J and entries with |beta_hat| >= the threshold.

    Idempotent: thresholding a thresholded table changes nothing.
    """
    _require_levels(table, config.J)
    thr = config.threshold
    entries = {}
    for level in range(config.J):
        idx, beta = table.entries[level]
        keep = np.abs(beta) >= thr
        entries[level] = (idx[keep], beta[keep])
    return CoefficientTable(d=table.d, kind=table.kind, constant_term=table.constant_term,
                            up_to_level=config.J, entries=entries,
                            meta=dict(table.meta, threshold=thr))


def survivors(table: CoefficientTable, config: EstimatorConfig) -> list:
    """Surviving (level, index, beta_hat) records, level-major order."""
    masked = apply_threshold(table, config)
    out = []
    for level in masked.levels():
        idx, beta = masked.entries[level]
        out.extend({"i": int(level), "idx": int(a), "beta_hat": float(b)}
                   for a, b in zip(idx, beta))
    return out


def threshold_estimate(frame: NeedletFrame, table: CoefficientTable,
                       config: EstimatorConfig, x, *, method: str = "exact"):
    masked = apply_threshold(table, config)
    return synthesize(frame, masked, x, method=method)


def sigma_hat(frame: NeedletFrame, table: CoefficientTable,
              config: EstimatorConfig, x, *, method: str = "exact") -> float:
    """Sum of |kappa_w gamma_n sqrt(ln n / n) psi_{i eta}(x)| over survivors."""
    masked = apply_threshold(table, config)
    x = np.asarray(x, dtype=np.float64)
    total = 0.0
    for level in masked.levels():
        idx, _ = masked.entries[level]
        if idx.size:
            vals = psi_values(frame, level, idx, x, method=method)
            total += float(np.abs(vals).sum())
    return config.coefficient_scale * total


def confidence_interval(frame: NeedletFrame, table: CoefficientTable,
                        config: EstimatorConfig, x, *, method: str = "exact"):
    center = threshold_estimate(frame, table, config, x, method=method)
    half = CI_INFLATION * sigma_hat(frame, table, config, x, method=method)
    return center - half, center + half


def plug_in_sup(frame: NeedletFrame, table: CoefficientTable, J: int) -> float:
    """sup of the linear estimate over the sphere, floored at 1/omega.

    A global pass over the level-(J+1) cubature grid (mesh well under
    2^{-J}) brackets every oscillation of the 2^J-band-limited estimate;
    local tangent-plane grids around the largest-coefficient atoms then
    refine the candidate peaks.
    """
    _require_levels(table, J)
    d = frame.sd.d
    grid = build_rule(d, min(J + 1, 7)).points
    best = float(np.max(linear_estimate(frame, table, J, grid, method="interp")))

    ranked = []
    for level in range(J):
        idx, beta = table.entries[level]
        order = np.argsort(-np.abs(beta))[:PLUG_IN_REFINE_ATOMS]
        scale = 2.0 ** (level * (d - 1) / 2.0)
        ranked.extend((abs(beta[o]) * scale, level, int(idx[o])) for o in order)
    ranked.sort(reverse=True)

    for _, level, index in ranked[:PLUG_IN_REFINE_ATOMS]:
        center = frame.centers(level)[index]
        local = _cap_grid(center, 2.0 ** (-level), 2.0 ** (-J - 2))
        best = max(best, float(np.max(linear_estimate(frame, table, J, local, method="interp"))))
    return max(best, 1.0 / frame.sd.omega)


def _cap_grid(center: np.ndarray, radius: float, mesh: float) -> np.ndarray:
    """Points covering the cap around center at the given mesh (d = 3)."""
    center = unit_vector(center)
    seed = np.zeros_like(center)
    seed[int(np.argmin(np.abs(center)))] = 1.0
    e1 = np.cross(center, seed)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(center, e1)
    radii = np.arange(0.0, radius + mesh, mesh)
    pts = [center]
    for r in radii[1:]:
        m = max(8, int(np.ceil(2.0 * np.pi * r / mesh)))
        phi = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
        ring = (np.cos(r) * center[None, :]
                + np.sin(r) * (np.outer(np.cos(phi), e1) + np.outer(np.sin(phi), e2)))
        pts.append(ring)
    return np.vstack([np.atleast_2d(p) for p in pts])


def estimate_report(frame: NeedletFrame, table: CoefficientTable,
                    config: EstimatorConfig, x, *, survivor_w: bool = False,
                    method: str = "exact") -> dict:
    """Full estimate record at one point, ready for JSON output."""
    x = unit_vector(x)
    surv = survivors(table, config)
    if survivor_w:
        config = with_survivor_w(config, len(surv))
    est = threshold_estimate(frame, table, config, x, method=method)
    sig = sigma_hat(frame, table, config, x, method=method)
    return {
        "point": [float(v) for v in x],
        "estimate": float(est),
        "sigma_hat": float(sig),
        "ci": [float(est - CI_INFLATION * sig), float(est + CI_INFLATION * sig)],
        "J": config.J,
        "n": config.n,
        "alpha": config.alpha,
        "w": config.w,
        "kappa1": config.kappa1,
        "kappa_w": config.kappa_w,
        "gamma_n": config.gamma_n,
        "sup_f": config.sup_f,
        "sup_norm_source": config.sup_norm_source,
        "threshold": config.threshold,
        "survivors": surv,
    }
