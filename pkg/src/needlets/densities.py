"""Probability density models on the sphere used by the estimators and
experiments: uniform, von Mises-Fisher mixtures, cusp contrasts with a
prescribed local Hoelder exponent, and band-limited self-similar cascades
whose needlet coefficients sit exactly at a chosen decay profile.

Every model evaluates pointwise, reports its exact sup norm, and samples
either by a model-specific exact scheme (vMF inversion) or by rejection
from the uniform envelope.  Zonal models also expose their zonal projection
coefficients, from which needlet coefficients follow in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .cubature import gauss_legendre
from .frame import NeedletFrame
from .kernels import gegenbauer_eval, weighted_zonal_sum, zonal_eval
from .sphere import SphereDim, UnsupportedDimensionError, sample_uniform, unit_vector

# Rejection sampling gives up after this many proposal rounds.
MAX_REJECTION_ROUNDS = 100_000
# Default density floor, as a fraction of the uniform level, preserved by
# make_self_similar when it shrinks amplitudes for positivity.
SELF_SIMILAR_FLOOR = 0.05


@dataclass(frozen=True)
class HolderParams:
    """Local smoothness certificate: |f - P_f| <= M d(x, .)^t on B(x, delta)."""

    t: float
    M: float
    delta: float


class DensityModel:
    """Interface shared by the sphere density models."""

    kind = "abstract"

    def __init__(self, sd: SphereDim):
        self.sd = sd

    def eval(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sup_norm(self) -> float:
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError

    def zonal_components(self, kmax: int):
        """(pole, c[0..kmax]) pairs with c[k] the zonal projection scalar,
        or None when the model has no zonal decomposition."""
        return None


def eval_density(model: DensityModel, x):
    """Density value at one point or an (n, d) batch."""
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    vals = model.eval(pts)
    return float(vals[0]) if np.asarray(x).ndim == 1 else vals


def sup_norm(model: DensityModel) -> float:
    return model.sup_norm()


def sample_density(model: DensityModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n points distributed exactly according to the model."""
    points, _ = _sample_with_count(model, n, rng)
    return points


def _sample_with_count(model: DensityModel, n: int, rng: np.random.Generator):
    """Sample n points; also return the number of uniform proposals used.

    Models with an exact sampler (vMF inversion) report a proposal count
    equal to n.  Everything else is rejection from the uniform envelope:
    a proposal X is kept with probability f(X) / sup f, so the output law
    is exactly f and the expected acceptance rate is 1 / (omega * sup f).
    """
    if n < 0:
        raise ValueError(f"sample size must be non-negative, got {n}")
    exact = getattr(model, "sample_exact", None)
    if exact is not None:
        return exact(n, rng), n
    sup = model.sup_norm()
    keep_blocks = []
    got = 0
    proposals = 0
    for _ in range(MAX_REJECTION_ROUNDS):
        if got >= n:
            break
        batch = n - got
        pts = sample_uniform(model.sd, batch, rng)
        u = rng.random(batch)
        mask = u * sup <= model.eval(pts)
        kept = pts[mask]
        keep_blocks.append(kept)
        got += kept.shape[0]
        proposals += batch
    else:
        raise RuntimeError("rejection sampler failed to fill the request; sup norm looks wrong")
    out = np.concatenate(keep_blocks) if keep_blocks else np.empty((0, model.sd.d))
    return out[:n], proposals


# ---------------------------------------------------------------------------
# Uniform


class Uniform(DensityModel):
    """The uniform density 1 / omega_{d-1}."""

    kind = "uniform"

    def eval(self, points: np.ndarray) -> np.ndarray:
        return np.full(points.shape[0], 1.0 / self.sd.omega)

    def sup_norm(self) -> float:
        return 1.0 / self.sd.omega

    def to_spec(self) -> dict:
        return {"kind": self.kind, "dim": self.sd.d}

    def zonal_components(self, kmax: int):
        return []


# ---------------------------------------------------------------------------
# von Mises-Fisher mixtures


class VmfMixture(DensityModel):
    """Mixture of von Mises-Fisher components on S^2.

    Component density: c(kappa) exp(kappa mu . x) with
    c(kappa) = kappa / (4 pi sinh kappa), written in overflow-safe form.
    Sampling inverts the 1-D cos-angle marginal exactly and draws the
    tangent direction uniformly.
    """

    kind = "vmf"

    def __init__(self, sd: SphereDim, means, kappas, weights):
        super().__init__(sd)
        if sd.d != 3:
            raise UnsupportedDimensionError("VmfMixture supports d = 3 only")
        self.means = np.array([unit_vector(m) for m in means])
        self.kappas = np.asarray(kappas, dtype=np.float64)
        self.weights = np.asarray(weights, dtype=np.float64)
        if not (self.means.shape[0] == self.kappas.shape[0] == self.weights.shape[0]):
            raise ValueError("means, kappas, and weights must have equal lengths")
        if np.any(self.kappas <= 0.0):
            raise ValueError("vMF concentrations must be positive")
        if np.any(self.weights <= 0.0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be positive and sum to 1")

    def eval(self, points: np.ndarray) -> np.ndarray:
        out = np.zeros(points.shape[0])
        for mu, kappa, w in zip(self.means, self.kappas, self.weights):
            t = points @ mu
            # c(k) e^{k t} = k e^{k (t - 1)} / (2 pi (1 - e^{-2k}))
            out += w * kappa * np.exp(kappa * (t - 1.0)) / (2.0 * math.pi * (1.0 - math.exp(-2.0 * kappa)))
        return out

    def sup_norm(self) -> float:
        # The peak lies at one of the component means for the moderate
        # concentrations used here; a dense check catches interactions.
        vals = [float(self.eval(self.means[i:i + 1])[0]) for i in range(self.means.shape[0])]
        return max(vals)

    def sample_exact(self, n: int, rng: np.random.Generator) -> np.ndarray:
        labels = rng.choice(self.means.shape[0], size=n, p=self.weights)
        out = np.empty((n, 3))
        for c in range(self.means.shape[0]):
            mask = labels == c
            m = int(mask.sum())
            if m:
                out[mask] = _sample_vmf(self.means[c], float(self.kappas[c]), m, rng)
        return out

    def to_spec(self) -> dict:
        return {
            "kind": self.kind,
            "dim": self.sd.d,
            "components": [
                {"mean": [float(v) for v in mu], "kappa": float(k), "weight": float(w)}
                for mu, k, w in zip(self.means, self.kappas, self.weights)
            ],
        }

    def zonal_components(self, kmax: int):
        comps = []
        for mu, kappa, w in zip(self.means, self.kappas, self.weights):
            c0 = w * kappa / (2.0 * math.pi * (1.0 - math.exp(-2.0 * kappa)))
            profile = lambda theta, c0=c0, kappa=kappa: c0 * np.exp(kappa * (np.cos(theta) - 1.0))
            comps.append((mu, zonal_projection_coeffs(profile, self.sd.d, kmax)))
        return comps


def _sample_vmf(mean: np.ndarray, kappa: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Exact vMF draws on S^2: invert the cos-angle CDF, uniform tangent."""
    u = rng.random(n)
    w = 1.0 + np.log(u * (1.0 - math.exp(-2.0 * kappa)) + math.exp(-2.0 * kappa)) / kappa
    w = np.clip(w, -1.0, 1.0)
    g = rng.standard_normal((n, 3))
    g -= np.outer(g @ mean, mean)
    norms = np.linalg.norm(g, axis=1)
    while np.any(norms == 0.0):
        bad = norms == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), 3))
        g[bad] -= np.outer(g[bad] @ mean, mean)
        norms = np.linalg.norm(g, axis=1)
    tangent = g / norms[:, None]
    return w[:, None] * mean + np.sqrt(np.maximum(0.0, 1.0 - w * w))[:, None] * tangent


# ---------------------------------------------------------------------------
# Cusp contrast


class Cusp(DensityModel):
    """f(x) = base + amplitude * min(d(center, x), delta)^t.

    The base level makes f integrate to 1; it is computed from the zonal
    reduction of the integral, which for S^{d-1} is
    |S^{d-2}| * int_0^pi F(theta) sin^{d-2}(theta) dtheta.  At the centre
    the model lies in the local Hoelder class with exponent t, constant
    M = max(amplitude, base), and radius delta (the constant polynomial is
    the certificate for t <= 1).
    """

    kind = "cusp"

    def __init__(self, sd: SphereDim, center, t: float, amplitude: float, delta: float):
        super().__init__(sd)
        if t <= 0.0:
            raise ValueError(f"Hoelder exponent must be positive, got {t}")
        if amplitude <= 0.0:
            raise ValueError(f"amplitude must be positive, got {amplitude}")
        if not 0.0 < delta <= math.pi:
            raise ValueError(f"delta must lie in (0, pi], got {delta}")
        self.center = unit_vector(center)
        self.t = float(t)
        self.amplitude = float(amplitude)
        self.delta = float(delta)
        ring = surface_ring_constant(sd.d)
        # Split at the kink; the algebraic weight absorbs the theta^t factor
        # so the remaining integrand is analytic on each piece.
        smooth = lambda th: math.sin(th) ** (sd.d - 2)
        inner, err = quad(smooth, 0.0, delta, weight="alg", wvar=(t, 0.0), limit=200)
        bump_mass = inner
        if delta < math.pi:
            outer, err2 = quad(smooth, delta, math.pi, limit=200)
            bump_mass += delta ** t * outer
            err += delta ** t * err2
        if err > 1e-9 * max(1.0, bump_mass):
            raise RuntimeError(f"cusp normalization integral did not converge (err {err:.2e})")
        total = ring * bump_mass
        self.base = (1.0 - self.amplitude * total) / sd.omega
        if self.base <= 0.0:
            raise ValueError(
                f"amplitude {amplitude} is too large for a density; "
                f"the maximum feasible amplitude is {1.0 / total:.6g}")

    def eval(self, points: np.ndarray) -> np.ndarray:
        dist = np.arccos(np.clip(points @ self.center, -1.0, 1.0))
        return self.base + self.amplitude * np.minimum(dist, self.delta) ** self.t

    def sup_norm(self) -> float:
        return self.base + self.amplitude * self.delta ** self.t

    def holder(self) -> HolderParams:
        return HolderParams(t=self.t, M=max(self.amplitude, self.base), delta=self.delta)

    def to_spec(self) -> dict:
        return {"kind": self.kind, "dim": self.sd.d,
                "center": [float(v) for v in self.center],
                "t": self.t, "amplitude": self.amplitude, "delta": self.delta}

    def zonal_components(self, kmax: int):
        profile = lambda theta: self.base + self.amplitude * np.minimum(theta, self.delta) ** self.t
        c = zonal_projection_coeffs(profile, self.sd.d, kmax,
                                    special_points=(self.delta,), cusp_at_zero=True)
        return [(self.center, c)]


def surface_ring_constant(d: int) -> float:
    """|S^{d-2}|, the constant in the zonal integral reduction (2 pi on S^2)."""
    if d == 3:
        return 2.0 * math.pi
    return 2.0 * math.pi ** ((d - 1) / 2.0) / math.gamma((d - 1) / 2.0)


# ---------------------------------------------------------------------------
# Self-similar cascades


class SelfSimilar(DensityModel):
    """f = 1/omega + sum_j a_j Z^{2^j}(pole, .), a band-limited cascade.

    Component j is a multiple of the degree-2^j projector kernel about the
    pole, so its needlet coefficients live exactly at the levels where the
    band window is positive at 2^j / 2^i, and the projection coefficients
    are the amplitudes themselves.
    """

    kind = "self_similar"

    def __init__(self, sd: SphereDim, pole, levels, amplitudes, *,
                 t: float | None = None, B: float | None = None):
        super().__init__(sd)
        self.pole = unit_vector(pole)
        self.levels = [int(j) for j in levels]
        self.amplitudes = np.asarray(amplitudes, dtype=np.float64)
        if len(self.levels) != self.amplitudes.shape[0]:
            raise ValueError("levels and amplitudes must have equal lengths")
        if len(set(self.levels)) != len(self.levels) or any(j < 0 for j in self.levels):
            raise ValueError("levels must be distinct and non-negative")
        self.t = t
        self.B = B
        kmax = max(2**j for j in self.levels)
        w = np.zeros(kmax + 1)
        for j, a in zip(self.levels, self.amplitudes):
            w[2**j] = a
        self._proj = w
        grid = np.linspace(0.0, math.pi, 200_001)
        profile = self.zonal_profile(grid)
        self._min = float(profile.min())
        self._max = float(profile.max())
        if self._min <= 0.0:
            raise ValueError(f"amplitudes give a negative density (min {self._min:.6g})")

    def zonal_profile(self, theta: np.ndarray) -> np.ndarray:
        return 1.0 / self.sd.omega + weighted_zonal_sum(self._proj, self.sd.d, np.cos(theta))

    def eval(self, points: np.ndarray) -> np.ndarray:
        dots = np.clip(points @ self.pole, -1.0, 1.0)
        return 1.0 / self.sd.omega + weighted_zonal_sum(self._proj, self.sd.d, dots)

    def sup_norm(self) -> float:
        return self._max

    def min_density(self) -> float:
        return self._min

    def holder(self) -> HolderParams:
        t = self.t if self.t is not None else 1.0
        M = self.B if self.B is not None else float(np.max(np.abs(self.amplitudes)))
        return HolderParams(t=t, M=M, delta=math.pi)

    def to_spec(self) -> dict:
        spec = {"kind": self.kind, "dim": self.sd.d,
                "pole": [float(v) for v in self.pole],
                "levels": self.levels,
                "amplitudes": [float(a) for a in self.amplitudes]}
        if self.t is not None:
            spec["t"] = float(self.t)
        if self.B is not None:
            spec["B"] = float(self.B)
        return spec

    def zonal_components(self, kmax: int):
        return [(self.pole, self._proj[:kmax + 1].copy())]


def make_self_similar(frame: NeedletFrame, pole, t: float, B: float, levels, *,
                      floor_frac: float = SELF_SIMILAR_FLOOR, strict: bool = False):
    """Size cascade amplitudes so nearest-atom coefficients hit the target.

    For each requested needlet level j the amplitude a_j is chosen so the
    coefficient at the atom nearest the pole equals B * 2^{-j(2t+d-1)/2}.
    If the resulting density dips below ``floor_frac`` of the uniform level
    the amplitudes are scaled down together and the achieved B reported
    (or, with ``strict``, a ValueError carries the maximal feasible B).

    Returns the model and a report dict.
    """
    pole = unit_vector(pole)
    d = frame.sd.d
    levels = sorted(int(j) for j in levels)
    if levels and levels[-1] > frame.j_max:
        raise ValueError(f"level {levels[-1]} exceeds the frame's j_max = {frame.j_max}")
    amplitudes = []
    anchors = []
    for j in levels:
        rule = frame.rule(j)
        dots = np.clip(rule.points @ pole, -1.0, 1.0)
        idx = int(np.argmax(dots))
        # Coefficient of a_j Z^{2^j}(pole, .) at atom (j, idx):
        # a_j * sqrt(lambda) * sqrt(b(1)) * Z^{2^j}(center . pole), b(1) = 1.
        gain = math.sqrt(rule.weights[idx]) * zonal_eval(d, 2**j, float(dots[idx]))
        target = B * 2.0 ** (-j * (2.0 * t + d - 1.0) / 2.0)
        amplitudes.append(target / gain)
        anchors.append({"level": j, "index": idx, "target": target, "gain": gain})

    scale = 1.0
    if levels:
        kmax = max(2**j for j in levels)
        w = np.zeros(kmax + 1)
        for j, a in zip(levels, amplitudes):
            w[2**j] = a
        grid = np.linspace(0.0, math.pi, 200_001)
        deviation = weighted_zonal_sum(w, d, np.cos(grid))
        dev_min = float(deviation.min())
        uniform = 1.0 / frame.sd.omega
        budget = (1.0 - floor_frac) * uniform
        if dev_min < -budget:
            scale = budget / (-dev_min)
    if scale < 1.0 and strict:
        raise ValueError(
            f"requested B = {B} violates positivity; maximal feasible B = {B * scale:.6g}")
    amplitudes = [a * scale for a in amplitudes]
    for a, anchor in zip(amplitudes, anchors):
        anchor["amplitude"] = a
        anchor["target"] *= scale

    model = SelfSimilar(frame.sd, pole, levels, amplitudes, t=t, B=B * scale)
    report = {
        "requested_B": float(B),
        "achieved_B": float(B * scale),
        "scale": float(scale),
        "min_density": model.min_density(),
        "anchors": anchors,
    }
    return model, report


# ---------------------------------------------------------------------------
# Zonal projection coefficients


def zonal_projection_coeffs(profile, d: int, kmax: int, *,
                            special_points=(), cusp_at_zero: bool = False) -> np.ndarray:
    """Projection scalars c[k] of a zonal function F(theta) about its pole.

    The degree-k projection of x -> F(theta(x, pole)) is c[k] Z^k(., pole)
    with

        c_k = |S^{d-2}| int_0^pi F(theta) C_k(cos theta) sin^{d-2}(theta)
              dtheta / C_k(1),

    the Gegenbauer normalization cancelling between numerator and kernel.
    Integration uses composite 16-point Gauss panels sized to resolve the
    degree-kmax oscillation, with panel edges at ``special_points`` (kinks)
    and geometric refinement toward 0 for cusped profiles.
    """
    edges = _panel_edges(kmax, special_points, cusp_at_zero)
    gx, gw = gauss_legendre(16)
    theta = np.concatenate([(e1 + e0) / 2.0 + (e1 - e0) / 2.0 * gx
                            for e0, e1 in zip(edges[:-1], edges[1:])])
    w = np.concatenate([(e1 - e0) / 2.0 * gw for e0, e1 in zip(edges[:-1], edges[1:])])
    w = w * surface_ring_constant(d) * np.sin(theta) ** (d - 2) * np.asarray(profile(theta))

    lam = (d - 2.0) / 2.0
    s = np.cos(theta)
    c = np.empty(kmax + 1)
    prev = np.ones_like(s)
    c[0] = w.sum()
    norm_prev = 1.0
    if kmax >= 1:
        cur = 2.0 * lam * s
        norm_cur = 2.0 * lam
        c[1] = (w @ cur) / norm_cur
        for k in range(2, kmax + 1):
            prev, cur = cur, (2.0 * (k + lam - 1.0) * s * cur - (k + 2.0 * lam - 2.0) * prev) / k
            norm_prev, norm_cur = norm_cur, (2.0 * (k + lam - 1.0) * norm_cur
                                             - (k + 2.0 * lam - 2.0) * norm_prev) / k
            c[k] = (w @ cur) / norm_cur
    return c


def _panel_edges(kmax: int, special_points, cusp_at_zero: bool) -> np.ndarray:
    """Panel edges on [0, pi]: fine enough for degree kmax, graded at 0."""
    width = min(math.pi / 8.0, 6.0 / max(kmax, 1))
    edges = set(np.arange(0.0, math.pi, width))
    edges.add(math.pi)
    for p in special_points:
        if 0.0 < p < math.pi:
            edges.add(float(p))
    if cusp_at_zero:
        start = min(width, *[p for p in special_points if p > 0.0] or [width])
        edges.update(start * 0.5 ** m for m in range(1, 40))
    return np.array(sorted(edges))


def model_from_spec(spec: dict, frame: NeedletFrame | None = None) -> DensityModel:
    """Materialize a model from its JSON dict.

    Self-similar specs given as (t, B, levels) need ``frame`` to resolve
    nearest-atom gains; specs carrying explicit amplitudes do not.
    """
    if "kind" not in spec:
        raise ValueError("model spec is missing the 'kind' key")
    kind = spec["kind"]
    sd = SphereDim(int(spec.get("dim", 3)))
    if kind == "uniform":
        return Uniform(sd)
    if kind == "vmf":
        comps = spec["components"]
        return VmfMixture(sd, [c["mean"] for c in comps], [c["kappa"] for c in comps],
                          [c["weight"] for c in comps])
    if kind == "cusp":
        return Cusp(sd, spec["center"], float(spec["t"]),
                    float(spec["amplitude"]), float(spec["delta"]))
    if kind == "self_similar":
        if "amplitudes" in spec:
            return SelfSimilar(sd, spec["pole"], spec["levels"], spec["amplitudes"],
                               t=spec.get("t"), B=spec.get("B"))
        if frame is None:
            raise ValueError("self-similar spec without amplitudes needs a frame to materialize")
        model, _ = make_self_similar(frame, spec["pole"], float(spec["t"]),
                                     float(spec["B"]), spec["levels"])
        return model
    raise ValueError(f"unknown model kind {spec['kind']!r}")
