import math

import numpy as np
import pytest

from oracles import quad_sphere_integral, quad_zonal_coeff
from needlets.densities import (
    Cusp,
    SelfSimilar,
    Uniform,
    VmfMixture,
    eval_density,
    make_self_similar,
    model_from_spec,
    sample_density,
    sup_norm,
    zonal_projection_coeffs,
)
from needlets.frame import synthesize
from needlets.sphere import SphereDim, rng_stream, sample_uniform

SD = SphereDim(3)
X0 = np.array([1.0, 0.0, 0.0])


def _mass_by_quad(model, special=()):
    # all test models are zonal about some pole; integrate the profile
    pole = getattr(model, "center", getattr(model, "pole", X0))

    def f_of_cos(c):
        x = pole * c + np.sqrt(max(0.0, 1.0 - c * c)) * _perp(pole)
        return float(eval_density(model, x[None, :])[0])

    return quad_sphere_integral(f_of_cos, special_points=special)


def _perp(v):
    a = np.array([1.0, 0.0, 0.0]) if abs(v[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    a = a - (a @ v) * v
    return a / np.linalg.norm(a)


def test_uniform_is_constant_unit_mass():
    model = Uniform(SD)
    pts = sample_uniform(SD, 10, rng_stream(2, 0))
    vals = eval_density(model, pts)
    assert np.allclose(vals, 1.0 / SD.omega, rtol=1e-15)
    assert sup_norm(model) == pytest.approx(1.0 / SD.omega, rel=1e-15)


def test_cusp_normalizes_to_unit_mass():
    for t, delta in ((0.5, math.pi), (1.0, math.pi), (0.7, 1.2), (2.0, 0.8)):
        model = Cusp(SD, X0, t, 0.05, delta)
        mass = _mass_by_quad(model, special=(delta,))
        assert mass == pytest.approx(1.0, abs=3e-8)


def test_cusp_shape_and_holder():
    model = Cusp(SD, X0, 0.5, 0.05, math.pi)
    assert float(eval_density(model, X0[None, :])[0]) == pytest.approx(model.base, rel=1e-12)
    assert float(eval_density(model, -X0[None, :])[0]) == pytest.approx(
        model.base + 0.05 * math.pi**0.5, rel=1e-12)
    h = model.holder()
    assert h.t == 0.5 and h.delta == math.pi
    assert sup_norm(model) == pytest.approx(model.base + 0.05 * math.pi**0.5, rel=1e-12)


def test_cusp_rejects_infeasible_amplitude():
    with pytest.raises(ValueError):
        Cusp(SD, X0, 0.5, 10.0, math.pi)
    with pytest.raises(ValueError):
        Cusp(SD, X0, -0.5, 0.05, math.pi)


def test_cusp_zonal_components_match_quad_oracle():
    model = Cusp(SD, X0, 0.5, 0.05, 1.2)
    (pole, c), = model.zonal_components(16)
    assert np.array_equal(pole, model.center)

    def f_of_cos(cth):
        th = math.acos(max(-1.0, min(1.0, cth)))
        return model.base + 0.05 * min(th, 1.2) ** 0.5

    for k in (0, 1, 2, 5, 11):
        want = quad_zonal_coeff(f_of_cos, k, special_points=(1.2,))
        assert c[k] == pytest.approx(want, abs=5e-8)


def test_zonal_projection_reconstructs_smooth_profile():
    # a band-limited profile is reproduced exactly by its projections
    coeffs = np.zeros(7)
    coeffs[0], coeffs[3], coeffs[6] = 0.1, 0.02, -0.01
    from needlets.kernels import weighted_zonal_sum

    profile = lambda th: weighted_zonal_sum(coeffs, 3, np.cos(th))
    got = zonal_projection_coeffs(profile, 3, 10)
    assert np.max(np.abs(got[:7] - coeffs)) < 1e-12
    assert np.max(np.abs(got[7:])) < 1e-12


def test_vmf_mixture_mass_positivity_and_coeffs():
    model = VmfMixture(SD, [X0], [4.0], [1.0])
    mass = _mass_by_quad(model)
    assert mass == pytest.approx(1.0, abs=1e-10)
    pts = sample_uniform(SD, 200, rng_stream(3, 0))
    assert np.all(eval_density(model, pts) > 0.0)

    (pole, c), = model.zonal_components(12)

    def f_of_cos(cth):
        x = X0 * cth + math.sqrt(max(0.0, 1.0 - cth * cth)) * _perp(X0)
        return float(eval_density(model, x[None, :])[0])

    for k in (0, 1, 4, 9):
        assert c[k] == pytest.approx(quad_zonal_coeff(f_of_cos, k), abs=1e-10)


def test_self_similar_construction(frame6):
    model, report = make_self_similar(frame6, X0, t=3.0, B=1.52, levels=[1])
    assert isinstance(model, SelfSimilar)
    assert model.holder().t == 3.0
    assert model.min_density() > 0.0
    mass = _mass_by_quad(model)
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert report["min_density"] == pytest.approx(model.min_density())


def test_self_similar_matches_frame_synthesis(frame6):
    model, _ = make_self_similar(frame6, X0, t=3.0, B=1.52, levels=[1])
    pts = sample_uniform(SD, 20, rng_stream(5, 0))
    direct = eval_density(model, pts)
    comps = model.zonal_components(8)
    from needlets.frame import analyze_zonal

    tab = analyze_zonal(frame6, comps, 1.0 / SD.omega, 3)
    rebuilt = synthesize(frame6, tab, pts)
    assert np.max(np.abs(direct - rebuilt)) < 1e-10


def test_model_spec_round_trip(frame6):
    models = [
        Uniform(SD),
        Cusp(SD, X0, 1.0, 0.05, math.pi),
        VmfMixture(SD, [X0, -X0], [3.0, 6.0], [0.4, 0.6]),
        make_self_similar(frame6, X0, t=3.0, B=1.52, levels=[1])[0],
    ]
    pts = sample_uniform(SD, 30, rng_stream(6, 0))
    for model in models:
        back = model_from_spec(model.to_spec(), frame6)
        assert np.max(np.abs(eval_density(model, pts) - eval_density(back, pts))) < 1e-12


def test_model_from_spec_rejects_unknown_kind():
    with pytest.raises(Exception):
        model_from_spec({"kind": "nope", "dim": 3})


def test_sample_density_deterministic_and_unbiased():
    model = Cusp(SD, X0, 1.0, 0.05, math.pi)
    n = 20000
    a = sample_density(model, n, rng_stream(9, 0))
    b = sample_density(model, n, rng_stream(9, 0))
    assert np.array_equal(a, b)
    assert np.allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-12)
    # E[x . center] under the model, by quadrature
    want = quad_sphere_integral(
        lambda c: c * float(eval_density(model, (X0 * c + math.sqrt(max(0.0, 1 - c * c))
                                                 * _perp(X0))[None, :])[0]))
    got = float((a @ X0).mean())
    sigma = math.sqrt(1.0 / n)
    assert abs(got - want) < 4.0 * sigma


def test_sample_density_uniform_shortcut():
    model = Uniform(SD)
    pts = sample_density(model, 100, rng_stream(10, 0))
    ref = sample_uniform(SD, 100, rng_stream(10, 0))
    assert np.array_equal(pts, ref)
