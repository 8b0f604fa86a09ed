"""End-to-end acceptance suite.

Eight criteria, one test each, every one emitting a single PASS/FAIL line
(replayed in the terminal summary).  Replicated experiments use frozen
seeds; slope bands and tolerances are part of the criterion statements.
"""

import hashlib
import json
import math
import time

import numpy as np
import pytest

import conftest
from oracles import legendre_zonal, naive_weighted_sum

from needlets.checks import C7_FROZEN
from needlets.cli import main as cli_main
from needlets.densities import Cusp, Uniform, make_self_similar
from needlets.experiments import ExperimentPlan, run_bernstein, run_coverage, run_decay, run_rates
from needlets.frame import analyze_zonal, build_frame, frame_norms, lowpass_zonal_value
from needlets.kernels import dim_harmonic
from needlets.sphere import SphereDim, rng_stream, sample_uniform

SD = SphereDim(3)
OMEGA = SD.omega
X0 = np.array([1.0, 0.0, 0.0])
POINT = (1.0, 0.0, 0.0)


def _report(num, name, ok, detail):
    line = f"CRITERION {num} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_1_tight_frame_identities(frame6):
    t0 = time.time()
    rng = rng_stream(1001, 0)
    worst_parseval = 0.0
    for _ in range(6):
        kmax = int(rng.integers(8, 2**frame6.j_max + 1))
        pole = sample_uniform(SD, 1, rng)[0]
        c = np.zeros(kmax + 1)
        c[1:] = rng.standard_normal(kmax) * 0.2
        constant = float(rng.uniform(0.1, 1.0))
        norm_sq = constant**2 * OMEGA
        norm_sq += sum(c[k] ** 2 * dim_harmonic(3, k) / OMEGA for k in range(1, kmax + 1))
        tab = analyze_zonal(frame6, [(pole, c)], constant, frame6.j_max + 1)
        frame_sq = tab.constant_term**2 * OMEGA
        frame_sq += sum(float(beta @ beta) for _, beta in tab.entries.values())
        worst_parseval = max(worst_parseval, abs(frame_sq - norm_sq) / norm_sq)

    worst_repro = 0.0
    for j in (4, 5, 6):
        deg = 2 ** (j - 1)
        pole = sample_uniform(SD, 1, rng)[0]
        c = np.zeros(deg + 1)
        c[1:] = rng.standard_normal(deg) * 0.2
        comps = [(pole, c)]
        for x in sample_uniform(SD, 20, rng):
            direct = 0.5 + float(naive_weighted_sum(c, float(x @ pole)))
            low = lowpass_zonal_value(frame6, comps, 0.5, j, x)
            worst_repro = max(worst_repro, abs(low - direct))
    wall = time.time() - t0
    ok = worst_parseval <= 1e-8 and worst_repro <= 1e-9 and wall < 60.0
    _report(1, "tight-frame identities", ok,
            f"parseval rel {worst_parseval:.2e} <= 1e-8, "
            f"reproduction {worst_repro:.2e} <= 1e-9, {wall:.1f} s < 60 s")


def test_criterion_2_cubature(frame6):
    rng = rng_stream(1002, 0)
    worst_moment = 0.0
    worst_mass = 0.0
    for j in range(frame6.j_max + 1):
        rule = frame6.rule(j)
        worst_mass = max(worst_mass, abs(float(rule.weights.sum()) - OMEGA))
        degrees = sorted({1, 2, 3, 2 ** (j + 1), 2 ** (j + 2) - 1, 2 ** (j + 2)})
        for k in degrees:
            pole = sample_uniform(SD, 1, rng)[0]
            moment = abs(float(rule.weights @ legendre_zonal(k, rule.points @ pole)))
            worst_moment = max(worst_moment, moment)
    ok = worst_moment <= 1e-9 and worst_mass <= 1e-10
    _report(2, "cubature exactness", ok,
            f"max harmonic moment {worst_moment:.2e} <= 1e-9, "
            f"mass error {worst_mass:.2e} <= 1e-10, levels 0..{frame6.j_max}")


def test_criterion_3_atom_norms(frame6):
    sup_limit_ok = True
    l2_ok = True
    center_ok = True
    details = []
    for i in range(2, 7):
        norms = frame_norms(frame6, i)
        l2_max = float(norms.l2.max())
        sup_max = float(norms.sup.max())
        center_min = float(norms.center_value.min())
        l2_ok &= l2_max <= 1.0 + 1e-8
        sup_limit_ok &= sup_max <= 2.0 / math.sqrt(OMEGA) * 2.0**i
        center_ok &= center_min >= C7_FROZEN * 2.0**i
        details.append(f"i={i}: l2 {l2_max:.6f}, sup {sup_max / 2.0**i:.4f} 2^i, "
                       f"center {center_min / 2.0**i:.4f} 2^i")
    ok = l2_ok and sup_limit_ok and center_ok
    _report(3, "atom norm bounds", ok,
            f"levels 2..6: l2 <= 1+1e-8, sup <= 2 omega^-1/2 2^i, "
            f"center >= {C7_FROZEN} 2^i; " + "; ".join(details[:2]) + " ...")


def test_criterion_4_coefficient_decay(frame7):
    t0 = time.time()
    results = []
    ok = True
    for t in (0.5, 1.0):
        model = Cusp(SD, X0, t, 0.05, math.pi)
        rec = run_decay(model, frame7, X0, range(2, 8))
        s = rec["summary"]
        targets = {"near_beta_slope": -(t + 1.0), "term_sum_slope": -t, "approx_err_slope": -t}
        for key, target in targets.items():
            got = s[key]
            ok &= got is not None and abs(got - target) <= 0.3
        results.append(f"t={t}: near {s['near_beta_slope']:.3f}/{-(t + 1.0):.2f}, "
                       f"term {s['term_sum_slope']:.3f}/{-t:.2f}, "
                       f"approx {s['approx_err_slope']:.3f}/{-t:.2f}")
    wall = time.time() - t0
    ok &= wall < 300.0
    _report(4, "coefficient decay", ok,
            f"levels 2..7 slopes within 0.3 of targets; {'; '.join(results)}; "
            f"{wall:.1f} s < 300 s")


def test_criterion_5_coefficient_deviation(frame6):
    t0 = time.time()
    plan = ExperimentPlan(model=Uniform(SD).to_spec(), query_point=POINT,
                          n_grid=(4096,), replications=2000, seed=77, level=2)
    rec = run_bernstein(frame6, plan)
    wall = time.time() - t0
    s = rec["summary"]
    exceed_limit = s["bound"] + 3.0 * s["slack"]
    ok = (s["mad_max"] <= s["mad_bound"]
          and s["exceedance_rate"] <= exceed_limit
          and wall < 120.0)
    _report(5, "coefficient deviation", ok,
            f"level {s['level']}, n {s['n']}, {s['replications']} reps: "
            f"max mean abs dev {s['mad_max']:.2e} <= {s['mad_bound']:.2e}, "
            f"exceedance {s['exceedance_rate']:.2e} <= {exceed_limit:.2e}, "
            f"{wall:.1f} s < 120 s")


def test_criterion_6_risk_decay(frame6):
    spec = Cusp(SD, X0, 1.0, 0.05, math.pi).to_spec()
    grid = tuple(2**k for k in range(9, 17))
    t0 = time.time()
    plan = ExperimentPlan(model=spec, query_point=POINT, n_grid=grid,
                          replications=200, seed=101, estimator="linear")
    rec = run_rates(frame6, plan)
    wall = time.time() - t0
    slope = rec["summary"]["slope"]
    ok = abs(slope - (-0.25)) <= 0.15 and wall < 600.0

    # supplementary report: the thresholded estimator on the same model
    # stays on its no-survivor plateau until n is large, so its measured
    # slope is reported, not asserted
    plan_ht = ExperimentPlan(model=spec, query_point=POINT, n_grid=grid,
                             replications=40, seed=102, estimator="threshold")
    ht_slope = run_rates(frame6, plan_ht)["summary"]["slope"]
    _report(6, "risk decay rate", ok,
            f"linear slope {slope:.3f} within 0.15 of -0.25 over n 512..65536, "
            f"200 reps, {wall:.1f} s < 600 s; thresholded slope {ht_slope:.3f} reported")


def test_criterion_7_interval_coverage(frame6):
    model, _ = make_self_similar(frame6, X0, t=3.0, B=1.52, levels=[1])
    t0 = time.time()
    plan = ExperimentPlan(model=model.to_spec(), query_point=POINT,
                          n_grid=(10000, 14000, 20000), replications=300,
                          seed=20260823, alpha=0.05)
    rec = run_coverage(frame6, plan)
    wall = time.time() - t0
    s = rec["summary"]
    w_slope = s["width_slope"]
    g_slope = s["width_over_gamma_slope"]
    target = s["width_theory_exponent"]
    ok = (s["coverage"] >= 0.93
          and w_slope is not None and w_slope <= -0.05
          and g_slope is not None and abs(g_slope - target) <= 0.2
          and wall < 600.0)
    _report(7, "interval coverage", ok,
            f"coverage {s['coverage']:.3f} >= 0.93 at n 10000, width slope "
            f"{w_slope:.3f} <= -0.05, width/gamma slope {g_slope:.3f} within "
            f"0.2 of {target:.3f}, 300 reps, {wall:.1f} s < 600 s")


def _artifact_hashes(stem):
    out = []
    for suffix in (".csv", ".json", ".png"):
        with open(f"{stem}{suffix}", "rb") as fh:
            out.append(hashlib.sha256(fh.read()).hexdigest())
    return out


def test_criterion_8_simulation_determinism(tmp_path):
    model_dir = tmp_path / "models"
    model_dir.mkdir()
    cusp = model_dir / "cusp.json"
    cusp.write_text(json.dumps(Cusp(SD, X0, 1.0, 0.05, math.pi).to_spec()))
    uniform = model_dir / "uniform.json"
    uniform.write_text(json.dumps(Uniform(SD).to_spec()))
    selfsim = model_dir / "selfsim.json"
    selfsim.write_text(json.dumps(
        make_self_similar(build_frame(3, 2), X0, t=3.0, B=1.52, levels=[1])[0].to_spec()))

    commands = {
        "rates": ["simulate", "rates", "--model", str(cusp), "--point", "1,0,0",
                  "--n", "512,1024", "--reps", "30", "--seed", "3",
                  "--estimator", "linear"],
        "coverage": ["simulate", "coverage", "--model", str(selfsim), "--point", "1,0,0",
                     "--n", "10000", "--reps", "200", "--seed", "9"],
        "decay": ["simulate", "decay", "--model", str(cusp), "--point", "1,0,0",
                  "--levels", "2..5"],
        "bernstein": ["simulate", "bernstein", "--model", str(uniform), "--point", "1,0,0",
                      "--n", "4096", "--reps", "30", "--level", "2", "--seed", "5"],
    }
    identical = {}
    for kind, args in commands.items():
        hashes = []
        for run in ("a", "b"):
            out_dir = tmp_path / f"{kind}_{run}"
            out_dir.mkdir()
            stem = out_dir / "out"
            code = cli_main(args + ["--out", str(stem)])
            assert code == 0, f"{kind} run {run} exited {code}"
            hashes.append(_artifact_hashes(stem))
        identical[kind] = hashes[0] == hashes[1]
    ok = all(identical.values())
    detail = ", ".join(f"{kind} {'ok' if good else 'DIFFERS'}"
                       for kind, good in identical.items())
    _report(8, "simulation determinism", ok,
            f"csv+json+png byte-identical on rerun: {detail}")
