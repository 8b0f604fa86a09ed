import json
import math

import numpy as np
import pytest

from needlets.densities import Cusp, Uniform, VmfMixture, make_self_similar
from needlets.experiments import (
    ExperimentPlan,
    fit_slope,
    load_table,
    persist,
    run_bernstein,
    run_coverage,
    run_decay,
    run_rates,
)
from needlets.sphere import SphereDim, rng_stream
from needlets.textio import dumps_17g

SD = SphereDim(3)
X0 = np.array([1.0, 0.0, 0.0])
POINT = (1.0, 0.0, 0.0)


def _cusp_spec(t=1.0):
    return Cusp(SD, X0, t, 0.05, math.pi).to_spec()


def test_fit_slope_exact_line():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    y = 0.7 - 1.3 * x
    fit = fit_slope(x, y)
    assert fit.slope == pytest.approx(-1.3, abs=1e-12)
    assert fit.intercept == pytest.approx(0.7, abs=1e-12)
    assert fit.stderr == pytest.approx(0.0, abs=1e-10)


def test_fit_slope_matches_polyfit():
    rng = rng_stream(101, 0)
    x = np.linspace(0.0, 5.0, 12)
    y = 2.0 - 0.4 * x + rng.standard_normal(12) * 0.1
    fit = fit_slope(x, y)
    ref = np.polyfit(x, y, 1)
    assert fit.slope == pytest.approx(ref[0], rel=1e-12)
    assert fit.intercept == pytest.approx(ref[1], rel=1e-12)
    assert fit.stderr > 0.0


def test_plan_validation():
    good = dict(model=_cusp_spec(), query_point=POINT, n_grid=(512, 1024),
                replications=30, seed=0)
    ExperimentPlan(**good)
    with pytest.raises(ValueError):
        ExperimentPlan(**{**good, "n_grid": (1024, 512)})
    with pytest.raises(ValueError):
        ExperimentPlan(**{**good, "n_grid": (512, 512)})
    with pytest.raises(ValueError):
        ExperimentPlan(**{**good, "estimator": "magic"})
    with pytest.raises(ValueError):
        ExperimentPlan(**{**good, "alpha": 0.0})
    with pytest.raises(ValueError):
        ExperimentPlan(**{**good, "alpha": 1.0})
    with pytest.raises(ValueError):
        ExperimentPlan(**{**good, "replications": 0})


def test_replication_floors(frame6):
    plan = ExperimentPlan(model=_cusp_spec(), query_point=POINT,
                          n_grid=(512, 1024), replications=10, seed=0)
    with pytest.raises(ValueError):
        run_rates(frame6, plan)
    with pytest.raises(ValueError):
        run_coverage(frame6, plan)


def test_run_rates_deterministic_and_structured(frame6):
    plan = ExperimentPlan(model=_cusp_spec(), query_point=POINT,
                          n_grid=(512, 1024, 2048), replications=10, seed=21,
                          estimator="linear", allow_small=True)
    rec1 = run_rates(frame6, plan)
    rec2 = run_rates(frame6, plan)
    assert dumps_17g(rec1) == dumps_17g(rec2)
    assert rec1["kind"] == "rates"
    assert [row["n"] for row in rec1["table"]] == [512, 1024, 2048]
    assert all(row["risk"] > 0.0 for row in rec1["table"])
    s = rec1["summary"]
    assert s["estimator"] == "linear"
    assert s["theory_exponent"] == pytest.approx(-0.25)
    assert math.isfinite(s["slope"])


def test_run_rates_worker_count_invariance(frame6):
    base = dict(model=_cusp_spec(), query_point=POINT, n_grid=(512, 1024),
                replications=60, seed=22, estimator="linear")
    rec1 = run_rates(frame6, ExperimentPlan(**base, workers=1))
    rec4 = run_rates(frame6, ExperimentPlan(**base, workers=4))
    r1 = {**rec1, "plan": None}
    r4 = {**rec4, "plan": None}
    assert dumps_17g(r1) == dumps_17g(r4)


def test_run_rates_more_reps_shrink_se(frame6):
    base = dict(model=_cusp_spec(), query_point=POINT, n_grid=(512, 1024),
                seed=23, estimator="linear", allow_small=True)
    se_small = run_rates(frame6, ExperimentPlan(**base, replications=20))["table"][0]["se"]
    se_large = run_rates(frame6, ExperimentPlan(**base, replications=80))["table"][0]["se"]
    assert se_large < se_small


def test_run_rates_requires_holder_t_for_linear(frame6):
    plan = ExperimentPlan(model=Uniform(SD).to_spec(), query_point=POINT,
                          n_grid=(512, 1024), replications=30, seed=0,
                          estimator="linear", allow_small=True)
    with pytest.raises(ValueError):
        run_rates(frame6, plan)
    # an explicit override supplies the smoothness
    plan = ExperimentPlan(model=Uniform(SD).to_spec(), query_point=POINT,
                          n_grid=(512, 1024), replications=30, seed=0,
                          estimator="linear", holder_t=1.0, allow_small=True)
    rec = run_rates(frame6, plan)
    assert rec["summary"]["holder_t"] == 1.0


def test_run_decay_uniform_is_exactly_flat(frame6):
    rec = run_decay(Uniform(SD), frame6, X0, range(2, 6))
    for row in rec["table"]:
        assert row["near_beta_max"] == 0.0
        assert row["term_sum"] == 0.0
        assert row["approx_err"] < 1e-15
    assert rec["summary"]["near_beta_slope"] is None


def test_run_decay_smooth_model_steeper_than_cusp(frame6):
    # a vMF mixture is infinitely smooth away from nothing; its needlet
    # coefficients near the pole must fall off faster than the cusp's
    vmf = VmfMixture(SD, [X0], [4.0], [1.0])
    cusp = Cusp(SD, X0, 0.5, 0.05, math.pi)
    rec_v = run_decay(vmf, frame6, X0, range(2, 5))
    rec_c = run_decay(cusp, frame6, X0, range(2, 5))
    assert rec_v["summary"]["near_beta_slope"] < rec_c["summary"]["near_beta_slope"] - 1.0


def test_run_decay_slope_matches_smoothness(frame6):
    rec = run_decay(Cusp(SD, X0, 0.5, 0.05, math.pi), frame6, X0, range(2, 6))
    s = rec["summary"]
    assert s["near_beta_slope"] == pytest.approx(-1.5, abs=0.35)
    assert s["term_sum_slope"] == pytest.approx(-0.5, abs=0.35)
    assert s["approx_err_slope"] == pytest.approx(-0.5, abs=0.35)
    assert s["near_beta_target"] == pytest.approx(-1.5)


def test_run_bernstein_uniform(frame6):
    plan = ExperimentPlan(model=Uniform(SD).to_spec(), query_point=POINT,
                          n_grid=(4096,), replications=50, seed=31, level=2,
                          allow_small=True)
    rec = run_bernstein(frame6, plan)
    s = rec["summary"]
    assert s["n"] == 4096 and s["level"] == 2
    # the 10x band is far outside the CLT scale: no exceedances
    assert s["exceedance_rate_10x"] == 0.0
    assert s["mad_max"] <= s["mad_bound"]
    assert len(rec["table"]) == frame6.n_atoms(2)
    assert s["checks"] == 50 * frame6.n_atoms(2)


def test_run_bernstein_rejects_overdeep_level(frame6):
    plan = ExperimentPlan(model=Uniform(SD).to_spec(), query_point=POINT,
                          n_grid=(512,), replications=50, seed=0, level=5,
                          allow_small=True)
    with pytest.raises(ValueError):
        run_bernstein(frame6, plan)


def test_run_coverage_smoke_schema(frame6):
    model, _ = make_self_similar(frame6, X0, t=3.0, B=1.52, levels=[1])
    plan = ExperimentPlan(model=model.to_spec(), query_point=POINT,
                          n_grid=(10000,), replications=20, seed=41,
                          allow_small=True)
    rec = run_coverage(frame6, plan)
    s = rec["summary"]
    assert 0.0 <= s["coverage"] <= 1.0
    assert s["mean_width"] > 0.0
    assert s["width_slope"] is None  # single grid point
    assert s["width_theory_exponent"] == pytest.approx(-3.0 / 8.0)
    row = rec["table"][0]
    assert row["threshold"] == pytest.approx(0.07990421415124149, rel=1e-12)


def test_persist_and_load_round_trip(tmp_path, frame6):
    plan = ExperimentPlan(model=_cusp_spec(), query_point=POINT,
                          n_grid=(512, 1024), replications=10, seed=51,
                          estimator="linear", allow_small=True)
    rec = run_rates(frame6, plan)
    csv_path, json_path = persist(rec, tmp_path / "out.csv")
    assert csv_path.endswith(".csv") and json_path.endswith(".json")
    back = load_table(csv_path, required_columns=("n", "J", "risk", "se"))
    assert [row["n"] for row in back] == [row["n"] for row in rec["table"]]
    for got, want in zip(back, rec["table"]):
        assert got["risk"] == want["risk"]  # 17g round trip is exact
    with open(json_path) as fh:
        doc = json.load(fh)
    assert doc["kind"] == "rates"
    assert doc["summary"]["slope"] == rec["summary"]["slope"]


def test_load_table_rejects_bad_input(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b\n1,2\n3\n")
    with pytest.raises(ValueError):
        load_table(path, required_columns=("a", "b"))
    path.write_text("a,b\n")
    with pytest.raises(ValueError):
        load_table(path, required_columns=("a", "b"))
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        load_table(path, required_columns=("a", "missing"))
