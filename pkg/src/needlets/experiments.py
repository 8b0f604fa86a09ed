"""Monte Carlo experiment harness: rates, coverage, decay, Bernstein tails.

Every experiment is a pure function of its plan.  Replication r at grid
point g draws from the dedicated stream rng_stream(seed, g, r), replications
are grouped into fixed-size blocks that do not depend on the worker count,
and aggregation is an ordered reduction over block index, so outputs are
bit-identical whether the blocks run on one worker or eight.

Results come back as a record dict with a row-oriented ``table`` (one row
per grid point, level, or atom) and a ``summary`` of scalars; ``persist``
writes the table as CSV with 17-significant-digit floats and the rest as a
JSON sidecar.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .densities import eval_density, model_from_spec, sample_density, sup_norm
from .estimators import (CI_INFLATION, choose_J, choose_linear_J, kappa,
                         linear_estimate, make_config, apply_threshold,
                         sigma_hat, threshold_estimate, with_survivor_w)
from .frame import (MASK_TOL, NeedletFrame, abs_term_sum, analyze_sample,
                    analyze_zonal, evaluation_indices, lowpass_zonal_value,
                    near_atom_indices, synthesize)
from .sphere import rng_stream, unit_vector
from .textio import dumps_17g, fmt

VERSION = "needlets-0.1.0"
# Replication floors; slope fits need CLT-stable means, coverage needs
# resolvable binomial proportions.
MIN_REPS_SLOPE = 30
MIN_REPS_COVERAGE = 200
# Replications per work block.  Fixed independently of the worker count so
# that block boundaries, and with them every summation order, never move.
BLOCK_REPS = 25
# Near-center window K * 2^-i used for the per-level coefficient maximum.
DECAY_NEAR_K = 4.0


@dataclass(frozen=True)
class ExperimentPlan:
    """Inputs of one experiment: model, query point, grid, and controls.

    ``model`` is a density spec dict (see densities.model_from_spec);
    ``estimator`` selects thresholding or the linear estimate at the
    smoothness-matched bandwidth, with ``holder_t`` overriding the model's
    own Holder exponent where one is needed; ``level`` is the analysis
    level for the Bernstein tail run; ``mask_tol`` is the envelope
    tolerance for evaluation masks (None analyzes every atom);
    ``allow_small`` lifts the replication floors for smoke tests.
    """

    model: dict
    query_point: tuple
    n_grid: tuple
    replications: int
    seed: int = 0
    alpha: float = 0.05
    estimator: str = "threshold"
    holder_t: float | None = None
    level: int = 3
    workers: int = 1
    survivor_w: bool = False
    mask_tol: float | None = MASK_TOL
    allow_small: bool = False
    outputs: tuple = ()

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "query_point", tuple(float(v) for v in self.query_point))
        if not grid:
            raise ValueError("n_grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"n_grid must be strictly increasing, got {grid}")
        if self.estimator not in ("threshold", "linear"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.replications < 1:
            raise ValueError("replications must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")
        if self.mask_tol is not None and self.mask_tol <= 0.0:
            raise ValueError("mask_tol must be positive or None")


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares line with the standard error of its slope."""

    slope: float
    intercept: float
    stderr: float


def fit_slope(x, y) -> SlopeFit:
    """Least squares of y on x via the centered closed form.

    The centered normal equations recover an exactly linear sequence to
    machine precision, which the self-test below relies on.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("slope fit needs two equal-length samples of size >= 2")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise ValueError("slope fit needs at least two distinct x values")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - intercept - slope * x
    if x.size > 2:
        stderr = math.sqrt(float(resid @ resid) / (x.size - 2) / sxx)
    else:
        stderr = 0.0
    return SlopeFit(slope=slope, intercept=intercept, stderr=stderr)


def _blocks(reps: int) -> list:
    return [(lo, min(lo + BLOCK_REPS, reps)) for lo in range(0, reps, BLOCK_REPS)]


def _map_blocks(workers: int, fn, blocks: list) -> list:
    """Run the block function over fixed ranges, in order, on any workers.

    The threading backend shares the frame (and its lazily built tables)
    across workers; per-block results come back in block order, so the
    caller's reduction is deterministic regardless of completion order.
    """
    if workers <= 1 or len(blocks) <= 1:
        return [fn(lo, hi) for lo, hi in blocks]
    runner = Parallel(n_jobs=workers, backend="threading")
    return runner(delayed(fn)(lo, hi) for lo, hi in blocks)


def _holder_t(plan: ExperimentPlan, model) -> float:
    if plan.holder_t is not None:
        return float(plan.holder_t)
    holder = getattr(model, "holder", None)
    if holder is None:
        raise ValueError(
            f"model kind {model.kind!r} carries no Holder exponent; set plan.holder_t")
    t = holder().t
    if t is None:
        raise ValueError("model does not declare its Holder exponent; set plan.holder_t")
    return float(t)


def _check_reps(plan: ExperimentPlan, floor: int, purpose: str) -> None:
    if plan.replications < floor and not plan.allow_small:
        raise ValueError(
            f"{purpose} needs at least {floor} replications, got {plan.replications}")


def _query_point(frame: NeedletFrame, plan: ExperimentPlan) -> np.ndarray:
    x0 = np.asarray(plan.query_point, dtype=np.float64)
    if x0.shape != (frame.sd.d,):
        raise ValueError(f"query point has shape {x0.shape}, expected ({frame.sd.d},)")
    return unit_vector(x0)


def _masks(frame: NeedletFrame, x0: np.ndarray, J: int, plan: ExperimentPlan):
    if plan.mask_tol is None:
        return None
    return evaluation_indices(frame, x0, J, plan.mask_tol)


def run_rates(frame: NeedletFrame, plan: ExperimentPlan) -> dict:
    """Pointwise risk E|f_hat(x0) - f(x0)| over n_grid, with a rate fit.

    Per grid point: draw, analyze with the fast path on the evaluation
    mask, estimate at the query point, and average |error| over
    replications.  The slope is fitted against ln(n / ln n), the natural
    abscissa for the (n / ln n)^{-t/(2t+d-1)} rate; its theoretical value
    is reported alongside.  A non-finite estimate aborts with the stream
    coordinates of the failing replication.
    """
    _check_reps(plan, MIN_REPS_SLOPE, "a rate fit")
    sd = frame.sd
    model = model_from_spec(plan.model, frame)
    x0 = _query_point(frame, plan)
    f0 = float(eval_density(model, x0))
    t = _holder_t(plan, model)
    sup_f = sup_norm(model)
    theory = -t / (2.0 * t + sd.d - 1.0)

    rows = []
    for gi, n in enumerate(plan.n_grid):
        if plan.estimator == "linear":
            J = choose_linear_J(n, sd.d, t)
        else:
            J = choose_J(n, sd.d)
        J = min(J, frame.j_max + 1)
        masks = _masks(frame, x0, J, plan)
        config = (make_config(sd, n, sup_f, alpha=plan.alpha, J=J)
                  if plan.estimator == "threshold" else None)

        def block(lo, hi, n=n, gi=gi, J=J, masks=masks, config=config):
            out = np.empty(hi - lo)
            for r in range(lo, hi):
                rng = rng_stream(plan.seed, gi, r)
                pts = sample_density(model, n, rng)
                tab = analyze_sample(frame, pts, J, method="interp", level_indices=masks)
                if config is None:
                    est = linear_estimate(frame, tab, J, x0)
                else:
                    est = threshold_estimate(frame, tab, config, x0)
                if not math.isfinite(est):
                    raise RuntimeError(
                        f"non-finite estimate in replication {r} at n = {n} "
                        f"(rng stream {plan.seed}/{gi}/{r})")
                out[r - lo] = abs(est - f0)
            return out

        errs = np.concatenate(_map_blocks(plan.workers, block, _blocks(plan.replications)))
        rows.append({
            "n": int(n),
            "J": int(J),
            "risk": float(errs.mean()),
            "se": float(errs.std(ddof=1) / math.sqrt(errs.size)) if errs.size > 1 else 0.0,
        })

    xs = [math.log(n / math.log(n)) for n in plan.n_grid]
    if len(rows) >= 2:
        fit = fit_slope(xs, [math.log(row["risk"]) for row in rows])
        slope, slope_se, intercept = fit.slope, fit.stderr, fit.intercept
    else:
        slope = slope_se = intercept = float("nan")
    return {
        "kind": "rates",
        "version": VERSION,
        "plan": asdict(plan),
        "table": rows,
        "summary": {
            "estimator": plan.estimator,
            "holder_t": t,
            "f_at_point": f0,
            "slope": slope,
            "slope_se": slope_se,
            "intercept": intercept,
            "theory_exponent": theory,
        },
    }


def run_coverage(frame: NeedletFrame, plan: ExperimentPlan) -> dict:
    """Confidence-interval coverage and width of the thresholded estimator.

    Per replication: threshold at 2 kappa_1 sqrt(ln n / n), build the
    interval estimate +- 1.01 sigma_hat, and record whether it captures
    f(x0) along with its width.  Headline coverage and width refer to the
    first grid entry; width shrinkage is fitted against ln(n / ln n), both
    raw and divided by the gamma_n = ln n widening factor.
    """
    _check_reps(plan, MIN_REPS_COVERAGE, "coverage")
    sd = frame.sd
    model = model_from_spec(plan.model, frame)
    x0 = _query_point(frame, plan)
    f0 = float(eval_density(model, x0))
    sup_f = sup_norm(model)

    rows = []
    for gi, n in enumerate(plan.n_grid):
        J = min(choose_J(n, sd.d), frame.j_max + 1)
        masks = _masks(frame, x0, J, plan)
        config = make_config(sd, n, sup_f, alpha=plan.alpha, J=J)

        def block(lo, hi, n=n, gi=gi, J=J, masks=masks, config=config):
            cov = np.empty(hi - lo)
            wid = np.empty(hi - lo)
            nsv = np.empty(hi - lo)
            for r in range(lo, hi):
                rng = rng_stream(plan.seed, gi, r)
                pts = sample_density(model, n, rng)
                tab = analyze_sample(frame, pts, J, method="interp", level_indices=masks)
                masked = apply_threshold(tab, config)
                est = synthesize(frame, masked, x0)
                if not math.isfinite(est):
                    raise RuntimeError(
                        f"non-finite estimate in replication {r} at n = {n} "
                        f"(rng stream {plan.seed}/{gi}/{r})")
                cfg = (with_survivor_w(config, masked.n_entries())
                       if plan.survivor_w else config)
                half = CI_INFLATION * sigma_hat(frame, masked, cfg, x0)
                k = r - lo
                cov[k] = 1.0 if abs(est - f0) <= half else 0.0
                wid[k] = 2.0 * half
                nsv[k] = masked.n_entries()
            return cov, wid, nsv

        parts = _map_blocks(plan.workers, block, _blocks(plan.replications))
        cov = np.concatenate([p[0] for p in parts])
        wid = np.concatenate([p[1] for p in parts])
        nsv = np.concatenate([p[2] for p in parts])
        rows.append({
            "n": int(n),
            "J": int(J),
            "coverage": float(cov.mean()),
            "mean_width": float(wid.mean()),
            "width_se": float(wid.std(ddof=1) / math.sqrt(wid.size)) if wid.size > 1 else 0.0,
            "mean_width_over_gamma": float(wid.mean() / math.log(n)),
            "mean_survivors": float(nsv.mean()),
            "threshold": float(config.threshold),
        })

    summary = {
        "alpha": plan.alpha,
        "f_at_point": f0,
        "coverage": rows[0]["coverage"],
        "mean_width": rows[0]["mean_width"],
        "width_slope": None,
        "width_slope_se": None,
        "width_over_gamma_slope": None,
        "width_over_gamma_slope_se": None,
    }
    if len(rows) >= 2 and all(row["mean_width"] > 0.0 for row in rows):
        # Zero mean width (no survivors anywhere at some n) leaves the
        # shrinkage slope undefined; the per-n table still tells the story.
        xs = [math.log(n / math.log(n)) for n in plan.n_grid]
        wfit = fit_slope(xs, [math.log(row["mean_width"]) for row in rows])
        gfit = fit_slope(xs, [math.log(row["mean_width_over_gamma"]) for row in rows])
        summary["width_slope"] = wfit.slope
        summary["width_slope_se"] = wfit.stderr
        summary["width_over_gamma_slope"] = gfit.slope
        summary["width_over_gamma_slope_se"] = gfit.stderr
    try:
        t = _holder_t(plan, model)
        summary["width_theory_exponent"] = -t / (2.0 * t + sd.d - 1.0)
    except ValueError:
        pass
    return {
        "kind": "coverage",
        "version": VERSION,
        "plan": asdict(plan),
        "table": rows,
        "summary": summary,
    }


def run_decay(model, frame: NeedletFrame, x0, levels) -> dict:
    """Per-level coefficient decay of a model with exact zonal structure.

    For each level i: the maximum |beta| over atoms within 4 * 2^-i of x0,
    the absolute term sum sum_eta |beta psi(x0)|, and the low-pass error
    |A_i f(x0) - f(x0)|; all three from the closed-form zonal analysis, no
    sampling.  Slopes are fitted on log2 of each column against the level,
    so a column decaying like 2^{-q i} reports slope -q; columns that are
    zero to machine precision report no slope.
    """
    levels = sorted(int(i) for i in levels)
    if not levels or levels[0] < 0:
        raise ValueError(f"levels must be non-negative, got {levels}")
    depth = levels[-1] + 1
    x0 = unit_vector(np.asarray(x0, dtype=np.float64))
    kmax = 2 ** depth
    comps = model.zonal_components(kmax)
    constant = 1.0 / model.sd.omega
    tab = analyze_zonal(frame, comps, constant, depth)
    f0 = float(eval_density(model, x0))

    rows = []
    for i in levels:
        near = near_atom_indices(frame, i, x0, DECAY_NEAR_K * 2.0 ** -i)
        beta = tab.entries[i][1]
        rows.append({
            "level": i,
            "near_beta_max": float(np.max(np.abs(beta[near]))) if near.size else 0.0,
            "term_sum": abs_term_sum(frame, tab, i, x0),
            "approx_err": abs(lowpass_zonal_value(frame, comps, constant, i, x0) - f0),
        })

    def dyadic_slope(key):
        vals = np.array([row[key] for row in rows])
        if len(rows) < 2 or np.any(vals < 1e-13):
            return None
        return fit_slope(levels, np.log2(vals)).slope

    summary = {
        "f_at_point": f0,
        "near_beta_slope": dyadic_slope("near_beta_max"),
        "term_sum_slope": dyadic_slope("term_sum"),
        "approx_err_slope": dyadic_slope("approx_err"),
    }
    holder = getattr(model, "holder", None)
    if holder is not None and holder().t is not None:
        t = float(holder().t)
        summary["holder_t"] = t
        summary["near_beta_target"] = -(2.0 * t + model.sd.d - 1.0) / 2.0
        summary["term_sum_target"] = -t
        summary["approx_err_target"] = -t
    return {
        "kind": "decay",
        "version": VERSION,
        "plan": {"model": model.to_spec(), "query_point": [float(v) for v in x0],
                 "levels": levels},
        "table": rows,
        "summary": summary,
    }


def run_bernstein(frame: NeedletFrame, plan: ExperimentPlan) -> dict:
    """Bernstein tail and moment check for the empirical coefficients.

    At one sample size (the first grid entry) and one level, compare
    |beta_hat - beta| per atom and replication against the one-coefficient
    band kappa_1 sqrt(ln n / n): the exceedance frequency over all
    (replication, atom) checks must sit under 2/n plus Monte Carlo slack.
    The per-atom mean absolute deviation and the replication mean of
    beta_hat (for unbiasedness) aggregate over the same fixed blocks.
    """
    sd = frame.sd
    model = model_from_spec(plan.model, frame)
    n = plan.n_grid[0]
    level = plan.level
    if not 0 <= level <= frame.j_max:
        raise ValueError(f"level {level} outside the frame's range 0..{frame.j_max}")
    if 2.0 ** (level * (sd.d - 1)) > n / math.log(n):
        raise ValueError(
            f"level {level} violates 2^(i(d-1)) <= n/ln n at n = {n}")

    comps = model.zonal_components(2 ** (level + 1))
    tab0 = analyze_zonal(frame, comps, 1.0 / sd.omega, level + 1)
    beta_true = tab0.entries[level][1]
    sup_f = sup_norm(model)
    kappa1 = kappa(1.0, sup_f, sd)
    band = kappa1 * math.sqrt(math.log(n) / n)
    n_atoms = frame.n_atoms(level)
    indices = {i: np.arange(0, dtype=np.int64) for i in range(level)}
    indices[level] = np.arange(n_atoms, dtype=np.int64)

    def block(lo, hi):
        exceed = 0
        exceed10 = 0
        sum_dev = np.zeros(n_atoms)
        sum_beta = np.zeros(n_atoms)
        sum_beta_sq = np.zeros(n_atoms)
        for r in range(lo, hi):
            rng = rng_stream(plan.seed, 0, r)
            pts = sample_density(model, n, rng)
            tab = analyze_sample(frame, pts, level + 1, method="interp",
                                 level_indices=indices)
            bh = tab.entries[level][1]
            dev = np.abs(bh - beta_true)
            exceed += int(np.count_nonzero(dev > band))
            exceed10 += int(np.count_nonzero(dev > 10.0 * band))
            sum_dev += dev
            sum_beta += bh
            sum_beta_sq += bh * bh
        return exceed, exceed10, sum_dev, sum_beta, sum_beta_sq

    parts = _map_blocks(plan.workers, block, _blocks(plan.replications))
    reps = plan.replications
    exceed = sum(p[0] for p in parts)
    exceed10 = sum(p[1] for p in parts)
    sum_dev = sum(p[2] for p in parts)
    sum_beta = sum(p[3] for p in parts)
    sum_beta_sq = sum(p[4] for p in parts)

    mad = sum_dev / reps
    mean_beta = sum_beta / reps
    bias = mean_beta - beta_true
    if reps > 1:
        var = np.maximum(sum_beta_sq - reps * mean_beta**2, 0.0) / (reps - 1)
        se = np.sqrt(var / reps)
        zmax = float(np.max(np.abs(bias) / np.where(se > 0, se, np.inf)))
        pooled_z = float(bias.mean() / (math.sqrt(float(var.mean())) / math.sqrt(reps * n_atoms)))
    else:
        zmax = float("nan")
        pooled_z = float("nan")

    checks = reps * n_atoms
    bound = 2.0 / n
    slack = 3.0 * math.sqrt(bound * (1.0 - bound) / checks)
    table = [{"index": int(a),
              "beta_true": float(beta_true[a]),
              "mean_beta": float(mean_beta[a]),
              "mad": float(mad[a])} for a in range(n_atoms)]
    return {
        "kind": "bernstein",
        "version": VERSION,
        "plan": asdict(plan),
        "table": table,
        "summary": {
            "n": int(n),
            "level": int(level),
            "replications": int(reps),
            "checks": int(checks),
            "kappa1": float(kappa1),
            "band": float(band),
            "exceedance_rate": exceed / checks,
            "exceedance_rate_10x": exceed10 / checks,
            "bound": bound,
            "slack": slack,
            "mad_max": float(np.max(mad)),
            "mad_bound": 1.1 * math.sqrt(sup_f / n),
            "bias_zmax": zmax,
            "bias_pooled_z": pooled_z,
        },
    }


# ---------------------------------------------------------------------------
# Persistence


def _csv_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt(float(value))
    text = str(value)
    if "," in text or "\n" in text:
        raise ValueError(f"CSV cell may not contain separators: {text!r}")
    return text


def persist(record: dict, path) -> tuple:
    """Write a record's table as CSV and everything as a JSON sidecar.

    ``path`` fixes the output stem; both stem.csv (header row plus
    17-significant-digit values) and stem.json (plan echo, version, seed,
    summary, and the table again) are written regardless of which suffix
    the caller named.  Returns the two paths.  I/O errors propagate.
    """
    path = Path(path)
    stem = path.with_suffix("")
    csv_path = stem.with_suffix(".csv")
    json_path = stem.with_suffix(".json")

    table = record.get("table", [])
    if not table:
        raise ValueError("record has no table to persist")
    columns = list(table[0].keys())
    for row in table:
        if list(row.keys()) != columns:
            raise ValueError("table rows have inconsistent columns")
    lines = [",".join(columns)]
    lines.extend(",".join(_csv_cell(row[c]) for c in columns) for row in table)
    csv_path.write_text("\n".join(lines) + "\n")

    obj = {key: record[key] for key in record if key != "table"}
    obj["table_columns"] = columns
    obj["table_path"] = csv_path.name
    obj["table"] = table
    json_path.write_text(dumps_17g(obj) + "\n")
    return str(csv_path), str(json_path)


def load_table(path, required_columns=None) -> list:
    """Parse a persisted CSV back into rows of typed values.

    Raises ValueError when the file is empty or required columns are
    missing (schema validation for downstream consumers).
    """
    text = Path(path).read_text()
    lines = [line for line in text.splitlines() if line]
    if len(lines) < 2:
        raise ValueError(f"{path}: no data rows")
    columns = lines[0].split(",")
    if required_columns is not None:
        missing = [c for c in required_columns if c not in columns]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != len(columns):
            raise ValueError(f"{path}: row has {len(cells)} cells, header has {len(columns)}")
        row = {}
        for name, cell in zip(columns, cells):
            try:
                row[name] = int(cell)
            except ValueError:
                try:
                    row[name] = float(cell)
                except ValueError:
                    row[name] = cell
        rows.append(row)
    return rows
