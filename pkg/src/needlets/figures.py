"""Figure rendering for experiment records.

One figure per record kind, written next to the delimited outputs.  The
Agg backend plus a scrubbed Software tag keep the PNG bytes a pure
function of the record, which folds the figures into the determinism
contract of the simulate commands.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 120


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return path


def _rates_figure(record: dict):
    rows = record["table"]
    s = record["summary"]
    n = np.array([row["n"] for row in rows], dtype=np.float64)
    x = n / np.log(n)
    risk = np.array([row["risk"] for row in rows])
    se = np.array([row["se"] for row in rows])
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    ax.errorbar(x, risk, yerr=se, fmt="o-", capsize=3, label="empirical risk")
    if np.isfinite(s["slope"]):
        fit = np.exp(s["intercept"]) * x ** s["slope"]
        ax.plot(x, fit, "--", label=f"fit slope {s['slope']:.3f}")
    ref = risk[0] * (x / x[0]) ** s["theory_exponent"]
    ax.plot(x, ref, ":", label=f"reference slope {s['theory_exponent']:.3f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n / ln n")
    ax.set_ylabel("mean |error| at query point")
    ax.set_title(f"pointwise risk, {s['estimator']} estimator")
    ax.legend()
    fig.tight_layout()
    return fig


def _coverage_figure(record: dict):
    rows = record["table"]
    alpha = record["summary"]["alpha"]
    n = np.array([row["n"] for row in rows], dtype=np.float64)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.6, 4.0))
    ax1.plot(n, [row["coverage"] for row in rows], "o-")
    ax1.axhline(1.0 - alpha, linestyle="--", color="gray", label=f"target {1 - alpha:g}")
    ax1.set_xscale("log")
    ax1.set_ylim(0.0, 1.05)
    ax1.set_xlabel("n")
    ax1.set_ylabel("coverage")
    ax1.legend()
    x = n / np.log(n)
    ax2.plot(x, [row["mean_width"] for row in rows], "o-", label="mean width")
    ax2.plot(x, [row["mean_width_over_gamma"] for row in rows], "s-",
             label="width / gamma_n")
    ax2.set_xscale("log")
    ax2.set_yscale("log")
    ax2.set_xlabel("n / ln n")
    ax2.set_ylabel("interval width")
    ax2.legend()
    fig.suptitle("confidence interval coverage and width")
    fig.tight_layout()
    return fig


def _decay_figure(record: dict):
    rows = record["table"]
    levels = [row["level"] for row in rows]
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    for key, label in (("near_beta_max", "max |beta| near x0"),
                       ("term_sum", "sum |beta psi(x0)|"),
                       ("approx_err", "|A_i f - f|(x0)")):
        vals = np.array([row[key] for row in rows])
        if np.all(vals > 0):
            ax.semilogy(levels, vals, "o-", base=2, label=label)
    ax.set_xlabel("level i")
    ax.set_ylabel("magnitude")
    ax.set_title("per-level coefficient decay")
    ax.legend()
    fig.tight_layout()
    return fig


def _bernstein_figure(record: dict):
    rows = record["table"]
    s = record["summary"]
    mad = np.sort(np.array([row["mad"] for row in rows]))[::-1]
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    ax.plot(mad, ".", markersize=3, label="per-atom E|beta_hat - beta|")
    ax.axhline(s["mad_bound"], linestyle="--", color="gray",
               label=f"bound {s['mad_bound']:.2e}")
    ax.set_xlabel("atom rank")
    ax.set_ylabel("mean absolute deviation")
    ax.set_title(f"level {s['level']} moments, n = {s['n']}; "
                 f"exceedance {s['exceedance_rate']:.2e} vs {s['bound']:.2e}")
    ax.legend()
    fig.tight_layout()
    return fig


_RENDERERS = {
    "rates": _rates_figure,
    "coverage": _coverage_figure,
    "decay": _decay_figure,
    "bernstein": _bernstein_figure,
}


def render_record(record: dict, path) -> Path:
    """Render the record's figure to ``path`` (suffix forced to .png)."""
    kind = record.get("kind")
    if kind not in _RENDERERS:
        raise ValueError(f"no figure renderer for record kind {kind!r}")
    path = Path(path).with_suffix(".png")
    return _save(_RENDERERS[kind](record), path)
