"""Grids of calibrated levels and overall power over ``(K, tau)``.

Each cell is a pure function of its own settings, so cells can be computed
in any order or concurrently.  Cells sharing ``(seed, nsim, K)`` reuse the
same null draws, which keeps curves over ``tau`` smooth.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .calibration import DEFAULT_NSIM, DEFAULT_SEED, DesignSpec, InfeasibleDesign, calibrate
from .combiner import CombinationMethod, WeightScheme
from .power import overall_power

__all__ = [
    "CSV_FIELDS",
    "SweepRow",
    "SweepTable",
    "format_number",
    "parse_grid",
    "sweep_alpha_star",
    "sweep_power",
    "tau_grid",
]

CSV_FIELDS = ("kind", "K", "tau", "alpha", "method", "weights", "value", "se",
              "status", "nsim", "seed")

ALPHA_STAR = "alpha-star"
POWER = "power"


def format_number(x):
    """Six significant digits; NaN/None become an empty field."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.6g}"


def _json_number(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    return float(f"{x:.6g}")


def tau_grid(start=0.01, stop=1.0, step=0.01):
    """Inclusive grid rounded to 10 decimals, e.g. 0.01, 0.02, ..., 1.0."""
    if step <= 0 or stop < start:
        raise ValueError(f"bad grid {start}:{stop}:{step}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(n)]


def parse_grid(text):
    """Parse ``start:stop:step`` or a comma list into a tau grid."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(x) for x in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            grid = tau_grid(*parts)
        else:
            grid = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"malformed grid {text!r}; expected start:stop:step or a comma list")
    if not grid or any(not 0.0 < t <= 1.0 for t in grid):
        raise ValueError(f"grid values must lie in (0, 1], got {text!r}")
    return grid


@dataclass(frozen=True)
class SweepRow:
    kind: str
    K: int
    tau: float
    alpha: float
    method: str
    weights: str
    value: float
    se: float
    status: str
    nsim: int
    seed: int


@dataclass
class SweepTable:
    kind: str
    rows: list = field(default_factory=list)

    def cell(self, K, tau):
        for r in self.rows:
            if r.K == K and math.isclose(r.tau, tau, abs_tol=1e-12):
                return r
        raise KeyError((K, tau))

    def curve(self, K):
        """``(taus, values)`` arrays for one K; infeasible cells are NaN."""
        rows = [r for r in self.rows if r.K == K]
        return np.array([r.tau for r in rows]), np.array([r.value for r in rows])

    def to_csv(self, fh=None):
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in self.rows:
            writer.writerow([
                r.kind, r.K, format_number(r.tau), format_number(r.alpha), r.method,
                r.weights, format_number(r.value), format_number(r.se), r.status,
                r.nsim, r.seed,
            ])
        return buf.getvalue() if fh is None else None

    def to_json(self):
        out = []
        for r in self.rows:
            d = asdict(r)
            for key in ("tau", "alpha", "value", "se"):
                d[key] = _json_number(d[key])
            out.append({k: d[k] for k in CSV_FIELDS})
        return json.dumps(out, indent=1) + "\n"


def _check_grids(K_values, taus):
    if not K_values or not taus:
        raise ValueError("K_values and tau grid must be non-empty")
    return sorted(set(int(k) for k in K_values)), sorted(set(float(t) for t in taus))


def _run(cells, job, workers):
    if workers <= 1:
        return [job(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, cells))


def _design(K, tau, alpha, method, weights, nsim, seed):
    if weights is not None and not isinstance(weights, WeightScheme):
        weights = WeightScheme.sample_size(weights)
    return DesignSpec(K=K, tau=tau, alpha=alpha, method=method,
                      weights=weights or WeightScheme(), nsim=nsim, seed=seed)


def sweep_alpha_star(K_values, taus, alpha=0.05, method=CombinationMethod.INVERSE_NORMAL,
                     weights=None, nsim=DEFAULT_NSIM, seed=DEFAULT_SEED, workers=1):
    """Calibrated pooled level for every ``(K, tau)`` cell.

    Infeasible cells are kept with ``status="infeasible"`` and a NaN value.
    """
    Ks, taus = _check_grids(K_values, taus)
    method = CombinationMethod(method)
    cells = [(K, t) for K in Ks for t in taus]

    def job(cell):
        K, t = cell
        d = _design(K, t, alpha, method, weights, nsim, seed)
        try:
            res = calibrate(d)
        except InfeasibleDesign:
            return SweepRow(ALPHA_STAR, K, t, alpha, method.value, d.weights.descriptor,
                            math.nan, math.nan, "infeasible", nsim, seed)
        return SweepRow(ALPHA_STAR, K, t, alpha, method.value, d.weights.descriptor,
                        res.alpha_star, res.mc_standard_error, "ok", nsim, seed)

    return SweepTable(ALPHA_STAR, _run(cells, job, workers))


def sweep_power(K_values, taus, gamma=2.0, alpha=0.05, prior=None,
                method=CombinationMethod.INVERSE_NORMAL, weights=None,
                nsim=DEFAULT_NSIM, seed=DEFAULT_SEED, workers=1):
    """Overall power (prior-weighted over ``G = 1..K``) for every cell.

    ``gamma`` may be a scalar or a per-cohort list; a list or prior only makes
    sense for a single K value.  The reported ``se`` is the prior-weighted
    combination of the per-G binomial errors, treating them as independent.
    """
    Ks, taus = _check_grids(K_values, taus)
    method = CombinationMethod(method)
    cells = [(K, t) for K in Ks for t in taus]

    def job(cell):
        K, t = cell
        d = _design(K, t, alpha, method, weights, nsim, seed)
        try:
            res = overall_power(d, gamma, prior)
        except InfeasibleDesign:
            return SweepRow(POWER, K, t, alpha, method.value, d.weights.descriptor,
                            math.nan, math.nan, "infeasible", nsim, seed)
        se = math.sqrt(sum((w * res.per_G[g].se) ** 2
                           for g, w in zip(range(1, K + 1), res.prior)))
        return SweepRow(POWER, K, t, alpha, method.value, d.weights.descriptor,
                        res.overall, se, "ok", nsim, seed)

    return SweepTable(POWER, _run(cells, job, workers))
