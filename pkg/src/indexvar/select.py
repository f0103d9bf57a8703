"""Information criteria and the joint order search over (p, s, q, r).

Every candidate is fit on the same effective sample (conditioning on the
grid's maximum lag) so the log-likelihoods are comparable; the innovation
covariance's parameters are excluded from the penalty, a constant offset
across candidates that cannot change the argmin.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field

import numpy as np

from .estimators import FitOptions, fit_ciaar, fit_iaar, fit_mai
from .tscore import Panel

__all__ = ["ICRow", "ICTable", "info_criterion", "grid_search"]

CRITERIA = ("aic", "bic", "hq")


def info_criterion(loglik: float, n_params: int, T_eff: int, kind: str) -> float:
    """aic = -2l + 2k, bic = -2l + k log T, hq = -2l + 2k log log T."""
    if kind not in CRITERIA:
        raise ValueError(f"kind must be one of {CRITERIA}, got {kind!r}")
    if T_eff <= n_params:
        raise ValueError(f"effective sample {T_eff} not larger than {n_params} parameters")
    if kind == "aic":
        return -2.0 * loglik + 2.0 * n_params
    if kind == "bic":
        return -2.0 * loglik + n_params * math.log(T_eff)
    if T_eff <= 2:
        raise ValueError("Hannan-Quinn needs T_eff > 2")
    return -2.0 * loglik + 2.0 * n_params * math.log(math.log(T_eff))


@dataclass
class ICRow:
    model: str
    p: int
    s: int
    q: int
    r: int
    loglik: float
    n_params: int
    aic: float
    bic: float
    hq: float
    converged: bool
    failed: bool = False
    error: str = ""

    def orders(self) -> tuple:
        return (self.p, self.s, self.q, self.r)


@dataclass
class ICTable:
    """One row per candidate plus the argmin per criterion.

    best maps each criterion name to the index of its minimizer among the
    non-failed rows, tie-broken by parameter count then lexicographic
    orders.
    """

    rows: list[ICRow]
    T_eff: int
    best: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.best:
            self.best = {k: self._argmin(k) for k in CRITERIA}

    def _argmin(self, kind: str) -> int:
        candidates = [
            (getattr(row, kind), row.n_params, row.orders(), i)
            for i, row in enumerate(self.rows)
            if not row.failed
        ]
        if not candidates:
            raise ValueError("all candidate fits failed")
        return min(candidates)[-1]

    def best_row(self, kind: str) -> ICRow:
        return self.rows[self.best[kind]]

    def to_csv(self, path) -> None:
        header = "model,p,s,q,r,loglik,n_params,aic,bic,hq,converged,failed,error"
        lines = [header]
        for row in self.rows:
            lines.append(
                f"{row.model},{row.p},{row.s},{row.q},{row.r},"
                f"{row.loglik:.17g},{row.n_params},{row.aic:.17g},{row.bic:.17g},"
                f"{row.hq:.17g},{int(row.converged)},{int(row.failed)},{row.error}"
            )
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _candidate_grid(model, p_range, q_range, n, s_max=None, r_max=None):
    p_lo, p_hi = p_range
    q_lo, q_hi = q_range
    if q_hi >= n:
        q_hi = n - 1
    combos = []
    for p in range(max(p_lo, 1), p_hi + 1):
        if model == "mai":
            combos.extend((p, p, q, 0) for q in range(max(q_lo, 1), q_hi + 1))
            continue
        for s in range(1, (p if s_max is None else min(p, s_max)) + 1):
            for q in range(max(q_lo, 1), q_hi + 1):
                if model == "iaar":
                    combos.append((p, s, q, 0))
                else:
                    cap = q if r_max is None else min(q, r_max)
                    combos.extend((p, s, q, r) for r in range(0, cap + 1))
    if not combos:
        raise ValueError("empty candidate grid")
    return combos


def _fit_candidate(args):
    values, names, t0, model, orders, t_start, opts = args
    Y = Panel(values, list(names), t0)
    p, s, q, r = orders
    try:
        if model == "mai":
            fit = fit_mai(Y, p, q, opts=opts, t_start=t_start)
        elif model == "iaar":
            fit = fit_iaar(Y, p, s, q, opts=opts, t_start=t_start)
        else:
            fit = fit_ciaar(Y, p, s, q, r, opts=opts, t_start=t_start)
    except Exception as exc:  # failed fits stay in the table, out of the argmin
        return orders, None, f"{type(exc).__name__}: {exc}"
    return orders, (fit.loglik, fit.n_params, fit.T_eff, fit.converged), ""


def grid_search(
    Y: Panel,
    p_range: tuple = (1, 3),
    q_range: tuple = (1, 3),
    kind: str = "hq",
    opts: FitOptions | None = None,
    model: str = "ciaar",
    s_max: int | None = None,
    r_max: int | None = None,
    workers: int = 1,
) -> ICTable:
    """Fit every admissible (p, s, q, r) and tabulate the criteria.

    model selects the candidate family: "ciaar" searches the full quadruple
    (s <= p, r <= q), "iaar" the triple with r = 0, and "mai" the pair
    (p, q). All fits condition on the grid's maximum lag so likelihoods are
    comparable; kind only picks which best-row accessor the caller will use
    (all three criteria are tabulated).
    """
    if kind not in CRITERIA:
        raise ValueError(f"kind must be one of {CRITERIA}, got {kind!r}")
    if model not in ("ciaar", "iaar", "mai"):
        raise ValueError(f"model must be 'ciaar', 'iaar' or 'mai', got {model!r}")
    opts = opts or FitOptions()
    combos = _candidate_grid(model, p_range, q_range, Y.n, s_max, r_max)
    # conditioning offset shared by all candidates: t0 + max(p, s) covers the
    # longest lag in levels (and, for ciaar, the max(p-1, s-1) difference lags
    # plus the differencing row)
    t_start = Y.t0 + max(max(p, s) for p, s, _, _ in combos)
    tasks = [
        (Y.values, Y.names, Y.t0, model, orders, t_start, opts) for orders in combos
    ]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_fit_candidate, tasks))
    else:
        results = [_fit_candidate(task) for task in tasks]

    by_orders = {orders: (stats, err) for orders, stats, err in results}
    rows = []
    T_eff_common = None
    for orders in combos:
        stats, err = by_orders[orders]
        p, s, q, r = orders
        if stats is None:
            rows.append(
                ICRow(model, p, s, q, r, np.nan, 0, np.nan, np.nan, np.nan,
                      False, failed=True, error=err)
            )
            continue
        ll, k, T_eff, converged = stats
        try:
            crits = [info_criterion(ll, k, T_eff, c) for c in CRITERIA]
        except ValueError as exc:
            rows.append(
                ICRow(model, p, s, q, r, ll, k, np.nan, np.nan, np.nan,
                      converged, failed=True, error=str(exc))
            )
            continue
        T_eff_common = T_eff
        rows.append(ICRow(model, p, s, q, r, ll, k, *crits, converged))
    if T_eff_common is None:
        raise ValueError("all candidate fits failed")
    return ICTable(rows, T_eff_common)
