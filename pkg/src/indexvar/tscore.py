"""Deterministic time-series and regression primitives shared by all estimators."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Panel",
    "RegressionOut",
    "SingularDesignError",
    "read_panel_csv",
    "build_lag_matrix",
    "ols",
    "autocov",
    "companion_spectral_radius",
    "companion_matrix",
    "har_aggregates",
    "subspace_distance",
    "orth_complement",
    "fix_signs",
]

# Rank tolerance for OLS designs: smallest singular value below RANK_RTOL times
# the largest triggers SingularDesignError.
RANK_RTOL = 1e-10


class SingularDesignError(ValueError):
    """Raised when a regression design matrix is rank deficient."""


@dataclass
class Panel:
    """A T x n block of time series observations.

    values: T x n float array, rows are time, columns are series.
    names:  n column labels.
    t0:     index of the first usable row (rows before t0 exist but are
            flagged unusable after transformations such as HAR averaging).
    """

    values: np.ndarray
    names: list[str] = field(default_factory=list)
    t0: int = 0

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.ndim != 2:
            raise ValueError("panel values must be a T x n matrix")
        if not self.names:
            self.names = [f"y{i + 1}" for i in range(self.values.shape[1])]
        if len(self.names) != self.values.shape[1]:
            raise ValueError(
                f"{len(self.names)} names for {self.values.shape[1]} columns"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("panel contains non-finite values")
        if not 0 <= self.t0 < self.values.shape[0]:
            raise ValueError(f"t0={self.t0} outside sample of length {self.values.shape[0]}")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def usable(self) -> np.ndarray:
        """Rows from t0 on."""
        return self.values[self.t0:]


def read_panel_csv(path) -> Panel:
    """Read a panel from CSV: first row header, columns = series, rows = time.

    Cells must be decimal numbers with no missing entries; parse failures
    report the offending row and column.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        names = [s.strip() for s in names]
        rows = []
        for i, row in enumerate(reader):
            if len(row) != len(names):
                raise ValueError(
                    f"{path}: row {i + 2} has {len(row)} cells, expected {len(names)}"
                )
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                bad = next(j for j, c in enumerate(row) if not _is_float(c))
                raise ValueError(
                    f"{path}: row {i + 2}, column '{names[bad]}': cannot parse {row[bad]!r}"
                ) from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return Panel(np.asarray(rows, dtype=float), names)


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


@dataclass
class RegressionOut:
    """Multivariate least-squares output.

    sigma is the 1/T_eff residual covariance and loglik the Gaussian
    log-likelihood evaluated at that covariance,
    -(T_eff/2) * (m log 2pi + log det sigma + m).
    """

    coeffs: np.ndarray
    residuals: np.ndarray
    sigma: np.ndarray
    loglik: float


def gaussian_loglik(residuals: np.ndarray, sigma: np.ndarray | None = None) -> float:
    """Concentrated Gaussian log-likelihood of a residual matrix.

    With sigma equal to the 1/T residual covariance the quadratic form
    collapses to m, giving -(T/2)(m log 2pi + log det sigma + m).
    """
    T, m = residuals.shape
    if sigma is None:
        sigma = residuals.T @ residuals / T
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        return np.inf  # exactly singular covariance: a perfect (degenerate) fit
    return -0.5 * T * (m * np.log(2.0 * np.pi) + logdet + m)


def ols(X: np.ndarray, Y: np.ndarray) -> RegressionOut:
    """Multivariate OLS of Y (T x m) on X (T x k).

    Raises SingularDesignError when the smallest singular value of X falls
    below RANK_RTOL times the largest.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows, Y has {Y.shape[0]}")
    sv = np.linalg.svd(X, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] < RANK_RTOL * sv[0]:
        raise SingularDesignError(
            f"design is rank deficient: min/max singular value "
            f"{sv[-1]:.3e}/{sv[0]:.3e} below relative tolerance {RANK_RTOL:.0e}"
        )
    coeffs, *_ = np.linalg.lstsq(X, Y, rcond=None)
    resid = Y - X @ coeffs
    T = X.shape[0]
    sigma = resid.T @ resid / T
    return RegressionOut(coeffs, resid, sigma, gaussian_loglik(resid, sigma))


def build_lag_matrix(
    Y: Panel | np.ndarray,
    lags: list[int],
    difference: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Targets and stacked lag regressors for a (possibly differenced) panel.

    Row t of the regressor matrix stacks Y_{t-j} (or the differenced series)
    for each requested lag j, in the given order; the target rows are the
    aligned Y_t. Both have T - max(lags) - (1 if difference) rows.
    """
    values = Y.values if isinstance(Y, Panel) else np.atleast_2d(np.asarray(Y, float))
    if len(lags) == 0:
        raise ValueError("empty lag list")
    if any(j < 0 for j in lags):
        raise ValueError("lags must be nonnegative")
    if difference:
        values = np.diff(values, axis=0)
    T = values.shape[0]
    maxlag = max(lags)
    if maxlag >= T:
        raise ValueError(f"max lag {maxlag} exceeds usable sample length {T}")
    targets = values[maxlag:]
    regressors = np.hstack([values[maxlag - j: T - j] for j in lags])
    return targets, regressors


def autocov(Y: Panel | np.ndarray, j: int) -> np.ndarray:
    """Lag-j sample autocovariance (1/T divisor, internally demeaned)."""
    values = Y.values if isinstance(Y, Panel) else np.atleast_2d(np.asarray(Y, float))
    T = values.shape[0]
    if not 0 <= j < T - 1:
        raise ValueError(f"lag {j} outside [0, {T - 2}]")
    Z = values - values.mean(axis=0)
    return Z[j:].T @ Z[: T - j] / T


def companion_matrix(phis: list[np.ndarray]) -> np.ndarray:
    """np x np companion matrix of the lag polynomial I - sum_j Phi_j L^j."""
    if not phis:
        raise ValueError("need at least one coefficient matrix")
    n = phis[0].shape[0]
    for j, phi in enumerate(phis):
        if phi.shape != (n, n):
            raise ValueError(f"coefficient {j + 1} has shape {phi.shape}, expected ({n}, {n})")
    p = len(phis)
    comp = np.zeros((n * p, n * p))
    comp[:n] = np.hstack(phis)
    if p > 1:
        comp[n:, : n * (p - 1)] = np.eye(n * (p - 1))
    return comp


def companion_spectral_radius(phis: list[np.ndarray]) -> float:
    """Spectral radius of the companion matrix; < 1 certifies stationarity."""
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(phis)))))


def har_aggregates(Yd: Panel) -> tuple[Panel, Panel]:
    """Weekly (5-day) and monthly (22-day) trailing means of a daily panel.

    Row t of the outputs averages the last 5 (resp. 22) daily rows ending
    at t. The first 21 rows use partial windows and are flagged unusable
    through t0 = 21.
    """
    if Yd.T < 22:
        raise ValueError(f"need at least 22 daily observations, got {Yd.T}")
    Yw = _trailing_mean(Yd.values, 5)
    Ym = _trailing_mean(Yd.values, 22)
    t0 = max(Yd.t0, 21)
    return (
        Panel(Yw, [f"{s}_w" for s in Yd.names], t0),
        Panel(Ym, [f"{s}_m" for s in Yd.names], t0),
    )


def _trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    csum = np.cumsum(values, axis=0)
    out = np.empty_like(values)
    out[:window] = csum[:window] / np.arange(1, window + 1)[:, None]
    out[window:] = (csum[window:] - csum[:-window]) / window
    return out


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so each column's first nonzero entry is positive."""
    V = V.copy()
    for k in range(V.shape[1]):
        col = V[:, k]
        nz = np.nonzero(np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300))[0]
        if nz.size and col[nz[0]] < 0:
            V[:, k] = -col
    return V


def orth_complement(omega: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the null space of omega' (n x (n-q)), sign fixed."""
    omega = np.atleast_2d(omega)
    n, q = omega.shape
    if q >= n:
        return np.zeros((n, 0))
    U, s, _ = np.linalg.svd(omega, full_matrices=True)
    rank = int(np.sum(s > 1e-12 * (s[0] if s.size else 1.0)))
    if rank < q:
        raise ValueError("omega is not full column rank")
    return fix_signs(U[:, q:])


def subspace_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Rotation-invariant distance between column spaces of A and B.

    Frobenius norm of the difference of the orthogonal projectors, divided
    by sqrt(2 q); lies in [0, 1] for equal-width full-rank inputs.
    """
    QA, _ = np.linalg.qr(np.atleast_2d(A))
    QB, _ = np.linalg.qr(np.atleast_2d(B))
    PA = QA @ QA.T
    PB = QB @ QB.T
    q = max(A.shape[1], B.shape[1])
    return float(np.linalg.norm(PA - PB, "fro") / np.sqrt(2 * q))
