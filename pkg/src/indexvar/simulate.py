"""Data-generating-process simulators for every model class.

All simulators are deterministic given (params, seed), start from zero
initial values, and discard a burn-in stretch. Passing an explicit shocks
array (burn + T rows of innovations e_t) bypasses the random draw, which is
how the nesting identities between simulators are exercised.
"""

from __future__ import annotations

import numpy as np

from .params import (
    CIAARParams,
    DRVARParams,
    IAARParams,
    MAIParams,
    VHARIParams,
)
from .tscore import (
    Panel,
    companion_matrix,
    companion_spectral_radius,
    fix_signs,
    orth_complement,
)

__all__ = [
    "simulate_var",
    "simulate_mai",
    "simulate_iaar",
    "simulate_vhari",
    "simulate_drvar",
    "simulate_ciaar",
    "random_mai_params",
    "random_iaar_params",
    "random_vhari_params",
    "random_drvar_params",
    "random_ciaar_params",
]

DEFAULT_BURN = 500


def draw_shocks(
    sigma: np.ndarray,
    length: int,
    seed: int,
    dist: str = "gaussian",
) -> np.ndarray:
    """Innovation draws with covariance sigma.

    dist="lognormal_garch" replaces the Gaussian marginals by standardized
    log-normals scaled by per-series GARCH(1,1) variances (unit unconditional
    variance), a stress distribution for the estimators.
    """
    rng = np.random.default_rng(seed)
    n = sigma.shape[0]
    L = np.linalg.cholesky(sigma)
    if dist == "gaussian":
        return rng.standard_normal((length, n)) @ L.T
    if dist == "lognormal_garch":
        z = rng.standard_normal((length, n))
        # standardized log-normal: mean 0, variance 1
        u = (np.exp(z) - np.exp(0.5)) / np.sqrt(np.exp(2.0) - np.exp(1.0))
        a, b = 0.05, 0.90
        h = np.empty((length, n))
        h[0] = 1.0
        for t in range(1, length):
            h[t] = (1.0 - a - b) + a * u[t - 1] ** 2 * h[t - 1] + b * h[t - 1]
        return (u * np.sqrt(h)) @ L.T
    raise ValueError(f"unknown shock distribution {dist!r}")


def _check_stationary(radius: float) -> None:
    if radius >= 1.0 - 1e-8:
        raise ValueError(f"nonstationary parameters: companion spectral radius {radius:.6f}")


def _shocks_or_draw(shocks, sigma, length, seed, dist):
    if shocks is not None:
        shocks = np.asarray(shocks, float)
        if shocks.shape != (length, sigma.shape[0]):
            raise ValueError(f"shocks must have shape ({length}, {sigma.shape[0]})")
        return shocks
    return draw_shocks(sigma, length, seed, dist)


def simulate_var(
    phis: list[np.ndarray],
    sigma: np.ndarray,
    T: int,
    burn: int = DEFAULT_BURN,
    seed: int = 0,
    shocks: np.ndarray | None = None,
    dist: str = "gaussian",
) -> Panel:
    """Simulate a stationary VAR(p) given its coefficient matrices."""
    if T <= 0 or burn < 0:
        raise ValueError("need T > 0 and burn >= 0")
    _check_stationary(companion_spectral_radius(phis))
    n = phis[0].shape[0]
    p = len(phis)
    eps = _shocks_or_draw(shocks, np.asarray(sigma), burn + T, seed, dist)
    Y = np.zeros((burn + T, n))
    for t in range(burn + T):
        acc = eps[t].copy()
        for j, phi in enumerate(phis, start=1):
            if t - j >= 0:
                acc += phi @ Y[t - j]
        Y[t] = acc
    return Panel(Y[burn:])


def simulate_mai(
    params: MAIParams,
    T: int,
    burn: int = DEFAULT_BURN,
    seed: int = 0,
    shocks: np.ndarray | None = None,
    dist: str = "gaussian",
) -> Panel:
    """Simulate Y_t = sum_j alpha_j omega' Y_{t-j} + e_t."""
    if T <= 0 or burn < 0:
        raise ValueError("need T > 0 and burn >= 0")
    _check_stationary(params.spectral_radius())
    n, p = params.n, params.p
    eps = _shocks_or_draw(shocks, params.sigma, burn + T, seed, dist)
    omega_t = params.omega.T
    Y = np.zeros((burn + T, n))
    for t in range(burn + T):
        acc = eps[t].copy()
        for j, a in enumerate(params.alphas, start=1):
            if t - j >= 0:
                acc += a @ (omega_t @ Y[t - j])
        Y[t] = acc
    return Panel(Y[burn:])


def simulate_iaar(
    params: IAARParams,
    T: int,
    burn: int = DEFAULT_BURN,
    seed: int = 0,
    shocks: np.ndarray | None = None,
    dist: str = "gaussian",
) -> Panel:
    """Simulate the index-augmented autoregression (own-lag diagonals plus indexes)."""
    if T <= 0 or burn < 0:
        raise ValueError("need T > 0 and burn >= 0")
    _check_stationary(params.spectral_radius())
    n = params.n
    eps = _shocks_or_draw(shocks, params.sigma, burn + T, seed, dist)
    omega_t = params.omega.T
    Y = np.zeros((burn + T, n))
    for t in range(burn + T):
        acc = eps[t].copy()
        for j, d in enumerate(params.ds, start=1):
            if t - j >= 0:
                acc += d * Y[t - j]
        for j, a in enumerate(params.alphas, start=1):
            if t - j >= 0:
                acc += a @ (omega_t @ Y[t - j])
        Y[t] = acc
    return Panel(Y[burn:])


def simulate_vhari(
    params: VHARIParams,
    T: int,
    burn: int = DEFAULT_BURN,
    seed: int = 0,
    shocks: np.ndarray | None = None,
    dist: str = "gaussian",
) -> Panel:
    """Simulate the daily VHARI recursion with internally built 5/22-day means."""
    if T <= 0:
        raise ValueError("need T > 0")
    if burn < 22:
        raise ValueError("VHARI simulation needs burn >= 22 to fill the monthly window")
    _check_stationary(params.spectral_radius())
    n = params.n
    eps = _shocks_or_draw(shocks, params.sigma, burn + T, seed, dist)
    omega_t = params.omega.T
    Y = np.zeros((burn + T, n))
    for t in range(burn + T):
        acc = eps[t].copy()
        if t >= 1:
            yd = Y[t - 1]
            yw = Y[max(t - 5, 0): t].mean(axis=0)
            ym = Y[max(t - 22, 0): t].mean(axis=0)
            acc += params.alpha_d @ (omega_t @ yd)
            acc += params.alpha_w @ (omega_t @ yw)
            acc += params.alpha_m @ (omega_t @ ym)
        Y[t] = acc
    return Panel(Y[burn:])


def simulate_drvar(
    params: DRVARParams,
    T: int,
    burn: int = DEFAULT_BURN,
    seed: int = 0,
    shocks: np.ndarray | None = None,
    dist: str = "gaussian",
) -> Panel:
    """Simulate Y_t = sum_j omega phi_j f_{t-j} + e_t with f_t = omega' Y_t."""
    if T <= 0 or burn < 0:
        raise ValueError("need T > 0 and burn >= 0")
    _check_stationary(params.spectral_radius())
    n, q = params.n, params.q
    eps = _shocks_or_draw(shocks, params.sigma, burn + T, seed, dist)
    omega = params.omega
    Y = np.zeros((burn + T, n))
    f = np.zeros((burn + T, q))
    for t in range(burn + T):
        acc = eps[t].copy()
        for j, phi in enumerate(params.phis, start=1):
            if t - j >= 0:
                acc += omega @ (phi @ f[t - j])
        Y[t] = acc
        f[t] = omega.T @ acc
    return Panel(Y[burn:])


def simulate_ciaar(
    params: CIAARParams,
    T: int,
    burn: int = DEFAULT_BURN,
    seed: int = 0,
    shocks: np.ndarray | None = None,
    dist: str = "gaussian",
) -> Panel:
    """Simulate an I(1) panel from the cointegrated index-augmented model.

    The panel has exactly n - r unit roots and stationary beta' Y_t. Raises
    when the parameters violate the I(1) conditions (singular
    alpha0_perp' PiBar beta_perp or explosive companion roots).
    """
    if T <= 0 or burn < 0:
        raise ValueError("need T > 0 and burn >= 0")
    _validate_i1(params)
    n = params.n
    eps = _shocks_or_draw(shocks, params.sigma, burn + T, seed, dist)
    omega_t = params.omega.T
    ec = params.alpha0 @ params.gamma.T if params.r > 0 else None
    Y = np.zeros((burn + T, n))
    dY = np.zeros((burn + T, n))
    for t in range(burn + T):
        acc = eps[t].copy()
        for j, d in enumerate(params.ds, start=1):
            if t - j >= 0:
                acc += d * dY[t - j]
        for j, a in enumerate(params.alphas, start=1):
            if t - j >= 0:
                acc += a @ (omega_t @ dY[t - j])
        if ec is not None and t >= 1:
            acc += ec @ (omega_t @ Y[t - 1])
        dY[t] = acc
        Y[t] = (Y[t - 1] if t >= 1 else 0.0) + acc
    return Panel(Y[burn:])


def _validate_i1(params: CIAARParams) -> None:
    i1 = params.i1_matrix()
    sv = np.linalg.svd(i1, compute_uv=False)
    if sv.size and (sv[0] == 0.0 or sv[-1] < 1e-8 * sv[0]):
        raise ValueError(
            "parameters induce I(2) behavior: alpha0_perp' PiBar beta_perp is singular"
        )
    eigs = np.linalg.eigvals(companion_matrix(params.var_coeffs()))
    mods = np.abs(eigs)
    unit = np.abs(eigs - 1.0) < 1e-6
    if np.any(mods[~unit] >= 1.0 - 1e-8):
        raise ValueError("explosive or non-unit boundary companion roots")
    if int(unit.sum()) != params.n - params.r:
        raise ValueError(
            f"expected {params.n - params.r} unit roots, found {int(unit.sum())}"
        )


# ---------------------------------------------------------------------------
# Deterministic reference DGP draws (tests, Monte Carlo mode, CLI simulate)
# ---------------------------------------------------------------------------


def _random_omega(rng, n: int, q: int) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.standard_normal((n, q)))
    return fix_signs(Q)


def _random_sigma(rng, n: int, strength: float = 0.3) -> np.ndarray:
    B = rng.standard_normal((n, n)) / np.sqrt(n)
    return np.eye(n) + strength * (B @ B.T)


def _index_loadings(rng, omega, diag_coeffs, cross_scale: float):
    """alpha = omega B + omega_perp C so the index VAR has coefficients B."""
    n, q = omega.shape
    operp = orth_complement(omega)
    out = []
    for b in diag_coeffs:
        B = np.diag(b) + 0.1 * rng.standard_normal((q, q))
        C = cross_scale * rng.standard_normal((n - q, q))
        out.append(omega @ B + operp @ C)
    return out


def _zero_diagonal_loading(alpha: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Project each row of alpha so (alpha omega')_ii = 0."""
    out = alpha.copy()
    for i in range(omega.shape[0]):
        w = omega[i]
        nrm = w @ w
        if nrm > 0:
            out[i] -= (out[i] @ w) / nrm * w
    return out


def random_mai_params(
    n: int, q: int, p: int, seed: int = 0, radius: float = 0.7
) -> MAIParams:
    """Stationary MAI draw with index-VAR spectral radius close to `radius`."""
    rng = np.random.default_rng(seed)
    for attempt in range(64):
        shrink = 0.9 ** attempt
        omega = _random_omega(rng, n, q)
        diag_coeffs = [
            shrink * np.linspace(radius, 0.3 * radius, q) * (0.35 ** j) for j in range(p)
        ]
        alphas = _index_loadings(rng, omega, diag_coeffs, cross_scale=0.4 * shrink)
        params = MAIParams(omega, alphas, _random_sigma(rng, n))
        if params.spectral_radius() < 0.97:
            return params
    raise RuntimeError("could not draw stationary MAI parameters")


def random_iaar_params(
    n: int, q: int, p: int, s: int, seed: int = 0, diag: float = 0.3
) -> IAARParams:
    """Stationary IAAR draw with own-lag diagonals around `diag`."""
    rng = np.random.default_rng(seed)
    for attempt in range(64):
        shrink = 0.9 ** attempt
        omega = _random_omega(rng, n, q)
        ds = [shrink * diag * rng.uniform(0.7, 1.0, n) * (0.5 ** j) for j in range(p)]
        diag_coeffs = [shrink * np.linspace(0.5, 0.2, max(q, 1)) * (0.35 ** j) for j in range(s)]
        alphas = _index_loadings(rng, omega, diag_coeffs, cross_scale=0.3 * shrink) if q else []
        params = IAARParams(ds, alphas, omega, _random_sigma(rng, n))
        if params.spectral_radius() < 0.97:
            return params
    raise RuntimeError("could not draw stationary IAAR parameters")


def random_vhari_params(n: int, q: int, seed: int = 0) -> VHARIParams:
    """Persistent VHARI draw mimicking realized-volatility cascades."""
    rng = np.random.default_rng(seed)
    for attempt in range(64):
        shrink = 0.9 ** attempt
        omega = _random_omega(rng, n, q)
        ad, aw, am = _index_loadings(
            rng,
            omega,
            [shrink * np.full(q, 0.35), shrink * np.full(q, 0.30), shrink * np.full(q, 0.22)],
            cross_scale=0.25 * shrink,
        )
        params = VHARIParams(omega, ad, aw, am, _random_sigma(rng, n))
        if params.spectral_radius() < 0.98:
            return params
    raise RuntimeError("could not draw stationary VHARI parameters")


def random_drvar_params(
    n: int,
    q: int,
    p: int,
    seed: int = 0,
    radius: float = 0.8,
    common_variance: float = 2.0,
) -> DRVARParams:
    """DRVAR draw with orthonormal omega and index-VAR radius close to `radius`.

    common_variance adds innovation variance along the index directions, so
    the factors stay pervasive as n grows.
    """
    rng = np.random.default_rng(seed)
    for attempt in range(64):
        shrink = 0.9 ** attempt
        omega = _random_omega(rng, n, q)
        phis = [
            shrink * np.diag(np.linspace(radius, 0.4 * radius, q)) * (0.35 ** j)
            + 0.1 * shrink * rng.standard_normal((q, q))
            for j in range(p)
        ]
        sigma = _random_sigma(rng, n, strength=0.2) + common_variance * (omega @ omega.T)
        params = DRVARParams(omega, phis, sigma)
        if params.spectral_radius() < 0.97:
            return params
    raise RuntimeError("could not draw stationary DRVAR parameters")


def random_ciaar_params(
    n: int,
    q: int,
    r: int,
    p: int,
    s: int,
    seed: int = 0,
    diag: float = 0.3,
    adjustment: float = 0.4,
    diag_orthogonal_loadings: bool = False,
) -> CIAARParams:
    """I(1)-valid CIAAR draw.

    p and s follow the model-order convention: p-1 diagonal difference lags
    and s-1 index difference lags (p = 0 or 1 means none, likewise s).
    `adjustment` controls how fast the error-correction term pulls the
    cointegration relations back to equilibrium. With
    diag_orthogonal_loadings the index loadings are projected so that
    alpha_j omega' has a zero diagonal, leaving all own-lag dynamics to the
    D_j; on such draws the diagonal-stripping initialization is unbiased.
    """
    rng = np.random.default_rng(seed)
    nd, na = max(p - 1, 0), max(s - 1, 0)
    for _ in range(256):
        omega = _random_omega(rng, n, q)
        operp = orth_complement(omega)
        gamma = np.vstack([np.eye(r), 0.5 * rng.standard_normal((q - r, r))]) if r else np.zeros((q, 0))
        ds = [diag * rng.uniform(0.6, 1.0, n) * (0.5 ** j) for j in range(nd)]
        diag_coeffs = [np.linspace(0.4, 0.15, q) * (0.6 ** j) for j in range(na)]
        alphas = _index_loadings(rng, omega, diag_coeffs, cross_scale=0.25)
        if diag_orthogonal_loadings:
            alphas = [_zero_diagonal_loading(a, omega) for a in alphas]
        if r:
            a0 = -adjustment * gamma @ np.linalg.inv(gamma.T @ gamma)
            alpha0 = omega @ (a0 + 0.05 * rng.standard_normal((q, r)))
            alpha0 = alpha0 + 0.1 * operp @ rng.standard_normal((n - q, r))
        else:
            alpha0 = np.zeros((n, 0))
        params = CIAARParams(ds, alpha0, gamma, omega, alphas, _random_sigma(rng, n))
        try:
            _validate_i1(params)
        except ValueError:
            continue
        return params
    raise RuntimeError("could not draw I(1)-valid CIAAR parameters")
