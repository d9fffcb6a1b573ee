"""Gaussian conditioning and the modal path of the pinned driftless pair.

Under the drift-removed measure, (X, Y) is a Brownian motion coupled with a
fractional Brownian motion through the Volterra kernel.  Conditioning the
pair on its terminal point gives a Gaussian bridge whose mean path (the modal
path) is affine in the endpoint displacement:

    x_t = x0 + m11 (x - x0) + m12 (y - y0)
    y_t = y0 + m21 (x - x0) + m22 (y - y0)

with coefficients built from t/T powers, the fBm autocovariance, and the
partial kernel integral int_0^t K_H(T, s) ds.  At H = 1/2 the path is the
straight line; at rho = 0 the two components decouple exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .driftspec import ModelSpec
from .kernel import (Hurst, NumericalConditioningError, TimeGrid,
                     autocovariance, kernel_partial_integral)

__all__ = [
    "GaussianConditioner",
    "condition_gaussian",
    "CovBlocks",
    "cov_blocks",
    "modal_coeffs",
    "modal_path",
    "ModalPath",
]


# -- conditional Gaussian --------------------------------------------------------

@dataclass(frozen=True)
class GaussianConditioner:
    """A joint Gaussian (mean, cov) with a subset of coordinates observed."""

    mean: np.ndarray
    cov: np.ndarray
    observed_indices: np.ndarray
    observed_values: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        idx = np.asarray(self.observed_indices, dtype=int)
        vals = np.asarray(self.observed_values, dtype=float)
        if cov.shape != (len(mean), len(mean)):
            raise ValueError("cov must be square and match mean")
        if not np.allclose(cov, cov.T, atol=1e-10 * max(1.0, np.abs(cov).max())):
            raise ValueError("cov must be symmetric")
        if len(idx) != len(vals):
            raise ValueError("observed indices and values must align")
        if len(set(idx.tolist())) != len(idx):
            raise ValueError("observed indices must be distinct")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "observed_indices", idx)
        object.__setattr__(self, "observed_values", vals)


def _cho_factor_with_jitter(mat: np.ndarray):
    try:
        return cho_factor(mat, lower=True)
    except np.linalg.LinAlgError:
        pass
    trace = float(np.trace(mat))
    eps = 1e-14 * trace
    while eps <= 1e-10 * trace:
        try:
            return cho_factor(mat + eps * np.eye(mat.shape[0]), lower=True)
        except np.linalg.LinAlgError:
            eps *= 2.0
    raise NumericalConditioningError(
        f"observed block of size {mat.shape[0]} is singular even with jitter"
    )


def condition_gaussian(g: GaussianConditioner):
    """Conditional (mean, cov) of the unobserved coordinates given the observed.

    cond_mean = mu_X + S_XY S_YY^-1 (y - mu_Y);
    cond_cov  = S_XX - S_XY S_YY^-1 S_YX, symmetrized.
    """
    n = len(g.mean)
    obs = g.observed_indices
    keep = np.setdiff1d(np.arange(n), obs)
    s_yy = g.cov[np.ix_(obs, obs)]
    s_xy = g.cov[np.ix_(keep, obs)]
    s_xx = g.cov[np.ix_(keep, keep)]
    chol = _cho_factor_with_jitter(s_yy)
    resid = g.observed_values - g.mean[obs]
    cond_mean = g.mean[keep] + s_xy @ cho_solve(chol, resid)
    cond_cov = s_xx - s_xy @ cho_solve(chol, s_xy.T)
    cond_cov = 0.5 * (cond_cov + cond_cov.T)
    return cond_mean, cond_cov


# -- covariance blocks of (X_t, Y_t; X_T, Y_T) under the driftless law -----------

@dataclass(frozen=True)
class CovBlocks:
    """Sigma(T) (terminal 2x2) and Sigma(t; T) (per-node 2x2 cross blocks)."""

    sigma_T: np.ndarray
    sigma_tT: np.ndarray  # shape (n+1, 2, 2)


def terminal_cov(model: ModelSpec) -> np.ndarray:
    """Sigma(T) = [[T, rho_H T^(H+1/2)], [rho_H T^(H+1/2), T^(2H)]]."""
    T, H = model.T, model.H
    off = model.rho_H * T ** (H + 0.5)
    return np.array([[T, off], [off, T ** (2.0 * H)]])


def cov_blocks(model: ModelSpec, grid: TimeGrid) -> CovBlocks:
    """Covariance blocks on the grid.

    Sigma(t;T) rows: [[t, rho int_0^t K_H(T,u) du],
                      [rho_H t^(H+1/2), R_H(t, T)]].
    """
    if abs(grid.T - model.T) > 1e-12 * model.T:
        raise ValueError("grid horizon must match the model horizon")
    t = grid.nodes
    T, H = model.T, model.H
    hurst = model.hurst
    part = kernel_partial_integral(t, T, hurst)
    blocks = np.empty((grid.n + 1, 2, 2))
    blocks[:, 0, 0] = t
    blocks[:, 0, 1] = model.rho * part
    blocks[:, 1, 0] = model.rho_H * t ** (H + 0.5)
    blocks[:, 1, 1] = autocovariance(t, T, hurst)
    return CovBlocks(sigma_T=terminal_cov(model), sigma_tT=blocks)


# -- modal path -------------------------------------------------------------------

@dataclass(frozen=True)
class ModalPath:
    """Conditional-mean trajectory of the pinned pair on a grid."""

    grid: TimeGrid
    m11: np.ndarray
    m12: np.ndarray
    m21: np.ndarray
    m22: np.ndarray
    x_path: np.ndarray
    y_path: np.ndarray
    endpoint: tuple


def modal_coeffs(model: ModelSpec, grid: TimeGrid):
    """The four bridge coefficients m11, m12, m21, m22 on the grid nodes."""
    if model.rho_bar_H_sq < 1e-10:
        raise ValueError("degenerate rho_bar_H; modal coefficients undefined")
    t = grid.nodes
    T, H = model.T, model.H
    hurst = model.hurst
    frac = t / T
    if hurst.is_brownian:
        m11 = frac.copy()
        m22 = frac.copy()
        m12 = np.zeros_like(t)
        m21 = np.zeros_like(t)
        return m11, m12, m21, m22
    r_tT = autocovariance(t, T, hurst)
    pow_h = t ** (H + 0.5)
    if model.rho == 0.0:
        m11 = frac.copy()
        m22 = r_tT / T ** (2.0 * H)
        m12 = np.zeros_like(t)
        m21 = np.zeros_like(t)
        return m11, m12, m21, m22
    rho, rho_h = model.rho, model.rho_H
    denom = model.rho_bar_H_sq
    part = kernel_partial_integral(t, T, hurst)
    m11 = (frac - rho * rho_h / T ** (H + 0.5) * part) / denom
    m12 = (-rho_h * t / T ** (H + 0.5) + rho / T ** (2.0 * H) * part) / denom
    m21 = rho_h / denom * (pow_h / T - r_tT / T ** (H + 0.5))
    m22 = (-rho_h ** 2 * frac ** (H + 0.5) + r_tT / T ** (2.0 * H)) / denom
    return m11, m12, m21, m22


def modal_path(model: ModelSpec, grid: TimeGrid, endpoint) -> ModalPath:
    """Modal (conditional mean) path from (x0, y0) to the given endpoint."""
    x, y = float(endpoint[0]), float(endpoint[1])
    m11, m12, m21, m22 = modal_coeffs(model, grid)
    dx = x - model.x0
    dy = y - model.y0
    return ModalPath(
        grid=grid,
        m11=m11, m12=m12, m21=m21, m22=m22,
        x_path=model.x0 + m11 * dx + m12 * dy,
        y_path=model.y0 + m21 * dx + m22 * dy,
        endpoint=(x, y),
    )
