"""The fBm Volterra kernel, its integrals, joint covariances, and exact sampling.

The kernel K_H(t, s) is evaluated in two equivalent closed forms:

* hypergeometric:  c_H (t-s)^(H-1/2) F(H-1/2, 1/2-H, H+1/2; 1 - t/s)
* integral:        c_H [ (t/s)^(H-1/2) (t-s)^(H-1/2)
                         - (H-1/2) s^(1/2-H) int_s^t u^(H-3/2) (u-s)^(H-1/2) du ]

and is homogeneous: K_H(t, s) = t^(H-1/2) K_H(1, s/t).  All kernel integrals
therefore reduce to the unit profile k(v) = K_H(1, v), whose cumulative
moments are precomputed once per H (see :mod:`modalbridge.profiles`).  k has
algebraic endpoint behaviour v^(-|H-1/2|) at 0 and (1-v)^(H-1/2) at 1, which
the profile quadrature absorbs exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import roots_jacobi

from .special import beta_fn, gamma_fn, hyp2f1

__all__ = [
    "Hurst",
    "TimeGrid",
    "kernel_hyp",
    "kernel_alt",
    "autocovariance",
    "kernel_total_integral",
    "kernel_partial_integral",
    "kernel_partial_integral_quad",
    "joint_cov_matrix",
    "sample_joint_paths",
    "cholesky_with_jitter",
    "NumericalConditioningError",
]


class NumericalConditioningError(RuntimeError):
    """Raised when a covariance matrix cannot be factorized even with jitter."""


@dataclass(frozen=True)
class Hurst:
    """Hurst exponent with its cached kernel constants.

    c_H = [2H Gamma(3/2-H) / (Gamma(2-2H) Gamma(H+1/2))]^(1/2) and
    kappa_H = c_H B(3/2-H, H+1/2) / (H+1/2); both are exactly 1 at H = 1/2.
    """

    H: float
    c_H: float = field(init=False)
    kappa_H: float = field(init=False)

    def __post_init__(self) -> None:
        H = self.H
        if not 0.0 < H < 1.0:
            raise ValueError(f"Hurst exponent must lie in (0, 1), got {H}")
        if H == 0.5:
            c, kappa = 1.0, 1.0
        else:
            c = float(np.sqrt(2.0 * H * gamma_fn(1.5 - H)
                              / (gamma_fn(2.0 - 2.0 * H) * gamma_fn(H + 0.5))))
            kappa = c * beta_fn(1.5 - H, H + 0.5) / (H + 0.5)
        object.__setattr__(self, "c_H", c)
        object.__setattr__(self, "kappa_H", kappa)

    @property
    def is_brownian(self) -> bool:
        return self.H == 0.5


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < t_1 < ... < t_n = T."""

    T: float
    n: int

    def __post_init__(self) -> None:
        if not self.T > 0.0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        if self.n < 2:
            raise ValueError(f"grid needs at least 2 steps, got n={self.n}")

    @property
    def dt(self) -> float:
        return self.T / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n + 1)


# -- kernel evaluation -------------------------------------------------------

def _check_ts(t: float, s) -> None:
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0) or np.any(s >= t):
        raise ValueError(f"kernel requires 0 < s < t, got t={t}, s={s}")


def kernel_hyp(t: float, s, hurst: Hurst):
    """K_H(t, s) via the hypergeometric form; vectorized over s in (0, t)."""
    _check_ts(t, s)
    s = np.asarray(s, dtype=float)
    H = hurst.H
    if hurst.is_brownian:
        out = np.ones_like(s)
        return float(out) if out.ndim == 0 else out
    z = 1.0 - t / s
    out = hurst.c_H * (t - s) ** (H - 0.5) * hyp2f1(H - 0.5, 0.5 - H, H + 0.5, z)
    return float(out) if np.ndim(out) == 0 else out


def kernel_alt(t: float, s, hurst: Hurst, order: int = 80):
    """K_H(t, s) via the integral form.

    The inner integral int_s^t u^(H-3/2) (u-s)^(H-1/2) du is computed with a
    Gauss-Jacobi rule whose weight absorbs the (u-s)^(H-1/2) endpoint factor.
    """
    _check_ts(t, s)
    H = hurst.H
    scalar = np.ndim(s) == 0
    if hurst.is_brownian:
        out = np.ones_like(np.asarray(s, dtype=float))
        return float(out) if scalar else out
    s = np.atleast_1d(np.asarray(s, dtype=float))
    x, w = roots_jacobi(order, 0.0, H - 0.5)
    # u = s + (t - s) * y, y in (0, 1); integral = (t-s)^(H+1/2) int y^(H-1/2) u^(H-3/2) dy
    y = 0.5 * (x + 1.0)
    u = s[:, None] + (t - s)[:, None] * y[None, :]
    inner = (t - s) ** (H + 0.5) * 0.5 ** (H + 0.5) * (w[None, :] * u ** (H - 1.5)).sum(axis=1)
    out = hurst.c_H * ((t / s) ** (H - 0.5) * (t - s) ** (H - 0.5)
                       - (H - 0.5) * s ** (0.5 - H) * inner)
    return float(out[0]) if scalar else out


def autocovariance(s, t, hurst: Hurst):
    """fBm autocovariance R_H(s, t) = (s^2H + t^2H - |t-s|^2H) / 2."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0.0) or np.any(t < 0.0):
        raise ValueError("autocovariance requires s, t >= 0")
    two_h = 2.0 * hurst.H
    out = 0.5 * (s ** two_h + t ** two_h - np.abs(t - s) ** two_h)
    return float(out) if out.ndim == 0 else out


def kernel_total_integral(t: float, hurst: Hurst) -> float:
    """int_0^t K_H(t, u) du = kappa_H t^(H+1/2), in closed form."""
    if not t > 0.0:
        raise ValueError(f"t must be positive, got {t}")
    return hurst.kappa_H * t ** (hurst.H + 0.5)


# -- unit kernel profile ------------------------------------------------------

def _leading_coef(hurst: Hurst) -> float:
    """A_H with K_H(1, v) ~ A_H v^(-|H-1/2|) as v -> 0."""
    H = hurst.H
    if H < 0.5:
        return hurst.c_H * gamma_fn(H + 0.5) * gamma_fn(1.0 - 2.0 * H) / gamma_fn(0.5 - H)
    return (hurst.c_H * gamma_fn(H + 0.5) * gamma_fn(2.0 * H - 1.0)
            / (gamma_fn(H - 0.5) * gamma_fn(2.0 * H)))


def _unit_kernel(v: np.ndarray, hurst: Hurst) -> np.ndarray:
    """k(v) = K_H(1, v) with a guard for v below double-precision reach."""
    H = hurst.H
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    tiny = v < 1e-270
    if np.any(tiny):
        out[tiny] = _leading_coef(hurst) * v[tiny] ** (-abs(H - 0.5))
    rest = ~tiny
    vv = v[rest]
    z = 1.0 - 1.0 / vv
    out[rest] = hurst.c_H * (1.0 - vv) ** (H - 0.5) * hyp2f1(H - 0.5, 0.5 - H, H + 0.5, z)
    return out


_profile_cache: dict = {}


def kernel_profile(hurst: Hurst):
    """Cached :class:`SingularProfile` of k(v) = K_H(1, v)."""
    from .profiles import SingularProfile

    key = hurst.H
    prof = _profile_cache.get(key)
    if prof is None:
        H = hurst.H
        b0 = -abs(H - 0.5)
        a1 = H - 0.5
        A = _leading_coef(hurst)

        def resid0(v):
            v = np.asarray(v, dtype=float)
            out = np.empty_like(v)
            tiny = v < 1e-270
            out[tiny] = A
            vv = np.maximum(v, 1e-270)
            rest = ~tiny
            out[rest] = _unit_kernel(vv[rest], hurst) * vv[rest] ** (-b0)
            return out

        def resid1(v):
            v = np.asarray(v, dtype=float)
            z = 1.0 - 1.0 / np.maximum(v, 1e-270)
            return hurst.c_H * hyp2f1(H - 0.5, 0.5 - H, H + 0.5, z)

        def w(v):
            return _unit_kernel(v, hurst)

        if len(_profile_cache) >= 16:
            _profile_cache.pop(next(iter(_profile_cache)))
        prof = SingularProfile(resid0, resid1, w, b0, a1)
        _profile_cache[key] = prof
    return prof


def kernel_partial_integral(tau: float, t: float, hurst: Hurst):
    """int_0^tau K_H(t, u) du by singularity-aware quadrature; vectorized over tau.

    Uses the precomputed cumulative moment of the unit kernel profile, built by
    panelled Gauss-Jacobi quadrature honoring the u^(-|H-1/2|) behaviour at 0
    and the (t-u)^(H-1/2) behaviour at t.
    """
    if not t > 0.0:
        raise ValueError(f"t must be positive, got {t}")
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0.0) or np.any(tau_arr > t * (1.0 + 1e-12)):
        raise ValueError(f"tau must lie in [0, t], got tau={tau}, t={t}")
    if hurst.is_brownian:
        out = np.minimum(tau_arr, t)
        return float(out) if out.ndim == 0 else out
    H = hurst.H
    out = t ** (H + 0.5) * kernel_profile(hurst).moment0(tau_arr / t)
    return float(out) if np.ndim(tau) == 0 else out


def kernel_partial_integral_quad(tau: float, t: float, hurst: Hurst,
                                 epsrel: float = 1e-11) -> float:
    """Adaptive (QUADPACK QAWS) evaluation of int_0^tau K_H(t, u) du.

    Independent of the profile route; used as a cross-check oracle in tests.
    QAWS integrates u^b (tau-u)^a f(u), so f carries the smooth remainder of
    the kernel after the endpoint factors are peeled off.
    """
    if not 0.0 <= tau <= t:
        raise ValueError(f"tau must lie in [0, t], got tau={tau}, t={t}")
    if tau == 0.0:
        return 0.0
    if hurst.is_brownian:
        return tau
    H = hurst.H
    b0 = -abs(H - 0.5)
    at_top = tau == t
    a = H - 0.5 if at_top else 0.0

    def f(u):
        if u < 1e-250 * t:
            lead = _leading_coef(hurst) * t ** (-b0)
            return lead if at_top else lead * t ** (H - 0.5)
        fac = float(hyp2f1(H - 0.5, 0.5 - H, H + 0.5, 1.0 - t / u))
        if at_top:
            return hurst.c_H * fac * u ** (-b0)
        return hurst.c_H * fac * (t - u) ** (H - 0.5) * u ** (-b0)

    val, _ = quad(f, 0.0, tau, weight="alg", wvar=(b0, a), limit=200,
                  epsabs=1e-14, epsrel=epsrel)
    return val


# -- joint covariance and exact sampling --------------------------------------

def cholesky_with_jitter(cov: np.ndarray, max_jitter_frac: float = 1e-10):
    """Cholesky factor of a symmetric PSD matrix, with escalating jitter.

    Jitter eps * I is added with eps doubling from 1e-14 * trace up to
    max_jitter_frac * trace before giving up.
    """
    cov = np.asarray(cov, dtype=float)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    trace = float(np.trace(cov))
    eps = 1e-14 * trace
    while eps <= max_jitter_frac * trace:
        try:
            return np.linalg.cholesky(cov + eps * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError:
            eps *= 2.0
    raise NumericalConditioningError(
        f"Cholesky failed for {cov.shape[0]}x{cov.shape[0]} matrix even with "
        f"jitter up to {max_jitter_frac:g} * trace"
    )


def joint_cov_matrix(grid: TimeGrid, hurst: Hurst) -> np.ndarray:
    """Covariance of (B_{t_1..t_n}, B^H_{t_1..t_n}) under the driftless law.

    Block layout: index 0..n-1 holds the Brownian nodes, n..2n-1 the fBm
    nodes.  Cov(B_s, B^H_t) = int_0^(s ^ t) K_H(t, u) du by the Ito isometry.
    """
    t = grid.nodes[1:]
    n = grid.n
    cov = np.empty((2 * n, 2 * n))
    cov[:n, :n] = np.minimum(t[:, None], t[None, :])
    cov[n:, n:] = autocovariance(t[:, None], t[None, :], hurst)
    cross = np.empty((n, n))
    for j in range(n):
        # column j: Cov(B_{t_i}, B^H_{t_j}) = partial integral at min(t_i, t_j)
        cross[:, j] = kernel_partial_integral(np.minimum(t, t[j]), t[j], hurst)
    cov[:n, n:] = cross
    cov[n:, :n] = cross.T
    return cov


def draw_joint_paths(grid: TimeGrid, hurst: Hurst, rng: np.random.Generator,
                     count: int, chol=None):
    """Joint (B, B^H) node draw from a generator; see sample_joint_paths.

    At H = 1/2 the joint covariance is exactly singular (B^H = B), so the
    Brownian path is drawn directly and duplicated instead of jittering.
    """
    n = grid.n
    b = np.zeros((count, n + 1))
    bh = np.zeros((count, n + 1))
    if hurst.is_brownian:
        incr = math.sqrt(grid.dt) * rng.standard_normal((count, n))
        b[:, 1:] = np.cumsum(incr, axis=1)
        bh[:, 1:] = b[:, 1:]
        return b, bh
    if chol is None:
        chol = cholesky_with_jitter(joint_cov_matrix(grid, hurst))
    z = rng.standard_normal((count, 2 * n))
    paths = z @ chol.T
    b[:, 1:] = paths[:, :n]
    bh[:, 1:] = paths[:, n:]
    return b, bh


def sample_joint_paths(grid: TimeGrid, hurst: Hurst, seed: int, count: int):
    """Exact joint (B, B^H) paths via Cholesky of the joint covariance.

    Returns (b_paths, bh_paths), each of shape (count, n + 1) with zero first
    column.  Deterministic for a fixed seed (counter-based Philox stream).
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    return draw_joint_paths(grid, hurst, rng, count)
