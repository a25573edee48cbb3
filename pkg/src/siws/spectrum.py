"""Scale-invariant Wigner spectra, ambiguity moments and Cohen-class maps.

Conventions
-----------
Time-scale maps are ``(m_count, m_count)`` arrays indexed by ``(t_m, xi_j)``.

Ambiguity maps are indexed by ``(theta_q, P)`` where ``theta_q`` is the
frequency grid of ``grid.padded()`` (``2M`` points, spacing ``1/(2 M delta)``)
and ``P = -(M-1) .. M-1`` is the integer log-ratio lag, ``tau_P = exp(P delta)``.
The doppler axis is oversampled by two so that multiplying by a kernel and
transforming back to time never wraps one edge of the grid onto the other.

For lag ``P`` the product ``X(t_{n+P}) X*(t_n)`` belongs to the log-midpoint
``u_n + P delta / 2``, which is a grid node for even ``P`` and halfway between
nodes for odd ``P``.  The Mellin transform over time uses these midpoints
exactly, so no path is ever interpolated.  Model-based moments use the same
pairing of grid nodes, which makes them the exact first and second moments of
the sample ambiguity.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .loggrid import GridError, LogGrid, centered_dft, centered_idft
from .models import CovarianceModel, covariance_matrix
from .simulate import Realization

logger = logging.getLogger(__name__)

__all__ = [
    "UnsupportedModel",
    "KernelError",
    "TimeScaleMap",
    "AmbiguityMap",
    "exact_siws",
    "mean_siws_numeric",
    "siwd",
    "siwd_values",
    "ambiguity_mean",
    "ambiguity_second_moment",
    "empirical_ambiguity",
    "optimal_kernel",
    "cohen_tfr",
    "cohen_values",
    "symmetrize_kernel",
    "kernel_asymmetry",
    "siwd_kernel",
    "kernel_timescale",
    "realify",
    "DEFAULT_FLOOR",
]

DEFAULT_FLOOR = 1e-8
IMAG_TOL = 1e-10


class UnsupportedModel(ValueError):
    pass


class KernelError(ValueError):
    """A kernel violates the symmetry needed for a Hermitian window operator."""


@dataclass(frozen=True)
class TimeScaleMap:
    values: np.ndarray
    kind: str
    grid: LogGrid
    t: np.ndarray = field(default=None, compare=False)
    xi: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        if self.t is None:
            object.__setattr__(self, "t", self.grid.t)
        if self.xi is None:
            object.__setattr__(self, "xi", self.grid.xi)


@dataclass(frozen=True)
class AmbiguityMap:
    values: np.ndarray
    kind: str
    grid: LogGrid

    @property
    def theta(self) -> np.ndarray:
        return self.grid.padded().xi

    @property
    def lags(self) -> np.ndarray:
        m = self.grid.m_count
        return np.arange(-(m - 1), m)

    @property
    def tau(self) -> np.ndarray:
        return np.exp(self.lags * self.grid.delta)


def _as_paths(path) -> np.ndarray:
    if isinstance(path, Realization):
        return path.values
    return np.asarray(path)


def realify(values: np.ndarray, what: str = "map") -> np.ndarray:
    """Drop the imaginary part of a map that should be real, logging large residue."""
    values = np.asarray(values)
    if not np.iscomplexobj(values):
        return values
    scale = np.max(np.abs(values)) if values.size else 0.0
    resid = np.max(np.abs(values.imag)) if values.size else 0.0
    if scale > 0 and resid > IMAG_TOL * scale:
        logger.warning("%s: imaginary residue %.3g of max modulus discarded", what, resid / scale)
    return values.real.copy()


# --------------------------------------------------------------------------
# exact and numeric spectra


def exact_siws(model: CovarianceModel, grid: LogGrid) -> TimeScaleMap:
    """Closed-form SIWS of a log-Gaussian model.

    Each component contributes ``Q(t) sqrt(8 pi / c) exp(-8 pi^2 (xi - f(t))^2 / c)``
    where ``f(t) = a (ln t - b) / (2 pi)`` for chirped models and 0 otherwise.
    """
    if not model.closed_form:
        raise UnsupportedModel("closed form needs log-Gaussian components; use mean_siws_numeric")
    u = grid.u[:, None]
    xi = grid.xi[None, :]
    shift = 0.0 if model.chirp is None else model.chirp.a * (u - model.chirp.b) / (2 * np.pi)
    out = np.zeros((grid.m_count, grid.m_count))
    for comp in model.components:
        q = np.exp(comp.log_q(u))
        out += q * np.sqrt(8 * np.pi / comp.c) * np.exp(-8 * np.pi**2 * (xi - shift) ** 2 / comp.c)
    return TimeScaleMap(out, "exact-siws", grid)


def _half_lag_index(m_count: int):
    h = m_count // 2 - 1
    m = np.arange(m_count)[:, None]
    p = np.arange(-h, h + 1)[None, :]
    hi, lo = m + p, m - p
    valid = (hi >= 0) & (hi < m_count) & (lo >= 0) & (lo < m_count)
    return np.clip(hi, 0, m_count - 1), np.clip(lo, 0, m_count - 1), valid, h


def _half_lag_transform(products: np.ndarray, grid: LogGrid, h: int) -> np.ndarray:
    # sum_p r_p exp(-2 pi i xi_j 2 p delta), lags on a 2*delta lattice
    return 2 * grid.delta * centered_dft(products, grid.m_count, start=-2 * h, stride=2)


def mean_siws_numeric(model: CovarianceModel, grid: LogGrid) -> TimeScaleMap:
    """SIWS by quadrature of the covariance lag sequence at each node."""
    R = covariance_matrix(model, grid)
    hi, lo, valid, h = _half_lag_index(grid.m_count)
    r = np.where(valid, R[hi, lo], 0.0)
    return TimeScaleMap(realify(_half_lag_transform(r, grid, h), "mean-siws"), "exact-siws", grid)


def siwd_values(paths, grid: LogGrid) -> np.ndarray:
    """SIWD for an array of paths ``(..., M)`` -> ``(..., M, M)``."""
    X = np.asarray(paths)
    if X.shape[-1] != grid.m_count:
        raise GridError(f"path length {X.shape[-1]} does not match grid ({grid.m_count})")
    hi, lo, valid, h = _half_lag_index(grid.m_count)
    r = np.where(valid, X[..., hi] * np.conj(X[..., lo]), 0.0)
    return realify(_half_lag_transform(r, grid, h), "siwd")


def siwd(path, grid: LogGrid) -> TimeScaleMap:
    """Scale-invariant Wigner distribution of one realization."""
    return TimeScaleMap(siwd_values(_as_paths(path), grid), "siwd", grid)


# --------------------------------------------------------------------------
# ambiguity domain


def _lag_index(m_count: int):
    P = np.arange(-(m_count - 1), m_count)[:, None]
    n = np.arange(m_count)[None, :]
    n1 = n + P
    valid = (n1 >= 0) & (n1 < m_count)
    return np.clip(n1, 0, m_count - 1), np.broadcast_to(n, n1.shape), valid, P[:, 0]


def _time_to_doppler(lagged: np.ndarray, grid: LogGrid, lags: np.ndarray) -> np.ndarray:
    """``(..., lag, n)`` lag products -> ``(..., theta, lag)`` ambiguity values."""
    start = grid.start + lags / 2.0
    A = grid.delta * centered_dft(lagged, 2 * grid.m_count, start=start)
    return np.swapaxes(A, -1, -2)


def _lagged_covariance(R: np.ndarray):
    n1, n, valid, lags = _lag_index(R.shape[0])
    return np.where(valid, R[n1, n], 0.0), lags


def ambiguity_mean(model: CovarianceModel, grid: LogGrid) -> AmbiguityMap:
    """``E A_X(theta, tau)``: Mellin transform over time of ``R(t sqrt(tau), t / sqrt(tau))``."""
    lagged, lags = _lagged_covariance(covariance_matrix(model, grid))
    return AmbiguityMap(_time_to_doppler(lagged, grid, lags), "mean-ambiguity", grid)


def empirical_ambiguity(paths, grid: LogGrid) -> np.ndarray:
    """Sample ambiguity ``A_X`` for paths ``(..., M)`` -> ``(..., 2M, 2M-1)``."""
    X = np.asarray(paths)
    if X.shape[-1] != grid.m_count:
        raise GridError(f"path length {X.shape[-1]} does not match grid ({grid.m_count})")
    n1, n, valid, lags = _lag_index(grid.m_count)
    lagged = np.where(valid, X[..., n1] * np.conj(X[..., n]), 0.0)
    return _time_to_doppler(lagged, grid, lags)


def _diagonal_sums(G: np.ndarray) -> np.ndarray:
    """``g[v + K - 1] = sum_n G[n, n - v]`` for ``v = -(K-1) .. K-1``."""
    K = G.shape[0]
    idx = (np.arange(K)[:, None] - np.arange(K)[None, :] + K - 1).ravel()
    flat = G.ravel()
    re = np.bincount(idx, weights=flat.real, minlength=2 * K - 1)
    if np.iscomplexobj(flat):
        return re + 1j * np.bincount(idx, weights=flat.imag, minlength=2 * K - 1)
    return re


def fourth_moment_term(R: np.ndarray, grid: LogGrid) -> np.ndarray:
    """Wick cross term ``T(theta, P)`` of ``E|A_X|^2`` from a covariance matrix.

    ``T = delta^2 sum_{n,n'} R[n+P, n'+P] conj(R[n, n']) exp(-2 pi i theta (n - n') delta)``.
    Summing along diagonals ``v = n - n'`` first costs ``O(M^2)`` per lag.
    """
    M = grid.m_count
    L = 2 * M
    lags = np.arange(-(M - 1), M)
    T = np.zeros((L, lags.size))
    for i, P in enumerate(lags):
        K = M - abs(P)
        n0 = max(0, -P)
        A1 = R[n0 + P:n0 + P + K, n0 + P:n0 + P + K]
        A2 = R[n0:n0 + K, n0:n0 + K]
        g = _diagonal_sums(A1 * np.conj(A2))
        T[:, i] = np.real(centered_dft(g, L, start=-(K - 1)))
    return grid.delta**2 * T


def ambiguity_second_moment(model: CovarianceModel, grid: LogGrid) -> AmbiguityMap:
    """``E|A_X|^2 = |E A_X|^2 + T`` for a circularly symmetric Gaussian process."""
    R = covariance_matrix(model, grid)
    lagged, lags = _lagged_covariance(R)
    mean = _time_to_doppler(lagged, grid, lags)
    second = np.abs(mean) ** 2 + fourth_moment_term(R, grid)
    return AmbiguityMap(second, "second-moment", grid)


def optimal_kernel(model: CovarianceModel, grid: LogGrid, floor: float = DEFAULT_FLOOR,
                   moments=None) -> AmbiguityMap:
    """MSE-optimal kernel ``|E A_X|^2 / E|A_X|^2`` on the support ``E|A_X|^2 > floor * max``.

    The Nyquist doppler row is set to zero: its odd lags have no mirror on the
    grid and would otherwise break the Hermitian symmetry of the window operator.
    """
    if floor < 0:
        raise ValueError(f"floor must be >= 0, got {floor}")
    if moments is None:
        mean = ambiguity_mean(model, grid).values
        second = ambiguity_second_moment(model, grid).values
    else:
        mean, second = (m.values if isinstance(m, AmbiguityMap) else m for m in moments)
    num = np.abs(mean) ** 2
    # both moments are symmetric under (theta, tau) -> (-theta, 1/tau); averaging
    # with the mirror removes transform round-off before the ratio amplifies it
    num = 0.5 * (num + _mirror(num))
    second = 0.5 * (second + _mirror(second))
    support = second > floor * np.max(second)
    phi = np.zeros_like(num)
    phi[support] = num[support] / second[support]
    excess = max(np.max(phi) - 1.0, -np.min(phi), 0.0)
    if excess > 1e-9:
        logger.warning("optimal kernel clamped by %.3g", excess)
    phi = np.clip(phi, 0.0, 1.0)
    phi[0, :] = 0.0
    return AmbiguityMap(phi, "phi-opt", grid)


# --------------------------------------------------------------------------
# kernels and Cohen-class maps


def _mirror(values: np.ndarray) -> np.ndarray:
    """``values[-q, -P]`` with the doppler index taken modulo ``2M``."""
    L = values.shape[0]
    q = (-np.arange(L)) % L
    return values[q][:, ::-1]


def kernel_asymmetry(phi: AmbiguityMap) -> float:
    """Relative violation of ``phi(theta, tau) = conj(phi(-theta, 1/tau))``.

    Odd lags on the Nyquist row must vanish as well.
    """
    v = np.asarray(phi.values)
    scale = np.max(np.abs(v)) or 1.0
    err = np.max(np.abs(v - np.conj(_mirror(v))))
    nyq = np.max(np.abs(v[0, (phi.lags % 2) == 1])) if v.shape[1] > 1 else 0.0
    return max(err, nyq) / scale


def symmetrize_kernel(phi: AmbiguityMap) -> AmbiguityMap:
    """Project a kernel onto the Hermitian-symmetric set accepted by the window builder."""
    v = np.asarray(phi.values)
    out = 0.5 * (v + np.conj(_mirror(v)))
    out[0, (phi.lags % 2) == 1] = 0.0
    if not np.iscomplexobj(v):
        out = out.real
    return AmbiguityMap(out, phi.kind, phi.grid)


def siwd_kernel(grid: LogGrid) -> AmbiguityMap:
    """Kernel whose Cohen map is exactly the SIWD: 2 on even lags, 0 on odd lags."""
    lags = np.arange(-(grid.m_count - 1), grid.m_count)
    row = np.where(lags % 2 == 0, 2.0, 0.0)
    return AmbiguityMap(np.tile(row, (2 * grid.m_count, 1)), "siwd-kernel", grid)


def cohen_values(paths, phi: AmbiguityMap, grid: LogGrid) -> np.ndarray:
    """Cohen-class map for an array of paths ``(..., M)`` -> ``(..., M, M)``."""
    if phi.grid != grid:
        raise GridError("kernel grid does not match the path grid")
    M = grid.m_count
    A = empirical_ambiguity(paths, grid) * phi.values
    lags = phi.lags
    # inverse Mellin in theta at the grid nodes -> (..., m, lag), then lag -> xi
    B = (1.0 / (2 * M * grid.delta)) * centered_idft(A, M, start=grid.start, axis=-2)
    out = grid.delta * centered_dft(B, M, start=lags[0])
    return realify(out, "cohen")


def cohen_tfr(path, phi: AmbiguityMap, grid: LogGrid) -> TimeScaleMap:
    """Member of the Cohen-class counterpart: ``M_1^{-1} M_2 {A_X phi}``."""
    return TimeScaleMap(cohen_values(_as_paths(path), phi, grid), "cohen", grid)


def kernel_timescale(phi: AmbiguityMap) -> TimeScaleMap:
    """Time-scale smoothing kernel ``Phi = M_1^{-1} M_2 phi`` on the ratio grid (diagnostic)."""
    grid = phi.grid
    M = grid.m_count
    ratio = grid.padded()
    B = ratio.dxi * centered_idft(phi.values, 2 * M, start=ratio.start, axis=0)
    out = grid.delta * centered_dft(B, M, start=phi.lags[0])
    return TimeScaleMap(realify(out, "Phi"), "kernel-timescale", grid, t=ratio.t, xi=grid.xi)
