"""Multitaper windows: eigen-windows of the kernel operator and Hermite windows.

Windows are functions of the ratio ``t/s`` and are sampled on the ratio grid
``grid.padded()`` (log-ratio offsets ``-M .. M-1``), which covers every ratio
of two nodes of the ``M``-point data grid.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .loggrid import LogGrid, centered_idft
from .simulate import NumericalError
from .spectrum import AmbiguityMap, KernelError, kernel_asymmetry

logger = logging.getLogger(__name__)

__all__ = [
    "TaperSet",
    "PsiKernel",
    "psi_kernel",
    "eigendecompose",
    "spectral_concentration",
    "hermite_function",
    "hermite_functions",
    "quasi_lamperti_windows",
    "with_weights",
    "matched_alpha",
    "fitted_alpha",
    "window_error",
    "window_overlap",
    "HERMITE_MAX_ORDER",
]

HERMITE_MAX_ORDER = 64
SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class TaperSet:
    windows: np.ndarray  # (K, 2M) on grid.padded()
    weights: np.ndarray  # (K,)
    origin: str
    grid: LogGrid

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.windows))
        lam = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if w.shape[0] != lam.shape[0]:
            raise ValueError(f"{w.shape[0]} windows but {lam.shape[0]} weights")
        if w.shape[1] != 2 * self.grid.m_count:
            raise ValueError("windows must be sampled on the ratio grid (2 * m_count nodes)")
        object.__setattr__(self, "windows", w)
        object.__setattr__(self, "weights", lam)

    def __len__(self):
        return self.windows.shape[0]

    @property
    def ratio_grid(self) -> LogGrid:
        return self.grid.padded()

    def head(self, k: int) -> "TaperSet":
        return TaperSet(self.windows[:k], self.weights[:k], self.origin, self.grid)

    def symmetrized(self) -> np.ndarray:
        """Windows times ``sqrt(delta)``; unit vectors when the set is normalized."""
        return self.windows * np.sqrt(self.grid.delta)


@dataclass(frozen=True)
class PsiKernel:
    matrix: np.ndarray  # (2M, 2M) Hermitian, indexed by ratio-grid nodes
    grid: LogGrid

    @property
    def ratio_grid(self) -> LogGrid:
        return self.grid.padded()


def psi_kernel(phi: AmbiguityMap, grid: LogGrid) -> PsiKernel:
    """``Psi(t_a, t_b) = dtheta * sum_q phi(theta_q, t_a/t_b) (t_a t_b)^(i pi theta_q)``.

    ``t_a``, ``t_b`` run over the ratio grid.  Lags beyond ``M - 1`` carry no
    data products and are zero.
    """
    if phi.grid != grid:
        raise KernelError("kernel grid does not match")
    asym = kernel_asymmetry(phi)
    if asym > SYMMETRY_TOL:
        raise KernelError(f"kernel is not Hermitian-symmetric (relative violation {asym:.3g})")
    M = grid.m_count
    ratio = grid.padded()
    lags = phi.lags
    # K[a, P] at log-midpoint (a - M - P/2) * delta
    K = ratio.dxi * centered_idft(phi.values, 2 * M, start=-M - lags / 2.0, axis=0)
    a = np.arange(2 * M)[:, None]
    b = a - lags[None, :]
    ok = (b >= 0) & (b < 2 * M)
    psi = np.zeros((2 * M, 2 * M), dtype=complex)
    psi[np.broadcast_to(a, ok.shape)[ok], b[ok]] = K[ok]
    scale = np.max(np.abs(psi)) or 1.0
    herm = np.max(np.abs(psi - psi.conj().T)) / scale
    if herm > SYMMETRY_TOL:
        raise KernelError(f"window operator is not Hermitian ({herm:.3g})")
    return PsiKernel(0.5 * (psi + psi.conj().T), grid)


def eigendecompose(psi: PsiKernel, k_max: int = None) -> TaperSet:
    """Eigen-windows and weights of ``Psi`` as an operator on ``L^2(R+, dt/t)``.

    On a uniform log grid the scale-invariant measure ``dt/t`` puts weight
    ``delta`` on every node, so the matrix problem is ``S = delta * Psi``.
    Windows are ``w / sqrt(delta)``, which gives ``sum_n |psi_k(t_n)|^2 delta = 1``
    and ``Psi = sum_k lambda_k psi_k psi_k^H`` exactly.  Weights are signed
    and sorted in descending order.
    """
    A = psi.matrix
    scale = np.max(np.abs(A)) or 1.0
    if np.max(np.abs(A - A.conj().T)) > SYMMETRY_TOL * scale:
        raise KernelError("window operator is not Hermitian")
    delta = psi.grid.delta
    S = delta * A
    lam, W = np.linalg.eigh(S)
    order = np.argsort(lam)[::-1]
    lam, W = lam[order], W[:, order]
    norm = np.linalg.norm(S, 2) or 1.0
    resid = np.linalg.norm(S @ W - W * lam, axis=0).max()
    if resid > 1e-8 * norm:
        raise NumericalError(f"eigen residual {resid:.3g} exceeds tolerance")
    neg = lam[lam < 0]
    if neg.size:
        logger.debug("%d negative weights, largest magnitude %.3g", neg.size, -neg.min())
    if k_max is not None:
        lam, W = lam[:k_max], W[:, :k_max]
    return TaperSet(W.T / np.sqrt(delta), lam, "eigen", psi.grid)


def spectral_concentration(tapers: TaperSet, k: int) -> float:
    """``sum_{j<=k} |lambda_j| / sum_j |lambda_j|`` for a complete taper set."""
    a = np.abs(tapers.weights)
    total = a.sum()
    return float(a[:k].sum() / total) if total > 0 else 1.0


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Orthonormal Hermite functions ``h_0 .. h_{n_max}`` at ``x`` via the three-term recurrence."""
    if not 0 <= n_max <= HERMITE_MAX_ORDER:
        raise ValueError(f"order must lie in [0, {HERMITE_MAX_ORDER}], got {n_max}")
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_function(n: int, x):
    return hermite_functions(n, x)[n]


def quasi_lamperti_windows(n_windows: int, H: float, alpha: float, grid: LogGrid,
                           weights=None) -> TaperSet:
    """Windows ``t^H h_n(log_alpha t)``, ``n = 0 .. n_windows-1``, unit-normalized.

    Without ``weights`` every window gets ``1 / n_windows``; pass the eigen
    weights (see :func:`with_weights`) to pair window ``n`` with ``lambda_{n+1}``.
    """
    if n_windows < 1:
        raise ValueError("n_windows must be >= 1")
    if not (alpha > 0 and alpha != 1):
        raise ValueError(f"alpha must be positive and != 1, got {alpha}")
    r = grid.padded()
    x = r.u / np.log(alpha)
    h = hermite_functions(n_windows - 1, x)
    win = np.exp(H * r.u) * h
    norms = np.sqrt(np.sum(win**2, axis=1) * r.delta)
    win = win / norms[:, None]
    if weights is None:
        weights = np.full(n_windows, 1.0 / n_windows)
    weights = np.asarray(weights, dtype=float)[:n_windows]
    return TaperSet(win.astype(complex), weights, "hermite", grid)


def matched_alpha(c: float) -> float:
    """Hermite scale matched to the log-Gaussian family: ``ln alpha = sqrt(2) c^(-1/4)``.

    The leading eigen-window of that family is a Gaussian in log-time whose
    width shrinks like ``c^(-1/4)``; ``alpha = e`` is the match for ``c = 4``.
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    return float(np.exp(np.sqrt(2.0) * c ** -0.25))


def fitted_alpha(eigen: TaperSet) -> float:
    """Hermite scale whose ``h_0`` has the log-time spread of the leading eigen-window."""
    r = eigen.ratio_grid
    p = np.abs(eigen.windows[0]) ** 2
    p = p / p.sum()
    mu = np.sum(p * r.u)
    sd = np.sqrt(np.sum(p * (r.u - mu) ** 2))
    # |h_0(u / s)|^2 has standard deviation s / sqrt(2)
    return float(np.exp(np.sqrt(2.0) * sd))


def with_weights(tapers: TaperSet, source: TaperSet) -> TaperSet:
    """Copy of ``tapers`` carrying the leading weights of ``source``."""
    k = len(tapers)
    if len(source) < k:
        raise ValueError(f"source has {len(source)} weights, need {k}")
    return TaperSet(tapers.windows, source.weights[:k], tapers.origin, tapers.grid)


def _aligned_pair(eigen: TaperSet, hermite: TaperSet, k: int):
    if k < 1 or k > len(eigen) or k > len(hermite):
        raise IndexError(f"window index {k} out of range")
    a = hermite.symmetrized()[k - 1]
    b = eigen.symmetrized()[k - 1]
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return a, b


def window_overlap(eigen: TaperSet, hermite: TaperSet, k: int) -> float:
    """``|<H_{k-1}, psi_k>|`` for unit-normalized windows."""
    a, b = _aligned_pair(eigen, hermite, k)
    return float(abs(np.vdot(b, a)))


def window_error(eigen: TaperSet, hermite: TaperSet, k: int) -> float:
    """Squared distance between ``H_{k-1}`` and ``psi_k`` after phase alignment."""
    a, b = _aligned_pair(eigen, hermite, k)
    ip = np.vdot(b, a)
    phase = ip / abs(ip) if abs(ip) > 0 else 1.0
    return float(np.sum(np.abs(a - phase * b) ** 2))
