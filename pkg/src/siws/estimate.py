"""Scale-invariant spectrograms and multitaper SIWS estimates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loggrid import GridError, LogGrid, centered_dft
from .spectrum import TimeScaleMap, _as_paths
from .taper import TaperSet

__all__ = [
    "EstimatorConfig",
    "spectrogram",
    "spectrogram_values",
    "short_time_mellin",
    "multitaper_estimate",
    "multitaper_values",
    "DEFAULT_K_USED",
]

DEFAULT_K_USED = 8


@dataclass(frozen=True)
class EstimatorConfig:
    k_used: int = DEFAULT_K_USED
    taper_origin: str = "eigen"
    realify: bool = True

    def __post_init__(self):
        if self.k_used < 1:
            raise ValueError(f"k_used must be >= 1, got {self.k_used}")
        if self.taper_origin not in ("eigen", "hermite"):
            raise ValueError(f"unknown taper origin {self.taper_origin!r}")


def _window_matrix(windows: np.ndarray, m_count: int) -> np.ndarray:
    """``conj(psi_k(t_m / t_n))`` as a ``(K, M, M)`` array indexed ``[k, m, n]``.

    A window of length ``L`` is centered at node ``L // 2`` (ratio 1).
    """
    w = np.atleast_2d(windows)
    L = w.shape[-1]
    off = np.arange(m_count)[:, None] - np.arange(m_count)[None, :] + L // 2
    ok = (off >= 0) & (off < L)
    out = np.where(ok, np.conj(w[:, np.clip(off, 0, L - 1)]), 0.0)
    return out


def short_time_mellin(paths, windows, grid: LogGrid) -> np.ndarray:
    """``V[..., k, m, j] = delta * sum_n X(t_n) conj(psi_k(t_m/t_n)) exp(-2 pi i xi_j u_n)``."""
    X = np.asarray(paths)
    if X.shape[-1] != grid.m_count:
        raise GridError(f"path length {X.shape[-1]} does not match grid ({grid.m_count})")
    Wm = _window_matrix(windows, grid.m_count)
    prod = X[..., None, None, :] * Wm
    return grid.delta * centered_dft(prod, grid.m_count, start=grid.start)


def spectrogram_values(paths, windows, grid: LogGrid) -> np.ndarray:
    """``|V|^2`` with shape ``(..., K, M, M)``."""
    V = short_time_mellin(paths, windows, grid)
    return V.real**2 + V.imag**2


def spectrogram(path, window, grid: LogGrid) -> TimeScaleMap:
    """Scale-invariant spectrogram of one path with one ratio window."""
    window = np.asarray(window)
    if window.ndim != 1:
        raise GridError("spectrogram takes a single window")
    vals = spectrogram_values(_as_paths(path), window, grid)[..., 0, :, :]
    return TimeScaleMap(vals, "spectrogram", grid)


def multitaper_values(paths, tapers: TaperSet, grid: LogGrid, k_used: int = None) -> np.ndarray:
    """``sum_k lambda_k |V_k|^2`` over the first ``k_used`` tapers, paths ``(..., M)``."""
    if tapers.grid != grid:
        raise GridError("taper grid does not match the path grid")
    k = len(tapers) if k_used is None else k_used
    if not 1 <= k <= len(tapers):
        raise ValueError(f"k_used={k} but only {len(tapers)} tapers available")
    X = np.asarray(paths)
    lam = tapers.weights[:k]
    out = np.zeros(X.shape[:-1] + (grid.m_count, grid.m_count))
    # batches of windows keep the (K, M, M) workspace bounded
    step = max(1, 64 // max(1, X[..., 0].size))
    for lo in range(0, k, step):
        hi = min(lo + step, k)
        S = spectrogram_values(X, tapers.windows[lo:hi], grid)
        out += np.tensordot(S, lam[lo:hi], axes=([-3], [0]))
    return out


def multitaper_estimate(path, tapers: TaperSet, config: EstimatorConfig,
                        grid: LogGrid) -> TimeScaleMap:
    """Weighted sum of spectrograms, the multitaper form of a Cohen-class map."""
    if tapers.origin != config.taper_origin:
        raise ValueError(f"config expects {config.taper_origin} tapers, got {tapers.origin}")
    vals = multitaper_values(_as_paths(path), tapers, grid, config.k_used)
    return TimeScaleMap(vals, "multitaper", grid)
