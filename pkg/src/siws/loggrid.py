"""Logarithmically uniform time grids and the discrete Mellin transform pair.

Every time-scale quantity in the package lives on a grid ``t_m = exp(u_m)``
with ``u_m = u_min + m * delta``.  A Mellin integral
``int_0^inf g(t) t^(-i 2 pi xi - 1) dt`` becomes, after ``t = e^u``, an
ordinary Fourier integral in ``u`` which is discretized as a ``delta``-weighted
Riemann sum and evaluated with the FFT on the centered frequency grid
``xi_j = (j - M/2) / (M * delta)``.

The two low level routines :func:`centered_dft` and :func:`centered_idft`
evaluate those sums for samples placed at arbitrary (possibly half-integer)
offsets on an integer lattice.  All of the lag transforms in the package are
built on them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridError",
    "LogGrid",
    "make_log_grid",
    "centered_grid",
    "mellin_forward",
    "mellin_inverse",
    "centered_dft",
    "centered_idft",
]


class GridError(ValueError):
    """Invalid grid parameters or samples that do not match a grid."""


@dataclass(frozen=True)
class LogGrid:
    """Geometric time grid with uniform log spacing.

    Attributes
    ----------
    u_min : float
        Log-time of the first node (nats).
    delta : float
        Log-time step (nats).
    m_count : int
        Number of nodes; must be even.
    """

    u_min: float
    delta: float
    m_count: int

    def __post_init__(self):
        if not np.isfinite(self.u_min):
            raise GridError(f"u_min must be finite, got {self.u_min}")
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise GridError(f"delta must be positive, got {self.delta}")
        if int(self.m_count) != self.m_count or self.m_count < 2:
            raise GridError(f"m_count must be an integer >= 2, got {self.m_count}")
        if self.m_count % 2:
            raise GridError(f"m_count must be even, got {self.m_count}")
        object.__setattr__(self, "m_count", int(self.m_count))
        object.__setattr__(self, "u_min", float(self.u_min))
        object.__setattr__(self, "delta", float(self.delta))

    @classmethod
    def centered(cls, delta: float, m_count: int) -> "LogGrid":
        """Grid whose node ``m_count // 2`` sits at ``u = 0`` (``t = 1``)."""
        return cls(-(m_count / 2) * delta, delta, m_count)

    @property
    def u(self) -> np.ndarray:
        return self.u_min + self.delta * np.arange(self.m_count)

    @property
    def t(self) -> np.ndarray:
        return np.exp(self.u)

    @property
    def start(self) -> float:
        """``u_min`` in units of ``delta`` (the lattice offset of node 0)."""
        return self.u_min / self.delta

    @property
    def dxi(self) -> float:
        return 1.0 / (self.m_count * self.delta)

    @property
    def xi(self) -> np.ndarray:
        """Centered Mellin frequency grid, cycles per nat of log-time."""
        return (np.arange(self.m_count) - self.m_count // 2) * self.dxi

    @property
    def is_centered(self) -> bool:
        return abs(self.u_min + (self.m_count / 2) * self.delta) <= 1e-12 * self.delta * self.m_count

    def padded(self) -> "LogGrid":
        """Centered grid with the same step and twice as many nodes.

        Its nodes index ratio windows (log-ratio offsets ``-M .. M-1``) and its
        frequency grid is the Mellin-doppler axis of the ambiguity maps.
        """
        return LogGrid.centered(self.delta, 2 * self.m_count)

    def describe(self) -> dict:
        return {"u_min": self.u_min, "delta": self.delta, "m_count": self.m_count}


def make_log_grid(u_min: float, delta: float, m_count: int) -> LogGrid:
    return LogGrid(u_min, delta, m_count)


def centered_grid(delta: float, m_count: int) -> LogGrid:
    return LogGrid.centered(delta, m_count)


def _move(x, axis):
    return np.moveaxis(np.asarray(x), axis, -1)


def centered_dft(values, n_freq: int, start=0.0, stride: int = 1, axis: int = -1) -> np.ndarray:
    """Evaluate ``S_j = sum_i v_i exp(-2 pi i (j - L/2)(start + stride*i) / L)``.

    ``j`` runs over ``0 .. L-1`` with ``L = n_freq``.  ``start`` may be a
    non-integer offset and may be an array broadcasting against the leading
    dimensions of ``values`` (one offset per row).  Any number of samples is
    allowed: positions are folded modulo ``L``, which is exact because the
    kernel is ``L``-periodic in integer positions.
    """
    v = _move(values, axis)
    n = v.shape[-1]
    L = int(n_freq)
    kk = stride * np.arange(n)
    span = kk[-1] + 1 if n else 1
    length = -(-span // L) * L
    sign = np.where(kk % 2, -1.0, 1.0)
    buf = np.zeros(v.shape[:-1] + (length,), dtype=np.result_type(v.dtype, np.complex128))
    buf[..., kk] = v * sign
    if length > L:
        buf = buf.reshape(v.shape[:-1] + (length // L, L)).sum(axis=-2)
    out = np.fft.fft(buf, axis=-1)
    j = np.arange(L) - L // 2
    start = np.asarray(start, dtype=float)
    if start.ndim:
        start = start[..., None]
    out *= np.exp(-2j * np.pi * j * start / L)
    return np.moveaxis(out, -1, axis)


def centered_idft(spectrum, n_out: int, start=0.0, stride: int = 1, axis: int = -1) -> np.ndarray:
    """Evaluate ``g_i = sum_j G_j exp(+2 pi i (j - L/2)(start + stride*i) / L)``.

    ``L`` is the length of ``spectrum`` along ``axis``; ``i`` runs over
    ``0 .. n_out-1``.  ``start`` may be an array with one offset per row.
    """
    G = _move(spectrum, axis)
    L = G.shape[-1]
    j = np.arange(L) - L // 2
    start = np.asarray(start, dtype=float)
    if start.ndim:
        start = start[..., None]
    h = np.fft.ifft(G * np.exp(2j * np.pi * j * start / L), axis=-1) * L
    kk = stride * np.arange(int(n_out))
    sign = np.where(kk % 2, -1.0, 1.0)
    out = h[..., kk % L] * sign
    return np.moveaxis(out, -1, axis)


def _check_length(x: np.ndarray, grid: LogGrid, axis: int):
    if x.shape[axis] != grid.m_count:
        raise GridError(
            f"expected {grid.m_count} samples along axis {axis}, got {x.shape[axis]}"
        )


def mellin_forward(samples, grid: LogGrid, axis: int = -1) -> np.ndarray:
    """Discrete Mellin transform ``G(xi_j) = delta * sum_m g(t_m) exp(-2 pi i xi_j u_m)``."""
    x = np.asarray(samples)
    _check_length(x, grid, axis)
    return grid.delta * centered_dft(x, grid.m_count, start=grid.start, axis=axis)


def mellin_inverse(spectrum, grid: LogGrid, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`mellin_forward`: ``g_m = dxi * sum_j G_j exp(2 pi i xi_j u_m)``."""
    G = np.asarray(spectrum)
    _check_length(G, grid, axis)
    return grid.dxi * centered_idft(G, grid.m_count, start=grid.start, axis=axis)
