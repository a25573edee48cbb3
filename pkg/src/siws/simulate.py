"""Circularly symmetric complex Gaussian sample paths on a log grid."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from .loggrid import LogGrid
from .models import CovarianceModel, covariance_matrix

logger = logging.getLogger(__name__)

__all__ = [
    "NumericalError",
    "Realization",
    "JITTER_LADDER",
    "sqrt_factor",
    "sample_paths",
    "sample_realizations",
    "write_paths_csv",
    "read_paths_csv",
]

JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8)
# paths per block; fixed so results do not depend on how work is scheduled
BLOCK = 32


class NumericalError(RuntimeError):
    """A factorization or decomposition failed."""


@dataclass(frozen=True)
class Realization:
    values: np.ndarray
    seed_tag: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("realization contains non-finite values")


def sqrt_factor(cov: np.ndarray, ladder=JITTER_LADDER) -> np.ndarray:
    """Lower Cholesky factor of ``cov + eps * trace/M * I`` for the first eps that works."""
    cov = np.asarray(cov)
    m = cov.shape[0]
    scale = float(np.real(np.trace(cov))) / m
    if scale == 0.0 and not np.any(cov):
        return np.zeros_like(cov)
    tried = []
    for eps in ladder:
        jitter = eps * scale
        try:
            L = np.linalg.cholesky(cov + jitter * np.eye(m))
        except np.linalg.LinAlgError:
            tried.append(jitter)
            continue
        if tried:
            logger.debug("cholesky succeeded with jitter %.3g after %s", jitter, tried)
        return L
    raise NumericalError(
        "covariance factorization failed; diagonal jitters tried: "
        + ", ".join(f"{j:.3g}" for j in tried)
    )


def _normals(seed: int, path_index: int, m: int) -> np.ndarray:
    # Philox is counter based: keying by (seed, path) gives each path its own stream
    key = np.array([seed % 2**64, path_index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    g = gen.standard_normal((2, m))
    return (g[0] + 1j * g[1]) / np.sqrt(2.0)


def sample_paths(model: CovarianceModel, grid: LogGrid, n_paths: int, seed: int,
                 first: int = 0, factor: np.ndarray = None) -> np.ndarray:
    """Array ``(n_paths, m_count)`` of paths ``first .. first + n_paths - 1``.

    Path ``k`` is ``L @ z_k`` with ``z_k`` drawn from the stream keyed by
    ``(seed, k)``, so any subset of paths can be regenerated independently.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    if factor is None:
        factor = sqrt_factor(covariance_matrix(model, grid))
    m = grid.m_count
    out = np.empty((n_paths, m), dtype=complex)
    for lo in range(0, n_paths, BLOCK):
        hi = min(lo + BLOCK, n_paths)
        z = np.stack([_normals(seed, first + k, m) for k in range(lo, hi)])
        out[lo:hi] = z @ factor.T
    return out


def sample_realizations(model: CovarianceModel, grid: LogGrid, n_paths: int,
                        seed: int) -> List[Realization]:
    paths = sample_paths(model, grid, n_paths, seed)
    return [Realization(p, seed_tag=seed) for p in paths]


def write_paths_csv(paths, path) -> None:
    """Write paths as rows ``(path_id, m, re, im)``."""
    arr = np.atleast_2d(np.asarray([getattr(p, "values", p) for p in paths]))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path_id", "m", "re", "im"])
        for k, row in enumerate(arr):
            for m, v in enumerate(row):
                w.writerow([k, m, repr(float(v.real)), repr(float(v.imag))])


def read_paths_csv(path, m_count: int = None) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return np.zeros((0, m_count or 0), dtype=complex)
    n = max(int(r["path_id"]) for r in rows) + 1
    m = max(int(r["m"]) for r in rows) + 1
    if m_count is not None and m != m_count:
        raise ValueError(f"path file has {m} nodes, grid has {m_count}")
    out = np.zeros((n, m), dtype=complex)
    for r in rows:
        out[int(r["path_id"]), int(r["m"])] = complex(float(r["re"]), float(r["im"]))
    return out
