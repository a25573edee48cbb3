"""Monte Carlo comparison of the SIMW, Hermite and SIWD estimators.

Paths are processed in fixed blocks and the per-block error sums are added in
block order, so reports do not depend on how many worker threads ran them.
"""
from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .estimate import DEFAULT_K_USED, multitaper_values
from .loggrid import GridError, LogGrid
from .models import PRESETS, CovarianceModel, LsspParams, covariance_matrix, lssp
from .simulate import BLOCK, sample_paths, sqrt_factor
from .spectrum import (DEFAULT_FLOOR, AmbiguityMap, TimeScaleMap, cohen_values, exact_siws,
                       optimal_kernel, siwd_values, symmetrize_kernel)
from .taper import (TaperSet, eigendecompose, fitted_alpha, psi_kernel, quasi_lamperti_windows,
                    window_error, window_overlap)

logger = logging.getLogger(__name__)

__all__ = [
    "METHODS",
    "TABLES",
    "MseReport",
    "central_region",
    "mse",
    "hermite_h",
    "hermite_tapers",
    "build_tapers",
    "run_model",
    "run_table",
    "table_layout",
    "write_table_csv",
    "write_reports_json",
    "WindowSweep",
    "window_sweep",
    "write_window_sweep_csv",
    "optimality_spot_check",
]

METHODS = ("SIMW", "Hermite", "SIWD")

# the three comparison tables, keyed by model family
TABLES = {
    "lssp": {"title": "LSSP", "columns": ("c=7", "c=10", "c=20"),
        "presets": ("lssp-c7", "lssp-c10", "lssp-c20")},
    "lsscp": {"title": "LSSCP", "columns": ("c=7", "c=10", "c=20"),
        "presets": ("lsscp-c7", "lsscp-c10", "lsscp-c20")},
    "mlssp": {"title": "MLSSP", "columns": ("c2=7", "c2=10", "c2=20"),
        "presets": ("mlssp-c4-7", "mlssp-c4-10", "mlssp-c4-20")},
}


def central_region(m_count: int):
    """Index rectangle excluding the outer quarter of each axis."""
    q = m_count // 4
    s = slice(q, m_count - q)
    return (s, s)


def _values(x):
    return x.values if isinstance(x, TimeScaleMap) else np.asarray(x)


def mse(estimate, exact, region=None) -> float:
    """Mean of ``|estimate - exact|^2`` over the region cells (and any leading path axes)."""
    est = _values(estimate)
    ref = _values(exact)
    if est.shape[-2:] != ref.shape:
        raise GridError(f"estimate shape {est.shape[-2:]} does not match exact {ref.shape}")
    if region is None:
        region = central_region(ref.shape[0])
    rs, cs = region
    for s, n in zip(region, ref.shape):
        if not isinstance(s, slice) or s.indices(n)[0] >= s.indices(n)[1]:
            raise GridError(f"region {region} is empty or invalid")
        if (s.start or 0) < 0 or (s.stop or n) > n:
            raise GridError(f"region {region} exceeds the map bounds {ref.shape}")
    d = est[..., rs, cs] - ref[rs, cs]
    return float(np.mean(d.real**2 + d.imag**2))


@dataclass
class MseReport:
    model: str
    mse: Dict[str, float]
    n_paths: int
    grid: str
    seed: int
    k_used: int
    alpha: float
    wall_time: float = field(default=0.0, compare=False)

    @property
    def ratio(self) -> float:
        """``MSE(SIWD) / MSE(SIMW)``."""
        return self.mse["SIWD"] / self.mse["SIMW"]

    @property
    def ordered(self) -> bool:
        return self.mse["SIMW"] < self.mse["Hermite"] < self.mse["SIWD"]

    def to_dict(self) -> dict:
        # wall time stays out of files so reruns are byte-identical
        return {"model": self.model, "mse": dict(self.mse), "ratio_siwd_simw": self.ratio,
                "ordered": self.ordered, "n_paths": self.n_paths, "grid": self.grid,
                "seed": self.seed, "k_used": self.k_used, "alpha": self.alpha}


def hermite_h(model: CovarianceModel) -> float:
    """Hurst exponent given to the Hermite windows: the mean over components."""
    hs = [c.H for c in model.components if isinstance(c, LsspParams)]
    return float(np.mean(hs)) if hs else 0.5


def hermite_tapers(model: CovarianceModel, eigen: TaperSet, grid: LogGrid,
                   alpha: Optional[float] = None):
    """Hermite windows paired with ``eigen`` (one per eigen-window).

    ``alpha=None`` fits the Hermite scale to the leading eigen-window.
    Returns ``(tapers, alpha)``.
    """
    if alpha is None:
        alpha = fitted_alpha(eigen)
    herm = quasi_lamperti_windows(len(eigen), hermite_h(model), alpha, grid, eigen.weights)
    return herm, float(alpha)


def build_tapers(model: CovarianceModel, grid: LogGrid, k_used: int = DEFAULT_K_USED,
                 floor: float = DEFAULT_FLOOR, alpha: Optional[float] = None, phi=None):
    """Eigen tapers and the paired Hermite tapers for one model.

    Returns ``(eigen, hermite, alpha)``.
    """
    if phi is None:
        phi = optimal_kernel(model, grid, floor)
    eigen = eigendecompose(psi_kernel(phi, grid), k_used)
    herm, alpha = hermite_tapers(model, eigen, grid, alpha)
    return eigen, herm, alpha


def _block_errors(model, grid, factor, seed, lo, hi, eigen, herm, exact, region):
    X = sample_paths(model, grid, hi - lo, seed, first=lo, factor=factor)
    out = {}
    for name, est in (("SIMW", multitaper_values(X, eigen, grid)),
                      ("Hermite", multitaper_values(X, herm, grid)),
                      ("SIWD", siwd_values(X, grid))):
        out[name] = mse(est, exact, region) * (hi - lo)
    return out


def _blocks(n_paths: int):
    return [(lo, min(lo + BLOCK, n_paths)) for lo in range(0, n_paths, BLOCK)]


def run_model(model: CovarianceModel, grid: LogGrid, n_paths: int = 500, seed: int = 0,
              k_used: int = DEFAULT_K_USED, floor: float = DEFAULT_FLOOR,
              alpha: Optional[float] = None, threads: int = 1, name: str = "") -> MseReport:
    """Per-model MSE of the three estimators with common random numbers."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    t0 = time.perf_counter()
    eigen, herm, alpha = build_tapers(model, grid, k_used, floor, alpha)
    exact = exact_siws(model, grid).values
    factor = sqrt_factor(covariance_matrix(model, grid))
    region = central_region(grid.m_count)
    blocks = _blocks(n_paths)

    def work(b):
        return _block_errors(model, grid, factor, seed, b[0], b[1], eigen, herm, exact, region)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    totals = {m: 0.0 for m in METHODS}
    for part in parts:  # fixed block order
        for m in METHODS:
            totals[m] += part[m]
    rep = MseReport(name or model.describe(), {m: totals[m] / n_paths for m in METHODS},
                    n_paths, grid.describe(), seed, k_used, alpha,
                    wall_time=time.perf_counter() - t0)
    logger.info("%s: SIMW %.4g Hermite %.4g SIWD %.4g (%.1fs)", rep.model, rep.mse["SIMW"],
                rep.mse["Hermite"], rep.mse["SIWD"], rep.wall_time)
    return rep


def run_table(models: Sequence, grid: LogGrid, n_paths: int = 500, seed: int = 0,
              k_used: int = DEFAULT_K_USED, floor: float = DEFAULT_FLOOR,
              alpha: Optional[float] = None, threads: int = 1) -> List[MseReport]:
    """One report per model; ``models`` holds preset names or model objects."""
    out = []
    for m in models:
        model = PRESETS[m] if isinstance(m, str) else m
        name = m if isinstance(m, str) else model.describe()
        out.append(run_model(model, grid, n_paths, seed, k_used, floor, alpha, threads, name))
    return out


def table_layout(reports: Sequence[MseReport], columns: Sequence[str]) -> List[List]:
    """Rows ``[method, mse per column...]`` in the methods x c layout."""
    if len(columns) != len(reports):
        raise ValueError("one column label per report is required")
    return [[m] + [r.mse[m] for r in reports] for m in METHODS]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_table_csv(reports: Sequence[MseReport], columns: Sequence[str], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method"] + list(columns))
        for row in table_layout(reports, columns):
            w.writerow([row[0]] + [_fmt(v) for v in row[1:]])


def write_reports_json(reports: Sequence[MseReport], path, extra: dict = None) -> None:
    doc = {"version": __version__, "numpy": np.__version__,
           "reports": [r.to_dict() for r in reports]}
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------------
# window fidelity sweep


@dataclass
class WindowSweep:
    c_values: tuple
    h_values: tuple
    errors: np.ndarray    # (n_c, n_H, 3): e_k for k = 1, 2, 3
    overlaps: np.ndarray  # same shape: |<H_{k-1}, psi_k>|
    alphas: np.ndarray    # (n_c,) Hermite scale used per c

    def trend_holds(self, k: int = 2, lo: float = 4, hi: float = 20) -> bool:
        """``e_k(c=hi, H) <= e_k(c=lo, H)`` for every H of the sweep."""
        i, j = self.c_values.index(lo), self.c_values.index(hi)
        return bool(np.all(self.errors[j, :, k - 1] <= self.errors[i, :, k - 1]))


def window_sweep(c_values=(4, 7, 10, 20), h_values=None, grid: LogGrid = None,
                alpha: Optional[float] = None, floor: float = DEFAULT_FLOOR,
                n_windows: int = 3) -> WindowSweep:
    """Distances ``e_k`` between eigen-windows of LSSP kernels and Hermite windows."""
    if h_values is None:
        h_values = tuple(np.round(np.arange(1, 10) / 10.0, 10))
    if grid is None:
        grid = LogGrid.centered(0.1, 128)
    c_values, h_values = tuple(c_values), tuple(h_values)
    errs = np.zeros((len(c_values), len(h_values), n_windows))
    ovl = np.zeros_like(errs)
    alphas = np.zeros(len(c_values))
    for i, c in enumerate(c_values):
        # the kernel, hence the eigen-windows, do not depend on H
        phi = optimal_kernel(lssp(0.5, c), grid, floor)
        eigen = eigendecompose(psi_kernel(phi, grid), n_windows)
        a = fitted_alpha(eigen) if alpha is None else alpha
        alphas[i] = a
        for j, H in enumerate(h_values):
            herm = quasi_lamperti_windows(n_windows, H, a, grid, eigen.weights)
            for k in range(1, n_windows + 1):
                errs[i, j, k - 1] = window_error(eigen, herm, k)
                ovl[i, j, k - 1] = window_overlap(eigen, herm, k)
    return WindowSweep(c_values, h_values, errs, ovl, alphas)


def write_window_sweep_csv(res: WindowSweep, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["c", "alpha", "H", "k", "e_k", "overlap"])
        for i, c in enumerate(res.c_values):
            for j, H in enumerate(res.h_values):
                for k in range(res.errors.shape[2]):
                    w.writerow([_fmt(c), _fmt(res.alphas[i]), _fmt(H), k + 1,
                                _fmt(res.errors[i, j, k]), _fmt(res.overlaps[i, j, k])])


# --------------------------------------------------------------------------
# empirical optimality


def _gaussian_kernel(grid: LogGrid, s_theta: float, s_lag: float) -> AmbiguityMap:
    M = grid.m_count
    theta = grid.padded().xi[:, None]
    d = np.arange(-(M - 1), M)[None, :] * grid.delta
    v = np.exp(-0.5 * (theta / s_theta) ** 2 - 0.5 * (d / s_lag) ** 2)
    return symmetrize_kernel(AmbiguityMap(v, "gaussian", grid))


def optimality_spot_check(model: CovarianceModel, grid: LogGrid, n_paths: int = 500,
                          seed: int = 0, n_kernels: int = 5, floor: float = DEFAULT_FLOOR,
                          kernel_seed: int = 1) -> dict:
    """MSE of the optimal-kernel map against randomly drawn symmetric kernels.

    Competitors are Gaussian kernels with random widths and randomly
    perturbed copies of the optimal kernel, all on the same paths.
    """
    phi = optimal_kernel(model, grid, floor)
    rng = np.random.default_rng(kernel_seed)
    rivals = []
    for i in range(n_kernels):
        if i % 2 == 0:
            rivals.append(_gaussian_kernel(grid, rng.uniform(0.05, 1.0), rng.uniform(0.2, 3.0)))
        else:
            noise = np.clip(phi.values * (1 + 0.5 * rng.standard_normal(phi.values.shape)), 0, 1)
            rivals.append(symmetrize_kernel(AmbiguityMap(noise, "perturbed", grid)))
    exact = exact_siws(model, grid).values
    region = central_region(grid.m_count)
    factor = sqrt_factor(covariance_matrix(model, grid))
    tot_opt, tot_riv = 0.0, np.zeros(n_kernels)
    for lo, hi in _blocks(n_paths):
        X = sample_paths(model, grid, hi - lo, seed, first=lo, factor=factor)
        tot_opt += mse(cohen_values(X, phi, grid), exact, region) * (hi - lo)
        for i, k in enumerate(rivals):
            tot_riv[i] += mse(cohen_values(X, k, grid), exact, region) * (hi - lo)
    return {"optimal": tot_opt / n_paths, "rivals": list(tot_riv / n_paths)}
