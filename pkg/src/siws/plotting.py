"""Figures written next to the CSV outputs (Agg backend, PNG without metadata)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_map", "plot_kernels", "plot_windows", "plot_window_sweep", "plot_tables", "save"]

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "image.cmap": "viridis",
}


def save(fig, path) -> None:
    # no Software/date chunks, so identical inputs give identical bytes
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)


def _extent(x, y):
    return [x[0], x[-1], y[0], y[-1]]


def plot_map(values, x, y, path, title="", xlabel="xi", ylabel="ln t") -> None:
    """Image of a real map indexed ``[y, x]``."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.4))
        im = ax.imshow(np.asarray(values), origin="lower", aspect="auto", extent=_extent(x, y))
        fig.colorbar(im, ax=ax)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        fig.tight_layout()
        save(fig, path)


def plot_kernels(kernels, path, zoom=(1.0, 4.0)) -> None:
    """Panels of ``(label, AmbiguityMap)`` pairs.

    Each panel is cropped to ``|theta| <= zoom[0]`` and ``|ln tau| <= zoom[1]``.
    """
    n = len(kernels)
    cols = 2 if n > 1 else 1
    rows = (n + cols - 1) // cols
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(rows, cols, figsize=(3.4 * cols, 3.0 * rows), squeeze=False)
        for ax, (label, phi) in zip(axes.flat, kernels):
            th = phi.theta
            d = phi.lags * phi.grid.delta
            qi = np.abs(th) <= zoom[0]
            pi = np.abs(d) <= zoom[1]
            im = ax.imshow(phi.values[np.ix_(qi, pi)], origin="lower", aspect="auto",
                           extent=_extent(d[pi], th[qi]), vmin=0, vmax=1)
            ax.set_xlabel("ln tau")
            ax.set_ylabel("theta")
            ax.set_title(label)
            fig.colorbar(im, ax=ax)
        for ax in list(axes.flat)[n:]:
            ax.axis("off")
        fig.tight_layout()
        save(fig, path)


def plot_windows(eigen, hermite, path, n_show=3, span=4.0) -> None:
    u = eigen.ratio_grid.u
    sel = np.abs(u) <= span
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, n_show, figsize=(3.0 * n_show, 2.6), squeeze=False)
        a = eigen.symmetrized()
        b = hermite.symmetrized()
        for k, ax in enumerate(axes[0]):
            if k >= len(eigen) or k >= len(hermite):
                ax.axis("off")
                continue
            ip = np.vdot(a[k], b[k])
            ph = ip / abs(ip) if abs(ip) > 0 else 1.0
            ax.plot(u[sel], (ph * a[k]).real[sel], label=f"eigen {k + 1}")
            ax.plot(u[sel], b[k].real[sel], "--", label=f"Hermite {k}")
            ax.set_xlabel("ln t")
            ax.legend(frameon=False)
        fig.tight_layout()
        save(fig, path)


def plot_window_sweep(res, path) -> None:
    n_k = res.errors.shape[2]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, n_k, figsize=(3.0 * n_k, 2.6), squeeze=False)
        for k, ax in enumerate(axes[0]):
            for i, c in enumerate(res.c_values):
                ax.plot(res.h_values, np.log(np.maximum(res.errors[i, :, k], 1e-300)),
                        marker="o", ms=3, label=f"c = {c:g}")
            ax.set_xlabel("H")
            ax.set_ylabel(f"log e_{k + 1}")
            ax.legend(frameon=False)
        fig.tight_layout()
        save(fig, path)


def plot_tables(reports, columns, path, title="") -> None:
    """Grouped bars of MSE per method, one group per column (log scale)."""
    methods = list(reports[0].mse)
    x = np.arange(len(columns))
    width = 0.8 / len(methods)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.0))
        for i, m in enumerate(methods):
            ax.bar(x + (i - (len(methods) - 1) / 2) * width, [r.mse[m] for r in reports],
                   width, label=m)
        ax.set_xticks(x)
        ax.set_xticklabels(columns)
        ax.set_yscale("log")
        ax.set_ylabel("MSE")
        ax.set_title(title)
        ax.legend(frameon=False)
        fig.tight_layout()
        save(fig, path)
