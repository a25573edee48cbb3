"""Command-line front end.

Every file written gets a ``<file>.meta.json`` sidecar with the config hash,
seed and package version.  Kernels and eigen tapers are cached under content
hashes of (model, grid, floor).  Exit codes: 0 success, 1 usage or invalid
input, 2 numerical failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .estimate import DEFAULT_K_USED, multitaper_values
from .eval import (TABLES, hermite_tapers, run_table, window_sweep, write_reports_json,
                   write_table_csv, write_window_sweep_csv)
from .io import read_map_binary, write_map_binary, write_map_csv, write_tapers_csv
from .loggrid import GridError, LogGrid
from .models import PRESETS, REFERENCE_KERNELS, ModelError, canonical_json, load_model
from .simulate import BLOCK, NumericalError, read_paths_csv, sample_paths, write_paths_csv
from .spectrum import (DEFAULT_FLOOR, AmbiguityMap, KernelError, exact_siws, optimal_kernel,
                       siwd_values)
from .taper import (TaperSet, eigendecompose, psi_kernel, spectral_concentration,
                    window_error, window_overlap)

logger = logging.getLogger("siws")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    model_file: Optional[str]
    preset: str
    u_min: Optional[float]
    delta: float
    m_count: int
    n_paths: int
    seed: int
    k_used: int
    floor: float
    alpha: Optional[float]
    out: str
    threads: int = 1

    def validate(self):
        if self.delta <= 0:
            raise UsageError(f"--delta must be positive, got {self.delta}")
        if self.m_count < 2 or self.m_count % 2:
            raise UsageError(f"--m-count must be even and >= 2, got {self.m_count}")
        if self.n_paths < 1:
            raise UsageError("--paths must be >= 1")
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")
        if self.seed < 0:
            raise UsageError("--seed must be >= 0")
        if not 1 <= self.k_used <= 2 * self.m_count:
            raise UsageError(f"--k-used must lie in [1, {2 * self.m_count}]")
        if self.floor < 0:
            raise UsageError("--floor must be >= 0")
        if self.alpha is not None and not (self.alpha > 0 and self.alpha != 1):
            raise UsageError("--alpha must be positive and different from 1")
        if self.model_file is None and self.preset not in PRESETS:
            raise UsageError(f"unknown preset {self.preset!r}; choose from {', '.join(PRESETS)}")

    @property
    def grid(self) -> LogGrid:
        if self.u_min is None:
            return LogGrid.centered(self.delta, self.m_count)
        return LogGrid(self.u_min, self.delta, self.m_count)

    def model(self):
        if self.model_file is not None:
            return load_model(self.model_file)
        return PRESETS[self.preset]

    def digest(self, **extra) -> str:
        doc = asdict(self)
        # where and how fast a run happens does not change its results
        doc.pop("out")
        doc.pop("threads")
        doc.update(extra)
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _parse_alpha(text: str) -> Optional[float]:
    if text == "fit":
        return None
    if text == "e":
        return float(np.e)
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, 'e' or 'fit', got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model and grid")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--model", dest="model_file", help="JSON model description")
    src.add_argument("--preset", default="lssp-c4", help="shipped model preset (default lssp-c4)")
    g.add_argument("--m-count", type=int, default=128)
    g.add_argument("--delta", type=float, default=0.1, help="log-time step in nats")
    g.add_argument("--u-min", type=float, default=None, help="first log-time node (default: centered)")
    e = common.add_argument_group("estimation")
    e.add_argument("--paths", dest="n_paths", type=int, default=500)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--k-used", type=int, default=DEFAULT_K_USED)
    e.add_argument("--floor", type=float, default=DEFAULT_FLOOR)
    e.add_argument("--alpha", type=_parse_alpha, default=None,
                   help="Hermite scale: a number, 'e', or 'fit' to match the eigen-windows (default)")
    o = common.add_argument_group("output")
    o.add_argument("--out", default="siws-out", help="output directory")
    o.add_argument("--no-cache", action="store_true", help="neither read nor write cached kernels")
    o.add_argument("--cache-dir", default=None, help="cache directory (default: OUT/cache)")
    o.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    o.add_argument("--figures", action="store_true", help="also render PNG figures")
    o.add_argument("-q", "--quiet", action="store_true")

    p = _Parser(prog="siws", description="Scale-invariant Wigner spectrum estimation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="write sample paths")
    k = sub.add_parser("kernel", parents=[common], help="optimal ambiguity kernel")
    k.add_argument("--reference-set", action="store_true", help="compute the four reference kernels")
    sub.add_parser("windows", parents=[common], help="eigen and Hermite windows")
    es = sub.add_parser("estimate", parents=[common], help="exact spectrum and the three estimates")
    es.add_argument("--input", default=None, help="path CSV (default: simulate)")
    es.add_argument("--single", action="store_true", help="estimate from the first path only")
    ev = sub.add_parser("evaluate", parents=[common], help="MSE tables and the window sweep")
    ev.add_argument("--tables", nargs="+", choices=list(TABLES), default=list(TABLES),
                    help="model families to tabulate (default: all)")
    ev.add_argument("--skip-sweep", action="store_true")
    ev.add_argument("--h-values", type=float, nargs="+", default=None)
    return p


# --------------------------------------------------------------------------
# output helpers


class Outputs:
    def __init__(self, cfg: RunConfig, command: str):
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.meta = {"command": command, "config_hash": cfg.digest(command=command),
                     "seed": cfg.seed, "version": __version__}
        self.written = []

    def path(self, name: str) -> Path:
        return self.dir / name

    def done(self, name: str, **info):
        meta = dict(self.meta, file=name, **info)
        with open(self.dir / f"{name}.meta.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.written.append(name)
        logger.info("wrote %s", self.dir / name)


class Cache:
    def __init__(self, cfg: RunConfig, enabled: bool, where: Optional[str]):
        self.enabled = enabled
        self.dir = Path(where) if where else Path(cfg.out) / "cache"

    def key(self, model, grid: LogGrid, floor: float) -> Optional[str]:
        try:
            doc = canonical_json(model)
        except ModelError:
            return None
        g = [grid.u_min, grid.delta, grid.m_count]
        text = json.dumps({"model": doc, "grid": g, "floor": floor, "version": __version__},
                          sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:24]

    def load(self, name: str, shape=None):
        if not self.enabled:
            return None
        f = self.dir / name
        if not f.exists():
            return None
        try:
            arr = read_map_binary(f)
        except ValueError as exc:
            logger.warning("ignoring unreadable cache file %s (%s)", f, exc)
            return None
        if shape is not None and arr.shape != shape:
            logger.warning("ignoring cache file %s with shape %s", f, arr.shape)
            return None
        logger.info("cache hit: %s", f)
        return arr

    def store(self, name: str, values):
        if not self.enabled:
            return
        self.dir.mkdir(parents=True, exist_ok=True)
        write_map_binary(values, self.dir / name)


def _kernel(model, grid, floor, cache: Cache) -> AmbiguityMap:
    key = cache.key(model, grid, floor)
    shape = (2 * grid.m_count, 2 * grid.m_count - 1)
    if key is not None:
        vals = cache.load(f"phi-{key}.bin", shape)
        if vals is not None:
            return AmbiguityMap(vals, "phi-opt", grid)
    phi = optimal_kernel(model, grid, floor)
    if key is not None:
        cache.store(f"phi-{key}.bin", phi.values)
    return phi


def _eigen(model, grid, floor, cache: Cache, phi=None) -> TaperSet:
    """Complete eigen taper set, cached."""
    key = cache.key(model, grid, floor)
    L = 2 * grid.m_count
    if key is not None:
        w = cache.load(f"eigen-{key}.bin", (L, L))
        lam = cache.load(f"eigval-{key}.bin", (1, L))
        if w is not None and lam is not None:
            return TaperSet(w, lam[0], "eigen", grid)
    if phi is None:
        phi = _kernel(model, grid, floor, cache)
    ts = eigendecompose(psi_kernel(phi, grid))
    if key is not None:
        cache.store(f"eigen-{key}.bin", ts.windows)
        cache.store(f"eigval-{key}.bin", ts.weights[None, :])
    return ts


def _mean_blocks(fn, n_paths: int, threads: int):
    """Mean of ``fn(lo, hi)`` block sums over all paths, added in block order."""
    blocks = [(lo, min(lo + BLOCK, n_paths)) for lo in range(0, n_paths, BLOCK)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: fn(*b), blocks))
    else:
        parts = [fn(*b) for b in blocks]
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total / n_paths


# --------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: RunConfig, args) -> None:
    out = Outputs(cfg, "simulate")
    paths = sample_paths(cfg.model(), cfg.grid, cfg.n_paths, cfg.seed)
    write_paths_csv(paths, out.path("paths.csv"))
    out.done("paths.csv", n_paths=cfg.n_paths)


def cmd_kernel(cfg: RunConfig, args, cache: Cache) -> None:
    out = Outputs(cfg, "kernel")
    grid = cfg.grid
    if args.reference_set:
        items = [(name, PRESETS[name]) for name in REFERENCE_KERNELS]
    else:
        model = cfg.model()
        items = [("phi_opt", model)]
    panels = []
    for label, model in items:
        phi = _kernel(model, grid, cfg.floor, cache)
        name = f"phi_{label}" if args.reference_set else label
        lags = phi.lags * grid.delta
        write_map_csv(phi.values, phi.theta, lags, out.path(f"{name}.csv"), row_label="theta")
        out.done(f"{name}.csv", model=model.describe())
        write_map_binary(phi.values, out.path(f"{name}.bin"))
        out.done(f"{name}.bin", model=model.describe())
        support = float(np.mean(phi.values > 0))
        print(f"{label}: max {phi.values.max():.6g}, phi(0, 1) "
              f"{phi.values[grid.m_count, grid.m_count - 1]:.6g}, support fraction {support:.4f}")
        panels.append((model.describe(), phi))
    if args.figures:
        from .plotting import plot_kernels
        name = "reference_kernels.png" if args.reference_set else "phi_opt.png"
        plot_kernels(panels, out.path(name))
        out.done(name)


def cmd_windows(cfg: RunConfig, args, cache: Cache) -> None:
    out = Outputs(cfg, "windows")
    grid, model = cfg.grid, cfg.model()
    phi = _kernel(model, grid, cfg.floor, cache)
    full = _eigen(model, grid, cfg.floor, cache, phi)
    eigen = full.head(cfg.k_used)
    herm, alpha = hermite_tapers(model, eigen, grid, cfg.alpha)
    write_tapers_csv(eigen, out.path("eigen_tapers.csv"))
    out.done("eigen_tapers.csv", model=model.describe())
    write_tapers_csv(herm, out.path("hermite_tapers.csv"))
    out.done("hermite_tapers.csv", model=model.describe(), alpha=alpha)
    with open(out.path("window_errors.csv"), "w") as fh:
        fh.write("k,lambda,e_k,overlap\n")
        for k in range(1, cfg.k_used + 1):
            fh.write(f"{k},{eigen.weights[k - 1]!r},{window_error(eigen, herm, k)!r},"
                     f"{window_overlap(eigen, herm, k)!r}\n")
    out.done("window_errors.csv", alpha=alpha)
    conc = spectral_concentration(full, cfg.k_used)
    neg = full.weights[full.weights < 0]
    print(f"alpha {alpha:.6g}, concentration of {cfg.k_used} tapers {conc:.4f}, "
          f"most negative weight {neg.min() if neg.size else 0.0:.3g}")
    if args.figures:
        from .plotting import plot_windows
        plot_windows(eigen, herm, out.path("windows.png"))
        out.done("windows.png")


def cmd_estimate(cfg: RunConfig, args, cache: Cache) -> None:
    out = Outputs(cfg, "estimate")
    grid, model = cfg.grid, cfg.model()
    phi = _kernel(model, grid, cfg.floor, cache)
    eigen = _eigen(model, grid, cfg.floor, cache, phi).head(cfg.k_used)
    herm, alpha = hermite_tapers(model, eigen, grid, cfg.alpha)
    if args.input:
        X = read_paths_csv(args.input, grid.m_count)
    else:
        X = sample_paths(model, grid, 1 if args.single else cfg.n_paths, cfg.seed)
    if args.single:
        X = X[:1]
    n = X.shape[0]

    def block(lo, hi):
        Y = X[lo:hi]
        return np.stack([siwd_values(Y, grid).sum(0),
                         multitaper_values(Y, eigen, grid).sum(0),
                         multitaper_values(Y, herm, grid).sum(0)])

    maps = _mean_blocks(block, n, cfg.threads)
    named = [("exact_siws", exact_siws(model, grid).values), ("siwd", maps[0]),
             ("simw", maps[1]), ("hermite", maps[2])]
    mode = "single" if n == 1 else "mean"
    for name, vals in named:
        write_map_csv(vals, grid.u, grid.xi, out.path(f"{name}.csv"), row_label="u")
        out.done(f"{name}.csv", model=model.describe(), mode=mode, n_paths=n, alpha=alpha)
    if args.figures:
        from .plotting import plot_map
        for name, vals in named:
            plot_map(vals, grid.xi, grid.u, out.path(f"{name}.png"), title=name)
            out.done(f"{name}.png")


def cmd_evaluate(cfg: RunConfig, args, cache: Cache) -> None:
    out = Outputs(cfg, "evaluate")
    grid = cfg.grid
    for t in args.tables:
        layout = TABLES[t]
        reports = run_table(layout["presets"], grid, cfg.n_paths, cfg.seed, cfg.k_used,
                            cfg.floor, cfg.alpha, cfg.threads)
        write_table_csv(reports, layout["columns"], out.path(f"mse_{t}.csv"))
        out.done(f"mse_{t}.csv", title=layout["title"])
        write_reports_json(reports, out.path(f"mse_{t}.json"),
                           {"table": t, "title": layout["title"], "columns": list(layout["columns"])})
        out.done(f"mse_{t}.json")
        for col, r in zip(layout["columns"], reports):
            flag = "ordered" if r.ordered else "NOT ordered"
            print(f"{t} {col}: SIMW {r.mse['SIMW']:.4g}  Hermite {r.mse['Hermite']:.4g}  "
                  f"SIWD {r.mse['SIWD']:.4g}  ratio {r.ratio:.2f}  {flag}")
        if args.figures:
            from .plotting import plot_tables
            plot_tables(reports, layout["columns"], out.path(f"mse_{t}.png"), layout["title"])
            out.done(f"mse_{t}.png")
    if not args.skip_sweep:
        h = tuple(args.h_values) if args.h_values else None
        res = window_sweep(grid=grid, alpha=cfg.alpha, floor=cfg.floor, h_values=h)
        write_window_sweep_csv(res, out.path("window_sweep.csv"))
        out.done("window_sweep.csv")
        print(f"window sweep: e_2(c=20) <= e_2(c=4) for every H: {res.trend_holds()}")
        if args.figures:
            from .plotting import plot_window_sweep
            plot_window_sweep(res, out.path("window_sweep.png"))
            out.done("window_sweep.png")


COMMANDS = {"kernel": cmd_kernel, "windows": cmd_windows, "estimate": cmd_estimate,
            "evaluate": cmd_evaluate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = RunConfig(args.model_file, args.preset, args.u_min, args.delta, args.m_count,
                        args.n_paths, args.seed, args.k_used, args.floor, args.alpha, args.out,
                        args.threads)
        cfg.validate()
        cache = Cache(cfg, not args.no_cache, args.cache_dir)
        if args.command == "simulate":
            cmd_simulate(cfg, args)
        else:
            COMMANDS[args.command](cfg, args, cache)
    except (NumericalError, KernelError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"siws: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ModelError, GridError, ValueError) as exc:
        print(f"siws: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"siws: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
