"""Covariance families of Gaussian locally self-similar processes.

A model is a sum of locally self-similar components, each with
``R_j(t, s) = Q_j(sqrt(ts)) * C_j(t/s)``, optionally multiplied as a whole by
the chirp factor ``(t/s)^(i a (ln sqrt(ts) - b))``.  The shipped components use
the log-Gaussian forms

    Q(tau) = tau^(2H - (ln tau)/2),   C(tau) = tau^(-(c/8) ln tau),   c >= 1.

In log coordinates (``w`` the log geometric mean, ``d`` the log ratio) this is
``exp(2 H w - w^2/2 - c d^2 / 8)``, which is a valid covariance exactly when
``c >= 1``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import jsonschema
import numpy as np

from .loggrid import LogGrid

__all__ = [
    "ModelError",
    "ModelFileError",
    "LsspParams",
    "CallableComponent",
    "ChirpParams",
    "CovarianceModel",
    "covariance",
    "covariance_matrix",
    "q_total",
    "lssp",
    "PRESETS",
    "REFERENCE_KERNELS",
    "load_model",
    "save_model",
    "model_from_dict",
]


class ModelError(ValueError):
    """Invalid model parameters or evaluation outside the model's domain."""


class ModelFileError(ModelError):
    """A model description file failed schema validation."""


@dataclass(frozen=True)
class LsspParams:
    """One log-Gaussian component: Hurst exponent ``H`` and concentration ``c``."""

    H: float
    c: float

    def __post_init__(self):
        if not np.isfinite(self.H):
            raise ModelError(f"H must be finite, got {self.H}")
        if not (np.isfinite(self.c) and self.c >= 1):
            raise ModelError(f"c must satisfy c >= 1, got {self.c}")

    def log_q(self, w):
        return 2 * self.H * w - 0.5 * w * w

    def log_c(self, d):
        return -(self.c / 8.0) * d * d


@dataclass(frozen=True)
class CallableComponent:
    """User supplied component ``Q(sqrt(ts)) * C(t/s)``.

    ``Q`` and ``C`` receive positive arrays.  Closed-form spectra are not
    available for these components; use the numeric routes instead.
    """

    Q: Callable[[np.ndarray], np.ndarray]
    C: Callable[[np.ndarray], np.ndarray]
    label: str = "callable"


@dataclass(frozen=True)
class ChirpParams:
    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ModelError("chirp parameters must be finite")


Component = Union[LsspParams, CallableComponent]


@dataclass(frozen=True)
class CovarianceModel:
    components: tuple
    chirp: Optional[ChirpParams] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ModelError("a model needs at least one component")
        for comp in comps:
            if not isinstance(comp, (LsspParams, CallableComponent)):
                raise ModelError(f"unsupported component {comp!r}")
        object.__setattr__(self, "components", comps)

    @property
    def kind(self) -> str:
        multi = len(self.components) > 1
        if self.chirp is None:
            return "MLSSP" if multi else "LSSP"
        return "MLSSCP" if multi else "LSSCP"

    @property
    def closed_form(self) -> bool:
        return all(isinstance(c, LsspParams) for c in self.components)

    def to_dict(self) -> dict:
        if not self.closed_form:
            raise ModelError("callable components cannot be serialized")
        out = {
            "components": [{"H": c.H, "c": c.c} for c in self.components],
            "chirp": None if self.chirp is None else {"a": self.chirp.a, "b": self.chirp.b},
        }
        if self.name:
            out["name"] = self.name
        return out

    def describe(self) -> str:
        if self.name:
            return self.name
        parts = ",".join(
            f"H={c.H:g}/c={c.c:g}" if isinstance(c, LsspParams) else c.label
            for c in self.components
        )
        if self.chirp is not None:
            parts += f",a={self.chirp.a:g},b={self.chirp.b:g}"
        return f"{self.kind}({parts})"


def lssp(H: float, c: float, a: float = None, b: float = 0.0, name: str = "") -> CovarianceModel:
    chirp = None if a is None else ChirpParams(a, b)
    return CovarianceModel((LsspParams(H, c),), chirp, name)


def _component_value(comp: Component, w, d):
    if isinstance(comp, LsspParams):
        return np.exp(comp.log_q(w) + comp.log_c(d))
    return np.asarray(comp.Q(np.exp(w)), dtype=complex) * np.asarray(comp.C(np.exp(d)), dtype=complex)


def _covariance_log(model: CovarianceModel, lt, ls):
    """Covariance at log-times ``lt``, ``ls`` (broadcasting)."""
    w = 0.5 * (lt + ls)
    d = lt - ls
    total = sum(_component_value(comp, w, d) for comp in model.components)
    if model.chirp is not None:
        total = total * np.exp(1j * model.chirp.a * d * (w - model.chirp.b))
    return total


def covariance(model: CovarianceModel, t, s):
    """``R_X(t, s)`` for positive ``t``, ``s`` (array arguments broadcast)."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t <= 0) or np.any(s <= 0):
        raise ModelError("covariance is defined for t > 0 and s > 0 only")
    out = _covariance_log(model, np.log(t), np.log(s))
    if model.chirp is None and model.closed_form:
        out = np.real(out)
    return out[()] if np.ndim(out) == 0 else out


def covariance_matrix(model: CovarianceModel, grid: LogGrid) -> np.ndarray:
    """Matrix ``R[m, n] = R_X(t_m, t_n)``; Hermitian by construction."""
    u = grid.u
    R = _covariance_log(model, u[:, None], u[None, :])
    R = np.asarray(R, dtype=complex)
    # enforce exact Hermitian symmetry against round-off in the exponentials
    R = 0.5 * (R + R.conj().T)
    if model.chirp is None and model.closed_form:
        return R.real.copy()
    return R


def q_total(model: CovarianceModel, t) -> np.ndarray:
    """Diagonal of the covariance, ``sum_j Q_j(t)``."""
    lt = np.log(np.asarray(t, dtype=float))
    return np.real(sum(_component_value(c, lt, 0.0 * lt) for c in model.components))


def _mlssp(c2: float, chirp: ChirpParams = None, name: str = "") -> CovarianceModel:
    return CovarianceModel((LsspParams(0.2, 4.0), LsspParams(0.8, c2)), chirp, name)


PRESETS = {
    "lssp-c2": lssp(0.5, 2, name="lssp-c2"),
    "lssp-c4": lssp(0.5, 4, name="lssp-c4"),
    "lssp-c7": lssp(0.5, 7, name="lssp-c7"),
    "lssp-c10": lssp(0.5, 10, name="lssp-c10"),
    "lssp-c20": lssp(0.5, 20, name="lssp-c20"),
    "lsscp-c2-b0": lssp(0.5, 2, a=2, b=0, name="lsscp-c2-b0"),
    "lsscp-c7": lssp(0.5, 7, a=2, b=-2, name="lsscp-c7"),
    "lsscp-c10": lssp(0.5, 10, a=2, b=-2, name="lsscp-c10"),
    "lsscp-c20": lssp(0.5, 20, a=2, b=-2, name="lsscp-c20"),
    "mlssp-c4-7": _mlssp(7, name="mlssp-c4-7"),
    "mlssp-c4-10": _mlssp(10, name="mlssp-c4-10"),
    "mlssp-c4-20": _mlssp(20, name="mlssp-c4-20"),
    "mlsscp-c4-10": _mlssp(10, ChirpParams(2, 0), name="mlsscp-c4-10"),
}

# the four kernels shown side by side in the kernel figure
REFERENCE_KERNELS = ("lssp-c2", "lsscp-c2-b0", "mlssp-c4-10", "mlsscp-c4-10")

MODEL_SCHEMA = {
    "type": "object",
    "required": ["components"],
    "properties": {
        "name": {"type": "string"},
        "components": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["H", "c"],
                "properties": {
                    "H": {"type": "number"},
                    "c": {"type": "number", "minimum": 1},
                },
                "additionalProperties": False,
            },
        },
        "chirp": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "required": ["a", "b"],
                    "properties": {"a": {"type": "number"}, "b": {"type": "number"}},
                    "additionalProperties": False,
                },
            ]
        },
    },
    "additionalProperties": False,
}


def model_from_dict(doc: dict) -> CovarianceModel:
    try:
        jsonschema.validate(doc, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ModelFileError(f"invalid model description: {exc.message}") from exc
    comps = tuple(LsspParams(float(c["H"]), float(c["c"])) for c in doc["components"])
    chirp = doc.get("chirp")
    chirp = None if chirp is None else ChirpParams(float(chirp["a"]), float(chirp["b"]))
    return CovarianceModel(comps, chirp, doc.get("name", ""))


def load_model(path) -> CovarianceModel:
    """Read a JSON model description.  Missing files raise ``OSError``."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(doc)


def save_model(model: CovarianceModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2, sort_keys=True) + "\n")


def canonical_json(model: CovarianceModel) -> str:
    doc = model.to_dict()
    doc.pop("name", None)
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def models_for(names: Sequence[str]):
    return [PRESETS[n] for n in names]
