"""Scale-invariant Wigner spectrum estimation for Gaussian locally self-similar processes."""

__version__ = "0.1.0"

from .loggrid import LogGrid, centered_grid, make_log_grid, mellin_forward, mellin_inverse  # noqa: E402
from .models import PRESETS, CovarianceModel, load_model, lssp  # noqa: E402
from .simulate import NumericalError, sample_paths, sample_realizations  # noqa: E402
from .spectrum import (ambiguity_mean, ambiguity_second_moment, cohen_tfr,  # noqa: E402
                       exact_siws, mean_siws_numeric, optimal_kernel, siwd)
from .taper import eigendecompose, psi_kernel, quasi_lamperti_windows  # noqa: E402
from .estimate import EstimatorConfig, multitaper_estimate, spectrogram  # noqa: E402

__all__ = [
    "LogGrid", "centered_grid", "make_log_grid", "mellin_forward", "mellin_inverse",
    "PRESETS", "CovarianceModel", "load_model", "lssp",
    "NumericalError", "sample_paths", "sample_realizations",
    "ambiguity_mean", "ambiguity_second_moment", "cohen_tfr", "exact_siws", "mean_siws_numeric",
    "optimal_kernel", "siwd",
    "eigendecompose", "psi_kernel", "quasi_lamperti_windows",
    "EstimatorConfig", "multitaper_estimate", "spectrogram",
]
