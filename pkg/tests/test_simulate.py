import numpy as np
import pytest

from siws.loggrid import LogGrid
from siws.models import CallableComponent, CovarianceModel, covariance_matrix, lssp
from siws.simulate import (NumericalError, Realization, read_paths_csv, sample_paths,
                           sample_realizations, sqrt_factor, write_paths_csv)


def zero_model():
    z = lambda x: np.zeros_like(x)  # noqa: E731
    return CovarianceModel((CallableComponent(z, z),))


def test_zero_covariance_gives_zero_paths():
    X = sample_paths(zero_model(), LogGrid.centered(0.2, 8), 5, seed=1)
    assert not np.any(X)


def test_identity_covariance_variance():
    eye = lambda x: np.ones_like(x)  # noqa: E731
    delta_c = lambda r: np.where(np.abs(np.log(r)) < 1e-12, 1.0, 0.0)  # noqa: E731
    model = CovarianceModel((CallableComponent(eye, delta_c),))
    g = LogGrid.centered(0.5, 8)
    assert np.allclose(covariance_matrix(model, g), np.eye(8))
    n = 10_000
    X = sample_paths(model, g, n, seed=3)
    var = np.mean(np.abs(X) ** 2, axis=0)
    assert np.all(np.abs(var - 1) <= 3 / np.sqrt(n))


def test_empirical_covariance_lssp():
    g = LogGrid.centered(0.2, 16)
    model = lssp(0.5, 4)
    R = covariance_matrix(model, g)
    n = 5000
    X = sample_paths(model, g, n, seed=11)
    emp = X.T @ X.conj() / n
    assert np.max(np.abs(emp - R)) <= 5 * np.max(np.diag(R)) / np.sqrt(n)
    pseudo = X.T @ X / n
    assert np.mean(np.abs(pseudo)) <= 5 * np.max(np.diag(R)) / np.sqrt(n)


def test_deterministic_and_subset_regeneration():
    g = LogGrid.centered(0.2, 16)
    model = lssp(0.5, 7, a=2, b=-2)
    A = sample_paths(model, g, 70, seed=5)
    B = sample_paths(model, g, 70, seed=5)
    assert np.array_equal(A, B)
    C = sample_paths(model, g, 10, seed=5, first=40)
    assert np.array_equal(A[40:50], C)
    assert not np.array_equal(A, sample_paths(model, g, 70, seed=6))


def test_realizations():
    reals = sample_realizations(lssp(0.5, 4), LogGrid.centered(0.2, 8), 3, seed=2)
    assert len(reals) == 3 and all(r.seed_tag == 2 and r.values.shape == (8,) for r in reals)
    with pytest.raises(NumericalError):
        Realization(np.array([1.0, np.nan]), 0)


def test_sample_count_validated():
    with pytest.raises(ValueError):
        sample_paths(lssp(0.5, 4), LogGrid.centered(0.2, 8), 0, seed=0)


def test_jitter_rescues_singular_matrix():
    v = np.arange(1, 6, dtype=float)
    L = sqrt_factor(np.outer(v, v))
    assert np.allclose(L @ L.T, np.outer(v, v), atol=1e-6 * 25)


def test_factorization_failure_reports_ladder():
    with pytest.raises(NumericalError, match="jitters tried"):
        sqrt_factor(-np.eye(4))


def test_paths_csv_round_trip(tmp_path):
    X = sample_paths(lssp(0.5, 4, a=2), LogGrid.centered(0.2, 8), 4, seed=9)
    f = tmp_path / "paths.csv"
    write_paths_csv(X, f)
    assert f.read_text().splitlines()[0] == "path_id,m,re,im"
    assert np.array_equal(read_paths_csv(f, 8), X)
    with pytest.raises(ValueError):
        read_paths_csv(f, 16)
