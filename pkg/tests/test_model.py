import numpy as np
import pytest

from mlrfit.errors import DimensionMismatch, NonFiniteInput
from mlrfit.model import (
    Dataset,
    MixtureWeights,
    MlrParams,
    NoiseKind,
    NoiseModel,
    SolverConfig,
    initial_params,
    validate_problem,
)
from mlrfit import synth


def small_problem(d=2, k=2, n=10, seed=0):
    rng = np.random.default_rng(seed)
    params = MlrParams(rng.standard_normal((d, k)))
    data = Dataset(x=rng.standard_normal((n, d)), y=rng.standard_normal(n))
    return params, data


def test_validate_problem_accepts_matching_dims():
    params, data = small_problem(d=2, k=2, n=10)
    validate_problem(params, data)  # no raise


def test_validate_problem_rejects_dim_mismatch():
    params, _ = small_problem(d=3, k=2)
    _, data = small_problem(d=2, k=2)
    with pytest.raises(DimensionMismatch):
        validate_problem(params, data)


def test_nan_in_y_rejected_at_construction():
    rng = np.random.default_rng(0)
    y = rng.standard_normal(5)
    y[3] = np.nan
    with pytest.raises(NonFiniteInput):
        Dataset(x=rng.standard_normal((5, 2)), y=y)


def test_params_reject_nan_and_wrong_rank():
    with pytest.raises(NonFiniteInput):
        MlrParams(np.array([[1.0, np.nan]]))
    with pytest.raises(DimensionMismatch):
        MlrParams(np.array([1.0, 2.0]))


def test_params_shape_properties():
    p = MlrParams(np.zeros((3, 4)))
    assert p.dim == 3 and p.k_components == 4


def test_noise_model_validation_and_b():
    nm = NoiseModel(NoiseKind.LAPLACIAN, 2.0)
    assert nm.b == 2.0 / np.sqrt(2.0)
    with pytest.raises(ValueError):
        NoiseModel(NoiseKind.GAUSSIAN, 0.0)
    with pytest.raises(NonFiniteInput):
        NoiseModel(NoiseKind.GAUSSIAN, np.inf)
    assert NoiseModel("gaussian").kind is NoiseKind.GAUSSIAN


def test_dataset_label_validation():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((4, 2))
    y = rng.standard_normal(4)
    with pytest.raises(DimensionMismatch):
        Dataset(x=x, y=y, labels=np.array([0, 1]))
    with pytest.raises(ValueError):
        Dataset(x=x, y=y, labels=np.array([0, -1, 0, 1]))
    truth = MlrParams(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        Dataset(x=x, y=y, labels=np.array([0, 1, 2, 0]), true_params=truth)


def test_mixture_weights_uniform_is_exact():
    for k in range(1, 15):
        w = MixtureWeights.uniform(k)
        assert np.max(np.abs(w.p - 1.0 / k)) == 0.0


def test_mixture_weights_reject_violations():
    with pytest.raises(ValueError):
        MixtureWeights(np.array([0.6, 0.6]))
    with pytest.raises(ValueError):
        MixtureWeights(np.array([-0.1, 1.1]))


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(n_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(n_iterations=5, rho=0.0)
    with pytest.raises(ValueError):
        SolverConfig(n_iterations=5, seed=-1)


def test_types_are_read_only():
    params, data = small_problem()
    with pytest.raises(ValueError):
        params.beta[0, 0] = 1.0
    with pytest.raises(ValueError):
        data.x[0, 0] = 1.0


def test_initial_params_deterministic_and_separate_from_data_stream():
    cfg = SolverConfig(n_iterations=1, seed=123)
    a = initial_params(cfg, 3, 2)
    b = initial_params(cfg, 3, 2)
    assert np.array_equal(a.beta, b.beta)
    # the data stream with the same seed must not reproduce the init draw
    truth = synth.generate(2, 3, 1, NoiseModel(NoiseKind.GAUSSIAN, 1.0), seed=123)
    assert not np.allclose(a.beta, truth.true_params.beta)


def test_initial_params_override():
    override = MlrParams(np.ones((2, 2)))
    cfg = SolverConfig(n_iterations=1, seed=5, init_params=override)
    assert np.array_equal(initial_params(cfg, 2, 2).beta, override.beta)
    with pytest.raises(DimensionMismatch):
        initial_params(cfg, 3, 2)
