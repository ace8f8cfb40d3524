import os
from pathlib import Path

import numpy as np
import pytest

import speckle_cs as sc

DATA = Path(os.environ.get("SPECKLE_CS_TEST_DATA", Path(__file__).resolve().parents[1] / "data"))


def test_speckle_shape_and_contrast():
    patterns = [sc.generate_speckle(64, 0.5, seed) for seed in range(20)]
    assert patterns[0].shape == (64, 64)
    stack = np.stack(patterns)
    assert np.all(stack >= 0)
    assert abs(stack.std() / stack.mean() - 1.0) < 0.1


def test_speckle_is_deterministic():
    np.testing.assert_array_equal(sc.generate_speckle(28, 0.3, 7), sc.generate_speckle(28, 0.3, 7))


def test_low_pass_all_pass_is_identity():
    img = np.random.default_rng(0).random((28, 28))
    np.testing.assert_array_equal(sc.low_pass(img, 1.0), img)


def test_invalid_cutoff_raises():
    with pytest.raises(sc._core.ArgumentError):
        sc.generate_speckle(28, 1.5, 0)


def test_build_matrix_and_measure():
    A = sc.build_matrix(12, 0.5, seed=3)
    assert A.shape == (12, 784)
    img = sc.synthetic_digit(4, 1)
    np.testing.assert_allclose(sc.measure(A, img), A @ img.ravel(), rtol=1e-12)
    np.testing.assert_array_equal(A[5].reshape(28, 28), sc.build_matrix(12, 0.5, seed=3)[5].reshape(28, 28))


def test_projection_matches_sort_oracle():
    rng = np.random.default_rng(1)
    v = rng.normal(size=30)
    tau = 2.0
    u = np.sort(np.abs(v))[::-1]
    css = np.cumsum(u)
    k = np.nonzero(u * np.arange(1, 31) > css - tau)[0][-1]
    theta = (css[k] - tau) / (k + 1)
    expected = np.sign(v) * np.maximum(np.abs(v) - theta, 0)
    np.testing.assert_allclose(sc.project_l1_ball(v, tau), expected, atol=1e-12)


def test_bp_recovers_sparse_vector():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(40, 100))
    x0 = np.zeros(100)
    x0[[3, 50, 77]] = [1.5, -2.0, 0.8]
    rep = sc.solve_bp(A, A @ x0)
    assert rep.converged
    assert np.max(np.abs(rep.solution - x0)) < 1e-4


def test_bpdn_residual_within_delta():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(30, 60))
    y = rng.normal(size=30)
    delta = 0.3 * np.linalg.norm(y)
    rep = sc.solve_bpdn(A, y, sc.BpdnConfig(delta=delta))
    assert rep.converged
    assert np.linalg.norm(A @ rep.solution - y) <= delta + 1e-5 * max(1.0, np.linalg.norm(y)) * 1.0001


def test_fixture_model_forward_and_gradient():
    model = sc.load_model(str(DATA / "fixture_model.ggw1"))
    assert model.latent_dim == 100
    assert model.image_shape == (28, 28)
    z = np.random.default_rng(4).normal(size=100)
    g = sc.forward(model, z)
    assert g.shape == (28, 28)
    assert np.all(np.abs(g) <= 1.0)
    A = sc.build_matrix(10, 0.5, seed=1)
    y = A @ ((g.ravel() + 1) / 2)
    loss, grad = sc.loss_and_gradient(model, z, A, y)
    assert loss == pytest.approx(0.0, abs=1e-18)
    assert grad.shape == (100,)


def test_reconstruct_returns_trace():
    model = sc.fixture_model()
    A = sc.build_matrix(30, 0.5, seed=2)
    truth = (sc.forward(model, np.random.default_rng(5).normal(size=100)) + 1) / 2
    cfg = sc.ReconConfig()
    cfg.steps = 30
    cfg.restarts = 2
    out = sc.reconstruct(model, A, A @ truth.ravel(), cfg)
    assert out["image"].shape == (28, 28)
    assert len(out["loss_trace"]) == 31
    assert out["loss_trace"][-1] <= out["loss_trace"][0]


def test_pearson_and_aggregate():
    assert sc.pearson(np.arange(5.0), 2 * np.arange(5.0) + 1) == pytest.approx(1.0)
    assert sc.pearson(np.ones(4), np.arange(4.0)) is None
    rows = [
        {"nu": 0.5, "m": 100, "noise": 0.0, "method": "bp", "r": 0.5},
        {"nu": 0.5, "m": 100, "noise": 0.0, "method": "bp", "r": 0.7},
        {"nu": 0.5, "m": 100, "noise": 0.0, "method": "bp", "r": None},
    ]
    (agg,) = sc.aggregate(rows)
    assert agg["count"] == 2 and agg["undefined"] == 1
    assert agg["mean_r"] == pytest.approx(0.6)
    assert agg["std_r"] == pytest.approx(0.1)
