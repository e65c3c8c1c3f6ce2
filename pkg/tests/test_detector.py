import numpy as np
import pytest

from ssid.detector import (
    AadrnnDetector,
    DecisionWindow,
    MlpDetector,
    MlpModel,
    _gradients,
    decide,
    mlp_update,
    score_device,
    score_traffic,
)


def test_scores_by_hand():
    x, x_hat = [0.2, 0.5, 1.0], [0.1, 0.9, 1.0]
    assert score_traffic(x, x_hat) == pytest.approx(0.5 / 3)
    assert score_device(x, x_hat) == pytest.approx(0.4)


def test_scores_are_clipped():
    assert score_traffic([0, 0], [5, 5]) == 1.0
    assert score_device([0], [-3]) == 1.0


def test_decide_uses_strict_threshold():
    assert not decide([0.25, 0.25]).is_attack
    assert decide([0.2, 0.31]).is_attack
    with pytest.raises(ValueError):
        decide([])


def test_window_is_per_key_and_bounded():
    w = DecisionWindow(size=2, gamma=0.5)
    w.push(1.0, "a")
    assert w.push(0.0, "b").window_mean == 0.0
    assert w.push(0.2, "a").window_mean == pytest.approx(0.6)
    d = w.push(0.2, "a")
    assert d.window_mean == pytest.approx(0.2) and not d.is_attack
    with pytest.raises(ValueError):
        DecisionWindow(size=0)


def test_mlp_parameter_count():
    assert MlpModel.init(3, 0).n_params == 36
    assert MlpModel.init(6, 0).n_params == 252


def test_mlp_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    model = MlpModel.init(3, rng)
    model = MlpModel(model.weights, tuple(rng.normal(size=3) * 0.1 for _ in range(3)))
    x = rng.uniform(size=(7, 3))
    gw, gb = _gradients(model, x)
    h = 1e-6
    for layer in range(3):
        for idx in np.ndindex(3, 3):
            ws = [w.copy() for w in model.weights]
            ws[layer][idx] += h
            up = MlpModel(tuple(ws), model.biases).loss(x)
            ws[layer][idx] -= 2 * h
            down = MlpModel(tuple(ws), model.biases).loss(x)
            assert gw[layer][idx] == pytest.approx((up - down) / (2 * h), abs=1e-8)
        for j in range(3):
            bs = [b.copy() for b in model.biases]
            bs[layer][j] += h
            up = MlpModel(model.weights, tuple(bs)).loss(x)
            bs[layer][j] -= 2 * h
            down = MlpModel(model.weights, tuple(bs)).loss(x)
            assert gb[layer][j] == pytest.approx((up - down) / (2 * h), abs=1e-8)


def test_mlp_training_reduces_loss_and_continues_from_weights():
    rng = np.random.default_rng(1)
    x = np.clip(0.6 + 0.05 * rng.normal(size=(200, 3)), 0, 1)
    m0 = MlpModel.init(3, 1)
    m1 = mlp_update(m0, x, epochs=30, lr=1e-2, rng=2)
    assert m1.loss(x) < m0.loss(x)
    assert m1.steps == 30 * 7
    m2 = mlp_update(m1, x, epochs=1, lr=1e-2, rng=3)
    assert m2.steps == m1.steps + 7


def test_mlp_non_finite_keeps_previous_model(caplog):
    m0 = MlpModel.init(3, 0)
    assert mlp_update(m0, np.full((4, 3), np.nan), epochs=1) is m0
    assert "non-finite" in caplog.text


def test_mlp_rejects_empty_batch():
    with pytest.raises(ValueError):
        mlp_update(MlpModel.init(3, 0), np.empty((0, 3)))


@pytest.mark.parametrize("cls", [AadrnnDetector, MlpDetector])
def test_learner_interface(cls):
    rng = np.random.default_rng(4)
    det = cls(3, rng=np.random.default_rng(5))
    x = rng.uniform(size=(30, 3))
    det.initial_fit(x)
    det.incremental_fit(x[:10])
    assert det.reconstruct(x).shape == (30, 3)
    assert det.reconstruct(x[0]).shape == (3,)
    assert det.n_params == 36
    assert "format" in det.to_dict()
