import math

import numpy as np
import pytest

from fogxray.nn.gradcheck import backprop_gradients
from fogxray.nn.model import build_model
from fogxray.nn.training import (
    HISTORY_COLUMNS,
    evaluate,
    fit,
    hard_labels,
    history_csv_lines,
    predict,
)

TINY = dict(input_hw=8, conv_channels=(2, 3), dense_units=4, kernel=3)


def tiny_model(seed=0, dropout=(0.0, 0.0)):
    return build_model("two_block", seed=seed, dropout_rates=dropout, **TINY)


def separable_set(rng, n_per_class=8, hw=8):
    bright = rng.uniform(0.75, 0.95, size=(n_per_class, hw, hw, 3))
    dark = rng.uniform(0.05, 0.25, size=(n_per_class, hw, hw, 3))
    images = np.concatenate([dark, bright]).astype(np.float32)
    labels = np.array([0] * n_per_class + [1] * n_per_class, dtype=np.int64)
    return images, labels


def test_predict_shape_and_range(rng):
    model = tiny_model()
    x = rng.uniform(size=(6, 8, 8, 3)).astype(np.float32)
    p = predict(model, x)
    assert p.shape == (6,)
    assert np.all((p > 0) & (p < 1))


def test_hard_labels_threshold():
    assert hard_labels(np.array([0.49, 0.5, 0.51, 0.0, 1.0])).tolist() == [0, 1, 1, 0, 1]


def test_evaluate_on_constant_half_predictor(rng):
    # all-zero weights force sigmoid(0) = 0.5 everywhere
    model = tiny_model()
    for t in model.parameters().values():
        t.array[...] = 0.0
    images, labels = separable_set(rng)
    loss, report = evaluate(model, images, labels)
    assert loss == pytest.approx(math.log(2), abs=1e-9)
    assert report.accuracy == 0.5  # every 0.5 rounds up to class 1
    assert report.log_loss == loss


def test_zero_epochs_returns_empty_history(rng):
    model = tiny_model()
    history = fit(model, separable_set(rng), None, epochs=0)
    assert history == []
    assert history_csv_lines(history) == [",".join(HISTORY_COLUMNS)]


def test_fit_is_deterministic(rng):
    data = separable_set(rng)
    h1 = fit(tiny_model(seed=3), data, data, epochs=3, batch_size=4, seed=9)
    h2 = fit(tiny_model(seed=3), data, data, epochs=3, batch_size=4, seed=9)
    assert h1 == h2


def test_fit_seed_changes_the_trajectory(rng):
    data = separable_set(rng)
    h1 = fit(tiny_model(seed=3), data, data, epochs=2, batch_size=4, seed=1)
    h2 = fit(tiny_model(seed=3), data, data, epochs=2, batch_size=4, seed=2)
    assert h1 != h2


def test_fit_learns_a_separable_problem(rng):
    data = separable_set(rng, n_per_class=8)
    model = tiny_model(seed=1)
    history = fit(model, data, None, epochs=60, batch_size=8, lr=0.005,
                  early_stop_patience=None, seed=4)
    assert history[-1].train_accuracy == 1.0
    assert history[-1].train_loss < 0.25 * history[0].train_loss


def test_duplicated_sample_keeps_mean_gradient(rng):
    # the 1/K in the loss makes [x] and [x, x] produce identical gradients
    model = build_model("three_block", seed=2, input_hw=8,
                        conv_channels=(2, 3, 4), dense_units=8, kernel=3,
                        dropout_rates=(0.0, 0.0)).cast(np.float64)
    x = rng.uniform(size=(1, 8, 8, 3))
    y = np.array([1], dtype=np.int64)
    g_single = backprop_gradients(model, x, y)
    g_double = backprop_gradients(model, np.concatenate([x, x]), np.array([1, 1]))
    for name in g_single:
        assert np.allclose(g_single[name], g_double[name], atol=1e-12)


def test_bias_gradient_of_the_constant_half_predictor(rng):
    # with all parameters zero, output is 0.5 and d(loss)/d(final bias)
    # collapses to mean(p - y) = 0.5 - mean(y)
    model = tiny_model().cast(np.float64)
    for t in model.parameters().values():
        t.array[...] = 0.0
    x = rng.uniform(size=(4, 8, 8, 3))
    grads = backprop_gradients(model, x, np.ones(4, dtype=np.int64))
    assert grads["dense_1/bias"][0] == pytest.approx(-0.5, abs=1e-12)
    grads = backprop_gradients(model, x, np.zeros(4, dtype=np.int64))
    assert grads["dense_1/bias"][0] == pytest.approx(0.5, abs=1e-12)


def test_early_stopping_counts_stale_epochs(rng):
    # lr=0 freezes the model, so val loss never improves after epoch 1:
    # epoch 2 and 3 go stale and patience=2 stops the run at epoch 3
    data = separable_set(rng)
    history = fit(tiny_model(), data, data, epochs=10, batch_size=4,
                  lr=0.0, early_stop_patience=2, seed=0)
    assert len(history) == 3


def test_early_stopping_disabled_runs_all_epochs(rng):
    data = separable_set(rng)
    for patience in (None, 0):
        history = fit(tiny_model(), data, data, epochs=4, batch_size=4,
                      lr=0.0, early_stop_patience=patience, seed=0)
        assert len(history) == 4


def test_no_validation_set_reports_nan_columns(rng):
    history = fit(tiny_model(), separable_set(rng), None, epochs=1, batch_size=4)
    assert math.isnan(history[0].val_loss)
    assert math.isnan(history[0].val_accuracy)
    line = history_csv_lines(history)[1]
    assert line.startswith("1,")
    assert "nan" in line


def test_history_csv_layout(rng):
    data = separable_set(rng)
    history = fit(tiny_model(), data, data, epochs=2, batch_size=4, seed=5)
    lines = history_csv_lines(history)
    assert lines[0] == ("epoch,train_loss,train_accuracy,train_precision,"
                        "train_recall,train_f1,val_loss,val_accuracy,"
                        "val_precision,val_recall,val_f1")
    assert len(lines) == 3
    for i, line in enumerate(lines[1:], start=1):
        fields = line.split(",")
        assert len(fields) == len(HISTORY_COLUMNS)
        assert fields[0] == str(i)
        float(fields[1])  # parses


def test_fit_validates_arguments(rng):
    data = separable_set(rng)
    with pytest.raises(ValueError):
        fit(tiny_model(), data, None, epochs=-1)
    with pytest.raises(ValueError):
        fit(tiny_model(), data, None, epochs=1, batch_size=0)
    with pytest.raises(ValueError):
        fit(tiny_model(), (data[0][:0], data[1][:0]), None, epochs=1)
