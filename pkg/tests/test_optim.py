import json

import numpy as np
import pytest

from lutforge import optim
from lutforge.curve import enhance
from lutforge.losses import LossReport, LossWeights, total_loss
from lutforge.lut import PARAM_RANGE, Lut3D, identity_lut
from lutforge.optim import SGD, Adam, OptimConfig, backprop_pipeline, fit_llut, fit_nlut, load_config
from lutforge.synth import add_gaussian_noise, dark_scene, gradient_scene

MODES = ["per_step_lookup", "fixed_params"]


def objective(table, img, n, mode, weights=None):
    out, stack = enhance(Lut3D(table, PARAM_RANGE), img, n, mode)
    return total_loss(img, out, stack, weights)[0].total


# -- Adam / SGD -----------------------------------------------------------------

def test_adam_matches_hand_iteration():
    p = {"x": np.array([0.5, -1.0])}
    opt = Adam(0.1, 0.9, 0.99, 1e-8)
    grads = [np.array([1.0, -2.0]), np.array([0.5, 0.0]), np.array([-3.0, 1.0])]
    x = np.array([0.5, -1.0])
    m = np.zeros(2)
    v = np.zeros(2)
    for t, g in enumerate(grads, start=1):
        m = 0.9 * m + 0.1 * g
        v = 0.99 * v + 0.01 * g * g
        x = x - 0.1 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.99 ** t)) + 1e-8)
        opt.step(p, {"x": g})
        np.testing.assert_allclose(p["x"], x, rtol=0, atol=1e-15)


def test_adam_first_step_is_lr_sized():
    p = {"x": np.zeros(3)}
    Adam(1e-3).step(p, {"x": np.array([5.0, -0.01, 0.0])})
    np.testing.assert_allclose(p["x"], [-1e-3, 1e-3, 0.0], rtol=1e-5)


def test_sgd_step():
    p = {"x": np.array([1.0, 2.0])}
    SGD(0.5).step(p, {"x": np.array([2.0, -2.0])})
    np.testing.assert_array_equal(p["x"], [0.0, 3.0])


# -- config ---------------------------------------------------------------------

def test_stage_defaults():
    a = OptimConfig(stage="llut")
    b = OptimConfig(stage="nlut")
    assert (a.iterations, a.learning_rate, a.lut_size) == (200, 1e-4, 9)
    assert (b.iterations, b.learning_rate, b.lut_size) == (300, 1e-5, 17)
    assert (a.beta1, a.beta2, a.curve_steps) == (0.9, 0.99, 8)
    assert a.weights == LossWeights(10, 5, 1600)


@pytest.mark.parametrize("kwargs", [
    {"iterations": 0}, {"learning_rate": 0.0}, {"learning_rate": -1e-3}, {"stage": "both"},
    {"optimizer": "rmsprop"}, {"curve_mode": "sometimes"}, {"lut_size": 1}, {"wmap_smoothness": -1},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        OptimConfig(**kwargs)


def test_config_from_mapping():
    cfg = OptimConfig.from_mapping({"stage": "nlut", "weights": {"exposure": 1, "color": 2, "smoothing": 3}},
                                   iterations=5, learning_rate=None)
    assert cfg.iterations == 5
    assert cfg.learning_rate == 1e-5
    assert cfg.weights == LossWeights(1, 2, 3)
    with pytest.raises(ValueError, match="unknown"):
        OptimConfig.from_mapping({"iters": 3})


def test_load_config_toml_and_json(tmp_path):
    (tmp_path / "c.toml").write_text('stage = "llut"\niterations = 7\n[weights]\nexposure = 2.0\n')
    (tmp_path / "c.json").write_text(json.dumps({"stage": "nlut", "learning_rate": 0.01}))
    a = load_config(tmp_path / "c.toml", lut_size=5)
    b = load_config(tmp_path / "c.json")
    assert (a.iterations, a.lut_size, a.weights.exposure, a.weights.color) == (7, 5, 2.0, 5.0)
    assert (b.stage, b.learning_rate, b.iterations) == ("nlut", 0.01, 300)


# -- gradients ------------------------------------------------------------------

def test_zero_lut_on_target_gray_is_stationary():
    img = np.full((16, 16, 3), 0.65)
    for mode in MODES:
        _, g = backprop_pipeline(img, identity_lut(9, PARAM_RANGE), mode=mode)
        assert np.abs(g).max() <= 1e-9


@pytest.mark.parametrize("mode", MODES)
@pytest.mark.parametrize("detach", [False, True])
def test_backprop_matches_finite_differences(rng, mode, detach):
    img = rng.uniform(0.05, 0.6, size=(8, 8, 3))
    table = rng.uniform(-0.8, 0.8, size=(3, 3, 3, 3))
    _, g = backprop_pipeline(img, Lut3D(table, PARAM_RANGE), n=2, mode=mode, detach_params=detach)
    if detach and mode == "per_step_lookup":
        # the detached gradient is deliberately not the full derivative
        full = backprop_pipeline(img, Lut3D(table, PARAM_RANGE), n=2, mode=mode)[1]
        assert not np.allclose(g, full)
        return
    h = 1e-4
    flat = table.reshape(-1)
    for idx in rng.choice(flat.size, size=50, replace=False):
        plus, minus = flat.copy(), flat.copy()
        plus[idx] += h
        minus[idx] -= h
        fd = (objective(plus.reshape(table.shape), img, 2, mode)
              - objective(minus.reshape(table.shape), img, 2, mode)) / (2 * h)
        analytic = g.reshape(-1)[idx]
        assert abs(analytic - fd) <= 1e-3 * max(abs(fd), 1e-6)


def test_unvisited_cells_have_zero_gradient(rng):
    n_size = 9
    img = rng.uniform(0.02, 0.3, size=(8, 8, 3))
    table = rng.uniform(-0.2, 0.2, size=(3, n_size, n_size, n_size))
    lut = Lut3D(table, PARAM_RANGE)
    _, g = backprop_pipeline(img, lut, n=3)
    # visited stencils over every intermediate image
    visited = np.zeros((n_size,) * 3, dtype=bool)
    current = img
    for _ in range(3):
        p = current.reshape(-1, 3) * (n_size - 1)
        base = np.clip(np.ceil(p) - 1, 0, n_size - 2).astype(int)
        for di in (0, 1):
            for dj in (0, 1):
                for dk in (0, 1):
                    visited[base[:, 0] + di, base[:, 1] + dj, base[:, 2] + dk] = True
        current, _ = enhance(lut, current, 1)
    support = np.any(g != 0, axis=0)
    assert np.all(g[:, ~visited] == 0.0)
    assert np.array_equal(support, visited)
    assert visited.sum() < visited.size / 4


# -- fitting --------------------------------------------------------------------

def test_fit_llut_stationary_on_target_gray():
    lut, trace = fit_llut(np.full((16, 16, 3), 0.65), OptimConfig(iterations=20))
    assert np.all(lut.table == 0.0)
    assert all(r.total == 0.0 for r in trace)


def test_fit_llut_trace_and_descent():
    img = dark_scene(24, 24, seed=3)
    lut, trace = fit_llut(img, OptimConfig(iterations=30, learning_rate=1e-2))
    assert len(trace) == 31
    totals = np.array([r.total for r in trace])
    assert np.all(np.isfinite(totals))
    assert totals[-1] <= totals[0]
    assert lut.table.min() >= -1 and lut.table.max() <= 1


def test_fit_llut_deterministic():
    img = dark_scene(16, 16, seed=1)
    cfg = OptimConfig(iterations=10, learning_rate=1e-2)
    a, ta = fit_llut(img, cfg)
    b, tb = fit_llut(img, cfg)
    assert np.array_equal(a.table, b.table)
    assert [r.to_dict() for r in ta] == [r.to_dict() for r in tb]


def test_fit_llut_clamps_entries():
    lut, _ = fit_llut(dark_scene(16, 16), OptimConfig(iterations=5, learning_rate=5.0))
    assert lut.table.min() >= -1.0 and lut.table.max() <= 1.0
    assert np.abs(lut.table).max() == 1.0


def test_fit_rejects_wrong_stage():
    with pytest.raises(ValueError):
        fit_llut(dark_scene(8, 8), OptimConfig(stage="nlut"))
    with pytest.raises(ValueError):
        fit_nlut(dark_scene(8, 8), dark_scene(8, 8), OptimConfig(stage="llut"))


def test_non_finite_loss_aborts(monkeypatch):
    def broken(*args, **kwargs):
        report, g_img, g_par = total_loss(*args, **kwargs)
        return LossReport(e=report.e, p=float("nan"), c=report.c, s=report.s, total=float("nan")), g_img, g_par

    monkeypatch.setattr(optim, "total_loss", broken)
    with pytest.raises(FloatingPointError, match="'p'"):
        fit_llut(dark_scene(8, 8), OptimConfig(iterations=2))


def test_fit_nlut_already_optimal():
    coarse = add_gaussian_noise(gradient_scene(16, 16), 0.05, seed=2)
    lut, m, trace = fit_nlut(coarse, coarse)
    assert np.abs(lut.table - identity_lut(17).table).max() < 1e-6
    assert np.abs(m - 1.0).max() < 1e-6
    assert max(r.total for r in trace) < 1e-6


def test_fit_nlut_halved_target():
    coarse = gradient_scene(16, 16)
    _, m, trace = fit_nlut(coarse, 0.5 * coarse, OptimConfig(stage="nlut", iterations=300,
                                                             learning_rate=1e-2))
    assert trace[-1].diff <= 0.1 * trace[0].diff


def test_fit_nlut_clamps():
    coarse = gradient_scene(12, 12)
    lut, m, _ = fit_nlut(coarse, np.clip(coarse * 3, 0, 1),
                         OptimConfig(stage="nlut", iterations=5, learning_rate=2.0))
    assert lut.table.min() >= 0.0 and lut.table.max() <= 1.0
    assert m.min() >= 0.0


def test_fit_nlut_deterministic():
    coarse = add_gaussian_noise(gradient_scene(12, 12), 0.05, seed=4)
    cfg = OptimConfig(stage="nlut", iterations=8, learning_rate=1e-2)
    a = fit_nlut(coarse, gradient_scene(12, 12), cfg)
    b = fit_nlut(coarse, gradient_scene(12, 12), cfg)
    assert np.array_equal(a[0].table, b[0].table) and np.array_equal(a[1], b[1])
    assert [r.to_dict() for r in a[2]] == [r.to_dict() for r in b[2]]


def test_fit_nlut_shape_mismatch():
    with pytest.raises(ValueError):
        fit_nlut(gradient_scene(8, 8), gradient_scene(8, 9))
