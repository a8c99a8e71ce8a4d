"""Per-image fitting of the light-adjustment and noise-suppression tables.

Both stages optimize LUT entries directly (no generator network). Gradients
are composed by hand: losses -> curve recurrence -> trilinear lookups ->
table entries.
"""

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ._validation import check_image, check_positive_int, check_same_shape
from .curve import CURVE_MODES
from .losses import (EXPOSURE_LEVEL, EXPOSURE_REGION, LossReport, LossWeights, diff_loss,
                     smoothness_penalty, total_loss)
from .lut import COLOR_RANGE, PARAM_RANGE, Lut3D, _lookup_full, identity_lut, scatter_entry_gradient

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

_STAGE_DEFAULTS = {
    "llut": {"iterations": 200, "learning_rate": 1e-4, "lut_size": 9},
    "nlut": {"iterations": 300, "learning_rate": 1e-5, "lut_size": 17},
}
# residuals this small are roundoff of an exact fit, not a direction to move in
DIFF_TIE_TOL = 1e-12


class Adam:
    """Bias-corrected Adam acting in place on a dict of arrays."""

    def __init__(self, lr, beta1=0.9, beta2=0.99, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params, grads):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for key, p in params.items():
            g = grads[key]
            if key not in self.m:
                self.m[key] = np.zeros_like(p)
                self.v[key] = np.zeros_like(p)
            m, v = self.m[key], self.v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


class SGD:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for key, p in params.items():
            p -= self.lr * grads[key]


@dataclass(frozen=True)
class OptimConfig:
    """Settings for one fitting stage.

    ``iterations``, ``learning_rate`` and ``lut_size`` default per stage
    (200 / 1e-4 / 9 for ``llut``, 300 / 1e-5 / 17 for ``nlut``).
    """

    stage: str = "llut"
    iterations: int = None
    learning_rate: float = None
    lut_size: int = None
    curve_steps: int = 8
    curve_mode: str = "per_step_lookup"
    weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    detach_params: bool = False
    wmap_smoothness: float = 0.1
    exposure_level: float = EXPOSURE_LEVEL
    exposure_region: int = EXPOSURE_REGION

    def __post_init__(self):
        if self.stage not in _STAGE_DEFAULTS:
            raise ValueError(f"stage must be 'llut' or 'nlut', got {self.stage!r}")
        for key, value in _STAGE_DEFAULTS[self.stage].items():
            if getattr(self, key) is None:
                object.__setattr__(self, key, value)
        if isinstance(self.weights, dict):
            object.__setattr__(self, "weights", LossWeights(**self.weights))
        check_positive_int(self.iterations, "iterations")
        check_positive_int(self.curve_steps, "curve_steps")
        check_positive_int(self.lut_size, "lut_size", minimum=2)
        if not np.isfinite(self.learning_rate) or self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        if self.curve_mode not in CURVE_MODES:
            raise ValueError(f"curve_mode must be one of {CURVE_MODES}, got {self.curve_mode!r}")
        if self.wmap_smoothness < 0:
            raise ValueError("wmap_smoothness must be >= 0")

    @classmethod
    def from_mapping(cls, mapping, **overrides):
        known = {f.name for f in fields(cls)}
        data = {**mapping, **{k: v for k, v in overrides.items() if v is not None}}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        return asdict(self)

    def make_optimizer(self):
        if self.optimizer == "sgd":
            return SGD(self.learning_rate)
        return Adam(self.learning_rate, self.beta1, self.beta2, self.eps)


def load_config(path, **overrides):
    """Read an :class:`OptimConfig` from a ``.toml`` or ``.json`` file."""
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".toml":
        mapping = tomllib.loads(raw.decode("utf-8"))
    else:
        mapping = json.loads(raw)
    return OptimConfig.from_mapping(mapping, **overrides)


# -- light adjustment -----------------------------------------------------------

def _pipeline_forward(table, img, n, mode):
    images = [img]
    params = []
    stencils = []
    cur = img
    a = None
    for s in range(n):
        if a is None or mode == "per_step_lookup":
            out, flat, w, jac = _lookup_full(table, cur)
            a = np.clip(out, -1.0, 1.0)
            stencils.append((flat, w, jac))
        params.append(a)
        cur = cur + a * cur * (1.0 - cur)
        images.append(cur)
    return images, params, stencils


def _pipeline_backward(images, params, stencils, grad_out, grad_params, size, mode, detach):
    n = len(params)
    g_img = grad_out
    if mode == "fixed_params":
        g_a = np.zeros_like(grad_out)
        for s in reversed(range(n)):
            v, a = images[s], params[s]
            g_a += g_img * v * (1.0 - v) + grad_params[s]
            g_img = g_img * (1.0 + a * (1.0 - 2.0 * v))
        flat, w, _ = stencils[0]
        return scatter_entry_gradient(g_a, flat, w, size)

    g_table = np.zeros((3, size, size, size))
    for s in reversed(range(n)):
        v, a = images[s], params[s]
        flat, w, jac = stencils[s]
        g_a = g_img * v * (1.0 - v) + grad_params[s]
        g_img = g_img * (1.0 + a * (1.0 - 2.0 * v))
        if not detach and s > 0:
            g_img = g_img + np.einsum("...c,...cd->...d", g_a, jac)
        g_table += scatter_entry_gradient(g_a, flat, w, size)
    return g_table


def _llut_objective(table, img, cfg):
    images, params, stencils = _pipeline_forward(table, img, cfg.curve_steps, cfg.curve_mode)
    report, g_img, g_params = total_loss(img, images[-1], np.stack(params), cfg.weights,
                                         cfg.exposure_level, cfg.exposure_region)
    g_table = _pipeline_backward(images, params, stencils, g_img, g_params, table.shape[1],
                                 cfg.curve_mode, cfg.detach_params)
    return report, g_table


def backprop_pipeline(img, llut, n=8, mode="per_step_lookup", weights=None, detach_params=False):
    """Total loss of ``enhance(llut, img)`` and its gradient w.r.t. every LUT entry.

    Returns ``(report, grad)`` with ``grad`` shaped like ``llut.table``.
    """
    if not llut.is_param:
        raise ValueError("backprop_pipeline needs a (-1, 1) parameter LUT")
    cfg = OptimConfig(stage="llut", curve_steps=n, curve_mode=mode,
                      weights=weights or LossWeights(), detach_params=detach_params)
    return _llut_objective(llut.table, check_image(img), cfg)


def _check_finite(report, grads):
    for name, value in report.terms().items():
        if not np.isfinite(value):
            raise FloatingPointError(f"loss term {name!r} became non-finite ({value})")
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"gradient of {name!r} became non-finite")


def fit_llut(img, cfg=None):
    """Fit a light-adjustment LUT to one image under the zero-reference objective.

    Starts from the all-zero table (identity enhancement). Returns the fitted
    :class:`Lut3D` and a trace of ``cfg.iterations + 1`` loss reports: the
    initial loss followed by the loss after each update.
    """
    cfg = OptimConfig(stage="llut") if cfg is None else cfg
    if cfg.stage != "llut":
        raise ValueError(f"fit_llut needs a stage='llut' config, got {cfg.stage!r}")
    img = check_image(img)
    table = identity_lut(cfg.lut_size, PARAM_RANGE).table.copy()
    opt = cfg.make_optimizer()
    trace = []
    for it in range(cfg.iterations + 1):
        report, g_table = _llut_objective(table, img, cfg)
        _check_finite(report, {"llut": g_table})
        trace.append(report)
        if it == cfg.iterations:
            break
        opt.step({"llut": table}, {"llut": g_table})
        np.clip(table, -1.0, 1.0, out=table)
    return Lut3D(table, PARAM_RANGE), trace


# -- noise suppression ----------------------------------------------------------

def _nlut_objective(table, m, coarse, pseudo_ref, smooth_weight):
    looked, flat, w, _ = _lookup_full(table, coarse)
    raw = looked * m
    diff, g_raw = diff_loss(pseudo_ref, raw, tie_tol=DIFF_TIE_TOL)
    total = diff
    g_m = g_raw * looked
    if smooth_weight > 0:
        pen, g_pen = smoothness_penalty(m)
        total = diff + smooth_weight * pen
        g_m = g_m + smooth_weight * g_pen
    g_table = scatter_entry_gradient(g_raw * m, flat, w, table.shape[1])
    return LossReport(diff=diff, total=total), g_table, g_m


def fit_nlut(coarse, pseudo_ref, cfg=None):
    """Fit a noise-suppression LUT and weight map so that ``NLUT(coarse) * m`` matches ``pseudo_ref``.

    Returns ``(lut, weight_map, trace)``; the trace holds the initial report
    followed by one report per update.
    """
    cfg = OptimConfig(stage="nlut") if cfg is None else cfg
    if cfg.stage != "nlut":
        raise ValueError(f"fit_nlut needs a stage='nlut' config, got {cfg.stage!r}")
    coarse = check_image(coarse, "coarse image")
    pseudo_ref = check_image(pseudo_ref, "pseudo-reference")
    check_same_shape(coarse, pseudo_ref, ("coarse image", "pseudo-reference"))
    table = identity_lut(cfg.lut_size, COLOR_RANGE).table.copy()
    m = np.ones_like(coarse)
    opt = cfg.make_optimizer()
    trace = []
    for it in range(cfg.iterations + 1):
        report, g_table, g_m = _nlut_objective(table, m, coarse, pseudo_ref, cfg.wmap_smoothness)
        _check_finite(report, {"nlut": g_table, "weight_map": g_m})
        trace.append(report)
        if it == cfg.iterations:
            break
        opt.step({"nlut": table, "weight_map": m}, {"nlut": g_table, "weight_map": g_m})
        np.clip(table, 0.0, 1.0, out=table)
        np.maximum(m, 0.0, out=m)
    return Lut3D(table, COLOR_RANGE), m, trace

