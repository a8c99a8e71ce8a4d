"""scikit-learn style wrappers around the two fitting stages.

``X`` is always one (H, W, 3) image in [0, 1]; fitting is per image, so
``fit`` adapts the tables to that image and ``transform`` applies them.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_image
from .curve import enhance
from .kernels import run_pipeline
from .losses import LossWeights
from .noise import suppress
from .optim import OptimConfig, fit_llut, fit_nlut


class LightAdjustmentLUT(TransformerMixin, BaseEstimator):
    """Brighten an image with n curve steps whose parameters come from a fitted 3D LUT.

    Parameters
    ----------
    lut_size : int, default=9
    n_steps : int, default=8
    curve_mode : {"per_step_lookup", "fixed_params"}
    iterations : int, default=200
    learning_rate : float, default=1e-4
    optimizer : {"adam", "sgd"}
    loss_weights : tuple of 3 floats, default=(10, 5, 1600)
        Exposure, color and smoothing weights.
    exposure_level : float, default=0.65
    detach_params : bool, default=False
        Drop the dependence of later curve parameters on earlier steps when
        back-propagating (only matters for ``per_step_lookup``).
    random_state : int, default=0
        Recorded for reproducibility; the fit itself is deterministic.

    Attributes
    ----------
    lut_ : Lut3D
    trace_ : list of LossReport
    """

    def __init__(self, lut_size=9, n_steps=8, curve_mode="per_step_lookup", iterations=200,
                 learning_rate=1e-4, optimizer="adam", loss_weights=(10.0, 5.0, 1600.0),
                 exposure_level=0.65, detach_params=False, random_state=0):
        self.lut_size = lut_size
        self.n_steps = n_steps
        self.curve_mode = curve_mode
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.loss_weights = loss_weights
        self.exposure_level = exposure_level
        self.detach_params = detach_params
        self.random_state = random_state

    def _config(self):
        return OptimConfig(
            stage="llut", iterations=self.iterations, learning_rate=self.learning_rate,
            lut_size=self.lut_size, curve_steps=self.n_steps, curve_mode=self.curve_mode,
            weights=LossWeights(*self.loss_weights), seed=self.random_state,
            optimizer=self.optimizer, detach_params=self.detach_params,
            exposure_level=self.exposure_level,
        )

    def fit(self, X, y=None):
        X = check_image(X)
        self.lut_, self.trace_ = fit_llut(X, self._config())
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        check_is_fitted(self, "lut_")
        coarse, _ = run_pipeline(check_image(X), self.lut_, n=self.n_steps, mode=self.curve_mode)
        return coarse

    def param_stack(self, X):
        """Curve parameter maps used for ``X``, shape (n_steps, H, W, 3)."""
        check_is_fitted(self, "lut_")
        return enhance(self.lut_, X, self.n_steps, self.curve_mode)[1]


class NoiseSuppressionLUT(TransformerMixin, BaseEstimator):
    """Denoise a brightened image with a fitted color LUT and pixel-wise weight map.

    ``fit(X, y)`` takes the coarse image ``X`` and the pseudo-reference ``y``.
    Because the weight map is per pixel, ``transform`` only accepts images of
    the fitted size.
    """

    def __init__(self, lut_size=17, iterations=300, learning_rate=1e-5, optimizer="adam",
                 wmap_smoothness=0.1, random_state=0):
        self.lut_size = lut_size
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.wmap_smoothness = wmap_smoothness
        self.random_state = random_state

    def fit(self, X, y):
        cfg = OptimConfig(stage="nlut", iterations=self.iterations, learning_rate=self.learning_rate,
                          lut_size=self.lut_size, optimizer=self.optimizer,
                          wmap_smoothness=self.wmap_smoothness, seed=self.random_state)
        self.lut_, self.weight_map_, self.trace_ = fit_nlut(check_image(X), check_image(y, "y"), cfg)
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        check_is_fitted(self, ["lut_", "weight_map_"])
        return suppress(self.lut_, X, self.weight_map_)

    def score(self, X, y):
        """Negative mean absolute error against ``y`` (higher is better)."""
        return -float(np.mean(np.abs(self.transform(X) - check_image(y, "y"))))
