"""Light-adjustment stage: LUT-driven curve parameters and the quadratic brightening curve."""

import numpy as np

from ._validation import check_image, check_positive_int
from .lut import lookup

CURVE_MODES = ("per_step_lookup", "fixed_params")
DEFAULT_STEPS = 8


def _check_param_lut(llut):
    if not llut.is_param:
        raise ValueError(f"curve parameters need a (-1, 1) range LUT, got value_range={llut.value_range}")


def derive_params(llut, img):
    """Per-pixel curve parameters ``lookup(llut, img(x))``, shape (H, W, 3)."""
    _check_param_lut(llut)
    # convexity keeps the blend in [-1, 1]; the clip only removes roundoff
    return np.clip(lookup(llut, img), -1.0, 1.0)


def curve_step(img, params):
    """One application of ``v + a * v * (1 - v)``.

    For ``a`` in [-1, 1] the map is nondecreasing in ``v`` and fixes 0 and 1,
    so values in [0, 1] stay in [0, 1].
    """
    return img + params * img * (1.0 - img)


def enhance(llut, img, n=DEFAULT_STEPS, mode="per_step_lookup"):
    """Apply ``n`` curve steps with parameters taken from ``llut``.

    Args:
        llut: parameter LUT with value range (-1, 1).
        img: (H, W, 3) image in [0, 1].
        n: number of curve steps.
        mode: ``"per_step_lookup"`` re-queries the LUT with each intermediate
            image; ``"fixed_params"`` looks up once on the input and reuses
            that map for every step.

    Returns:
        ``(enhanced, params)`` where ``params`` has shape (n, H, W, 3).
    """
    _check_param_lut(llut)
    n = check_positive_int(n, "n")
    if mode not in CURVE_MODES:
        raise ValueError(f"mode must be one of {CURVE_MODES}, got {mode!r}")
    current = check_image(img)
    stack = np.empty((n,) + current.shape)
    params = None
    for s in range(n):
        if params is None or mode == "per_step_lookup":
            params = derive_params(llut, current)
        stack[s] = params
        current = curve_step(current, params)
        assert current.min() >= 0.0 and current.max() <= 1.0, "curve step left [0, 1]"
    return current, stack
