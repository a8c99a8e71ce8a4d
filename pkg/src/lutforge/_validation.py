"""Input validation helpers shared by the estimators and the functional API."""

import numpy as np


def check_image(img, name="image", copy=False, clip=False):
    """Validate an H x W x 3 float image and return it as float64.

    Args:
        img: array-like of shape (H, W, 3).
        name: used in error messages.
        copy: force a copy even if ``img`` is already float64.
        clip: clamp values into [0, 1] instead of rejecting them.

    Raises:
        ValueError: on wrong shape, non-finite values, or (unless ``clip``)
            values outside [0, 1].
    """
    arr = np.array(img, dtype=np.float64) if copy else np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one pixel, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if clip:
        return np.clip(arr, 0.0, 1.0)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return arr


def check_same_shape(a, b, names=("a", "b")):
    if a.shape != b.shape:
        raise ValueError(f"{names[0]} and {names[1]} differ in shape: {a.shape} vs {b.shape}")


def check_param_stack(params):
    """Validate an (n, H, W, 3) stack of curve parameter maps in [-1, 1]."""
    arr = np.asarray(params, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4 or arr.shape[3] != 3 or arr.shape[0] < 1:
        raise ValueError(f"parameter stack must have shape (n, H, W, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("parameter stack contains non-finite values")
    return arr


def check_positive_int(value, name, minimum=1):
    if isinstance(value, (bool, np.bool_)) or int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
