"""Deterministic procedural test images."""

import numpy as np


def value_noise(height, width, seed=0, cells=8):
    """Smooth RGB value noise in [0, 1]: a random lattice blended with smoothstep weights."""
    rng = np.random.default_rng(seed)
    lattice = rng.random((cells + 1, cells + 1, 3))
    y = np.linspace(0.0, cells, height, endpoint=False) if height > 1 else np.zeros(1)
    x = np.linspace(0.0, cells, width, endpoint=False) if width > 1 else np.zeros(1)
    y0 = np.floor(y).astype(int)
    x0 = np.floor(x).astype(int)
    ty = y - y0
    tx = x - x0
    ty = (ty * ty * (3 - 2 * ty))[:, None, None]
    tx = (tx * tx * (3 - 2 * tx))[None, :, None]
    # blend along x on every lattice row, then along y
    rows = lattice[:, x0] + (lattice[:, x0 + 1] - lattice[:, x0]) * tx
    top = rows[y0]
    return top + (rows[y0 + 1] - top) * ty


def dark_scene(height=64, width=64, mean=0.10, seed=0):
    """Value-noise texture rescaled so its overall mean intensity equals ``mean``."""
    tex = value_noise(height, width, seed)
    return np.clip(tex * (mean / tex.mean()), 0.0, 1.0)


def gradient_scene(height=32, width=32):
    """Clean two-axis color ramp used as a denoising target."""
    yy, xx = np.mgrid[0:height, 0:width]
    u = xx / max(width - 1, 1)
    v = yy / max(height - 1, 1)
    return np.stack([0.2 + 0.6 * u, 0.2 + 0.6 * v, 0.35 + 0.3 * u * v], axis=-1)


def add_gaussian_noise(img, sigma, seed=0):
    rng = np.random.default_rng(seed)
    return np.clip(img + rng.normal(0.0, sigma, img.shape), 0.0, 1.0)
