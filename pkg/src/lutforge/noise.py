"""Noise-suppression stage: color LUT modulated by a pixel-wise weight map.

Also hosts the forward diffusion noising used to synthesize noisy inputs,
and the ``WMAP`` weight-map file format.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import check_image, check_positive_int
from .lut import lookup

WMAP_MAGIC = b"WMAP"
_WMAP_HEADER = struct.Struct("<4sII")


class WeightMapFormatError(ValueError):
    pass


def check_weight_map(m, shape=None):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 3 or m.shape[2] != 3:
        raise ValueError(f"weight map must have shape (H, W, 3), got {m.shape}")
    if not np.all(np.isfinite(m)) or m.min() < 0.0:
        raise ValueError("weight map values must be finite and nonnegative")
    if shape is not None and m.shape[:2] != tuple(shape[:2]):
        raise ValueError(f"weight map is {m.shape[:2]} but the image is {tuple(shape[:2])}")
    return m


def weight_map_uniform(height, width, value=1.0):
    height = check_positive_int(height, "height")
    width = check_positive_int(width, "width")
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"weight value must be finite and >= 0, got {value!r}")
    return np.full((height, width, 3), float(value))


def suppress(nlut, coarse, m, return_raw=False):
    """Map ``coarse`` through ``nlut`` and multiply by the weight map ``m``.

    The product is clamped to [0, 1]. With ``return_raw=True`` the unclamped
    product is returned as a second value.
    """
    if nlut.is_param:
        raise ValueError("noise suppression needs a (0, 1) color LUT, got a parameter LUT")
    coarse = check_image(coarse, "coarse image")
    m = check_weight_map(m, coarse.shape)
    raw = lookup(nlut, coarse) * m
    out = np.clip(raw, 0.0, 1.0)
    return (out, raw) if return_raw else out


def save_weight_map(m, path):
    m = check_weight_map(m)
    h, w, _ = m.shape
    Path(path).write_bytes(_WMAP_HEADER.pack(WMAP_MAGIC, h, w) + m.astype("<f4").tobytes())


def load_weight_map(path):
    data = Path(path).read_bytes()
    if len(data) < _WMAP_HEADER.size or data[:4] != WMAP_MAGIC:
        raise WeightMapFormatError(f"{path}: missing WMAP header")
    _, h, w = _WMAP_HEADER.unpack_from(data)
    expected = h * w * 3 * 4
    if len(data) - _WMAP_HEADER.size != expected:
        raise WeightMapFormatError(f"{path}: header declares {h}x{w} ({expected} bytes) "
                                   f"but payload has {len(data) - _WMAP_HEADER.size} bytes")
    m = np.frombuffer(data, dtype="<f4", offset=_WMAP_HEADER.size).astype(np.float64)
    try:
        return check_weight_map(m.reshape(h, w, 3))
    except ValueError as exc:
        raise WeightMapFormatError(f"{path}: {exc}") from None


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """Variance-preserving diffusion schedule defined by its betas."""

    betas: np.ndarray

    def __post_init__(self):
        betas = np.array(self.betas, dtype=np.float64).reshape(-1)
        if betas.size < 1:
            raise ValueError("schedule needs at least one beta")
        if not np.all((betas > 0) & (betas < 1)):
            raise ValueError("betas must lie strictly between 0 and 1")
        betas.setflags(write=False)
        object.__setattr__(self, "betas", betas)

    @classmethod
    def linear(cls, T=1000, beta_start=1e-4, beta_end=0.02):
        return cls(np.linspace(beta_start, beta_end, T))

    @property
    def T(self):
        return self.betas.size

    @property
    def alphas(self):
        return 1.0 - self.betas

    @property
    def alpha_bars(self):
        return np.cumprod(self.alphas)


def forward_noise(img, t, schedule=None, seed=0, clip=True):
    """Sample ``sqrt(abar_t) * img + sqrt(1 - abar_t) * eps`` with standard normal ``eps``.

    Noise comes from a Philox counter-based generator keyed by ``seed``, so a
    given (seed, image shape) always yields the same field. ``clip=False``
    skips the final clamp to [0, 1] (useful for checking moments).
    """
    schedule = NoiseSchedule.linear() if schedule is None else schedule
    if int(t) != t or not 0 <= t < schedule.T:
        raise ValueError(f"t must be an integer in [0, {schedule.T}), got {t!r}")
    img = check_image(img)
    abar = schedule.alpha_bars[int(t)]
    eps = np.random.Generator(np.random.Philox(key=int(seed))).standard_normal(img.shape)
    noisy = np.sqrt(abar) * img + np.sqrt(1.0 - abar) * eps
    return np.clip(noisy, 0.0, 1.0) if clip else noisy
