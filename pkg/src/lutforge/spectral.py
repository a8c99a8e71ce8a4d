"""Per-channel 2D spectra, phase extraction and phase-only reconstruction."""

import numpy as np

from .fft import fft2, ifft2

# Bins whose magnitude is below this fraction of the channel's largest bin are
# treated as exact zeros (roundoff otherwise gives them arbitrary phases).
ZERO_BIN_RTOL = 1e-10


def dft2(img):
    """Unnormalized forward 2D DFT of each channel of an (H, W, C) array."""
    return fft2(np.asarray(img, dtype=np.float64), axes=(0, 1))


def idft2(spec):
    return ifft2(spec, axes=(0, 1))


def zero_bins(spec, rtol=ZERO_BIN_RTOL):
    """Boolean mask of bins treated as zero, judged per channel."""
    mag = np.abs(spec)
    peak = mag.max(axis=(0, 1), keepdims=True)
    return mag <= rtol * peak


def phase(spec, rtol=ZERO_BIN_RTOL):
    """Angle of each bin in (-pi, pi]; zero bins get phase 0."""
    ang = np.arctan2(spec.imag, spec.real)
    ang = np.where(ang == -np.pi, np.pi, ang)
    return np.where(zero_bins(spec, rtol), 0.0, ang)


def wrap_angle(theta):
    """Principal value of ``theta`` in (-pi, pi]."""
    wrapped = np.mod(theta + np.pi, 2 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def phase_only_reconstruction(img, return_info=False):
    """Inverse transform of the unit-magnitude spectrum, min-max scaled per channel.

    Channels that are exactly constant have no meaningful non-DC phase; they
    come back as mid-gray and are reported in ``info["constant_channels"]``.
    """
    img = np.asarray(img, dtype=np.float64)
    recon = idft2(np.exp(1j * phase(dft2(img)))).real
    out = np.empty_like(recon)
    constant = []
    for c in range(img.shape[2]):
        chan = recon[..., c]
        lo, hi = chan.min(), chan.max()
        if np.ptp(img[..., c]) == 0 or hi - lo <= 1e-12:
            out[..., c] = 0.5
            constant.append(c)
        else:
            out[..., c] = (chan - lo) / (hi - lo)
    if return_info:
        return out, {"constant_channels": constant}
    return out
