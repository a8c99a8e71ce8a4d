"""Zero-reference enhancement losses and the pseudo-reference L1 loss.

Every loss returns ``(value, gradient)``. Reduction conventions, which the
gradient scales depend on:

* exposure: gray = mean of RGB; one block mean per 16 x 16 tile (partial
  tiles at the right/bottom edge count as their own blocks); mean over blocks
  of the squared deviation from the target level.
* structural: mean over all bins and channels of the wrapped absolute phase
  difference.
* color: sum over the (R,G), (G,B), (B,R) pairs of squared differences of
  the channel means.
* smoothing: forward differences with a zero difference on the last
  row/column; spatial mean of ``(|dx| + |dy|)**2`` per map and channel,
  summed over channels, averaged over maps.
* diff: mean absolute error.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np

from ._validation import check_param_stack, check_same_shape
from .spectral import dft2, idft2, phase, wrap_angle, zero_bins

EXPOSURE_LEVEL = 0.65
EXPOSURE_REGION = 16


@dataclass(frozen=True)
class LossWeights:
    """Weights of the exposure, color and smoothing terms (structural is fixed at 1)."""

    exposure: float = 10.0
    color: float = 5.0
    smoothing: float = 1600.0

    def __post_init__(self):
        for name in ("exposure", "color", "smoothing"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"loss weight {name} must be positive and finite, got {value!r}")


@dataclass
class LossReport:
    """Per-term loss values; terms a stage does not use stay ``None``."""

    e: float = None
    p: float = None
    c: float = None
    s: float = None
    diff: float = None
    total: float = None

    def to_dict(self):
        return {k: (None if v is None else float(v)) for k, v in asdict(self).items()}

    def to_json(self):
        return json.dumps(self.to_dict())

    def terms(self):
        return {k: v for k, v in self.to_dict().items() if v is not None}


def _block_edges(length, region):
    return np.arange(0, length, region)


def exposure_loss(enhanced, level=EXPOSURE_LEVEL, region=EXPOSURE_REGION):
    if region < 1:
        raise ValueError(f"region must be >= 1, got {region}")
    h, w, _ = enhanced.shape
    gray = enhanced.mean(axis=2)
    rows, cols = _block_edges(h, region), _block_edges(w, region)
    # center before summing so a gray image at the target level gives exactly 0
    sums = np.add.reduceat(np.add.reduceat(gray - level, rows, axis=0), cols, axis=1)
    rh = np.diff(np.append(rows, h))
    cw = np.diff(np.append(cols, w))
    counts = np.outer(rh, cw)
    dev = sums / counts
    z = dev.size
    loss = float(np.mean(dev ** 2))
    block_grad = 2.0 * dev / (z * counts * 3.0)
    pix = np.repeat(np.repeat(block_grad, rh, axis=0), cw, axis=1)
    return loss, np.repeat(pix[..., None], 3, axis=2)


def structural_loss(inp, enhanced):
    check_same_shape(inp, enhanced, ("input", "enhanced"))
    spec = dft2(enhanced)
    diff = wrap_angle(phase(spec) - phase(dft2(inp)))
    count = diff.size
    loss = float(np.mean(np.abs(diff)))
    g_theta = np.sign(diff) / count
    mag2 = np.abs(spec) ** 2
    # also drop bins whose squared magnitude underflows
    dead = zero_bins(spec) | (mag2 < np.finfo(np.float64).tiny)
    cot = np.where(dead, 0.0, g_theta * 1j * spec / np.where(dead, 1.0, mag2))
    h, w, _ = enhanced.shape
    grad = h * w * idft2(cot).real
    return loss, grad


def color_loss(enhanced):
    h, w, _ = enhanced.shape
    mu = enhanced.reshape(-1, 3).mean(axis=0)
    r, g, b = mu
    loss = float((r - g) ** 2 + (g - b) ** 2 + (b - r) ** 2)
    d_mu = 2.0 * np.array([2 * r - g - b, 2 * g - b - r, 2 * b - r - g])
    return loss, np.broadcast_to(d_mu / (h * w), enhanced.shape).copy()


def _forward_diffs(params):
    dx = np.zeros_like(params)
    dy = np.zeros_like(params)
    dx[:, :, :-1] = params[:, :, 1:] - params[:, :, :-1]
    dy[:, :-1] = params[:, 1:] - params[:, :-1]
    return dx, dy


def smoothing_loss(params):
    params = check_param_stack(params)
    n, h, w, _ = params.shape
    dx, dy = _forward_diffs(params)
    tv = np.abs(dx) + np.abs(dy)
    loss = float((tv ** 2).sum() / (n * h * w))
    g = 2.0 * tv / (n * h * w)
    gx = g * np.sign(dx)
    gy = g * np.sign(dy)
    grad = np.zeros_like(params)
    grad[:, :, 1:] += gx[:, :, :-1]
    grad[:, :, :-1] -= gx[:, :, :-1]
    grad[:, 1:] += gy[:, :-1]
    grad[:, :-1] -= gy[:, :-1]
    return loss, grad


def total_loss(inp, enhanced, params, weights=None, level=EXPOSURE_LEVEL, region=EXPOSURE_REGION):
    """Weighted objective ``we*e + p + wc*c + ws*s``.

    Returns ``(report, grad_enhanced, grad_params)``.
    """
    weights = LossWeights() if weights is None else weights
    e, ge = exposure_loss(enhanced, level, region)
    p, gp = structural_loss(inp, enhanced)
    c, gc = color_loss(enhanced)
    s, gs = smoothing_loss(params)
    total = weights.exposure * e + p + weights.color * c + weights.smoothing * s
    grad_img = weights.exposure * ge + gp + weights.color * gc
    return LossReport(e=e, p=p, c=c, s=s, total=total), grad_img, weights.smoothing * gs


def diff_loss(pseudo_ref, output, tie_tol=0.0):
    """Mean absolute error and its subgradient with respect to ``output``.

    Residuals with magnitude ``<= tie_tol`` count as ties (zero subgradient).
    """
    check_same_shape(pseudo_ref, output, ("pseudo-reference", "output"))
    resid = np.asarray(output, dtype=np.float64) - pseudo_ref
    loss = float(np.mean(np.abs(resid)))
    grad = np.where(np.abs(resid) <= tie_tol, 0.0, np.sign(resid)) / resid.size
    return loss, grad


def smoothness_penalty(field):
    """Same reduction as :func:`smoothing_loss` for a single (H, W, 3) field."""
    loss, grad = smoothing_loss(np.asarray(field, dtype=np.float64)[None])
    return loss, grad[0]
