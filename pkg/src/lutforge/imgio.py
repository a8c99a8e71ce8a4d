"""Reading and writing 8-bit PNG / binary PPM images as [0, 1] float arrays."""

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

_FORMATS = {".png": "PNG", ".ppm": "PPM"}
_ACCEPTED_MODES = ("RGB", "RGBA", "L", "LA", "P")


class ImageFormatError(ValueError):
    pass


def load_image(path):
    """Load an 8-bit PNG or P6 PPM as an (H, W, 3) float64 array in [0, 1].

    Alpha is dropped; grayscale and palette images are expanded to RGB.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            fmt = im.format
            if fmt not in ("PNG", "PPM"):
                raise ImageFormatError(f"{path}: unsupported format {fmt!r} (need PNG or binary PPM)")
            if fmt == "PPM":
                with open(path, "rb") as fh:
                    magic = fh.read(2)
                if magic != b"P6":
                    raise ImageFormatError(f"{path}: only binary RGB PPM (P6) is supported, got {magic!r}")
            if im.mode not in _ACCEPTED_MODES:
                raise ImageFormatError(f"{path}: unsupported mode {im.mode!r}; only 8-bit images are supported")
            rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except UnidentifiedImageError:
        raise ImageFormatError(f"{path}: not a recognizable image file") from None
    return rgb.astype(np.float64) / 255.0


def quantize(img):
    """Round half away from zero to 8 bits after clamping to [0, 1]."""
    v = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255.0
    return np.floor(v + 0.5).astype(np.uint8)


def save_image(img, path):
    """Write ``img`` as PNG or PPM, chosen by the file extension."""
    path = Path(path)
    fmt = _FORMATS.get(path.suffix.lower())
    if fmt is None:
        raise ImageFormatError(f"{path}: unknown image extension (use .png or .ppm)")
    data = quantize(img)
    if data.ndim != 3 or data.shape[2] != 3:
        raise ImageFormatError(f"{path}: expected an (H, W, 3) image, got shape {data.shape}")
    try:
        Image.fromarray(data).save(path, format=fmt)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
