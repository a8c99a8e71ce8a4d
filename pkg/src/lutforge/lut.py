"""3D lookup tables: construction, trilinear lookup and its derivatives, file I/O.

Tables are stored channel-major as a ``(3, N, N, N)`` float64 array indexed
``[c, i, j, k]`` where ``i``, ``j`` and ``k`` follow the red, green and blue
input axes. A color ``c`` lands on lattice coordinate ``c * (N - 1)``; inputs
are clamped to [0, 1] first. A coordinate lying exactly on an interior
lattice plane is assigned to the lower cell (fractional weight 1), which
keeps the input Jacobian deterministic.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

COLOR_RANGE = (0.0, 1.0)
PARAM_RANGE = (-1.0, 1.0)
_RANGE_TAGS = {COLOR_RANGE: 0, PARAM_RANGE: 1}
_TAG_RANGES = {v: k for k, v in _RANGE_TAGS.items()}

MAGIC = b"LUT3"
_HEADER = struct.Struct("<4sIB")


class LutFormatError(ValueError):
    """Raised when a LUT file cannot be parsed."""


def _normalize_range(value_range):
    rng = (float(value_range[0]), float(value_range[1]))
    if rng not in _RANGE_TAGS:
        raise ValueError(f"value_range must be {COLOR_RANGE} or {PARAM_RANGE}, got {value_range!r}")
    return rng


@dataclass(frozen=True, eq=False)
class Lut3D:
    """Immutable N x N x N lattice of output triples.

    Attributes:
        table: read-only float64 array of shape (3, N, N, N).
        value_range: (0, 1) for color tables, (-1, 1) for curve-parameter tables.
    """

    table: np.ndarray
    value_range: tuple = COLOR_RANGE

    def __post_init__(self):
        rng = _normalize_range(self.value_range)
        table = np.array(self.table, dtype=np.float64)
        if table.ndim != 4 or table.shape[0] != 3 or not (table.shape[1] == table.shape[2] == table.shape[3]):
            raise ValueError(f"table must have shape (3, N, N, N), got {table.shape}")
        if table.shape[1] < 2:
            raise ValueError(f"LUT size must be >= 2, got {table.shape[1]}")
        if not np.all(np.isfinite(table)):
            raise ValueError("LUT entries must be finite")
        if table.min() < rng[0] or table.max() > rng[1]:
            raise ValueError(f"LUT entries must lie within {rng}")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "value_range", rng)

    @property
    def size(self):
        return self.table.shape[1]

    @property
    def is_param(self):
        return self.value_range == PARAM_RANGE

    def __repr__(self):
        return f"Lut3D(size={self.size}, value_range={self.value_range})"

    def __call__(self, colors):
        return lookup(self, colors)


def identity_lut(size, value_range=COLOR_RANGE):
    """Return the neutral table of the given size.

    Color tables map every lattice point to its own coordinate; parameter
    tables are all zeros (a zero curve parameter leaves pixels unchanged).
    """
    if int(size) != size or size < 2:
        raise ValueError(f"size must be an integer >= 2, got {size!r}")
    size = int(size)
    rng = _normalize_range(value_range)
    if rng == PARAM_RANGE:
        return Lut3D(np.zeros((3, size, size, size)), rng)
    grid = np.arange(size, dtype=np.float64) / (size - 1)
    r, g, b = np.meshgrid(grid, grid, grid, indexing="ij")
    return Lut3D(np.stack([r, g, b]), rng)


def constant_lut(size, value, value_range=PARAM_RANGE):
    """Table whose every entry equals ``value`` (scalar or per-channel triple)."""
    vals = np.broadcast_to(np.asarray(value, dtype=np.float64), (3,))
    table = np.broadcast_to(vals[:, None, None, None], (3, size, size, size))
    return Lut3D(table, value_range)


def _stencil(colors, size):
    """Cell corners and trilinear weights for an array of colors.

    Returns ``(flat, weights, frac, inside)`` where ``flat`` and ``weights``
    have shape ``(..., 8)`` and enumerate the corners in (di, dj, dk) binary
    order, ``frac`` has shape ``(..., 3)`` and ``inside`` flags inputs that
    were not clamped.
    """
    colors = np.asarray(colors, dtype=np.float64)
    clamped = np.clip(colors, 0.0, 1.0)
    inside = (colors >= 0.0) & (colors <= 1.0)
    pos = clamped * (size - 1)
    base = np.clip(np.ceil(pos).astype(np.intp) - 1, 0, size - 2)
    frac = pos - base
    bi, bj, bk = base[..., 0], base[..., 1], base[..., 2]
    fr, fg, fb = frac[..., 0], frac[..., 1], frac[..., 2]
    wr = (1.0 - fr, fr)
    wg = (1.0 - fg, fg)
    wb = (1.0 - fb, fb)
    flats = []
    weights = []
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                flats.append(((bi + di) * size + (bj + dj)) * size + (bk + dk))
                weights.append(wr[di] * wg[dj] * wb[dk])
    return np.stack(flats, axis=-1), np.stack(weights, axis=-1), frac, inside


def _gather(table, flat):
    """Corner values, shape (..., 8, 3)."""
    n3 = table.shape[1] ** 3
    return table.reshape(3, n3).T[flat]


def _blend(corners, frac):
    """Nested lerps over b, then g, then r.

    ``a + t * (b - a)`` returns ``a`` exactly when all corners agree, so
    constant tables and lattice points come back bit-exact.
    """
    cube = corners.reshape(corners.shape[:-2] + (2, 2, 2, 3))
    fr, fg, fb = (frac[..., d, None] for d in range(3))
    ij = cube[..., 0, :] + fb[..., None, None, :] * (cube[..., 1, :] - cube[..., 0, :])
    i = ij[..., 0, :] + fg[..., None, :] * (ij[..., 1, :] - ij[..., 0, :])
    return i[..., 0, :] + fr * (i[..., 1, :] - i[..., 0, :])


def lookup(lut, colors):
    """Trilinearly interpolate ``lut`` at ``colors`` (shape (..., 3))."""
    flat, _, frac, _ = _stencil(colors, lut.size)
    return _blend(_gather(lut.table, flat), frac)


def _lookup_full(table, colors):
    """Lookup plus everything the reverse pass needs.

    Returns ``(out, flat, weights, jac)``; ``jac[..., c, d]`` is the
    derivative of output channel ``c`` with respect to input channel ``d``.
    """
    size = table.shape[1]
    flat, w, frac, inside = _stencil(colors, size)
    corners = _gather(table, flat)
    out = _blend(corners, frac)

    # corners indexed [..., di, dj, dk, c]
    cube = corners.reshape(corners.shape[:-2] + (2, 2, 2, 3))
    fr, fg, fb = (frac[..., d, None] for d in range(3))
    d_r = cube[..., 1, :, :, :] - cube[..., 0, :, :, :]
    d_g = cube[..., :, 1, :, :] - cube[..., :, 0, :, :]
    d_b = cube[..., :, :, 1, :] - cube[..., :, :, 0, :]
    # bilinear blend of the remaining two axes
    dr = ((d_r[..., 0, 0, :] * (1 - fg) + d_r[..., 1, 0, :] * fg) * (1 - fb)
          + (d_r[..., 0, 1, :] * (1 - fg) + d_r[..., 1, 1, :] * fg) * fb)
    dg = ((d_g[..., 0, 0, :] * (1 - fr) + d_g[..., 1, 0, :] * fr) * (1 - fb)
          + (d_g[..., 0, 1, :] * (1 - fr) + d_g[..., 1, 1, :] * fr) * fb)
    db = ((d_b[..., 0, 0, :] * (1 - fr) + d_b[..., 1, 0, :] * fr) * (1 - fg)
          + (d_b[..., 0, 1, :] * (1 - fr) + d_b[..., 1, 1, :] * fr) * fg)
    jac = np.stack([dr, dg, db], axis=-1) * (size - 1)
    jac = jac * inside[..., None, :]
    return out, flat, w, jac


def scatter_entry_gradient(grad_out, flat, weights, size):
    """Accumulate d(loss)/d(output) into d(loss)/d(table entries).

    ``grad_out`` has shape (..., 3); the result has shape (3, N, N, N).
    Accumulation uses ``np.bincount`` so the summation order is fixed.
    """
    n3 = size ** 3
    flat = flat.reshape(-1)
    w = weights.reshape(-1, 8)
    g = np.asarray(grad_out, dtype=np.float64).reshape(-1, 3)
    out = np.empty((3, n3))
    for c in range(3):
        out[c] = np.bincount(flat, weights=(w * g[:, c, None]).reshape(-1), minlength=n3)
    return out.reshape(3, size, size, size)


@dataclass(frozen=True)
class LookupGradient:
    """Local derivatives of a single lookup.

    Attributes:
        corners: (8, 3) lattice coordinates (i, j, k) of the active cell.
        weights: (8,) trilinear weights; d out_c / d entry[c, corner] equals
            ``weights[corner]`` for every channel c and is zero across channels.
        jacobian: (3, 3) matrix d out_c / d color_d.
    """

    corners: np.ndarray
    weights: np.ndarray
    jacobian: np.ndarray

    def entry_gradient(self, size):
        """Dense (3, 3, N, N, N) array: d out_c / d entry[c', i, j, k]."""
        dense = np.zeros((3, 3, size, size, size))
        for (i, j, k), w in zip(self.corners, self.weights):
            for c in range(3):
                dense[c, c, i, j, k] += w
        return dense


def lookup_gradient(lut, color):
    """Derivatives of ``lookup(lut, color)`` for one color triple."""
    color = np.asarray(color, dtype=np.float64)
    if color.shape != (3,):
        raise ValueError(f"color must be a single (r, g, b) triple, got shape {color.shape}")
    _, flat, w, jac = _lookup_full(lut.table, color)
    n = lut.size
    corners = np.stack([flat // (n * n), (flat // n) % n, flat % n], axis=-1)
    return LookupGradient(corners=corners, weights=w, jacobian=jac)


# -- file formats ---------------------------------------------------------------

def save_lut(lut, path):
    """Write ``lut``; ``.cube`` selects the text format, anything else binary LUT3."""
    path = Path(path)
    if path.suffix.lower() == ".cube":
        path.write_text(_format_cube(lut), encoding="ascii")
    else:
        path.write_bytes(_encode_binary(lut))


def load_lut(path):
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == MAGIC:
        return _decode_binary(data)
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise LutFormatError(f"{path}: neither a LUT3 binary nor an ASCII .cube file "
                             f"(bad byte at offset {exc.start})") from None
    return _parse_cube(text, source=str(path))


def _encode_binary(lut):
    n = lut.size
    header = _HEADER.pack(MAGIC, n, _RANGE_TAGS[lut.value_range])
    return header + lut.table.astype("<f4").tobytes(order="C")


def _decode_binary(data):
    if len(data) < _HEADER.size:
        raise LutFormatError(f"truncated LUT3 header: {len(data)} bytes, need {_HEADER.size}")
    _, n, tag = _HEADER.unpack_from(data)
    if tag not in _TAG_RANGES:
        raise LutFormatError(f"unknown range tag {tag} at offset 8")
    if n < 2:
        raise LutFormatError(f"invalid LUT size {n} at offset 4")
    expected = 3 * n ** 3 * 4
    payload = data[_HEADER.size:]
    if len(payload) != expected:
        raise LutFormatError(f"size mismatch: header declares N={n} ({expected} payload bytes) "
                             f"but file has {len(payload)} bytes after offset {_HEADER.size}")
    table = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(3, n, n, n)
    try:
        return Lut3D(table, _TAG_RANGES[tag])
    except ValueError as exc:
        raise LutFormatError(str(exc)) from None


def _format_cube(lut):
    n = lut.size
    lines = ["# 3D LUT written by lutforge"]
    if lut.is_param:
        lines.append("# RANGE -1 1")
    lines.append(f"LUT_3D_SIZE {n}")
    t = lut.table
    # red index varies fastest, blue slowest
    for k in range(n):
        for j in range(n):
            for i in range(n):
                lines.append(f"{t[0, i, j, k]:.9g} {t[1, i, j, k]:.9g} {t[2, i, j, k]:.9g}")
    return "\n".join(lines) + "\n"


def _parse_cube(text, source="<cube>"):
    size = None
    value_range = COLOR_RANGE
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0].upper() == "RANGE":
                try:
                    value_range = _normalize_range((float(parts[1]), float(parts[2])))
                except (IndexError, ValueError):
                    raise LutFormatError(f"{source}:{lineno}: bad RANGE comment {line!r}") from None
            continue
        head = line.split()[0].upper()
        if head == "TITLE":
            continue
        if head == "LUT_3D_SIZE":
            try:
                size = int(line.split()[1])
            except (IndexError, ValueError):
                raise LutFormatError(f"{source}:{lineno}: bad LUT_3D_SIZE line {line!r}") from None
            if size < 2:
                raise LutFormatError(f"{source}:{lineno}: LUT_3D_SIZE must be >= 2")
            continue
        if head == "LUT_1D_SIZE":
            raise LutFormatError(f"{source}:{lineno}: 1D LUTs are not supported")
        if head in ("DOMAIN_MIN", "DOMAIN_MAX"):
            want = [0.0] * 3 if head == "DOMAIN_MIN" else [1.0] * 3
            try:
                got = [float(v) for v in line.split()[1:4]]
            except ValueError:
                got = None
            if got != want:
                raise LutFormatError(f"{source}:{lineno}: only the unit domain is supported, got {line!r}")
            continue
        parts = line.split()
        try:
            if len(parts) != 3:
                raise ValueError
            rows.append([float(v) for v in parts])
        except ValueError:
            raise LutFormatError(f"{source}:{lineno}: expected three numbers, got {line!r}") from None
    if size is None:
        raise LutFormatError(f"{source}: missing LUT_3D_SIZE")
    if len(rows) != size ** 3:
        raise LutFormatError(f"{source}: LUT_3D_SIZE {size} needs {size ** 3} rows, found {len(rows)}")
    data = np.array(rows).reshape(size, size, size, 3)  # [k, j, i, c]
    table = data.transpose(3, 2, 1, 0)
    try:
        return Lut3D(table, value_range)
    except ValueError as exc:
        raise LutFormatError(f"{source}: {exc}") from None
