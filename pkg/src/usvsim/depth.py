"""Depth-map evaluation: losses, affine alignment, colorization, file I/O.

Operates on plain numeric grids; depth maps arrive as precomputed
files (16-bit binary graymap or a text grid), never from a network
forward pass. Losses are all mean-absolute-error forms:

- labeled:   mean |pred - ref| over all pixels
- pseudo:    same form against a pseudo-label map
- cutmix:    region-split MAE against the two source pseudo-label maps
- unlabeled: pseudo + cutmix
- align:     mean hinge on feature cosine similarity, max(0, alpha - cos)
- total:     labeled + unlabeled + lambda * align

Affine post-processing fits least-squares (scale, shift) mapping a
prediction onto reference depths; colorization maps near values onto
the warm end and far values onto the cool end of a shipped 256-entry
gradient table.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ._kernels import active as _K

GRADIENT_SIZE = 256


class DepthError(ValueError):
    pass


@dataclass(frozen=True)
class DepthMap:
    """Dense non-negative depth grid, row-major, unitless relative depth."""

    values: np.ndarray  # float64, shape (H, W)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DepthError("depth map must be a 2-D grid with H, W >= 1")
        if not np.all(np.isfinite(arr)):
            raise DepthError("depth values must be finite")
        if np.any(arr < 0.0):
            raise DepthError("depth values must be non-negative")
        object.__setattr__(self, "values", np.ascontiguousarray(arr))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LossWeights:
    """lam weights the alignment loss; alpha is the cosine threshold."""

    lam: float = 0.0
    alpha: float = 0.5

    def validate(self) -> None:
        if self.lam < 0.0:
            raise DepthError("lambda weight must be >= 0")
        if not -1.0 <= self.alpha <= 1.0:
            raise DepthError("alpha must be within [-1, 1]")


@dataclass(frozen=True)
class AffineFit:
    scale: float
    shift: float

    def apply(self, m: Union[DepthMap, np.ndarray]) -> np.ndarray:
        return self.scale * _grid(m) + self.shift


Grid = Union[DepthMap, np.ndarray]


def _grid(m: Grid) -> np.ndarray:
    if isinstance(m, DepthMap):
        return m.values
    arr = np.ascontiguousarray(np.asarray(m, dtype=np.float64))
    if arr.ndim != 2:
        raise DepthError("expected a 2-D grid")
    return arr


def _pair(a: Grid, b: Grid) -> tuple[np.ndarray, np.ndarray]:
    ga, gb = _grid(a), _grid(b)
    if ga.shape != gb.shape:
        raise DepthError(f"dimension mismatch: {ga.shape} vs {gb.shape}")
    return ga, gb


# ---------------------------------------------------------------- losses

def labeled_loss(pred: Grid, gt: Grid) -> float:
    """Mean absolute difference over all pixels."""
    return _K.mae(*_pair(pred, gt))


def pseudo_loss(pred: Grid, pseudo: Grid) -> float:
    """MAE against a pseudo-label map (same form as labeled_loss)."""
    return _K.mae(*_pair(pred, pseudo))


def cutmix_loss(pred_mixed: Grid, pseudo_a: Grid, pseudo_b: Grid,
                mask: np.ndarray) -> float:
    """Region-wise MAE: mask pixels against pseudo_a, the rest against
    pseudo_b, averaged over the whole grid."""
    p, a = _pair(pred_mixed, pseudo_a)
    _, b = _pair(pred_mixed, pseudo_b)
    m = np.asarray(mask)
    if m.shape != p.shape:
        raise DepthError(f"mask dimension mismatch: {m.shape} vs {p.shape}")
    return _K.region_mae(p, a, b, np.ascontiguousarray(m, dtype=np.uint8))


def unlabeled_loss(pseudo_component: float, cutmix_component: float) -> float:
    """Sum of the pseudo-label and cutmix components."""
    if pseudo_component < 0.0 or cutmix_component < 0.0:
        raise DepthError("loss components must be >= 0")
    return pseudo_component + cutmix_component


def align_loss(feats: np.ndarray, pre_feats: np.ndarray, alpha: float) -> float:
    """Mean over rows of max(0, alpha - cosine(f_i, g_i))."""
    f = np.ascontiguousarray(np.asarray(feats, dtype=np.float64))
    g = np.ascontiguousarray(np.asarray(pre_feats, dtype=np.float64))
    if f.ndim != 2 or g.shape != f.shape:
        raise DepthError(f"feature shape mismatch: {f.shape} vs {g.shape}")
    if not -1.0 <= alpha <= 1.0:
        raise DepthError("alpha must be within [-1, 1]")
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
        raise DepthError("feature values must be finite")
    if np.any(np.linalg.norm(f, axis=1) == 0.0) or \
            np.any(np.linalg.norm(g, axis=1) == 0.0):
        raise DepthError("zero-norm feature vector (cosine undefined)")
    return _K.hinge_cosine_mean(f, g, alpha)


def total_loss(l_labeled: float, l_unlabeled: float, l_align: float,
               weights: LossWeights) -> float:
    """labeled + unlabeled + lambda * align."""
    weights.validate()
    if min(l_labeled, l_unlabeled, l_align) < 0.0:
        raise DepthError("loss components must be >= 0")
    return l_labeled + l_unlabeled + weights.lam * l_align


# ------------------------------------------------------ preprocessing

def preprocess(m: Grid, target_w: int, target_h: int,
               crop: Optional[tuple[int, int, int, int]] = None) -> DepthMap:
    """Optional crop, bilinear resample, then min-max normalize to [0, 1].

    crop is (x, y, w, h) in source pixels and must lie within bounds.
    Constant maps normalize to all zeros.
    """
    arr = _grid(m)
    if target_w < 1 or target_h < 1:
        raise DepthError("target dimensions must be >= 1")
    if crop is not None:
        cx, cy, cw, ch = crop
        if cw < 1 or ch < 1 or cx < 0 or cy < 0 \
                or cx + cw > arr.shape[1] or cy + ch > arr.shape[0]:
            raise DepthError(f"crop {crop} out of bounds for {arr.shape}")
        arr = arr[cy:cy + ch, cx:cx + cw]
    if arr.shape != (target_h, target_w):
        arr = _K.bilinear_resize(np.ascontiguousarray(arr), target_h, target_w)
    return DepthMap(_K.minmax_unit(np.ascontiguousarray(arr)))


def fit_affine(pred: Grid, ref: Grid) -> AffineFit:
    """Least-squares (scale, shift) minimizing sum((s*pred + o - ref)^2)."""
    p, r = _pair(pred, ref)
    scale, shift, var = _K.affine_fit(p, r)
    if var == 0.0:
        raise DepthError("pred has zero variance; affine fit undefined")
    return AffineFit(scale=scale, shift=shift)


# ------------------------------------------------------- colorization

_gradient_cache: Optional[np.ndarray] = None


def load_gradient() -> np.ndarray:
    """The shipped 256-entry warm-to-cool RGB table (uint8, 256x3)."""
    global _gradient_cache
    if _gradient_cache is None:
        ref = resources.files("usvsim.data").joinpath("warm_cool_256.csv")
        rows = []
        for line in ref.read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            r, g, b = (int(v) for v in line.split(","))
            rows.append((r, g, b))
        table = np.array(rows, dtype=np.uint8)
        if table.shape != (GRADIENT_SIZE, 3):
            raise DepthError("gradient table must have 256 RGB rows")
        _gradient_cache = table
    return _gradient_cache


def colorize(m: Grid) -> np.ndarray:
    """Map a depth grid onto the warm(near)->cool(far) gradient.

    Min-max normalizes first, so output depends only on relative depth;
    constant maps render entirely warm. Returns (H, W, 3) uint8.
    """
    unit = _K.minmax_unit(np.ascontiguousarray(_grid(m)))
    # round-half-up index; written as two steps so both kernel backends
    # and any compiler contraction agree bit-for-bit
    scaled = unit * 255.0
    idx = np.floor(scaled + 0.5).astype(np.intp)
    return load_gradient()[idx]


# ------------------------------------------------------------- file I/O

def read_depth(path: Union[str, Path]) -> DepthMap:
    """Load a depth map by extension: .pgm (16-bit binary) or text grid."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm16(path)
    return read_text_grid(path)


def read_pgm16(path: Union[str, Path]) -> DepthMap:
    """16-bit binary portable graymap; values map to [0, 1] via /65535."""
    data = Path(path).read_bytes()
    header, offset = _parse_pnm_header(data, b"P5", path)
    width, height, maxval = header
    if maxval != 65535:
        raise DepthError(f"{path}: expected maxval 65535, got {maxval}")
    count = width * height
    raw = data[offset:offset + 2 * count]
    if len(raw) != 2 * count:
        raise DepthError(f"{path}: truncated pixel data")
    grid = np.frombuffer(raw, dtype=">u2").astype(np.float64) / 65535.0
    return DepthMap(grid.reshape(height, width))


def write_pgm16(path: Union[str, Path], m: Grid) -> None:
    """Write values (clipped to [0, 1]) as a 16-bit binary graymap."""
    arr = np.clip(_grid(m), 0.0, 1.0)
    h, w = arr.shape
    scaled = np.floor(arr * 65535.0 + 0.5).astype(">u2")
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n65535\n" % (w, h))
        f.write(scaled.tobytes())


def read_text_grid(path: Union[str, Path]) -> DepthMap:
    """Text grid format: header 'W H' then W*H reals, row-major."""
    tokens = Path(path).read_text().split()
    if len(tokens) < 2:
        raise DepthError(f"{path}: missing 'W H' header")
    try:
        w, h = int(tokens[0]), int(tokens[1])
        values = [float(t) for t in tokens[2:]]
    except ValueError as exc:
        raise DepthError(f"{path}: {exc}") from None
    if w < 1 or h < 1:
        raise DepthError(f"{path}: bad dimensions {w}x{h}")
    if len(values) != w * h:
        raise DepthError(f"{path}: expected {w * h} values, got {len(values)}")
    return DepthMap(np.array(values, dtype=np.float64).reshape(h, w))


def write_text_grid(path: Union[str, Path], m: Grid) -> None:
    arr = _grid(m)
    h, w = arr.shape
    with open(path, "w") as f:
        f.write(f"{w} {h}\n")
        for row in arr:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_features(path: Union[str, Path]) -> np.ndarray:
    """Feature sets: header 'N K' then N rows of K reals."""
    tokens = Path(path).read_text().split()
    if len(tokens) < 2:
        raise DepthError(f"{path}: missing 'N K' header")
    try:
        n, k = int(tokens[0]), int(tokens[1])
        values = [float(t) for t in tokens[2:]]
    except ValueError as exc:
        raise DepthError(f"{path}: {exc}") from None
    if n < 1 or k < 1:
        raise DepthError(f"{path}: bad dimensions {n}x{k}")
    if len(values) != n * k:
        raise DepthError(f"{path}: expected {n * k} values, got {len(values)}")
    return np.array(values, dtype=np.float64).reshape(n, k)


def write_features(path: Union[str, Path], feats: np.ndarray) -> None:
    arr = np.asarray(feats, dtype=np.float64)
    n, k = arr.shape
    with open(path, "w") as f:
        f.write(f"{n} {k}\n")
        for row in arr:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")


def write_ppm(path: Union[str, Path], rgb: np.ndarray) -> None:
    """Binary portable pixmap (P6, 8-bit)."""
    arr = np.asarray(rgb, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DepthError("expected an (H, W, 3) uint8 image")
    h, w, _ = arr.shape
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(arr.tobytes())


def _parse_pnm_header(data: bytes, magic: bytes, path) -> tuple[tuple[int, int, int], int]:
    """Parse 'P5/P6 <w> <h> <maxval>' allowing comments; returns offset."""
    if not data.startswith(magic):
        raise DepthError(f"{path}: not a {magic.decode()} file")
    fields = []
    pos = len(magic)
    while len(fields) < 3:
        m = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\d+)").match(data, pos)
        if not m:
            raise DepthError(f"{path}: malformed header")
        fields.append(int(m.group(1)))
        pos = m.end()
    if pos >= len(data) or data[pos:pos + 1] not in b" \t\r\n":
        raise DepthError(f"{path}: malformed header")
    return (fields[0], fields[1], fields[2]), pos + 1
