"""Decoding of keypoint belief maps and centroid affinity fields.

Map-grid coordinates are ``(x, y) = (column, row)``; a map grid point maps to
image pixels as ``offset + scale * grid``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .pnp import Correspondence

DEFAULT_THRESHOLD = 0.1
DEFAULT_MAX_ANGLE = 0.5
CUBOID_KEYPOINTS = 9


@dataclass(frozen=True, eq=False)
class BeliefMapStack:
    """``values`` has shape (n, height, width), entries in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3:
            raise ValueError("belief stack must be (n, height, width)")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("belief values must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True, eq=False)
class AffinityFieldStack:
    """``values`` has shape (m, height, width, 2); vectors have norm <= 1."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 4 or v.shape[-1] != 2:
            raise ValueError("affinity stack must be (m, height, width, 2)")
        if v.size and np.linalg.norm(v, axis=-1).max() > 1.0 + 1e-6:
            raise ValueError("affinity vectors must have norm <= 1")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def sample(self, index: int, x: float, y: float) -> np.ndarray:
        """Bilinear interpolation of field ``index`` at grid point (x, y)."""
        f = self.values[index]
        h, w = f.shape[:2]
        x = min(max(x, 0.0), w - 1.0)
        y = min(max(y, 0.0), h - 1.0)
        x0 = min(int(x), max(w - 2, 0))
        y0 = min(int(y), max(h - 2, 0))
        x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
        ax, ay = x - x0, y - y0
        top = (1 - ax) * f[y0, x0] + ax * f[y0, x1]
        bot = (1 - ax) * f[y1, x0] + ax * f[y1, x1]
        return (1 - ay) * top + ay * bot


@dataclass(frozen=True)
class PeakDetection:
    map_index: int
    position: tuple[float, float]
    confidence: float


@dataclass
class ObjectInstanceDetection:
    centroid: PeakDetection
    vertices: list[Optional[PeakDetection]] = field(default_factory=lambda: [None] * 8)

    @property
    def assigned_count(self) -> int:
        return sum(v is not None for v in self.vertices)


def _local_maxima(grid: np.ndarray, threshold: float) -> np.ndarray:
    """Boolean mask of strict 8-neighborhood maxima with value >= threshold."""
    h, w = grid.shape
    padded = np.full((h + 2, w + 2), -np.inf)
    padded[1:-1, 1:-1] = grid
    mask = grid >= threshold
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            mask &= grid > padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
    return mask


def _log_vertex(samples: Sequence[float], start: int) -> Optional[float]:
    """Vertex of the parabola through log-samples at ``start, start+1, start+2``."""
    if min(samples) <= 0.0:
        return None
    a, b, c = (math.log(v) for v in samples)
    denom = a - 2.0 * b + c
    if denom >= 0.0:
        return None
    return start + 1 + 0.5 * (a - c) / denom


def _axis_peak(line: np.ndarray, i: int, method: str) -> float:
    """Sub-cell peak position along one axis near integer index ``i``."""
    n = len(line)
    if method == "gaussian" and n >= 3:
        # slide the 3-cell window inward at the border; log-quadratic fits stay exact
        start = min(max(i - 1, 0), n - 3)
        v = _log_vertex(line[start : start + 3], start)
        if v is not None and abs(v - i) <= 1.0:
            return v
    lo = line[i - 1] if i > 0 else 0.0
    hi = line[i + 1] if i + 1 < n else 0.0
    total = lo + line[i] + hi
    return i + ((hi - lo) / total if total > 0.0 else 0.0)


def refine_subpixel(grid: np.ndarray, row: int, col: int, method: str = "gaussian") -> tuple[float, float]:
    """Sub-pixel peak location around integer cell (row, col).

    ``gaussian`` fits a parabola to log-confidence along each axis, which is
    exact for Gaussian blobs, shifting the window inward at map borders;
    ``centroid`` is the 3x3 confidence-weighted centroid with missing border
    neighbors counted as zero.
    """
    h, w = grid.shape
    if method == "centroid":
        win = np.zeros((3, 3))
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                r, c = row + dy, col + dx
                if 0 <= r < h and 0 <= c < w:
                    win[dy + 1, dx + 1] = grid[r, c]
        total = win.sum()
        ox = float((win[:, 2].sum() - win[:, 0].sum()) / total)
        oy = float((win[2, :].sum() - win[0, :].sum()) / total)
        return (col + ox, row + oy)
    if method != "gaussian":
        raise ValueError(f"unknown sub-pixel method {method!r}")
    return (float(_axis_peak(grid[row, :], col, method)), float(_axis_peak(grid[:, col], row, method)))


def extract_peaks(
    stack: BeliefMapStack, threshold: float = DEFAULT_THRESHOLD, subpixel: str = "gaussian"
) -> list[PeakDetection]:
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    peaks = []
    for i in range(stack.n):
        grid = stack.values[i]
        rows, cols = np.nonzero(_local_maxima(grid, threshold))
        for r, c in zip(rows.tolist(), cols.tolist()):
            peaks.append(PeakDetection(i, refine_subpixel(grid, r, c, subpixel), float(grid[r, c])))
    # stable: ties keep (map, row, col) order
    peaks.sort(key=lambda p: -p.confidence)
    return peaks


def _angle_between(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return math.inf
    return math.acos(max(-1.0, min(1.0, float(np.dot(a, b)) / (na * nb))))


def associate_vertices(
    peaks: Sequence[PeakDetection],
    affinity: AffinityFieldStack,
    max_angle: float = DEFAULT_MAX_ANGLE,
) -> list[ObjectInstanceDetection]:
    """Group vertex peaks into object instances, one per centroid peak.

    The centroid map is the one after the ``affinity.m`` vertex maps. A vertex
    goes to the nearest centroid whose direction lies within ``max_angle`` of
    the sampled affinity vector (smaller angle breaks distance ties), falling
    through to the next candidate when that slot is taken.
    """
    if not 0.0 < max_angle < math.pi / 2:
        raise ValueError("max_angle must lie in (0, pi/2)")
    centroid_index = affinity.m
    centroids = [p for p in peaks if p.map_index == centroid_index]
    centroids.sort(key=lambda p: (-p.confidence, p.position[1], p.position[0]))
    instances = [ObjectInstanceDetection(c, [None] * affinity.m) for c in centroids]
    vertex_peaks = [p for p in peaks if p.map_index < centroid_index]
    vertex_peaks.sort(key=lambda p: (-p.confidence, p.map_index, p.position[1], p.position[0]))
    for vp in vertex_peaks:
        field_vec = affinity.sample(vp.map_index, *vp.position)
        scored = []
        for j, inst in enumerate(instances):
            direction = np.subtract(inst.centroid.position, vp.position)
            ang = _angle_between(field_vec, direction)
            if ang <= max_angle:
                scored.append((float(np.hypot(*direction)), ang, j))
        scored.sort()
        for _, _, j in scored:
            if instances[j].vertices[vp.map_index] is None:
                instances[j].vertices[vp.map_index] = vp
                break
    return instances


def instance_correspondences(
    instance: ObjectInstanceDetection,
    model_keypoints: np.ndarray,
    map_to_image_scale: float,
    include_centroid: bool = True,
    offset: Sequence[float] = (0.0, 0.0),
) -> list[Correspondence]:
    """Pair detected keypoints with model points; weights are confidences.

    ``model_keypoints`` holds the vertices followed by the centroid, in map order.
    """
    model_keypoints = np.asarray(model_keypoints, dtype=float)
    ox, oy = offset

    def corr(p: PeakDetection) -> Correspondence:
        u = ox + map_to_image_scale * p.position[0]
        v = oy + map_to_image_scale * p.position[1]
        return Correspondence(tuple(model_keypoints[p.map_index]), (u, v), p.confidence)

    out = [corr(v) for v in instance.vertices if v is not None]
    if include_centroid:
        out.append(corr(instance.centroid))
    return out


def write_stack(path: str | Path, stack: BeliefMapStack | AffinityFieldStack) -> None:
    """Write a JSON header line followed by little-endian float32 grids."""
    if isinstance(stack, BeliefMapStack):
        header = {"kind": "belief", "width": stack.width, "height": stack.height, "n": stack.n}
    else:
        header = {"kind": "affinity", "width": stack.width, "height": stack.height, "n": stack.m}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(stack.values, dtype="<f4").tobytes())


def read_stack(path: str | Path) -> BeliefMapStack | AffinityFieldStack:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        payload = fh.read()
    n, h, w = int(header["n"]), int(header["height"]), int(header["width"])
    kind = header.get("kind", "belief")
    data = np.frombuffer(payload, dtype="<f4").astype(float)
    if kind == "belief":
        if data.size != n * h * w:
            raise ValueError("belief payload size does not match header")
        return BeliefMapStack(data.reshape(n, h, w))
    if kind == "affinity":
        if data.size != n * h * w * 2:
            raise ValueError("affinity payload size does not match header")
        return AffinityFieldStack(data.reshape(n, h, w, 2))
    raise ValueError(f"unknown stack kind {kind!r}")
