"""Implicit directed network over a video volume.

Every pixel is a vertex. Two pixels closer than the radius are linked, the
edge pointing from the brighter pixel to the darker one with weight equal to
the intensity difference. A threshold ``tau`` keeps only edges whose weight
lies in ``(0, tau]``. Nothing here materialises an edge list: neighbourhoods
are lattice offsets and weights are read from the intensities on demand.

Radii are carried as squared integers (``r2``) so that ``D^2 <= r2`` is an
exact integer comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .video import Video


@dataclass(frozen=True)
class OffsetTable:
    """Lattice offsets within a squared radius, split by whether they cross frames."""

    r2: int
    spatial_offsets: tuple[tuple[int, int], ...]
    temporal_offsets: tuple[tuple[int, int, int], ...]
    offsets: np.ndarray = field(repr=False, compare=False)

    @property
    def n_spatial(self) -> int:
        return len(self.spatial_offsets)

    @property
    def n_temporal(self) -> int:
        return len(self.temporal_offsets)

    def __len__(self):
        return len(self.offsets)

    def as_triples(self) -> list[tuple[int, int, int]]:
        """All offsets as (dx, dy, dt): spatial ones first, then temporal."""
        return [tuple(int(c) for c in o) for o in self.offsets]

    def is_temporal(self) -> np.ndarray:
        return self.offsets[:, 2] != 0


@dataclass(frozen=True)
class ThresholdSchedule:
    """Arithmetic set of thresholds ``tau0 + k * taui`` for ``k = 0..nf``."""

    tau0: int
    taui: int
    nf: int

    def __post_init__(self):
        if not 1 <= self.tau0 <= 255:
            raise ValueError(f"tau0 must lie in [1, 255], got {self.tau0}")
        if self.taui < 1:
            raise ValueError(f"taui must be positive, got {self.taui}")
        if self.nf < 0:
            raise ValueError(f"nf must be non-negative, got {self.nf}")

    @property
    def thresholds(self) -> list[int]:
        return [self.tau0 + k * self.taui for k in range(self.nf + 1)]

    @property
    def tauf(self) -> int:
        return self.tau0 + self.nf * self.taui

    def __len__(self):
        return self.nf + 1

    def __iter__(self):
        return iter(self.thresholds)


@dataclass(frozen=True, eq=False)
class DegreeField:
    """Spatial and temporal in-degrees of every vertex for one (r2, tau) network."""

    r2: int
    tau: int
    k_s_in: np.ndarray
    k_t_in: np.ndarray

    def pair(self, index: int) -> tuple[int, int]:
        return int(self.k_s_in[index]), int(self.k_t_in[index])


def check_r2(r2: int) -> int:
    r2 = int(r2)
    if r2 < 1:
        raise ValueError(f"squared radius must be >= 1, got {r2}")
    return r2


@lru_cache(maxsize=None)
def neighborhood_offsets(r2: int) -> OffsetTable:
    """All nonzero integer offsets with dx^2 + dy^2 + dt^2 <= r2.

    Offsets are ordered by (dt, dy, dx) inside each group, which fixes the
    order in which neighbours are scanned everywhere else.
    """
    r2 = check_r2(r2)
    r = int(np.floor(np.sqrt(r2)))
    while (r + 1) ** 2 <= r2:
        r += 1
    spatial, temporal = [], []
    for dt in range(-r, r + 1):
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                d2 = dx * dx + dy * dy + dt * dt
                if d2 == 0 or d2 > r2:
                    continue
                if dt == 0:
                    spatial.append((dx, dy))
                else:
                    temporal.append((dx, dy, dt))
    arr = np.array([(dx, dy, 0) for dx, dy in spatial] + temporal, dtype=np.int64).reshape(-1, 3)
    arr.setflags(write=False)
    return OffsetTable(r2, tuple(spatial), tuple(temporal), arr)


def edge_weight(video: Video, i, j) -> int | None:
    """Weight of the directed edge i -> j, or None if there is no such edge.

    ``i`` and ``j`` are (x, y, t) coordinates. The edge exists only when
    ``I(i) > I(j)``; equal intensities give no edge in either direction.
    """
    diff = video.at(*i) - video.at(*j)
    return diff if diff > 0 else None


def _inside(video: Video, x: int, y: int, t: int) -> bool:
    return 0 <= x < video.width and 0 <= y < video.height and 0 <= t < video.frames


def out_edges(video: Video, i, offsets: OffsetTable, tau: int) -> list[tuple[tuple[int, int, int], int]]:
    """Surviving out-edges of vertex ``i`` as ``[((x, y, t), weight), ...]``.

    Neighbours that fall outside the volume are skipped.
    """
    x, y, t = i
    src = video.at(x, y, t)
    edges = []
    for dx, dy, dt in offsets.as_triples():
        j = (x + dx, y + dy, t + dt)
        if not _inside(video, *j):
            continue
        w = src - video.at(*j)
        if 0 < w <= tau:
            edges.append((j, w))
    return edges


def _overlap(n: int, d: int) -> tuple[slice, slice]:
    """Slices a, b along one axis such that b = a + d and both stay in [0, n)."""
    if d >= 0:
        return slice(0, max(n - d, 0)), slice(d, n)
    return slice(-d, n), slice(0, max(n + d, 0))


def shifted_pairs(data: np.ndarray, offset) -> tuple[tuple[slice, ...], tuple[slice, ...]]:
    """Index tuples ``(a, b)`` so that ``data[b]`` is the neighbour of ``data[a]`` at ``offset``."""
    dx, dy, dt = (int(c) for c in offset)
    T, H, W = data.shape
    at, bt = _overlap(T, dt)
    ay, by = _overlap(H, dy)
    ax, bx = _overlap(W, dx)
    return (at, ay, ax), (bt, by, bx)


def in_degree_field(video: Video, offsets: OffsetTable, tau: int) -> DegreeField:
    """Count, for every vertex j, neighbours i with ``0 < I(i) - I(j) <= tau``."""
    data = video.data.astype(np.int16)
    k_s = np.zeros(data.shape, dtype=np.int32)
    k_t = np.zeros(data.shape, dtype=np.int32)
    for o in offsets.offsets:
        # j sits at a, its neighbour i = j + o sits at b
        a, b = shifted_pairs(data, o)
        diff = data[b] - data[a]
        hit = (diff > 0) & (diff <= tau)
        target = k_t if o[2] != 0 else k_s
        target[a] += hit
    return DegreeField(offsets.r2, int(tau), k_s.reshape(-1), k_t.reshape(-1))


def out_degree(video: Video, offsets: OffsetTable, tau: int) -> np.ndarray:
    data = video.data.astype(np.int16)
    k = np.zeros(data.shape, dtype=np.int32)
    for o in offsets.offsets:
        a, b = shifted_pairs(data, o)
        diff = data[a] - data[b]
        k[a] += (diff > 0) & (diff <= tau)
    return k.reshape(-1)


def out_weight_total(video: Video, offsets: OffsetTable, tau: int) -> np.ndarray:
    """Sum of surviving out-edge weights per vertex (zero for absorbing vertices)."""
    data = video.data.astype(np.int32)
    total = np.zeros(data.shape, dtype=np.int64)
    for o in offsets.offsets:
        a, b = shifted_pairs(data, o)
        diff = data[a] - data[b]
        total[a] += np.where((diff > 0) & (diff <= tau), diff, 0)
    return total.reshape(-1)


def neighbor_count(video: Video, offsets: OffsetTable) -> np.ndarray:
    """Number of in-volume neighbours of each vertex, ignoring weights."""
    counts = np.zeros(video.data.shape, dtype=np.int32)
    for o in offsets.offsets:
        a, _ = shifted_pairs(video.data, o)
        counts[a] += 1
    return counts.reshape(-1)
