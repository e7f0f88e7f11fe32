"""Vertex activity by random walks on a thresholded video network.

``M`` walks start at every vertex. A walker at ``v`` moves to an out-neighbour
with probability proportional to the edge weight and stops on reaching a
vertex without surviving out-edges or after ``L`` steps. The activity of a
vertex is the number of arrivals it receives; the start placement does not
count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .network import OffsetTable, out_edges, out_weight_total, shifted_pairs
from .video import Video

log = logging.getLogger(__name__)

DEFAULT_WALKS = 50
DEFAULT_MAX_LEN = 1000
DEFAULT_SEED = 20180101
EXACT_MAX_VERTICES = 4096
# above this many (vertex, offset) slots walks read neighbours on the fly
ADJACENCY_MAX_SLOTS = 40_000_000
RESIDUAL_EPS = 1e-12


class VolumeTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class WalkConfig:
    M: int = DEFAULT_WALKS
    L: int = DEFAULT_MAX_LEN
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class ActivityField:
    """Per-vertex activity for one (r2, tau) network.

    ``values`` holds integer visit counts for Monte Carlo estimates and
    float expectations for the exact oracle.
    """

    values: np.ndarray
    r2: int
    tau: int
    M: int
    exact: bool = False

    @property
    def total(self):
        if self.exact:
            return float(np.sum(np.sort(self.values)))
        return int(self.values.sum())

    def normalized(self) -> np.ndarray:
        tot = float(self.values.sum())
        if tot == 0:
            return np.zeros(self.values.shape, dtype=np.float64)
        return self.values / tot


@dataclass(frozen=True)
class WalkStats:
    total_walks: int
    total_steps: int
    max_length_observed: int

    @property
    def mean_length(self) -> float:
        return self.total_steps / self.total_walks if self.total_walks else 0.0

    def merged(self, other: "WalkStats") -> "WalkStats":
        return WalkStats(
            self.total_walks + other.total_walks,
            self.total_steps + other.total_steps,
            max(self.max_length_observed, other.max_length_observed),
        )

    def as_dict(self) -> dict:
        return {
            "total_walks": self.total_walks,
            "total_steps": self.total_steps,
            "mean_length": self.mean_length,
            "max_length_observed": self.max_length_observed,
        }


def step_distribution(video: Video, i, offsets: OffsetTable, tau: int):
    """Transition probabilities out of vertex ``i`` (empty when absorbing)."""
    edges = out_edges(video, i, offsets, tau)
    total = sum(w for _, w in edges)
    return [(j, w / total) for j, w in edges]


def surviving_adjacency(video: Video, offsets: OffsetTable, tau: int):
    """CSR arrays (indptr, targets, weights) of the thresholded network.

    Within each source vertex edges keep offset-table order.
    """
    n = video.n_vertices
    data = video.data.astype(np.int32)
    idx = np.arange(n, dtype=np.int64).reshape(data.shape)
    srcs, dsts, ws = [], [], []
    for o in offsets.offsets:
        a, b = shifted_pairs(data, o)
        diff = data[a] - data[b]
        keep = (diff > 0) & (diff <= tau)
        srcs.append(idx[a][keep])
        dsts.append(idx[b][keep])
        ws.append(diff[keep])
    src = np.concatenate(srcs)
    order = np.argsort(src, kind="stable")
    targets = np.concatenate(dsts)[order].astype(np.int32)
    weights = np.concatenate(ws)[order].astype(np.int16)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, targets, weights


def estimate_activity(video: Video, offsets: OffsetTable, tau: int,
                      cfg: WalkConfig = WalkConfig(), workers: int = 1,
                      adjacency: bool | None = None):
    """Monte Carlo activity estimate.

    Each (start vertex, walk index) pair draws from its own random stream
    derived from ``cfg.seed``, so the result is identical for any number of
    ``workers``. ``adjacency`` forces (True) or disables (False) the
    precomputed-adjacency kernel; by default it is used when it fits
    ``ADJACENCY_MAX_SLOTS``. Both kernels give identical fields.

    Returns
    -------
    (ActivityField, WalkStats)
    """
    n = video.n_vertices
    intens = video.intensities.astype(np.int32)
    total_out = out_weight_total(video, offsets, tau)
    offs = np.ascontiguousarray(offsets.offsets, dtype=np.int64)
    seed = np.uint64(cfg.seed)
    if adjacency is None:
        adjacency = n * len(offsets) <= ADJACENCY_MAX_SLOTS
    if adjacency:
        indptr, targets, weights = surviving_adjacency(video, offsets, tau)

    def run(lo, hi):
        counts = np.zeros(n, dtype=np.int64)
        if adjacency:
            steps, longest = _kernels.walk_chunk_csr(
                indptr, targets, weights, total_out, lo, hi, cfg.M, cfg.L, seed, counts)
        else:
            steps, longest = _kernels.walk_chunk(
                intens, video.width, video.height, video.frames, offs, int(tau),
                total_out, lo, hi, cfg.M, cfg.L, seed, counts)
        return counts, int(steps), int(longest)

    workers = max(1, min(int(workers), n))
    if workers == 1:
        parts = [run(0, n)]
    else:
        bounds = np.linspace(0, n, workers + 1).astype(np.int64)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, bounds[:-1], bounds[1:]))

    counts = parts[0][0]
    for c, _, _ in parts[1:]:
        counts += c
    stats = WalkStats(n * cfg.M, sum(p[1] for p in parts), max(p[2] for p in parts))
    return ActivityField(counts, offsets.r2, int(tau), cfg.M), stats


def transition_matrix(video: Video, offsets: OffsetTable, tau: int) -> np.ndarray:
    """Dense row-substochastic transition matrix; absorbing rows are zero."""
    n = video.n_vertices
    if n > EXACT_MAX_VERTICES:
        raise VolumeTooLargeError(
            f"dense transition matrix needs N <= {EXACT_MAX_VERTICES}, got {n}")
    data = video.data.astype(np.int32)
    idx = np.arange(n).reshape(data.shape)
    weights = np.zeros((n, n), dtype=np.int64)
    for o in offsets.offsets:
        a, b = shifted_pairs(data, o)
        diff = data[a] - data[b]
        keep = (diff > 0) & (diff <= tau)
        weights[idx[a][keep], idx[b][keep]] = diff[keep]
    totals = weights.sum(axis=1)
    P = np.zeros((n, n), dtype=np.float64)
    live = totals > 0
    P[live] = weights[live] / totals[live, None]
    return P


def exact_expected_activity(video: Video, offsets: OffsetTable, tau: int,
                            cfg: WalkConfig = WalkConfig()) -> ActivityField:
    """Expected activity ``M * sum_{l=1..L} sum_u (P^l)[u, v]``.

    Every inner sum is taken over sorted terms, so a relabelling of the
    vertices (a rotated video, say) yields the permuted field bit for bit.
    """
    P = transition_matrix(video, offsets, tau)
    n = P.shape[0]
    dst, src = np.nonzero(P.T)
    probs = np.ascontiguousarray(P[src, dst])
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(dst, minlength=n), out=indptr[1:])
    src = src.astype(np.int64)

    cur = np.ones(n, dtype=np.float64)
    nxt = np.empty(n, dtype=np.float64)
    acc = np.zeros(n, dtype=np.float64)
    for _ in range(cfg.L):
        _kernels.propagate_sorted(indptr, src, probs, cur, nxt)
        acc += nxt
        cur, nxt = nxt, cur
        if np.sum(np.sort(cur)) < RESIDUAL_EPS:
            break
    return ActivityField(cfg.M * acc, offsets.r2, int(tau), cfg.M, exact=True)
