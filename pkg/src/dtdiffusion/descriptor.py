"""Activity histograms and the multi-scale feature vector.

For one (r2, tau) network the joint distribution ``S(s, t)`` sums the
activity of vertices with spatial in-degree ``s`` and temporal in-degree
``t``. The spatial and temporal histograms are its marginals. Everything is
divided by ``N * M`` (vertices times walks per vertex) so that descriptors of
videos with different sizes or walk budgets are comparable.

The feature vector concatenates, for each radius in ascending order, the
spatial histograms over all thresholds followed by the temporal histograms
over all thresholds.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diffusion import ActivityField, WalkConfig, WalkStats, estimate_activity, exact_expected_activity
from .network import DegreeField, OffsetTable, ThresholdSchedule, in_degree_field, neighborhood_offsets
from .video import Video

log = logging.getLogger(__name__)

CHECK_ENV = "DTDIFFUSION_CHECK"


class InvariantError(AssertionError):
    pass


@dataclass(frozen=True)
class Segment:
    r2: int
    tau: int
    part: str
    bins: int

    def as_dict(self) -> dict:
        return {"r2": self.r2, "tau": self.tau, "part": self.part, "bins": self.bins}


@dataclass(eq=False)
class FeatureVector:
    values: np.ndarray
    layout: list[Segment]
    walk_stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    def segment_slices(self):
        """Yield (segment, slice) pairs in layout order."""
        start = 0
        for seg in self.layout:
            yield seg, slice(start, start + seg.bins)
            start += seg.bins

    def select(self, part: str) -> np.ndarray:
        """Values of every segment of one part ("spatial" or "temporal")."""
        return np.concatenate([self.values[sl] for seg, sl in self.segment_slices() if seg.part == part])

    def total_walk_stats(self) -> WalkStats | None:
        stats = list(self.walk_stats.values())
        if not stats:
            return None
        out = stats[0]
        for s in stats[1:]:
            out = out.merged(s)
        return out


def _check_compatible(act: ActivityField, deg: DegreeField, offsets: OffsetTable):
    if act.values.shape != deg.k_s_in.shape:
        raise ValueError("activity and degree fields cover different volumes")
    if act.r2 != offsets.r2 or deg.r2 != offsets.r2 or act.tau != deg.tau:
        raise ValueError(
            f"mismatched networks: activity (r2={act.r2}, tau={act.tau}), "
            f"degrees (r2={deg.r2}, tau={deg.tau}), offsets r2={offsets.r2}")


def joint_distribution(act: ActivityField, deg: DegreeField, offsets: OffsetTable,
                       M: int | None = None) -> np.ndarray:
    """Normalised joint activity ``S`` of shape (n_spatial + 1, n_temporal + 1).

    Group sums run over values sorted within each (s, t) cell, which makes
    ``S`` independent of how the vertices are numbered.
    """
    _check_compatible(act, deg, offsets)
    M = act.M if M is None else int(M)
    ns, nt = offsets.n_spatial + 1, offsets.n_temporal + 1
    n = act.values.size
    key = deg.k_s_in.astype(np.int64) * nt + deg.k_t_in
    if act.exact or np.issubdtype(act.values.dtype, np.floating):
        order = np.lexsort((act.values, key))
        skey = key[order]
        vals = act.values[order].astype(np.float64)
        cells, starts = np.unique(skey, return_index=True)
        sums = np.add.reduceat(vals, starts) if len(vals) else np.zeros(0)
        grid = np.zeros(ns * nt, dtype=np.float64)
        grid[cells] = sums
    else:
        grid_int = np.zeros(ns * nt, dtype=np.int64)
        np.add.at(grid_int, key, act.values.astype(np.int64))
        grid = grid_int.astype(np.float64)
    return (grid / (n * M)).reshape(ns, nt)


def marginals(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return S.sum(axis=1), S.sum(axis=0)


def activity_histograms(act: ActivityField, deg: DegreeField, offsets: OffsetTable,
                        M: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Spatial and temporal activity histograms ``(h_s, h_t)``.

    ``h_s`` has ``n_spatial + 1`` bins and ``h_t`` has ``n_temporal + 1``.
    """
    return marginals(joint_distribution(act, deg, offsets, M))


def check_invariants(act: ActivityField, stats: WalkStats | None, S: np.ndarray,
                     h_s: np.ndarray, h_t: np.ndarray) -> None:
    """Raise :class:`InvariantError` unless histograms are the exact marginals of S
    and (for Monte Carlo fields) the activity sums to the step count."""
    m_s, m_t = marginals(S)
    if not (np.array_equal(h_s, m_s) and np.array_equal(h_t, m_t)):
        raise InvariantError("histograms differ from the marginals of S")
    if stats is not None and not act.exact and int(act.values.sum()) != stats.total_steps:
        raise InvariantError(
            f"activity sum {int(act.values.sum())} != total steps {stats.total_steps}")


def checks_enabled() -> bool:
    return os.environ.get(CHECK_ENV, "") not in ("", "0")


def derive_seed(master: int, r2: int, tau: int) -> int:
    """Independent 64-bit walk seed for one (r2, tau) network."""
    words = np.random.SeedSequence([int(master), int(r2), int(tau)]).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


def _validate_radii(radii) -> list[int]:
    radii = [int(r) for r in radii]
    if not radii:
        raise ValueError("at least one radius is required")
    if any(r < 1 for r in radii):
        raise ValueError(f"squared radii must be >= 1, got {radii}")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"radii must be strictly ascending, got {radii}")
    return radii


def descriptor_layout(radii, sched: ThresholdSchedule) -> list[Segment]:
    layout = []
    for r2 in _validate_radii(radii):
        offsets = neighborhood_offsets(r2)
        for part, bins in (("spatial", offsets.n_spatial + 1), ("temporal", offsets.n_temporal + 1)):
            layout.extend(Segment(r2, tau, part, bins) for tau in sched.thresholds)
    return layout


def feature_dimension(radii, sched: ThresholdSchedule) -> int:
    return sum(seg.bins for seg in descriptor_layout(radii, sched))


def network_histograms(video: Video, r2: int, tau: int, cfg: WalkConfig,
                       exact: bool = False, workers: int = 1):
    """Histograms of one (r2, tau) network.

    Returns (h_s, h_t, S, walk_stats); ``walk_stats`` is None when ``exact``.
    """
    offsets = neighborhood_offsets(r2)
    deg = in_degree_field(video, offsets, tau)
    sub = WalkConfig(cfg.M, cfg.L, derive_seed(cfg.seed, r2, tau))
    if exact:
        act, stats = exact_expected_activity(video, offsets, tau, sub), None
    else:
        act, stats = estimate_activity(video, offsets, tau, sub, workers=workers)
    S = joint_distribution(act, deg, offsets)
    h_s, h_t = marginals(S)
    if checks_enabled():
        check_invariants(act, stats, S, h_s, h_t)
    return h_s, h_t, S, stats


def extract_descriptor(video: Video, radii, sched: ThresholdSchedule,
                       cfg: WalkConfig = WalkConfig(), *, exact: bool = False,
                       workers: int = 1) -> FeatureVector:
    """Multi-scale activity descriptor of a video.

    Parameters
    ----------
    radii : squared radii, strictly ascending
    sched : threshold schedule
    cfg : walk budget and master seed; each (r2, tau) network walks with its
        own seed derived from ``cfg.seed``
    exact : use expected activities instead of Monte Carlo walks (small
        volumes only)
    workers : threads used to evaluate (r2, tau) networks concurrently
    """
    radii = _validate_radii(radii)
    combos = [(r2, tau) for r2 in radii for tau in sched.thresholds]

    def one(combo):
        return network_histograms(video, combo[0], combo[1], cfg, exact=exact)

    if workers > 1 and len(combos) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(zip(combos, pool.map(one, combos)))
    else:
        results = {c: one(c) for c in combos}

    layout = descriptor_layout(radii, sched)
    parts = []
    for seg in layout:
        h_s, h_t, _, _ = results[(seg.r2, seg.tau)]
        parts.append(h_s if seg.part == "spatial" else h_t)
    stats = {c: r[3] for c, r in results.items() if r[3] is not None}
    return FeatureVector(np.concatenate(parts), layout, stats)


# --- feature files -------------------------------------------------------

def write_layout(path, layout: list[Segment], **meta) -> None:
    doc = dict(meta)
    doc["dimension"] = sum(s.bins for s in layout)
    doc["segments"] = [s.as_dict() for s in layout]
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_layout(path) -> list[Segment]:
    doc = json.loads(Path(path).read_text())
    return [Segment(int(s["r2"]), int(s["tau"]), s["part"], int(s["bins"])) for s in doc["segments"]]


def feature_header(dimension: int) -> list[str]:
    return ["id", "label"] + [f"f{k}" for k in range(dimension)]


def write_features_csv(path, rows, dimension: int) -> None:
    """Write ``(id, label, values)`` rows; floats use shortest round-trip repr."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(feature_header(dimension))
        for vid, label, values in rows:
            w.writerow([vid, label] + [repr(float(x)) for x in values])


def layout_path_for(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".layout.json")
