"""Acceptance criteria, one test per criterion.

Each test appends a PASS/FAIL line that is printed in the terminal summary.
The synthetic corpus is generated at 44x36x16 with a 16 px patch so the
extraction-heavy criteria fit a single-core budget.
"""

import itertools
import json
import math
import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_video
from dtdiffusion.cli import PRESETS, main
from dtdiffusion.descriptor import extract_descriptor, feature_dimension, network_histograms
from dtdiffusion.diffusion import WalkConfig, estimate_activity, exact_expected_activity
from dtdiffusion.evaluation import kfold_cv, read_features_csv
from dtdiffusion.network import ThresholdSchedule, neighborhood_offsets
from dtdiffusion.synthetic import gen_corpus
from dtdiffusion.video import Video, rotate90

CORPUS = dict(per_class=30, seed=0, width=44, height=36, frames=16, patch_size=16)
TRAFFIC_ENV = "DTDIFFUSION_TRAFFIC_MANIFEST"


def record(number, name, passed, detail):
    line = f"C{number:<2} {'PASS' if passed else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def preset_args(name):
    p = PRESETS[name]
    return p["radii"], ThresholdSchedule(p["tau0"], p["taui"], p["nf"])


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("acceptance_corpus")
    gen_corpus(d, **CORPUS)
    return d


@pytest.fixture(scope="session")
def extractions(corpus, tmp_path_factory):
    """UCLA-preset feature CSVs of the corpus at 1, 4 and 8 workers."""
    out = tmp_path_factory.mktemp("acceptance_features")
    paths = {}
    for workers in (1, 4, 8):
        path = out / f"ucla_w{workers}.csv"
        rc = main(["extract", "--manifest", str(corpus / "manifest.json"), "--out", str(path),
                   "--preset", "ucla", "--workers", str(workers)])
        assert rc == 0
        paths[workers] = path
    return paths


def test_c1_offset_tables():
    expected = {1: (4, 2), 2: (8, 10), 3: (8, 18), 4: (12, 20), 5: (20, 36)}
    ok = True
    for r2, counts in expected.items():
        o = neighborhood_offsets(r2)
        brute = {(dx, dy, dt) for dx, dy, dt in itertools.product(range(-3, 4), repeat=3)
                 if 0 < dx * dx + dy * dy + dt * dt <= r2}
        ok &= set(o.as_triples()) == brute and len(o.as_triples()) == len(brute)
        ok &= (o.n_spatial, o.n_temporal) == counts
        ok &= (sum(1 for *_, dt in brute if dt == 0), sum(1 for *_, dt in brute if dt != 0)) == counts
    record(1, "offset tables", ok, "counts (4,2) (8,10) (8,18) (12,20) (20,36) vs cube enumeration")


def test_c2_monte_carlo_vs_exact():
    o = neighborhood_offsets(2)
    worst = 0.0
    for k in range(20):
        v = random_video(np.random.default_rng([2, k]), 4, 4, 4)
        cfg = WalkConfig(M=2000, L=50, seed=1000 + k)
        act, _ = estimate_activity(v, o, 128, cfg)
        exact = exact_expected_activity(v, o, 128, cfg)
        worst = max(worst, float(np.abs(act.normalized() - exact.normalized()).sum()))
    record(2, "MC vs exact", worst <= 0.05, f"max L1 over 20 videos = {worst:.4f} (<= 0.05)")


def test_c3_rotation_invariance():
    radii, sched = preset_args("ucla")
    v = random_video(np.random.default_rng(3), 16, 16, 8)
    videos = [v] + [rotate90(v, k) for k in (1, 2, 3)]
    exact = [extract_descriptor(x, radii, sched, exact=True).values for x in videos]
    exact_ok = all(np.array_equal(exact[0], e) for e in exact[1:])
    mc = [extract_descriptor(x, radii, sched, WalkConfig(M=50)) for x in videos]
    seg_worst = 0.0
    for other in mc[1:]:
        for (seg, sl), _ in zip(mc[0].segment_slices(), other.segment_slices()):
            seg_worst = max(seg_worst, float(np.abs(mc[0].values[sl] - other.values[sl]).sum()))
    whole = max(float(np.abs(mc[0].values - m.values).sum()) for m in mc[1:])
    unit = max(float(np.abs(mc[0].values / mc[0].values.sum() - m.values / m.values.sum()).sum())
               for m in mc[1:])
    record(3, "rotation invariance", exact_ok and seg_worst <= 0.05,
           f"exact bit-identical={exact_ok}; MC max per-histogram L1 = {seg_worst:.4f} (<= 0.05); "
           f"informative: whole-vector L1 = {whole:.4f}, unit-mass L1 = {unit:.4f}")


def test_c4_constant_video_null():
    ok = True
    for value in (0, 77, 255):
        v = Video(np.full((5, 6, 7), value))
        for name in PRESETS:
            ok &= not extract_descriptor(v, *preset_args(name), WalkConfig(M=5)).values.any()
    record(4, "constant-video null", ok, "all presets, intensities 0/77/255")


def test_c5_feature_dimensions():
    dims = {name: feature_dimension(*preset_args(name)) for name in ("dyntexpp", "ucla", "traffic")}
    ok = dims == {"dyntexpp": 140, "ucla": 168, "traffic": 296}
    record(5, "feature dimensions", ok, f"{dims} (published tables list 141/169/297)")


def test_c6_parallel_determinism(extractions):
    blobs = {w: p.read_bytes() for w, p in extractions.items()}
    rows = blobs[1].count(b"\n") - 1
    ok = rows == 120 and blobs[1] == blobs[4] == blobs[8]
    record(6, "determinism under parallelism", ok,
           f"{rows} rows; workers 1/4/8 byte-identical={blobs[1] == blobs[4] == blobs[8]}")


def test_c7_motion_discrimination(extractions):
    data = read_features_csv(extractions[1])
    layout = json.loads(extractions[1].with_name("ucla_w1.layout.json").read_text())["segments"]
    cols, start = [], 0
    for seg in layout:
        if seg["part"] == "temporal":
            cols.extend(range(start, start + seg["bins"]))
        start += seg["bins"]
    report = kfold_cv(data.subset(cols), k=10, trials=10, seed=0)
    record(7, "motion discrimination", report.ccr_mean >= 90.0,
           f"temporal UCLA features, 1-NN kfold(10,10): CCR {report.summary()} (>= 90)")


def test_c8_walk_length(corpus, tmp_path):
    out = tmp_path / "r4.csv"
    rc = main(["extract", "--manifest", str(corpus / "manifest.json"), "--out", str(out),
               "--radii", "4", "--tau0", "20", "--nf", "0"])
    summary = json.loads(out.with_name("r4.stats.json").read_text())["summary"]
    (net,) = summary
    ml = net["mean_length"]
    ok = rc == 0 and (net["r2"], net["tau"]) == (4, 20) and math.isfinite(ml) and ml < 20
    record(8, "walk length", ok, f"r2=4 tau=20 mean walk length {ml:.3f} (< 20; published 3.46)")


def test_c9_marginal_and_mass_invariants():
    rng = np.random.default_rng(9)
    ok = True
    count = 0
    for k in range(6):
        v = random_video(rng, 7, 6, 5)
        for r2, tau in [(1, 8), (2, 104), (3, 200), (5, 20)]:
            offsets = neighborhood_offsets(r2)
            h_s, h_t, S, stats = network_histograms(v, r2, tau, WalkConfig(M=7, seed=k))
            ok &= np.array_equal(h_s, S.sum(axis=1)) and np.array_equal(h_t, S.sum(axis=0))
            act, st = estimate_activity(v, offsets, tau, WalkConfig(M=7, seed=k))
            ok &= int(act.values.sum()) == st.total_steps
            count += 1
    ok &= os.environ.get("DTDIFFUSION_CHECK") == "1"
    record(9, "marginal/mass invariants", ok,
           f"{count} networks checked here; checks also active in every extraction of this run")


@pytest.mark.skipif(not os.environ.get(TRAFFIC_ENV), reason=f"set {TRAFFIC_ENV} to a Traffic manifest")
def test_c10_traffic_optional(tmp_path):
    out = tmp_path / "traffic.csv"
    t0 = time.perf_counter()
    rc = main(["extract", "--manifest", os.environ[TRAFFIC_ENV], "--out", str(out), "--preset", "traffic"])
    assert rc == 0
    report = kfold_cv(read_features_csv(out), k=10, trials=10, seed=0)
    lo, hi = 96.60 - 4.38, 96.60 + 4.38
    line = (f"C10 INFO  Traffic kfold(10,10): CCR {report.summary()}; published 96.60 (± 4.38); "
            f"within spread={lo <= report.ccr_mean <= hi}; {time.perf_counter() - t0:.0f}s")
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_c10_skip_notice():
    if not os.environ.get(TRAFFIC_ENV):
        ACCEPTANCE_LINES.append(f"C10 SKIP  Traffic dataset check (optional, set {TRAFFIC_ENV})")
