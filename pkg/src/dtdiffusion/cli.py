"""Command-line entry point: ``dtdiffusion {extract,eval,inspect,synth}``.

Exit codes: 0 success, 1 input error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .descriptor import (
    descriptor_layout,
    extract_descriptor,
    feature_dimension,
    joint_distribution,
    layout_path_for,
    read_layout,
    write_features_csv,
    write_layout,
    derive_seed,
)
from .diffusion import WalkConfig, estimate_activity, DEFAULT_MAX_LEN, DEFAULT_SEED, DEFAULT_WALKS
from .evaluation import ProtocolError, holdout_trials, kfold_cv, read_features_csv
from .network import ThresholdSchedule, in_degree_field, neighborhood_offsets
from .synthetic import DEFAULT_FRAMES, DEFAULT_HEIGHT, DEFAULT_WIDTH, MOTION_CLASSES, gen_corpus
from .video import load_video

log = logging.getLogger("dtdiffusion")

EXIT_OK, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2

# best parameters per database
PRESETS = {
    "dyntexpp": {"radii": [1, 2], "tau0": 2, "taui": 48, "nf": 4},
    "traffic": {"radii": [1, 2, 3, 4, 5], "tau0": 4, "taui": 110, "nf": 1},
    "ucla": {"radii": [1, 2, 3], "tau0": 8, "taui": 96, "nf": 2},
}
DEFAULT_PRESET = "ucla"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    radii: list
    tau0: int
    taui: int
    nf: int
    M: int = DEFAULT_WALKS
    L: int = DEFAULT_MAX_LEN
    seed: int = DEFAULT_SEED
    preset: str | None = None

    @property
    def schedule(self) -> ThresholdSchedule:
        return ThresholdSchedule(self.tau0, self.taui, self.nf)

    @property
    def walk(self) -> WalkConfig:
        return WalkConfig(self.M, self.L, self.seed)

    def as_dict(self) -> dict:
        return {"preset": self.preset, "radii": list(self.radii), "tau0": self.tau0,
                "taui": self.taui, "nf": self.nf, "M": self.M, "L": self.L, "seed": self.seed}


def parse_radii(text: str) -> list[int]:
    try:
        radii = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"--radii expects comma-separated integers, got {text!r}") from None
    if not radii:
        raise ConfigError("--radii is empty")
    return radii


def resolve_config(args) -> RunConfig:
    """Expand ``--preset`` and apply individual overrides on top of it."""
    preset = args.preset
    base = dict(PRESETS[preset or DEFAULT_PRESET])
    if args.radii is not None:
        base["radii"] = parse_radii(args.radii)
    for name in ("tau0", "taui", "nf"):
        if getattr(args, name) is not None:
            base[name] = getattr(args, name)
    cfg = RunConfig(base["radii"], base["tau0"], base["taui"], base["nf"],
                    args.walks, args.max_len, args.seed, preset)
    try:
        cfg.schedule
        cfg.walk
        feature_dimension(cfg.radii, cfg.schedule)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("descriptor parameters")
    g.add_argument("--preset", choices=sorted(PRESETS), help="parameter set of a benchmark database")
    g.add_argument("--radii", help="comma-separated squared radii, e.g. 1,2,3")
    g.add_argument("--tau0", type=int, help="initial threshold")
    g.add_argument("--taui", type=int, help="threshold increment")
    g.add_argument("--nf", type=int, help="number of increments")
    g.add_argument("--walks", type=int, default=DEFAULT_WALKS, help="walks per vertex (M)")
    g.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN, help="walk length cap (L)")
    g.add_argument("--seed", type=int, default=DEFAULT_SEED)


# --- extract -------------------------------------------------------------

def read_manifest(path) -> list[dict]:
    path = Path(path)
    entries = json.loads(path.read_text())
    if isinstance(entries, dict):
        entries = entries.get("items", entries.get("videos"))
    if not isinstance(entries, list):
        raise ValueError(f"{path}: manifest must be a JSON list of {{path, label}} objects")
    out = []
    for k, e in enumerate(entries):
        if not isinstance(e, dict) or "path" not in e or "label" not in e:
            raise ValueError(f"{path}: entry {k} lacks path/label")
        p = Path(e["path"])
        if not p.is_absolute():
            p = path.parent / p
        out.append({"id": str(e.get("id", Path(e["path"]).stem)), "label": str(e["label"]),
                    "path": p, "format": e.get("format")})
    return out


def cmd_extract(args) -> int:
    cfg = resolve_config(args)
    try:
        entries = read_manifest(args.manifest)
    except (OSError, ValueError) as exc:
        log.error("cannot read manifest: %s", exc)
        return EXIT_INPUT
    layout = descriptor_layout(cfg.radii, cfg.schedule)
    dim = sum(s.bins for s in layout)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if not entries:
        log.warning("manifest %s is empty; writing an empty feature file", args.manifest)

    def work(entry):
        t0 = time.perf_counter()
        try:
            video = load_video(entry["path"], entry["format"])
        except (OSError, ValueError) as exc:
            return entry, None, str(exc)
        fv = extract_descriptor(video, cfg.radii, cfg.schedule, cfg.walk)
        stats = fv.total_walk_stats()
        log.info("%s: %s, %d features, mean walk length %.3f, %.1fs", entry["id"], video,
                 len(fv), stats.mean_length if stats else 0.0, time.perf_counter() - t0)
        return entry, fv, None

    workers = max(1, args.workers)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, entries))
    else:
        results = [work(e) for e in entries]

    rows, failures, per_video = [], [], []
    for entry, fv, err in results:
        if err is not None:
            failures.append((entry, err))
            log.error("skipped %s: %s", entry["path"], err)
            continue
        rows.append((entry["id"], entry["label"], fv.values))
        per_video.append({
            "id": entry["id"],
            "networks": [{"r2": r2, "tau": tau, **st.as_dict()}
                         for (r2, tau), st in sorted(fv.walk_stats.items())],
        })
    write_features_csv(out, rows, dim)
    write_layout(layout_path_for(out), layout, config=cfg.as_dict())
    summary = _walk_summary(per_video)
    stats_path = out.with_name(out.stem + ".stats.json")
    stats_path.write_text(json.dumps({"config": cfg.as_dict(), "summary": summary,
                                      "videos": per_video}, indent=2) + "\n")
    for s in summary:
        log.info("r2=%d tau=%d: mean walk length %.4f (max %d)", s["r2"], s["tau"],
                 s["mean_length"], s["max_length_observed"])
    log.info("wrote %d rows x %d features to %s", len(rows), dim, out)
    if failures:
        for entry, err in failures:
            print(f"error: {entry['path']}: {err}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def _walk_summary(per_video) -> list[dict]:
    acc = {}
    for v in per_video:
        for n in v["networks"]:
            key = (n["r2"], n["tau"])
            a = acc.setdefault(key, [0, 0, 0])
            a[0] += n["total_walks"]
            a[1] += n["total_steps"]
            a[2] = max(a[2], n["max_length_observed"])
    return [{"r2": r2, "tau": tau, "total_walks": w, "total_steps": s,
             "mean_length": s / w if w else 0.0, "max_length_observed": m}
            for (r2, tau), (w, s, m) in sorted(acc.items())]


# --- eval ----------------------------------------------------------------

def cmd_eval(args) -> int:
    try:
        data = read_features_csv(args.features)
    except (OSError, ValueError) as exc:
        log.error("cannot read features: %s", exc)
        return EXIT_INPUT
    if args.part != "all":
        lp = layout_path_for(args.features)
        try:
            layout = read_layout(lp)
        except (OSError, ValueError, KeyError) as exc:
            log.error("--part needs the layout file %s: %s", lp, exc)
            return EXIT_INPUT
        cols, start = [], 0
        for seg in layout:
            if seg.part == args.part:
                cols.extend(range(start, start + seg.bins))
            start += seg.bins
        data = data.subset(cols)
    try:
        if args.protocol == "kfold":
            report = kfold_cv(data, args.folds, args.trials, args.seed, args.metric)
        else:
            report = holdout_trials(data, args.trials, args.seed, args.metric)
    except ProtocolError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    if args.out:
        report.write_json(args.out)
    if args.confusion:
        report.write_confusion_csv(args.confusion)
    print(report.table())
    print(f"CCR: {report.summary()}")
    return EXIT_OK


# --- inspect -------------------------------------------------------------

def activity_images(values: np.ndarray, shape) -> np.ndarray:
    """Min-max scale activity over the whole video to uint8 frames (T, H, W)."""
    v = values.astype(np.float64).reshape(shape)
    lo, hi = v.min(), v.max()
    if hi <= lo:
        return np.zeros(shape, dtype=np.uint8)
    return np.rint(255.0 * (v - lo) / (hi - lo)).astype(np.uint8)


def cmd_inspect(args) -> int:
    cfg = resolve_config(args)
    if args.r2 < 1 or not 1 <= args.tau <= 255:
        raise ConfigError(f"invalid network (r2={args.r2}, tau={args.tau})")
    try:
        video = load_video(args.video)
    except (OSError, ValueError) as exc:
        log.error("cannot read video: %s", exc)
        return EXIT_INPUT
    offsets = neighborhood_offsets(args.r2)
    walk = WalkConfig(cfg.M, cfg.L, derive_seed(cfg.seed, args.r2, args.tau))
    act, stats = estimate_activity(video, offsets, args.tau, walk)
    deg = in_degree_field(video, offsets, args.tau)
    S = joint_distribution(act, deg, offsets)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frames = activity_images(act.values, video.data.shape)
    digits = max(4, len(str(video.frames)))
    for t in range(video.frames):
        Image.fromarray(frames[t], mode="L").save(out / f"activity_{t:0{digits}d}.pgm")
    np.save(out / "activity.npy", act.values.reshape(video.data.shape))
    with open(out / "joint.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k_s\\k_t"] + list(range(S.shape[1])))
        for s, row in enumerate(S):
            w.writerow([s] + [repr(float(x)) for x in row])
    (out / "walk_stats.json").write_text(json.dumps(
        {"r2": args.r2, "tau": args.tau, **stats.as_dict()}, indent=2) + "\n")
    log.info("%s r2=%d tau=%d: mean walk length %.4f; wrote %d heat-maps to %s",
             video, args.r2, args.tau, stats.mean_length, video.frames, out)
    return EXIT_OK


# --- synth ---------------------------------------------------------------

def cmd_synth(args) -> int:
    try:
        entries = gen_corpus(args.out, args.classes, args.per_class, args.seed,
                             args.width, args.height, args.frames, args.patch_size)
    except OSError as exc:
        log.error("cannot write corpus: %s", exc)
        return EXIT_INPUT
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    log.info("wrote %d videos and manifest.json to %s", len(entries), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dtdiffusion", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="compute descriptors for every video of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="feature CSV; layout/stats JSON are written beside it")
    p.add_argument("--workers", type=int, default=1, help="videos processed concurrently")
    _add_run_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("eval", help="1-NN evaluation of a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--protocol", choices=("kfold", "holdout"), default="kfold")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", choices=("euclidean", "l1"), default="euclidean")
    p.add_argument("--part", choices=("all", "spatial", "temporal"), default="all",
                   help="restrict to spatial or temporal histogram segments")
    p.add_argument("--out", help="report JSON")
    p.add_argument("--confusion", help="confusion matrix CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect", help="activity heat-maps and joint distribution of one network")
    p.add_argument("--video", required=True)
    p.add_argument("--r2", type=int, required=True)
    p.add_argument("--tau", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_run_flags(p)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("synth", help="generate the synthetic motion corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=len(MOTION_CLASSES))
    p.add_argument("--per-class", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=DEFAULT_WIDTH)
    p.add_argument("--height", type=int, default=DEFAULT_HEIGHT)
    p.add_argument("--frames", type=int, default=DEFAULT_FRAMES)
    p.add_argument("--patch-size", type=int)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
