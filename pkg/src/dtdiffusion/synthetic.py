"""Synthetic dynamic textures with a moving patch.

Each video is an animated wave texture (two travelling sinusoids plus a
little per-frame noise) with a square patch of high-frequency noise pasted
over it. The patch follows one of four motion laws: circular, linear (with
specular reflection at the borders), random steps, or none.

Angles are in degrees in array coordinates: angle 0 moves along +x, angle
90 along +y.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .video import Video, save_raw

MOTION_CLASSES = ("circular", "linear", "random", "none")

DEFAULT_WIDTH = 220
DEFAULT_HEIGHT = 180
DEFAULT_FRAMES = 60


class MotionSpecError(ValueError):
    pass


@dataclass(frozen=True)
class MotionSpec:
    motion_class: str
    patch_size: int = 40
    speed: float = 2.0
    angle: float = 0.0
    orbit_radius: float = 30.0
    # patch centre at t = 0 (orbit centre for circular motion); None = frame centre
    center: tuple[float, float] | None = None
    phase: float = 0.0
    seed: int = 0

    def validate(self, width: int, height: int) -> None:
        if self.motion_class not in MOTION_CLASSES:
            raise MotionSpecError(f"unknown motion class {self.motion_class!r}")
        if self.patch_size < 1:
            raise MotionSpecError("patch_size must be >= 1")
        if self.patch_size > width or self.patch_size > height:
            raise MotionSpecError(
                f"patch of {self.patch_size} px does not fit a {width}x{height} frame")
        if self.motion_class != "none" and self.speed <= 0:
            raise MotionSpecError("moving classes need speed > 0")
        cx, cy = self.resolved_center(width, height)
        lo_x, hi_x, lo_y, hi_y = _center_bounds(self.patch_size, width, height)
        if self.motion_class == "circular":
            if self.orbit_radius <= 0:
                raise MotionSpecError("orbit_radius must be positive")
            if (cx - self.orbit_radius < lo_x or cx + self.orbit_radius > hi_x
                    or cy - self.orbit_radius < lo_y or cy + self.orbit_radius > hi_y):
                raise MotionSpecError("circular orbit leaves the frame")
        elif not (lo_x <= cx <= hi_x and lo_y <= cy <= hi_y):
            raise MotionSpecError("patch centre puts the patch outside the frame")

    def resolved_center(self, width: int, height: int) -> tuple[float, float]:
        if self.center is None:
            return (width - 1) / 2.0, (height - 1) / 2.0
        return float(self.center[0]), float(self.center[1])


def _center_bounds(size: int, width: int, height: int):
    half = (size - 1) / 2.0
    return half, width - 1 - half, half, height - 1 - half


def _reflect(value: float, lo: float, hi: float) -> float:
    if hi <= lo:
        return lo
    span = hi - lo
    u = (value - lo) % (2 * span)
    return lo + (u if u <= span else 2 * span - u)


def patch_track(spec: MotionSpec, width: int = DEFAULT_WIDTH, height: int = DEFAULT_HEIGHT,
                frames: int = DEFAULT_FRAMES) -> np.ndarray:
    """Real-valued patch centres, shape (frames, 2) as (x, y)."""
    spec.validate(width, height)
    lo_x, hi_x, lo_y, hi_y = _center_bounds(spec.patch_size, width, height)
    cx, cy = spec.resolved_center(width, height)
    t = np.arange(frames, dtype=np.float64)
    if spec.motion_class == "none":
        return np.tile([cx, cy], (frames, 1))
    if spec.motion_class == "circular":
        theta = math.radians(spec.phase) + t * spec.speed / spec.orbit_radius
        return np.stack([cx + spec.orbit_radius * np.cos(theta),
                         cy + spec.orbit_radius * np.sin(theta)], axis=1)
    if spec.motion_class == "linear":
        a = math.radians(spec.angle)
        xs = [_reflect(cx + spec.speed * k * math.cos(a), lo_x, hi_x) for k in t]
        ys = [_reflect(cy + spec.speed * k * math.sin(a), lo_y, hi_y) for k in t]
        return np.stack([xs, ys], axis=1)
    # random: fresh direction every frame, reflected at the borders
    rng = np.random.default_rng([spec.seed, 7])
    track = np.empty((frames, 2))
    x, y = cx, cy
    for k in range(frames):
        track[k] = x, y
        a = rng.uniform(0.0, 2.0 * math.pi)
        x = _reflect(x + spec.speed * math.cos(a), lo_x, hi_x)
        y = _reflect(y + spec.speed * math.sin(a), lo_y, hi_y)
    return track


def patch_origins(track: np.ndarray, size: int) -> np.ndarray:
    """Integer top-left corners for real-valued centres."""
    return np.floor(track - (size - 1) / 2.0 + 0.5).astype(np.int64)


@dataclass(frozen=True)
class WaveParams:
    """Background texture shared by a whole corpus; only phases vary per video."""

    amplitudes: tuple[float, ...] = (40.0, 22.0)
    wavelengths: tuple[float, ...] = (14.0, 9.0)
    directions: tuple[float, ...] = (30.0, 115.0)
    # temporal angular frequencies, radians per frame
    omegas: tuple[float, ...] = (0.25, 0.4)
    noise: float = 6.0


def wave_background(width: int, height: int, frames: int, rng: np.random.Generator,
                    waves: WaveParams = WaveParams()) -> np.ndarray:
    """Animated sinusoidal wave texture, float array of shape (T, H, W)."""
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    out = np.full((frames, height, width), 128.0)
    for amp, wavelength, direction, omega in zip(
            waves.amplitudes, waves.wavelengths, waves.directions, waves.omegas):
        k = 2.0 * math.pi / wavelength
        a = math.radians(direction)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        spatial = k * math.cos(a) * x + k * math.sin(a) * y + phi
        for t in range(frames):
            out[t] += amp * np.sin(spatial - omega * t)
    out += rng.normal(0.0, waves.noise, size=out.shape)
    return out


def gen_motion_video(spec: MotionSpec, width: int = DEFAULT_WIDTH, height: int = DEFAULT_HEIGHT,
                     frames: int = DEFAULT_FRAMES, seed: int | None = None,
                     return_track: bool = False, waves: WaveParams = WaveParams()):
    """Render one synthetic video.

    ``seed`` (default ``spec.seed``) drives the background and the patch
    texture; the random-motion path is driven by ``spec.seed``.
    """
    spec.validate(width, height)
    seed = spec.seed if seed is None else seed
    rng = np.random.default_rng([seed, 1])
    frames_f = wave_background(width, height, frames, rng, waves)
    texture = rng.integers(0, 256, size=(spec.patch_size, spec.patch_size)).astype(np.float64)
    track = patch_track(spec, width, height, frames)
    origins = patch_origins(track, spec.patch_size)
    s = spec.patch_size
    for t, (x0, y0) in enumerate(origins):
        frames_f[t, y0:y0 + s, x0:x0 + s] = texture
    video = Video(np.clip(np.rint(frames_f), 0, 255).astype(np.uint8))
    if return_track:
        return video, origins + (s - 1) / 2.0
    return video


def jittered_spec(motion_class: str, rng: np.random.Generator, width: int, height: int,
                  patch_size: int, seed: int) -> MotionSpec:
    """Per-video motion parameters drawn around the class defaults."""
    lo_x, hi_x, lo_y, hi_y = _center_bounds(patch_size, width, height)
    base = MotionSpec(motion_class, patch_size=patch_size, seed=seed)
    if motion_class == "circular":
        max_r = 0.45 * min(hi_x - lo_x, hi_y - lo_y)
        radius = rng.uniform(0.6, 1.0) * max_r
        cx = rng.uniform(lo_x + radius, hi_x - radius)
        cy = rng.uniform(lo_y + radius, hi_y - radius)
        return replace(base, speed=rng.uniform(2.0, 3.0), orbit_radius=radius,
                       center=(cx, cy), phase=rng.uniform(0.0, 360.0))
    cx = rng.uniform(lo_x, hi_x)
    cy = rng.uniform(lo_y, hi_y)
    if motion_class == "linear":
        return replace(base, speed=rng.uniform(1.0, 1.5), angle=rng.uniform(0.0, 360.0), center=(cx, cy))
    if motion_class == "random":
        return replace(base, speed=rng.uniform(5.0, 6.0), center=(cx, cy))
    return replace(base, speed=0.0, center=(cx, cy))


def gen_corpus(out_dir, classes: int = 4, per_class: int = 30, seed: int = 0,
               width: int = DEFAULT_WIDTH, height: int = DEFAULT_HEIGHT,
               frames: int = DEFAULT_FRAMES, patch_size: int | None = None) -> list[dict]:
    """Write ``classes * per_class`` raw videos and a ``manifest.json``.

    Returns the manifest entries. The patch size defaults to 2/9 of the
    shorter frame side (40 px at the default size).
    """
    if not 1 <= classes <= len(MOTION_CLASSES):
        raise ValueError(f"classes must be in 1..{len(MOTION_CLASSES)}")
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if patch_size is None:
        patch_size = max(3, round(min(width, height) * 2 / 9))
    entries = []
    index = 0
    for motion in MOTION_CLASSES[:classes]:
        for k in range(per_class):
            rng = np.random.default_rng([seed, index])
            video_seed = int(rng.integers(0, 2**63))
            spec = jittered_spec(motion, rng, width, height, patch_size, video_seed)
            video = gen_motion_video(spec, width, height, frames)
            name = f"{motion}_{k:03d}.dt3d"
            save_raw(video, out_dir / name)
            params = asdict(spec)
            params["center"] = list(spec.center) if spec.center is not None else None
            entries.append({"path": name, "label": motion, "id": f"{motion}_{k:03d}",
                            "motion": params, "width": width, "height": height, "frames": frames})
            index += 1
    (out_dir / "manifest.json").write_text(json.dumps(entries, indent=2) + "\n")
    return entries
