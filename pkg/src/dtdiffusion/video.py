"""Grayscale video volumes: loading, saving and rotation.

A :class:`Video` stores its intensities as a read-only ``uint8`` array of
shape ``(T, H, W)``. In C order this is exactly the x-fastest, then y, then t
layout used by the ``raw_gray3d`` file format, so the flat vertex index of a
pixel ``(x, y, t)`` is ``x + W * (y + H * t)`` everywhere in the package.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

RAW_MAGIC = b"DT3D"
_RAW_HEADER = struct.Struct("<4sIII")
FRAME_SUFFIXES = (".png", ".pgm")


class VideoFormatError(ValueError):
    """Raised when a video file or frame directory cannot be decoded."""


@dataclass(frozen=True, eq=False)
class Video:
    """Immutable W x H x T volume of 8-bit intensities."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise ValueError(f"video data must be 3-D (T, H, W), got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ValueError(f"video dimensions must be >= 1, got {arr.shape}")
        if arr.dtype != np.uint8:
            if np.issubdtype(arr.dtype, np.integer) or np.issubdtype(arr.dtype, np.floating):
                if arr.min() < 0 or arr.max() > 255 or (
                    np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.round(arr))
                ):
                    raise ValueError("intensities must be integers in [0, 255]")
            else:
                raise ValueError(f"unsupported intensity dtype {arr.dtype}")
        arr = np.array(arr, dtype=np.uint8, order="C", copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_flat(cls, width: int, height: int, frames: int, intensities) -> "Video":
        flat = np.asarray(intensities)
        if flat.size != width * height * frames:
            raise ValueError(
                f"expected {width * height * frames} intensities, got {flat.size}"
            )
        return cls(flat.reshape(frames, height, width))

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int, int]:
        """(W, H, T)."""
        return self.width, self.height, self.frames

    @property
    def n_vertices(self) -> int:
        return self.data.size

    @property
    def intensities(self) -> np.ndarray:
        """Flat view in x-fastest, y, t order."""
        return self.data.reshape(-1)

    def at(self, x: int, y: int, t: int) -> int:
        return int(self.data[t, y, x])

    def index(self, x: int, y: int, t: int) -> int:
        return x + self.width * (y + self.height * t)

    def coord(self, index: int) -> tuple[int, int, int]:
        t, rem = divmod(int(index), self.width * self.height)
        y, x = divmod(rem, self.width)
        return x, y, t

    def __eq__(self, other):
        if not isinstance(other, Video):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.data.shape, self.data.tobytes()))

    def __repr__(self):
        return f"Video(W={self.width}, H={self.height}, T={self.frames})"


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """Integer-rounded luminance, round-half-up of 0.299R + 0.587G + 0.114B."""
    rgb = np.asarray(rgb, dtype=np.float64)
    lum = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(np.floor(lum + 0.5), 0, 255).astype(np.uint8)


def _image_to_gray(img: Image.Image, path: Path) -> np.ndarray:
    mode = img.mode
    if mode == "L":
        return np.asarray(img, dtype=np.uint8)
    if mode in ("1",):
        return np.asarray(img.convert("L"), dtype=np.uint8)
    if mode in ("P", "PA", "LA", "RGBA", "RGBX", "CMYK", "YCbCr"):
        img = img.convert("RGB")
        mode = "RGB"
    if mode == "RGB":
        return rgb_to_gray(np.asarray(img))
    raise VideoFormatError(f"{path}: unsupported image mode {img.mode!r}")


def list_frames(directory: str | os.PathLike) -> list[Path]:
    """Frame files of a directory, byte-wise lexicographic by filename."""
    directory = Path(directory)
    files = [p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in FRAME_SUFFIXES]
    return sorted(files, key=lambda p: os.fsencode(p.name))


def load_frame_dir(directory: str | os.PathLike) -> Video:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"frame directory not found: {directory}")
    files = list_frames(directory)
    if not files:
        raise VideoFormatError(f"{directory}: no PNG/PGM frames found")
    planes = []
    for f in files:
        with Image.open(f) as img:
            plane = _image_to_gray(img, f)
        if planes and plane.shape != planes[0].shape:
            raise VideoFormatError(
                f"{f}: frame size {plane.shape[::-1]} differs from "
                f"first frame {planes[0].shape[::-1]}"
            )
        planes.append(plane)
    return Video(np.stack(planes))


def load_raw(path: str | os.PathLike) -> Video:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"raw video not found: {path}")
    blob = path.read_bytes()
    if len(blob) < _RAW_HEADER.size:
        raise VideoFormatError(f"{path}: truncated header")
    magic, w, h, t = _RAW_HEADER.unpack_from(blob)
    if magic != RAW_MAGIC:
        raise VideoFormatError(f"{path}: bad magic {magic!r}")
    if w < 1 or h < 1 or t < 1:
        raise VideoFormatError(f"{path}: zero dimension in header ({w}x{h}x{t})")
    n = w * h * t
    payload = blob[_RAW_HEADER.size:]
    if len(payload) < n:
        raise VideoFormatError(f"{path}: truncated payload, {len(payload)} of {n} bytes")
    return Video.from_flat(w, h, t, np.frombuffer(payload, dtype=np.uint8, count=n))


def load_video(path: str | os.PathLike, format: str | None = None) -> Video:
    """Load a video as either a frame directory or a ``raw_gray3d`` file.

    ``format`` is ``"frame_dir"`` or ``"raw_gray3d"``; when omitted it is
    inferred (directories are frame dirs, files are raw volumes).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"video path not found: {path}")
    if format is None:
        format = "frame_dir" if path.is_dir() else "raw_gray3d"
    if format == "frame_dir":
        return load_frame_dir(path)
    if format == "raw_gray3d":
        return load_raw(path)
    raise ValueError(f"unknown video format {format!r}")


def raw_bytes(video: Video) -> bytes:
    return _RAW_HEADER.pack(RAW_MAGIC, video.width, video.height, video.frames) + video.data.tobytes()


def save_raw(video: Video, path: str | os.PathLike) -> None:
    Path(path).write_bytes(raw_bytes(video))


def save_frame_dir(video: Video, directory: str | os.PathLike, suffix: str = ".png") -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    digits = max(4, len(str(video.frames)))
    out = []
    for t in range(video.frames):
        p = directory / f"frame_{t:0{digits}d}{suffix}"
        Image.fromarray(np.ascontiguousarray(video.data[t]), mode="L").save(p)
        out.append(p)
    return out


def rotate90(video: Video, quarter_turns: int) -> Video:
    """Rotate every frame by ``quarter_turns`` * 90 degrees counterclockwise.

    One turn maps ``out(x', y', t) = in(y', H - 1 - x', t)`` with W' = H, H' = W
    (y axis pointing up).
    """
    k = int(quarter_turns) % 4
    if k == 0:
        return video
    # rot90 with negative k on (y, x) axes is counterclockwise for y-up coordinates
    return Video(np.rot90(video.data, k=-k, axes=(1, 2)))


def rotation_permutation(width: int, height: int, frames: int, quarter_turns: int) -> np.ndarray:
    """Index map ``p`` with ``rotated.intensities == original.intensities[p]``."""
    idx = np.arange(width * height * frames).reshape(frames, height, width)
    k = int(quarter_turns) % 4
    return np.ascontiguousarray(np.rot90(idx, k=-k, axes=(1, 2))).reshape(-1)
