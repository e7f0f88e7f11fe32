import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from dtdiffusion.video import (
    Video,
    VideoFormatError,
    load_video,
    raw_bytes,
    rgb_to_gray,
    rotate90,
    rotation_permutation,
    save_frame_dir,
    save_raw,
)

videos = st.tuples(st.integers(1, 5), st.integers(1, 5), st.integers(1, 3)).flatmap(
    lambda s: arrays(np.uint8, (s[2], s[1], s[0])).map(Video)
)


def test_frame_dir_of_white_pngs(tmp_path):
    for k in range(3):
        Image.fromarray(np.full((2, 2), 255, np.uint8), mode="L").save(tmp_path / f"f{k}.png")
    v = load_video(tmp_path, "frame_dir")
    assert v.shape == (2, 2, 3)
    assert np.all(v.intensities == 255)


def test_frame_dir_rgb_is_converted_to_luminance(tmp_path):
    rgb = np.zeros((1, 2, 3), np.uint8)
    rgb[0, 0] = (255, 0, 0)
    rgb[0, 1] = (10, 200, 30)
    Image.fromarray(rgb, mode="RGB").save(tmp_path / "a.png")
    v = load_video(tmp_path)
    # 0.299*255 = 76.245; 0.299*10 + 0.587*200 + 0.114*30 = 123.81
    assert v.intensities.tolist() == [76, 124]


def test_frame_dir_ordering_is_bytewise(tmp_path):
    # "B" (0x42) sorts before "a" (0x61) bytewise
    Image.fromarray(np.full((1, 1), 10, np.uint8), mode="L").save(tmp_path / "a.png")
    Image.fromarray(np.full((1, 1), 20, np.uint8), mode="L").save(tmp_path / "B.pgm")
    v = load_video(tmp_path)
    assert v.intensities.tolist() == [20, 10]


def test_frame_dir_dimension_mismatch(tmp_path):
    Image.fromarray(np.zeros((2, 2), np.uint8), mode="L").save(tmp_path / "0.png")
    Image.fromarray(np.zeros((3, 3), np.uint8), mode="L").save(tmp_path / "1.png")
    with pytest.raises(VideoFormatError, match="differs"):
        load_video(tmp_path)


def test_frame_dir_empty(tmp_path):
    with pytest.raises(VideoFormatError):
        load_video(tmp_path, "frame_dir")


def test_missing_path(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_video(tmp_path / "nope.dt3d")


def test_raw_roundtrip_layout(tmp_path):
    payload = bytes(range(32))
    header = b"DT3D" + (4).to_bytes(4, "little") + (4).to_bytes(4, "little") + (2).to_bytes(4, "little")
    p = tmp_path / "v.dt3d"
    p.write_bytes(header + payload)
    v = load_video(p, "raw_gray3d")
    assert v.shape == (4, 4, 2)
    # x fastest, then y, then t
    assert v.at(1, 0, 0) == 1
    assert v.at(0, 1, 0) == 4
    assert v.at(0, 0, 1) == 16
    assert raw_bytes(v) == header + payload


def test_raw_truncated(tmp_path):
    p = tmp_path / "v.dt3d"
    p.write_bytes(b"DT3D" + (4).to_bytes(4, "little") * 2 + (2).to_bytes(4, "little") + bytes(31))
    with pytest.raises(VideoFormatError, match="truncated"):
        load_video(p)


def test_raw_bad_magic(tmp_path):
    p = tmp_path / "v.dt3d"
    p.write_bytes(b"XXXX" + (1).to_bytes(4, "little") * 3 + b"\x00")
    with pytest.raises(VideoFormatError, match="magic"):
        load_video(p)


def test_save_roundtrip(tmp_path, rng):
    v = Video(rng.integers(0, 256, (3, 4, 5)))
    save_raw(v, tmp_path / "a.dt3d")
    assert load_video(tmp_path / "a.dt3d") == v
    save_frame_dir(v, tmp_path / "frames")
    assert load_video(tmp_path / "frames") == v


def test_video_rejects_out_of_range():
    with pytest.raises(ValueError):
        Video(np.full((1, 1, 1), 256))
    with pytest.raises(ValueError):
        Video(np.zeros((0, 1, 1), np.uint8))


def test_video_is_read_only(rng):
    v = Video(rng.integers(0, 256, (2, 2, 2)))
    with pytest.raises(ValueError):
        v.data[0, 0, 0] = 1


def test_rotate_identity(rng):
    v = Video(rng.integers(0, 256, (2, 3, 4)))
    assert rotate90(v, 0) == v


def test_rotate_half_turn_of_pair():
    v = Video.from_flat(2, 1, 1, [10, 20])
    assert rotate90(v, 2).intensities.tolist() == [20, 10]
    assert rotate90(v, 2).shape == (2, 1, 1)


def test_rotate_quarter_turn_formula(rng):
    v = Video(rng.integers(0, 256, (2, 3, 5)))
    r = rotate90(v, 1)
    W, H, T = v.shape
    assert r.shape == (H, W, T)
    for t in range(T):
        for yp in range(W):
            for xp in range(H):
                assert r.at(xp, yp, t) == v.at(yp, H - 1 - xp, t)


@given(videos, st.integers(0, 3))
@settings(max_examples=60, deadline=None)
def test_rotation_group_and_multiset(v, k):
    r = v
    for _ in range(4):
        r = rotate90(r, 1)
    assert r == v
    rk = rotate90(v, k)
    assert rk.n_vertices == v.n_vertices
    assert sorted(rk.intensities.tolist()) == sorted(v.intensities.tolist())
    assert np.array_equal(rk.intensities, v.intensities[rotation_permutation(*v.shape, k)])


@given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))
def test_luminance_deterministic(r, g, b):
    a = rgb_to_gray(np.array([r, g, b]))
    assert a == rgb_to_gray(np.array([r, g, b]))
    assert int(a) == int(np.floor(0.299 * r + 0.587 * g + 0.114 * b + 0.5))
