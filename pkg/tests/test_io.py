"""File formats: images, fields, screens, models, CSV, datasets."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oamturb.cnn import Dataset, init_model
from oamturb.errors import EmptyDataset, MissingInput, OamTurbError
from oamturb.io import (
    format_cell,
    load_dataset,
    load_field,
    load_model,
    load_pgm,
    load_screen,
    read_csv,
    save_dataset,
    save_field,
    save_image,
    save_model,
    save_pgm,
    save_screen,
    write_csv,
)
from oamturb.optics import Image8, make_grid
from oamturb.turbulence import PhaseScreen


def test_pgm_round_trip(tmp_path):
    img = Image8(np.arange(64, dtype=np.uint8).reshape(8, 8))
    p = tmp_path / "x.pgm"
    save_pgm(p, img)
    back = load_pgm(p)
    assert np.array_equal(img.pixels, back.pixels)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.integers(2, 12))
def test_pgm_round_trip_random(tmp_path_factory, seed, h, w):
    img = Image8(
        np.random.default_rng(seed).integers(0, 256, (h, w), dtype=np.uint8)
    )
    p = tmp_path_factory.mktemp("pgm") / "r.pgm"
    save_pgm(p, img)
    assert np.array_equal(load_pgm(p).pixels, img.pixels)


def test_pgm_tolerates_comments(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# a comment line\n2 2\n255\n" + bytes([1, 2, 3, 4]))
    img = load_pgm(p)
    assert np.array_equal(img.pixels, np.array([[1, 2], [3, 4]], dtype=np.uint8))


def test_pgm_missing_file(tmp_path):
    with pytest.raises(MissingInput):
        load_pgm(tmp_path / "absent.pgm")


def test_field_round_trip(tmp_path):
    vals = np.arange(16, dtype=np.complex128).reshape(4, 4) * (1 + 2j)
    p = tmp_path / "f.npz"
    save_field(p, vals, 4e-4, "tx")
    back, dx, kind = load_field(p)
    assert np.array_equal(back, vals)
    assert dx == 4e-4
    assert kind == "tx"


def test_screen_round_trip(tmp_path):
    g = make_grid(16, 1e-3)
    screen = PhaseScreen(g, np.random.default_rng(0).standard_normal((16, 16)), "real")
    p = tmp_path / "s.npz"
    save_screen(p, screen)
    back = load_screen(p)
    assert np.array_equal(back.values, screen.values)
    assert back.grid == g
    assert back.role == "real"


def test_model_round_trip(tmp_path):
    model = init_model(16, 4, np.array([1e-11, 2e-11, 3e-11]), rng_seed=5)
    p = tmp_path / "m.bin"
    save_model(p, model)
    back = load_model(p)
    assert back.side == 16 and back.nf == 4
    assert np.array_equal(back.label_values, model.label_values)
    for name in ("conv_w", "conv_b", "fc1_w", "fc1_b", "fc2_w", "fc2_b"):
        assert np.array_equal(getattr(back, name), getattr(model, name))


def test_model_checksum_detects_corruption(tmp_path):
    model = init_model(16, 2, np.array([1e-11, 2e-11]), rng_seed=5)
    p = tmp_path / "m.bin"
    save_model(p, model)
    blob = bytearray(p.read_bytes())
    blob[-20] ^= 0xFF
    p.write_bytes(bytes(blob))
    with pytest.raises(OamTurbError):
        load_model(p)


def test_model_magic_guard(tmp_path):
    p = tmp_path / "m.bin"
    p.write_bytes(b"whatever this is\n" + b"\x00" * 100)
    with pytest.raises(OamTurbError):
        load_model(p)


@settings(max_examples=50, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_cell_floats_survive(x):
    assert float(format_cell(x)) == x


def test_csv_round_trip(tmp_path):
    p = tmp_path / "t.csv"
    rows = [(1, 2.5, "a"), (2, 1e-11, "b")]
    write_csv(p, ["i", "x", "s"], rows)
    header, data = read_csv(p)
    assert header == ["i", "x", "s"]
    assert data[0][0] == "1"
    assert float(data[1][1]) == 1e-11
    with pytest.raises(MissingInput):
        read_csv(tmp_path / "nope.csv")


def test_save_image_dispatch(tmp_path):
    img = Image8(np.arange(16, dtype=np.uint8).reshape(4, 4))
    save_image(tmp_path / "a.pgm", img)
    assert np.array_equal(load_pgm(tmp_path / "a.pgm").pixels, img.pixels)
    pytest.importorskip("PIL")
    save_image(tmp_path / "a.png", img)
    from PIL import Image as PilImage

    with PilImage.open(tmp_path / "a.png") as f:
        assert np.array_equal(np.asarray(f), img.pixels)


def _tiny_dataset():
    rng = np.random.default_rng(0)
    return Dataset(
        images=rng.integers(0, 256, (6, 8, 8), dtype=np.uint8),
        labels=np.array([0, 0, 1, 1, 2, 2], dtype=np.int64),
        label_values=np.array([1e-11, 2e-11, 3e-11]),
        ell=4,
        base_seed=9,
    )


def test_dataset_round_trip(tmp_path):
    data = _tiny_dataset()
    save_dataset(tmp_path / "d", data)
    back = load_dataset(tmp_path / "d")
    assert np.array_equal(back.images, data.images)
    assert np.array_equal(back.labels, data.labels)
    assert np.allclose(back.label_values, data.label_values)
    assert back.ell == 4


def test_dataset_missing_dir(tmp_path):
    with pytest.raises(MissingInput):
        load_dataset(tmp_path / "absent")


def test_dataset_detects_label_gap(tmp_path):
    data = _tiny_dataset()
    save_dataset(tmp_path / "d", data)
    manifest = tmp_path / "d" / "manifest.csv"
    lines = manifest.read_text().splitlines()
    # drop every row of label 1 and leave a hole in the class coverage
    kept = [lines[0]] + [l for l in lines[1:] if ",1," not in l]
    manifest.write_text("\n".join(kept) + "\n")
    with pytest.raises(EmptyDataset):
        load_dataset(tmp_path / "d")
