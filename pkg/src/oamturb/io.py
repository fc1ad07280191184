"""File formats: PGM images, raw float fields, model files, CSV tables.

Everything here is byte-deterministic: fixed header layouts, little-endian
float64 payloads, and repr-based float formatting in CSV cells (shortest
round-trip form), so rerunning an experiment reproduces files exactly.
"""

from __future__ import annotations

import json
import hashlib
from pathlib import Path

import numpy as np

from .cnn import CnnModel, Dataset
from .errors import ConfigError, CorruptArtifact, EmptyDataset, MissingInput
from .rng import derive_seed
from .optics import GridSpec, Image8, RealField
from .turbulence import PhaseScreen

MODEL_MAGIC = b"OAMTURB-CNN-1\n"


def save_pgm(path: str | Path, image: Image8) -> None:
    """Binary PGM (P5), maxval 255."""
    h, w = image.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(image.pixels.tobytes())


def load_pgm(path: str | Path) -> Image8:
    path = Path(path)
    if not path.exists():
        raise MissingInput(str(path))
    data = path.read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path} is not a binary PGM")
    # header: magic, width, height, maxval, single whitespace, then pixels
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1
    w, h, maxval = (int(x) for x in fields)
    if maxval != 255:
        raise ValueError(f"{path}: expected maxval 255, got {maxval}")
    pixels = np.frombuffer(data[pos : pos + w * h], dtype=np.uint8).reshape(h, w)
    return Image8(pixels.copy())


def save_field(path: str | Path, values: np.ndarray, dx: float, kind: str) -> None:
    """Raw little-endian array plus a JSON sidecar {n, dx, kind, dtype}.

    Real arrays are stored as float64, complex ones as complex128, and
    the sidecar records which so the loader restores them exactly.
    """
    path = Path(path)
    dtype = "<c16" if np.iscomplexobj(values) else "<f8"
    arr = np.ascontiguousarray(values, dtype=dtype)
    path.write_bytes(arr.tobytes())
    sidecar = {
        "n": int(arr.shape[0]),
        "dx": float(dx),
        "kind": kind,
        "dtype": dtype,
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, sort_keys=True) + "\n"
    )


def load_field(path: str | Path) -> tuple[np.ndarray, float, str]:
    path = Path(path)
    side = path.with_suffix(path.suffix + ".json")
    if not path.exists() or not side.exists():
        raise MissingInput(str(path))
    meta = json.loads(side.read_text())
    n = int(meta["n"])
    dtype = str(meta.get("dtype", "<f8"))
    if dtype not in ("<f8", "<c16"):
        raise CorruptArtifact(f"{side}: unknown dtype {dtype!r}")
    values = np.frombuffer(path.read_bytes(), dtype=dtype).reshape(n, -1).copy()
    return values, float(meta["dx"]), str(meta["kind"])


def save_screen(path: str | Path, screen: PhaseScreen) -> None:
    save_field(path, screen.values, screen.grid.dx, f"phase_{screen.role}")


def load_screen(path: str | Path) -> PhaseScreen:
    values, dx, kind = load_field(path)
    role = kind.removeprefix("phase_")
    return PhaseScreen(GridSpec(values.shape[0], dx), values, role)


def save_intensity(path: str | Path, field: RealField) -> None:
    save_field(path, field.values, field.grid.dx, "intensity")


# model files -----------------------------------------------------------

_WEIGHT_ORDER = ("conv_w", "conv_b", "fc1_w", "fc1_b", "fc2_w", "fc2_b")


def save_model(path: str | Path, model: CnnModel) -> None:
    """Versioned binary: magic, JSON header, float64 LE weights, sha256.

    The trailing digest covers everything before it, so truncation or
    corruption is caught at load time.
    """
    header = {
        "side": model.side,
        "nf": model.nf,
        "n_classes": model.n_classes,
        "label_values": [float(v) for v in model.label_values],
        "weights": [
            {"name": n, "shape": list(getattr(model, n).shape)} for n in _WEIGHT_ORDER
        ],
    }
    blob = MODEL_MAGIC + json.dumps(header, sort_keys=True).encode("ascii") + b"\n"
    for name in _WEIGHT_ORDER:
        blob += np.ascontiguousarray(getattr(model, name), dtype="<f8").tobytes()
    blob += hashlib.sha256(blob).digest()
    Path(path).write_bytes(blob)


def load_model(path: str | Path) -> CnnModel:
    path = Path(path)
    if not path.exists():
        raise MissingInput(str(path))
    blob = path.read_bytes()
    if not blob.startswith(MODEL_MAGIC):
        raise CorruptArtifact(f"{path}: bad magic, not a model file")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptArtifact(f"{path}: checksum mismatch, file corrupted")
    nl = body.index(b"\n", len(MODEL_MAGIC))
    header = json.loads(body[len(MODEL_MAGIC) : nl])
    pos = nl + 1
    weights = {}
    for spec in header["weights"]:
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        arr = np.frombuffer(body[pos : pos + 8 * count], dtype="<f8")
        weights[spec["name"]] = arr.reshape(spec["shape"]).copy()
        pos += 8 * count
    return CnnModel(
        side=int(header["side"]),
        nf=int(header["nf"]),
        label_values=np.asarray(header["label_values"], dtype=np.float64),
        **weights,
    )


# CSV -------------------------------------------------------------------


def format_cell(v: object) -> str:
    """Deterministic cell text: repr for floats (shortest round trip).

    numpy scalars are coerced first; np.float64 subclasses float, so the
    coercion has to come before the plain-float branch or the cell would
    carry numpy's verbose repr.
    """
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path: str | Path, header: list[str], rows: list[tuple]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise MissingInput(str(path))
    lines = path.read_text().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:] if ln]


def save_image(path: str | Path, image: Image8) -> None:
    """Write a PGM or, when the suffix is .png and pillow is present, a PNG."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        try:
            from PIL import Image as _PilImage
        except ImportError as exc:
            raise ConfigError(
                "png output needs the pillow extra (pip install oamturb[png])"
            ) from exc
        _PilImage.fromarray(image.pixels, mode="L").save(path)
        return
    save_pgm(path, image)


DATASET_MANIFEST = "manifest.csv"
_MANIFEST_COLUMNS = ["image_file", "label_index", "cn2", "screen_seed", "ell"]


def save_dataset(out_dir: str | Path, data: Dataset) -> None:
    """One PGM per image plus a manifest listing file, label, and seeds.

    The per-image screen seed in the manifest is the one generate_dataset
    derives from (base_seed, label index, image index), recomputed here so
    downstream tools can regenerate any single screen.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    counters: dict[int, int] = {}
    for pos in range(len(data)):
        label = int(data.labels[pos])
        j = counters.get(label, 0)
        counters[label] = j + 1
        name = f"img_{label:02d}_{j:04d}.pgm"
        save_pgm(out_dir / name, Image8(data.images[pos]))
        rows.append((
            name, label, float(data.label_values[label]),
            derive_seed(data.base_seed, label, j), data.ell,
        ))
    write_csv(out_dir / DATASET_MANIFEST, list(_MANIFEST_COLUMNS), rows)


def load_dataset(in_dir: str | Path) -> Dataset:
    in_dir = Path(in_dir)
    manifest = in_dir / DATASET_MANIFEST
    if not manifest.exists():
        raise MissingInput(str(manifest))
    header, rows = read_csv(manifest)
    if header != _MANIFEST_COLUMNS:
        raise CorruptArtifact(f"{manifest}: unexpected columns {header}")
    if not rows:
        raise EmptyDataset(f"{manifest} lists no images")
    images = []
    labels = []
    by_label: dict[int, float] = {}
    ells = set()
    for name, label, cn2, _seed, ell in rows:
        images.append(load_pgm(in_dir / name).pixels)
        labels.append(int(label))
        by_label[int(label)] = float(cn2)
        ells.add(int(ell))
    if len(ells) != 1:
        raise CorruptArtifact(f"{manifest}: mixed OAM indices {sorted(ells)}")
    label_values = np.array([by_label[i] for i in sorted(by_label)])
    if sorted(by_label) != list(range(len(by_label))):
        raise EmptyDataset(f"{manifest}: label indices must cover 0..K-1")
    return Dataset(
        np.stack(images), np.array(labels, dtype=np.int64),
        label_values, ells.pop(), 0,
    )
