"""Hyperspectral cubes, patches and their on-disk formats.

A cube is stored as a raw little-endian float file in band-sequential
order next to a plain-text ``.hdr`` sidecar declaring ``lines``,
``samples``, ``bands``, ``interleave`` and ``dtype``.  A corpus is a
directory of equally-sized patch cubes plus a ``labels.csv`` mapping
patch ids to category ids.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    EmptyCorpusError,
    HeaderError,
    NonFiniteDataError,
    SizeMismatchError,
)

_DTYPES = {"float32": "<f4", "float64": "<f8"}


@dataclass
class HyperCube:
    """Raster of reflectance pixels, each a ``bands``-long vector.

    ``data`` has shape ``(lines, samples, bands)`` and must be finite.
    """

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 3:
            raise ValueError("cube data must be (lines, samples, bands)")
        if self.data.shape[2] < 1:
            raise ValueError("cube needs at least one band")
        if not np.isfinite(self.data).all():
            raise NonFiniteDataError("cube contains non-finite values")

    @property
    def lines(self) -> int:
        return self.data.shape[0]

    @property
    def samples(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]

    def pixels(self) -> np.ndarray:
        """Pixels flattened row-major to shape ``(lines*samples, bands)``."""
        return self.data.reshape(-1, self.bands)


@dataclass
class Patch:
    """One retrievable object: a fixed-size cube with a corpus id."""

    id: int
    cube: HyperCube
    category: int | None = None


@dataclass
class CorpusLabels:
    """Category id per patch id, plus optional category names."""

    by_patch: dict[int, int]
    names: dict[int, str] = field(default_factory=dict)

    def category_of(self, patch_id: int) -> int:
        return self.by_patch[patch_id]

    def members(self, category: int) -> list[int]:
        return sorted(pid for pid, c in self.by_patch.items() if c == category)

    def categories(self) -> list[int]:
        return sorted(set(self.by_patch.values()))


def _header_path(raw_path: Path) -> Path:
    return raw_path.with_suffix(".hdr")


def write_cube(cube: HyperCube, path) -> None:
    """Write ``path`` (raw, band-sequential) and its ``.hdr`` sidecar."""
    path = Path(path)
    dtype = "float64" if cube.data.dtype == np.float64 else "float32"
    header = (
        f"lines: {cube.lines}\n"
        f"samples: {cube.samples}\n"
        f"bands: {cube.bands}\n"
        "interleave: bsq\n"
        f"dtype: {dtype}\n"
    )
    _header_path(path).write_text(header)
    bsq = np.ascontiguousarray(np.transpose(cube.data, (2, 0, 1)))
    bsq.astype(_DTYPES[dtype]).tofile(path)


def _parse_header(path: Path) -> dict:
    fields = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise HeaderError(f"malformed header line in {path}: {line!r}")
        key, value = line.split(":", 1)
        fields[key.strip()] = value.strip()
    for key in ("lines", "samples", "bands", "interleave", "dtype"):
        if key not in fields:
            raise HeaderError(f"header {path} missing field {key!r}")
    return fields


def load_cube(path) -> HyperCube:
    """Load a raw band-sequential cube described by its ``.hdr`` sidecar."""
    path = Path(path)
    header_path = _header_path(path)
    if not header_path.exists():
        raise HeaderError(f"missing header sidecar {header_path}")
    header = _parse_header(header_path)
    try:
        lines = int(header["lines"])
        samples = int(header["samples"])
        bands = int(header["bands"])
    except ValueError as exc:
        raise HeaderError(f"non-integer dimension in {header_path}") from exc
    if header["interleave"] != "bsq":
        raise HeaderError(f"unsupported interleave {header['interleave']!r}")
    if header["dtype"] not in _DTYPES:
        raise HeaderError(f"unsupported dtype {header['dtype']!r}")
    dtype = np.dtype(_DTYPES[header["dtype"]])
    if not path.exists():
        raise HeaderError(f"missing raw cube file {path}")
    expected = lines * samples * bands * dtype.itemsize
    actual = path.stat().st_size
    if actual != expected:
        raise SizeMismatchError(
            f"{path}: header implies {expected} bytes, file has {actual}"
        )
    flat = np.fromfile(path, dtype=dtype)
    data = np.transpose(flat.reshape(bands, lines, samples), (1, 2, 0))
    if not np.isfinite(data).all():
        raise NonFiniteDataError(f"{path} contains non-finite values")
    return HyperCube(data)


def tile(cube: HyperCube, side: int) -> list[Patch]:
    """Cut ``cube`` into non-overlapping ``side``x``side`` patches.

    Tiles are emitted row-major with ids 1..N; partial tiles at the right
    and bottom margins are discarded so all patches share one shape.
    """
    if side < 1:
        raise ValueError("side must be >= 1")
    n_rows = cube.lines // side
    n_cols = cube.samples // side
    if n_rows == 0 or n_cols == 0:
        raise EmptyCorpusError(
            f"side {side} larger than cube {cube.lines}x{cube.samples}"
        )
    patches = []
    pid = 1
    for r in range(n_rows):
        for c in range(n_cols):
            block = cube.data[r * side:(r + 1) * side, c * side:(c + 1) * side, :]
            patches.append(Patch(pid, HyperCube(block.copy())))
            pid += 1
    return patches


def render_rgb(patch: Patch, band_triplet) -> bytes:
    """Render a false-colour PNG from three bands of a patch.

    Each channel is min-max stretched to [0, 255]; a constant channel
    maps to 0.
    """
    bands = patch.cube.bands
    triplet = tuple(int(b) for b in band_triplet)
    if len(triplet) != 3:
        raise ValueError("band_triplet must have exactly three entries")
    for b in triplet:
        if not 0 <= b < bands:
            raise ValueError(f"band index {b} out of range (bands={bands})")
    channels = []
    for b in triplet:
        plane = patch.cube.data[:, :, b].astype(np.float64)
        lo, hi = plane.min(), plane.max()
        if hi > lo:
            scaled = (plane - lo) / (hi - lo) * 255.0
        else:
            scaled = np.zeros_like(plane)
        channels.append(np.clip(np.round(scaled), 0, 255).astype(np.uint8))
    rgb = np.stack(channels, axis=-1)
    buf = io.BytesIO()
    Image.fromarray(rgb, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def write_labels(labels: CorpusLabels, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["patch_id", "category"])
        for pid in sorted(labels.by_patch):
            writer.writerow([pid, labels.by_patch[pid]])


def read_labels(path) -> CorpusLabels:
    path = Path(path)
    by_patch = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["patch_id", "category"]:
            raise HeaderError(f"unexpected labels header in {path}: {header}")
        for row in reader:
            if not row:
                continue
            pid, cat = int(row[0]), int(row[1])
            if pid in by_patch:
                raise ValueError(f"duplicate patch id {pid} in {path}")
            by_patch[pid] = cat
    return CorpusLabels(by_patch)


def save_corpus(directory, patches: list[Patch], labels: CorpusLabels | None = None) -> None:
    """Write a corpus directory: one cube per patch plus labels."""
    directory = Path(directory)
    (directory / "patches").mkdir(parents=True, exist_ok=True)
    first = patches[0].cube
    meta = (
        f"patches: {len(patches)}\n"
        f"lines: {first.lines}\n"
        f"samples: {first.samples}\n"
        f"bands: {first.bands}\n"
    )
    (directory / "corpus.txt").write_text(meta)
    for patch in patches:
        write_cube(patch.cube, directory / "patches" / f"p{patch.id:05d}.raw")
    if labels is not None:
        write_labels(labels, directory / "labels.csv")


def load_corpus(directory) -> tuple[list[Patch], CorpusLabels | None]:
    """Load a corpus directory written by :func:`save_corpus`."""
    directory = Path(directory)
    meta_path = directory / "corpus.txt"
    if not meta_path.exists():
        raise HeaderError(f"not a corpus directory (no corpus.txt): {directory}")
    raw_files = sorted((directory / "patches").glob("p*.raw"))
    if not raw_files:
        raise EmptyCorpusError(f"no patch cubes under {directory}")
    labels = None
    labels_path = directory / "labels.csv"
    if labels_path.exists():
        labels = read_labels(labels_path)
    patches = []
    for raw in raw_files:
        pid = int(raw.stem[1:])
        category = labels.by_patch.get(pid) if labels else None
        patches.append(Patch(pid, load_cube(raw), category))
    return patches, labels
