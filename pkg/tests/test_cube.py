"""Cube io, tiling, thumbnails and the synthetic corpus generator."""

import numpy as np
import pytest

from specbir.cube import (
    CorpusLabels,
    HyperCube,
    Patch,
    load_corpus,
    load_cube,
    read_labels,
    render_rgb,
    save_corpus,
    tile,
    write_cube,
    write_labels,
)
from specbir.errors import (
    EmptyCorpusError,
    HeaderError,
    NonFiniteDataError,
    SizeMismatchError,
)
from specbir.synth import category_endmembers, synth_corpus
from specbir.unmixing import nnls


def test_identity_read_back(tmp_path):
    data = np.arange(4, dtype=np.float32).reshape(2, 2, 1)
    path = tmp_path / "tiny.raw"
    write_cube(HyperCube(data), path)
    cube = load_cube(path)
    assert cube.lines == 2 and cube.samples == 2 and cube.bands == 1
    np.testing.assert_array_equal(cube.data, data)


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    for dtype in (np.float32, np.float64):
        data = rng.random((5, 4, 3)).astype(dtype)
        path = tmp_path / f"cube_{np.dtype(dtype).name}.raw"
        write_cube(HyperCube(data), path)
        loaded = load_cube(path)
        assert loaded.data.dtype == dtype
        assert loaded.data.tobytes() == data.tobytes()


def test_size_mismatch_error(tmp_path):
    path = tmp_path / "bad.raw"
    (tmp_path / "bad.hdr").write_text(
        "lines: 2\nsamples: 2\nbands: 3\ninterleave: bsq\ndtype: float32\n"
    )
    np.zeros(8, dtype="<f4").tofile(path)  # header implies 12 values
    with pytest.raises(SizeMismatchError):
        load_cube(path)


def test_missing_header_error(tmp_path):
    path = tmp_path / "orphan.raw"
    np.zeros(4, dtype="<f4").tofile(path)
    with pytest.raises(HeaderError):
        load_cube(path)


def test_non_finite_error(tmp_path):
    path = tmp_path / "nan.raw"
    (tmp_path / "nan.hdr").write_text(
        "lines: 1\nsamples: 2\nbands: 1\ninterleave: bsq\ndtype: float32\n"
    )
    np.array([1.0, np.nan], dtype="<f4").tofile(path)
    with pytest.raises(NonFiniteDataError):
        load_cube(path)


def test_tile_counts_follow_floor_formula():
    cube = HyperCube(np.zeros((2878, 512, 1), dtype=np.float32))
    patches = tile(cube, 64)
    assert len(patches) == (2878 // 64) * (512 // 64) == 352
    assert [p.id for p in patches[:3]] == [1, 2, 3]


def test_tile_exact_fit_returns_input():
    data = np.random.default_rng(0).random((64, 64, 2))
    patches = tile(HyperCube(data), 64)
    assert len(patches) == 1
    np.testing.assert_array_equal(patches[0].cube.data, data)


def test_tile_too_small_raises():
    with pytest.raises(EmptyCorpusError):
        tile(HyperCube(np.zeros((63, 64, 1))), 64)


def test_tile_reassembly_reproduces_cube_values():
    rng = np.random.default_rng(5)
    data = rng.random((10, 7, 2))
    cube = HyperCube(data)
    patches = tile(cube, 3)
    n_cols = 7 // 3
    rebuilt = np.zeros((9, 6, 2))
    for patch in patches:
        r, c = divmod(patch.id - 1, n_cols)
        rebuilt[r * 3:(r + 1) * 3, c * 3:(c + 1) * 3, :] = patch.cube.data
    np.testing.assert_array_equal(rebuilt, data[:9, :6, :])


def test_render_rgb_constant_patch_maps_to_zero():
    patch = Patch(1, HyperCube(np.full((4, 4, 3), 2.5)))
    png = render_rgb(patch, (0, 1, 2))
    from PIL import Image
    import io
    img = np.asarray(Image.open(io.BytesIO(png)))
    assert img.shape == (4, 4, 3)
    assert (img == 0).all()


def test_render_rgb_repeated_band_is_grayscale_and_deterministic():
    rng = np.random.default_rng(1)
    patch = Patch(1, HyperCube(rng.random((6, 6, 4))))
    png1 = render_rgb(patch, (2, 2, 2))
    png2 = render_rgb(patch, (2, 2, 2))
    assert png1 == png2
    from PIL import Image
    import io
    img = np.asarray(Image.open(io.BytesIO(png1)))
    assert (img[:, :, 0] == img[:, :, 1]).all()
    assert (img[:, :, 0] == img[:, :, 2]).all()


def test_render_rgb_band_out_of_range():
    patch = Patch(1, HyperCube(np.zeros((2, 2, 2))))
    with pytest.raises(ValueError):
        render_rgb(patch, (0, 1, 2))


def test_synth_corpus_deterministic():
    a_patches, a_labels = synth_corpus(3, [4, 4, 4], side=8, bands=6,
                                       noise_sigma=0.05, seed=42)
    b_patches, b_labels = synth_corpus(3, [4, 4, 4], side=8, bands=6,
                                       noise_sigma=0.05, seed=42)
    assert a_labels.by_patch == b_labels.by_patch
    for pa, pb in zip(a_patches, b_patches):
        np.testing.assert_array_equal(pa.cube.data, pb.cube.data)


def test_synth_corpus_partition_and_sizes():
    patches, labels = synth_corpus(3, [40, 40, 40], side=4, bands=5,
                                   noise_sigma=0.1, seed=0)
    assert len(patches) == 120
    assert sorted(labels.by_patch) == list(range(1, 121))
    assert [len(labels.members(c)) for c in labels.categories()] == [40, 40, 40]


def test_synth_noiseless_pixels_lie_in_category_simplex():
    patches, labels = synth_corpus(2, [2, 2], side=6, bands=8,
                                   noise_sigma=0.0, seed=9)
    signatures = category_endmembers(2, bands=8, seed=9)
    for patch in patches:
        E = signatures[patch.category - 1]
        for pixel in patch.cube.pixels():
            a = nnls(E.T, pixel)
            assert np.linalg.norm(E.T @ a - pixel) < 1e-9
            assert (a >= 0).all()
            assert abs(a.sum() - 1.0) < 1e-6


def test_labels_round_trip(tmp_path):
    labels = CorpusLabels({1: 1, 2: 2, 3: 1})
    path = tmp_path / "labels.csv"
    write_labels(labels, path)
    loaded = read_labels(path)
    assert loaded.by_patch == labels.by_patch


def test_corpus_round_trip(tmp_path):
    patches, labels = synth_corpus(2, [2, 3], side=4, bands=3,
                                   noise_sigma=0.02, seed=21)
    save_corpus(tmp_path / "corpus", patches, labels)
    loaded_patches, loaded_labels = load_corpus(tmp_path / "corpus")
    assert loaded_labels.by_patch == labels.by_patch
    assert len(loaded_patches) == len(patches)
    for orig, loaded in zip(patches, loaded_patches):
        assert loaded.id == orig.id
        np.testing.assert_array_equal(loaded.cube.data, orig.cube.data)
        assert loaded.category == orig.category
