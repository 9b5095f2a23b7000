"""Synthetic labelled corpora for desk-scale experiments.

Each category owns a handful of random nonnegative endmember
signatures; patches are convex per-pixel combinations of their
category's endmembers (spatially smooth abundance fields) plus optional
zero-mean noise clipped at zero.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter

from .cube import CorpusLabels, HyperCube, Patch


def _smooth_signatures(rng: np.random.Generator, count: int, bands: int) -> np.ndarray:
    """Random nonnegative, band-smooth spectra with distinct shapes."""
    raw = rng.random((count, bands))
    for _ in range(2):
        raw = uniform_filter(raw, size=(1, max(3, bands // 8)), mode="nearest")
    peaks = rng.uniform(0.4, 1.0, size=(count, 1))
    raw = raw / raw.max(axis=1, keepdims=True) * peaks
    return raw + 0.02


# Spatial texture differs per category (field roughness and material
# dominance cycle through these settings), mirroring how land-cover
# classes differ in spatial structure as well as in spectra.  Each entry
# is (smoothing kernel, smoothing passes, dominance exponent).
_TEXTURES = ((1, 0, 2.0), (5, 2, 3.0), (9, 3, 4.0))


def _abundance_fields(rng: np.random.Generator, m: int, side: int,
                      texture: int) -> np.ndarray:
    """Spatially smooth nonnegative abundance maps summing to 1 per pixel."""
    kernel, passes, power = _TEXTURES[texture % len(_TEXTURES)]
    fields = np.abs(rng.standard_normal((m, side, side)))
    for _ in range(passes):
        fields = uniform_filter(fields, size=(1, kernel, kernel), mode="wrap")
    fields = fields ** power + 0.05
    fields /= fields.sum(axis=0, keepdims=True)
    return fields.reshape(m, side * side).T


def _draw_signatures(rng: np.random.Generator, n_categories: int,
                     bands: int) -> list[np.ndarray]:
    return [
        _smooth_signatures(rng, int(rng.integers(3, 6)), bands)
        for _ in range(n_categories)
    ]


def category_endmembers(n_categories: int, bands: int, seed: int) -> list[np.ndarray]:
    """The per-category signatures ``synth_corpus`` uses for the same seed."""
    return _draw_signatures(np.random.default_rng(seed), n_categories, bands)


def synth_corpus(
    n_categories: int,
    patches_per_category,
    side: int,
    bands: int,
    noise_sigma: float,
    seed: int,
) -> tuple[list[Patch], CorpusLabels]:
    """Generate a labelled corpus; deterministic for a fixed seed."""
    if n_categories < 2:
        raise ValueError("need at least two categories")
    counts = [int(c) for c in patches_per_category]
    if len(counts) != n_categories:
        raise ValueError("patches_per_category must list one count per category")
    if any(c < 1 for c in counts):
        raise ValueError("every category needs at least one patch")
    if side < 1 or bands < 1:
        raise ValueError("side and bands must be >= 1")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")

    rng = np.random.default_rng(seed)
    signatures = _draw_signatures(rng, n_categories, bands)

    patches = []
    by_patch = {}
    names = {}
    pid = 1
    for cat_index, count in enumerate(counts):
        category = cat_index + 1
        names[category] = f"category-{category}"
        endmembers = signatures[cat_index]
        m_cat = endmembers.shape[0]
        for _ in range(count):
            # Each patch mixes a 3-signature subset of its category's
            # materials, so categories have internal diversity that a
            # handful of examples cannot cover.
            subset = np.sort(rng.permutation(m_cat)[:3])
            abundances = _abundance_fields(rng, len(subset), side,
                                           texture=cat_index)
            pixels = abundances @ endmembers[subset]
            if noise_sigma > 0:
                pixels = pixels + rng.normal(0.0, noise_sigma, size=pixels.shape)
                pixels = np.clip(pixels, 0.0, None)
            cube = HyperCube(pixels.reshape(side, side, bands))
            patches.append(Patch(pid, cube, category))
            by_patch[pid] = category
            pid += 1
    return patches, CorpusLabels(by_patch, names)
