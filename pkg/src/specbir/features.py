"""Per-patch feature bundles and their on-disk cache.

A bundle couples the unmixing characterization with the linearized
symbol strings (averaged-band and band-by-band); phrase dictionaries
are derived lazily from the strings.  Bundles are cached one flat
binary record per patch, keyed by (patch id, endmember count, seed), so
feature extraction can run offline and resume after interruption.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cube import Patch
from .lzw import linearize, lzw_dictionary
from .unmixing import EndmemberSet, UnmixingChar, characterize


@dataclass
class PatchFeatures:
    """Everything the dissimilarity functions need about one patch."""

    patch_id: int
    char: UnmixingChar | None = None
    avg_string: bytes | None = None
    band_strings: tuple[bytes, ...] | None = None
    _avg_dict: frozenset | None = field(default=None, repr=False)
    _band_dicts: tuple[frozenset, ...] | None = field(default=None, repr=False)

    @property
    def avg_dictionary(self) -> frozenset:
        if self._avg_dict is None:
            self._avg_dict = lzw_dictionary(self.avg_string)
        return self._avg_dict

    @property
    def band_dictionaries(self) -> tuple[frozenset, ...]:
        if self._band_dicts is None:
            self._band_dicts = tuple(lzw_dictionary(s) for s in self.band_strings)
        return self._band_dicts


def featurize_patch(
    patch: Patch,
    m: int = 5,
    runs: int = 20,
    seed: int = 0,
    levels: int = 256,
    subspace: str = "auto",
) -> PatchFeatures:
    """Extract the full feature bundle for one patch.

    The per-patch unmixing seed is offset by the patch id so every patch
    draws its own deterministic stream.
    """
    pixels = patch.cube.pixels()
    char = characterize(pixels, m, runs=runs, seed=seed + patch.id * runs,
                        subspace=subspace)
    return PatchFeatures(
        patch_id=patch.id,
        char=char,
        avg_string=linearize(patch, "averaged-band", levels),
        band_strings=tuple(linearize(patch, "band-by-band", levels)),
    )


def cache_key(patch_id: int, m: int, seed: int) -> str:
    return f"f{patch_id:05d}_m{m}_s{seed}.npz"


def save_features(features: PatchFeatures, directory, m: int, seed: int) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / cache_key(features.patch_id, m, seed)
    char = features.char
    band_lengths = np.asarray([len(s) for s in features.band_strings], dtype=np.int64)
    band_blob = np.frombuffer(b"".join(features.band_strings), dtype=np.uint8)
    np.savez(
        path,
        patch_id=np.int64(features.patch_id),
        endmembers=char.endmembers.vectors,
        endmember_indices=np.asarray(char.endmembers.indices, dtype=np.int64),
        abundances=char.abundances,
        avg_abundance=char.avg_abundance,
        epsilon=np.float64(char.epsilon),
        run_errors=np.asarray(char.run_errors, dtype=np.float64),
        avg_string=np.frombuffer(features.avg_string, dtype=np.uint8),
        band_lengths=band_lengths,
        band_strings=band_blob,
    )
    return path


def load_features(path) -> PatchFeatures:
    with np.load(path) as record:
        char = UnmixingChar(
            endmembers=EndmemberSet(
                record["endmembers"],
                tuple(int(i) for i in record["endmember_indices"]),
            ),
            abundances=record["abundances"],
            avg_abundance=record["avg_abundance"],
            epsilon=float(record["epsilon"]),
            run_errors=tuple(float(e) for e in record["run_errors"]),
        )
        blob = record["band_strings"].tobytes()
        strings = []
        offset = 0
        for length in record["band_lengths"]:
            strings.append(blob[offset:offset + int(length)])
            offset += int(length)
        return PatchFeatures(
            patch_id=int(record["patch_id"]),
            char=char,
            avg_string=record["avg_string"].tobytes(),
            band_strings=tuple(strings),
        )


def featurize_corpus(
    patches: list[Patch],
    cache_dir=None,
    m: int = 5,
    runs: int = 20,
    seed: int = 0,
    levels: int = 256,
    subspace: str = "auto",
    workers: int = 1,
) -> list[PatchFeatures]:
    """Featurize a corpus, reusing and extending the cache when given one."""
    if cache_dir is not None:
        cache_dir = Path(cache_dir)

    cached: dict[int, PatchFeatures] = {}
    missing = []
    for patch in patches:
        record = None
        if cache_dir is not None:
            record = cache_dir / cache_key(patch.id, m, seed)
        if record is not None and record.exists():
            cached[patch.id] = load_features(record)
        else:
            missing.append(patch)

    if missing and workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            fresh = pool.map(
                _featurize_for_pool,
                [(p, m, runs, seed, levels, subspace) for p in missing],
            )
            for features in fresh:
                cached[features.patch_id] = features
                if cache_dir is not None:
                    save_features(features, cache_dir, m, seed)
    else:
        for patch in missing:
            features = featurize_patch(patch, m=m, runs=runs, seed=seed,
                                       levels=levels, subspace=subspace)
            cached[patch.id] = features
            if cache_dir is not None:
                save_features(features, cache_dir, m, seed)
    return [cached[p.id] for p in patches]


def _featurize_for_pool(args):
    patch, m, runs, seed, levels, subspace = args
    return featurize_patch(patch, m=m, runs=runs, seed=seed, levels=levels,
                           subspace=subspace)
