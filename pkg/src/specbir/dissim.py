"""The four hyperspectral dissimilarity functions.

Two operate on unmixing characterizations: the spectral dissimilarity
combines the row and column minima of the angular spectral distance
matrix, and the spectral-spatial dissimilarity weights every matrix
entry by a significance obtained from a greedy most-similar
highest-priority matching of the normalized average abundances.  The
other two are normalized dictionary distances over LZW phrase
dictionaries, either of the band-averaged string or averaged across
per-band strings.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import MassMismatchError, MissingFeatureError, UndefinedDistanceError
from .features import PatchFeatures
from .lzw import lzw_dictionary
from .unmixing import EndmemberSet, UnmixingChar

KINDS = ("spectral", "spectral-spatial", "ndd-avg", "ndd-byband")


def angular_distance(a, b) -> float:
    """Angle in radians between two spectra.

    Evaluated as ``2 * atan2(|u - v|, |u + v|)`` on the normalized
    vectors, which equals the arccosine of the (clamped) cosine
    similarity but stays accurate near 0 and pi; identical vectors give
    exactly 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("angular distance undefined for a zero vector")
    u, v = a / na, b / nb
    return float(2.0 * np.arctan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))


def sdm(e_a: EndmemberSet, e_b: EndmemberSet) -> np.ndarray:
    """Pairwise angular distances between two endmember sets (m_a x m_b)."""
    A, B = e_a.vectors, e_b.vectors
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    if (na == 0).any() or (nb == 0).any():
        raise ValueError("angular distance undefined for a zero vector")
    U = A / na[:, None]
    V = B / nb[:, None]
    diff = np.linalg.norm(U[:, None, :] - V[None, :, :], axis=2)
    summ = np.linalg.norm(U[:, None, :] + V[None, :, :], axis=2)
    return 2.0 * np.arctan2(diff, summ)


def spectral_dissim(e_a: EndmemberSet, e_b: EndmemberSet) -> float:
    """Norm of the row minima plus norm of the column minima of the SDM."""
    D = sdm(e_a, e_b)
    return float(np.linalg.norm(D.min(axis=1)) + np.linalg.norm(D.min(axis=0)))


def mshp_significance(D: np.ndarray, s_a, s_b, mass_tol: float = 1e-6) -> np.ndarray:
    """Greedy transport of abundance mass onto the cheapest distance cells.

    Repeatedly takes the unexhausted cell with the smallest distance
    (ties broken by smallest row, then column), moves as much of the
    remaining row/column mass as possible, and stops when all mass is
    placed.  Row sums equal ``s_a`` and column sums equal ``s_b``.
    """
    D = np.asarray(D, dtype=np.float64)
    ra = np.asarray(s_a, dtype=np.float64).copy()
    rb = np.asarray(s_b, dtype=np.float64).copy()
    if D.shape != (ra.size, rb.size):
        raise ValueError("distance matrix shape must match the two marginals")
    if (ra < 0).any() or (rb < 0).any():
        raise ValueError("marginals must be nonnegative")
    if abs(ra.sum() - rb.sum()) > mass_tol:
        raise MassMismatchError(
            f"marginal masses differ: {ra.sum()!r} vs {rb.sum()!r}"
        )
    rows, cols = np.unravel_index(np.arange(D.size), D.shape)
    order = np.lexsort((cols, rows, D.ravel()))
    R = np.zeros_like(D)
    for flat in order:
        i, j = int(rows[flat]), int(cols[flat])
        move = min(ra[i], rb[j])
        if move <= 0.0:
            continue
        R[i, j] = move
        ra[i] -= move
        rb[j] -= move
    return R


def spectral_spatial_dissim(a: UnmixingChar, b: UnmixingChar) -> float:
    """Significance-weighted sum of the angular spectral distances."""
    D = sdm(a.endmembers, b.endmembers)
    R = mshp_significance(D, a.avg_abundance, b.avg_abundance)
    return float((R * D).sum())


def ndd(dict_x: frozenset, dict_y: frozenset) -> float:
    """Normalized dictionary distance between two phrase sets.

    ``(|Dx U Dy| - min(|Dx|, |Dy|)) / max(|Dx|, |Dy|)``; lies in [0, 1],
    zero only when the dictionaries coincide.
    """
    nx, ny = len(dict_x), len(dict_y)
    if nx == 0 and ny == 0:
        raise UndefinedDistanceError("both dictionaries are empty")
    union = len(dict_x | dict_y)
    return (union - min(nx, ny)) / max(nx, ny)


def ndd_concat(x: bytes, y: bytes) -> float:
    """Concatenation variant: the joint dictionary is parsed from ``x+y``."""
    dict_x, dict_y = lzw_dictionary(x), lzw_dictionary(y)
    nx, ny = len(dict_x), len(dict_y)
    if nx == 0 and ny == 0:
        raise UndefinedDistanceError("both signals are empty")
    joint = len(lzw_dictionary(x + y))
    return (joint - min(nx, ny)) / max(nx, ny)


def patch_dissim(a: PatchFeatures, b: PatchFeatures, kind: str,
                 ndd_variant: str = "union") -> float:
    """Dispatch one of the four dissimilarities over two feature bundles."""
    if kind not in KINDS:
        raise ValueError(f"unknown dissimilarity kind {kind!r}")
    if ndd_variant not in ("union", "concat"):
        raise ValueError("ndd_variant must be 'union' or 'concat'")
    if kind == "spectral":
        if a.char is None or b.char is None:
            raise MissingFeatureError("spectral dissimilarity needs unmixing features")
        return spectral_dissim(a.char.endmembers, b.char.endmembers)
    if kind == "spectral-spatial":
        if a.char is None or b.char is None:
            raise MissingFeatureError("spectral-spatial dissimilarity needs unmixing features")
        return spectral_spatial_dissim(a.char, b.char)
    if kind == "ndd-avg":
        if a.avg_string is None or b.avg_string is None:
            raise MissingFeatureError("ndd-avg needs the averaged-band string")
        if ndd_variant == "concat":
            return ndd_concat(a.avg_string, b.avg_string)
        return ndd(a.avg_dictionary, b.avg_dictionary)
    if a.band_strings is None or b.band_strings is None:
        raise MissingFeatureError("ndd-byband needs per-band strings")
    if len(a.band_strings) != len(b.band_strings):
        raise ValueError("patches have different band counts")
    if ndd_variant == "concat":
        values = [ndd_concat(x, y) for x, y in zip(a.band_strings, b.band_strings)]
    else:
        values = [
            ndd(dx, dy)
            for dx, dy in zip(a.band_dictionaries, b.band_dictionaries)
        ]
    return float(np.mean(values))


# MSHP tie-breaking is order-sensitive, so the spectral-spatial value is
# computed for both argument orders; the other kinds are exactly symmetric.
_SYMMETRIC_KINDS = ("spectral", "ndd-avg", "ndd-byband")


def pairwise_matrix(features: list[PatchFeatures], kind: str,
                    ndd_variant: str = "union") -> np.ndarray:
    """N x N matrix of ``patch_dissim`` values over a feature list."""
    n = len(features)
    M = np.zeros((n, n))
    symmetric = kind in _SYMMETRIC_KINDS
    for i in range(n):
        for j in range(i + 1, n):
            M[i, j] = patch_dissim(features[i], features[j], kind, ndd_variant)
            if symmetric:
                M[j, i] = M[i, j]
            else:
                M[j, i] = patch_dissim(features[j], features[i], kind, ndd_variant)
    return M


def save_matrix_csv(path, patch_ids, matrix: np.ndarray) -> None:
    """Persist a dissimilarity matrix with a header row of patch ids."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [str(i) for i in patch_ids])
        for pid, row in zip(patch_ids, matrix):
            writer.writerow([str(pid)] + [repr(float(v)) for v in row])


def load_matrix_csv(path) -> tuple[list[int], np.ndarray]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        ids = [int(x) for x in header[1:]]
        rows = []
        for row in reader:
            if not row:
                continue
            rows.append([float(x) for x in row[1:]])
    matrix = np.asarray(rows, dtype=np.float64)
    if matrix.shape != (len(ids), len(ids)):
        raise ValueError(f"matrix in {path} is not square over its id header")
    return ids, matrix
