"""Zig-zag linearization of patches and LZW phrase dictionaries.

A patch becomes one symbol string (mean over bands) or one string per
band.  Values are quantized per string by uniform min-max scaling into
at most 256 levels so a string is just ``bytes``.  The dictionary of a
string is the set of unique phrases an LZW pass records, plus the
distinct single symbols of the string itself.
"""

from __future__ import annotations

import numpy as np

from .cube import Patch

MODES = ("averaged-band", "band-by-band")


def zigzag_flatten(plane: np.ndarray) -> np.ndarray:
    """Boustrophedon scan: odd rows are reversed before flattening."""
    out = plane.copy()
    out[1::2] = out[1::2, ::-1]
    return out.reshape(-1)


def quantize(values: np.ndarray, levels: int) -> bytes:
    """Uniform min-max quantization of a 1-d array to ``levels`` symbols.

    A constant input maps to symbol 0 everywhere.
    """
    if not 2 <= levels <= 256:
        raise ValueError("levels must be in [2, 256]")
    v = np.asarray(values, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if hi <= lo:
        return bytes(len(v))
    symbols = np.floor((v - lo) / (hi - lo) * levels).astype(np.int64)
    return np.clip(symbols, 0, levels - 1).astype(np.uint8).tobytes()


def linearize(patch: Patch, mode: str, levels: int = 256):
    """Turn a patch into one symbol string or one string per band."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    data = patch.cube.data
    if mode == "averaged-band":
        return quantize(zigzag_flatten(data.mean(axis=2)), levels)
    return [
        quantize(zigzag_flatten(data[:, :, b]), levels)
        for b in range(patch.cube.bands)
    ]


def lzw_dictionary(s: bytes) -> frozenset[bytes]:
    """Phrase dictionary of an LZW pass over ``s``.

    Maintains the current phrase ``w``; each symbol ``c`` either extends
    ``w`` when ``w+c`` is already recorded or records ``w+c`` and
    restarts from ``c``.  The result is the set of recorded phrases
    together with every distinct single symbol of ``s``; the empty
    string has an empty dictionary.
    """
    if not s:
        return frozenset()
    recorded: set[bytes] = set()
    w = s[0:1]
    for i in range(1, len(s)):
        wc = w + s[i:i + 1]
        if wc in recorded:
            w = wc
        else:
            recorded.add(wc)
            w = s[i:i + 1]
    singles = {bytes([b]) for b in set(s)}
    return frozenset(singles | recorded)
