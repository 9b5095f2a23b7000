"""Endmember induction and abundance estimation.

Endmembers are induced with vertex component analysis: the data is
projected to a low-dimensional subspace (an SNR estimate picks between a
projective projection and a mean-removed PCA lifting) and simplex
vertices are hunted iteratively along random directions orthogonal to
the span of the endmembers found so far.  Abundances come from
nonnegativity-constrained least squares solved by the active-set
method.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError


@dataclass
class EndmemberSet:
    """Induced endmember signatures, rows of ``vectors`` (m x q)."""

    vectors: np.ndarray
    indices: tuple[int, ...] = ()

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=np.float64))
        if self.vectors.size == 0:
            raise ValueError("endmember set must be nonempty")

    @property
    def count(self) -> int:
        return self.vectors.shape[0]


@dataclass
class UnmixingChar:
    """Spectral-spatial characterization of one patch.

    ``abundances`` holds one row per pixel; ``avg_abundance`` is the
    pixel-mean abundance normalized to sum to one.  ``run_errors`` logs
    the reconstruction error of every stochastic run so the kept run can
    be audited.
    """

    endmembers: EndmemberSet
    abundances: np.ndarray
    avg_abundance: np.ndarray
    epsilon: float
    run_errors: tuple[float, ...] = ()


def _estimate_snr_db(Y: np.ndarray, mean: np.ndarray, projected: np.ndarray) -> float:
    """SNR estimate used to pick the projection branch.

    ``Y`` is q x M (original), ``projected`` is the top-m PCA projection
    of the mean-removed data.  Returns +inf when the residual power is
    numerically zero (noiseless data).
    """
    q, n_pixels = Y.shape
    d = projected.shape[0]
    p_y = float((Y ** 2).sum()) / n_pixels
    p_x = float((projected ** 2).sum()) / n_pixels + float((mean ** 2).sum())
    num = p_x - (d / q) * p_y
    den = p_y - p_x
    if den <= 0.0:
        return float("inf")
    if num <= 0.0:
        return float("-inf")
    return 10.0 * float(np.log10(num / den))


def _principal_directions(M: np.ndarray, d: int, label: str,
                          check_rank: bool = True) -> np.ndarray:
    """Top-``d`` left singular vectors of ``M``.

    With ``check_rank`` the call errors when the matrix rank is below
    ``d`` (the final projection would be singular); the SNR estimation
    projection tolerates deficient rank.
    """
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    if check_rank and (
        d > s.size or (s.size and s[d - 1] <= 1e-12 * max(s[0], 1e-300))
    ):
        raise DegenerateInputError(f"{label}: input rank below {d}")
    return u[:, :d]


def _validated_pixels(pixels, m: int, subspace: str) -> np.ndarray:
    X = np.asarray(pixels, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("pixels must be a 2-d array (n_pixels, q)")
    n_pixels, q = X.shape
    if not 1 <= m <= min(q, n_pixels):
        raise ValueError(f"m must be in [1, min(q, n_pixels)] = [1, {min(q, n_pixels)}]")
    if subspace not in ("auto", "pca"):
        raise ValueError("subspace must be 'auto' or 'pca'")
    return X


def _vertex_projection(X: np.ndarray, m: int, subspace: str) -> np.ndarray:
    """Low-dimensional representation whose extreme points are hunted."""
    n_pixels = X.shape[0]
    Y = X.T  # q x M
    if np.allclose(Y, Y[:, :1]):
        raise DegenerateInputError("all pixels identical")
    if m == 1:
        return Y
    mean = Y.mean(axis=1, keepdims=True)
    Yo = Y - mean
    projective = False
    if subspace == "auto":
        u_est = _principal_directions(Yo, min(m, Y.shape[0]), "snr estimate",
                                      check_rank=False)
        snr = _estimate_snr_db(Y, mean, u_est.T @ Yo)
        projective = snr > 15.0 + 10.0 * np.log10(m)
    if projective:
        u_d = _principal_directions(Y, m, "projective subspace")
        x = u_d.T @ Y
        u = x.mean(axis=1)
        denom = u @ x
        if np.any(np.abs(denom) <= 1e-12 * max(np.abs(denom).max(), 1e-300)):
            raise DegenerateInputError("projective normalization degenerate")
        return x / denom
    u_d = _principal_directions(Yo, m - 1, "pca subspace")
    x = u_d.T @ Yo
    c = float(np.sqrt((x ** 2).sum(axis=0)).max())
    return np.vstack([x, np.full((1, n_pixels), c)])


def _vertex_hunt(y: np.ndarray, m: int, rng: np.random.Generator) -> list[int]:
    """Pick ``m`` extreme columns of ``y`` along random orthogonal directions."""
    dim = y.shape[0]
    indices: list[int] = []
    for _ in range(m):
        f = rng.standard_normal(dim)
        if indices:
            basis = y[:, indices]
            f = f - basis @ (np.linalg.pinv(basis) @ f)
        norm = np.linalg.norm(f)
        if norm <= 1e-12:
            raise DegenerateInputError("projection direction collapsed")
        v = np.abs(f @ y) / norm
        v[indices] = -np.inf
        indices.append(int(np.argmax(v)))
    return indices


def vca(pixels, m: int, seed: int, subspace: str = "auto") -> EndmemberSet:
    """Induce ``m`` endmembers from ``pixels`` (n_pixels x q).

    Parameters
    ----------
    pixels : array_like, shape (n_pixels, q)
        Pixel spectra.
    m : int
        Number of endmembers, at most min(q, n_pixels).
    seed : int
        Seeds the random projection directions; fixed seed gives a fixed
        result.
    subspace : {"auto", "pca"}
        "auto" picks between the projective and the mean-removed PCA
        projection using the SNR estimate; "pca" forces the simple PCA
        branch.

    Returns
    -------
    EndmemberSet
        ``m`` rows taken verbatim from ``pixels`` plus their indices.
    """
    X = _validated_pixels(pixels, m, subspace)
    y = _vertex_projection(X, m, subspace)
    indices = _vertex_hunt(y, m, np.random.default_rng(seed))
    return EndmemberSet(X[indices], tuple(indices))


def _nnls_from_gram(G: np.ndarray, Atb: np.ndarray, max_iter: int) -> np.ndarray:
    """Active-set NNLS on the normal equations ``G = A'A``, ``Atb = A'b``.

    Classic Lawson-Hanson iteration: grow a passive set by the most
    positive dual, solve the unconstrained subproblem on it, and step
    back along the segment to the previous iterate whenever the
    subproblem solution leaves the feasible cone.
    """
    n = G.shape[0]
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    tol = 1e-10 * max(1.0, float(np.abs(Atb).max(initial=0.0)))
    w = Atb.copy()
    outer = 0
    while (~passive).any() and (w[~passive] > tol).any():
        outer += 1
        if outer > max_iter:
            break
        candidates = np.where(~passive, w, -np.inf)
        passive[int(np.argmax(candidates))] = True
        while True:
            idx = np.flatnonzero(passive)
            sub = G[np.ix_(idx, idx)]
            try:
                sol = np.linalg.solve(sub, Atb[idx])
            except np.linalg.LinAlgError:
                sol, *_ = np.linalg.lstsq(sub, Atb[idx], rcond=None)
            if (sol > 0).all():
                x = np.zeros(n)
                x[idx] = sol
                break
            s = np.zeros(n)
            s[idx] = sol
            hit = passive & (s <= 0)
            ratios = x[hit] / (x[hit] - s[hit])
            alpha = float(ratios.min())
            x = x + alpha * (s - x)
            passive &= x > 1e-14
            if not passive.any():
                x = np.zeros(n)
                break
        w = Atb - G @ x
    return x


def nnls(A, b, max_iter: int | None = None) -> np.ndarray:
    """Solve ``min ||Ax - b||`` subject to ``x >= 0`` by the active-set method."""
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = A.shape[1]
    if max_iter is None:
        max_iter = 3 * n + 30
    return _nnls_from_gram(A.T @ A, A.T @ b, max_iter)


def nnls_abundances(pixels, endmembers: EndmemberSet) -> np.ndarray:
    """Per-pixel nonnegative abundances for ``endmembers`` (rows m x q).

    The unconstrained least-squares solution is used wherever it is
    already nonnegative (it then satisfies the same optimality
    conditions); remaining pixels go through the active-set solver.
    """
    X = np.asarray(pixels, dtype=np.float64)
    A = endmembers.vectors.T  # q x m
    unconstrained, *_ = np.linalg.lstsq(A, X.T, rcond=None)
    phi = unconstrained.T  # n_pixels x m
    needs_active_set = (phi < 0).any(axis=1)
    if needs_active_set.any():
        G = A.T @ A
        Atb_all = X @ A  # row i holds A' b for pixel i
        max_iter = 3 * A.shape[1] + 30
        for i in np.flatnonzero(needs_active_set):
            phi[i] = _nnls_from_gram(G, Atb_all[i], max_iter)
    return phi


def reconstruction_error(pixels, endmembers: EndmemberSet, abundances) -> float:
    """Average over pixels of the per-pixel root mean squared band error."""
    X = np.asarray(pixels, dtype=np.float64)
    phi = np.asarray(abundances, dtype=np.float64)
    E = endmembers.vectors
    if phi.shape != (X.shape[0], E.shape[0]) or E.shape[1] != X.shape[1]:
        raise ValueError(
            f"dimension mismatch: pixels {X.shape}, abundances {phi.shape}, "
            f"endmembers {E.shape}"
        )
    residual = X - phi @ E
    per_pixel = np.sqrt((residual ** 2).mean(axis=1))
    return float(per_pixel.mean())


def normalized_mean_abundance(abundances) -> np.ndarray:
    """Pixel-mean abundance per endmember, normalized to sum to one."""
    phi = np.asarray(abundances, dtype=np.float64)
    mean = phi.mean(axis=0)
    total = float(mean.sum())
    if total <= 0.0:
        return np.full(phi.shape[1], 1.0 / phi.shape[1])
    return mean / total


def characterize(
    patch_pixels,
    m: int,
    runs: int = 20,
    seed: int = 0,
    subspace: str = "auto",
) -> UnmixingChar:
    """Best-of-``runs`` unmixing characterization of one patch.

    Runs the endmember induction with seeds ``seed .. seed+runs-1``,
    unmixes each run, and keeps the endmember set and abundances with
    the lowest reconstruction error.
    """
    X = np.asarray(patch_pixels, dtype=np.float64)
    if X.ndim == 3:
        X = X.reshape(-1, X.shape[2])
    if runs < 1:
        raise ValueError("runs must be >= 1")
    X = _validated_pixels(X, m, subspace)
    # The projection is seed-independent, so compute it once; runs that
    # select the same vertex set share one unmixing.
    y = _vertex_projection(X, m, subspace)
    by_selection: dict[tuple[int, ...], tuple[float, EndmemberSet, np.ndarray]] = {}
    best = None
    errors = []
    for r in range(runs):
        indices = tuple(_vertex_hunt(y, m, np.random.default_rng(seed + r)))
        if indices not in by_selection:
            E = EndmemberSet(X[list(indices)], indices)
            phi = nnls_abundances(X, E)
            by_selection[indices] = (reconstruction_error(X, E, phi), E, phi)
        eps, E, phi = by_selection[indices]
        errors.append(eps)
        if best is None or eps < best[0]:
            best = (eps, E, phi)
    eps, E, phi = best
    return UnmixingChar(
        endmembers=E,
        abundances=phi,
        avg_abundance=normalized_mean_abundance(phi),
        epsilon=eps,
        run_errors=tuple(errors),
    )
