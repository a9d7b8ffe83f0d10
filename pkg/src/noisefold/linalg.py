"""Dense linear algebra primitives shared by every other module.

All matrices are plain 2-D float64 numpy arrays. Factorizations are made
deterministic by a fixed sign convention so repeated runs are bit-identical.
"""

import warnings
from dataclasses import dataclass

import numpy as np

# Singular values below RANK_TOL * sigma_max count as zero for rank decisions.
RANK_TOL = 1e-12


def _as_matrix(x, name="x"):
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got ndim={a.ndim}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD X = u @ diag(s) @ vt with s non-increasing and >= 0."""

    u: np.ndarray   # (m, k)
    s: np.ndarray   # (k,)
    vt: np.ndarray  # (k, n)

    def reconstruct(self):
        return (self.u * self.s) @ self.vt


def svd_factors(x):
    """Deterministic thin SVD.

    Signs are fixed so the largest-magnitude entry of each left singular
    vector is non-negative; LAPACK already returns singular values sorted
    non-increasing with stable ordering for ties.
    """
    a = _as_matrix(x)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"SVD did not converge: {exc}") from exc
    # sign convention: flip each (u column, vt row) pair together
    idx = np.argmax(np.abs(u), axis=0)
    flip = u[idx, np.arange(u.shape[1])] < 0
    u = u.copy()
    vt = vt.copy()
    u[:, flip] *= -1.0
    vt[flip, :] *= -1.0
    return SvdFactors(u=u, s=s, vt=vt)


def singular_values(x):
    a = _as_matrix(x)
    return np.linalg.svd(a, compute_uv=False)


def nuclear_norm(x):
    """Sum of singular values."""
    return float(np.sum(singular_values(x)))


def frobenius_norm(x):
    a = _as_matrix(x)
    return float(np.linalg.norm(a))


def spectral_norm(x):
    """Largest singular value."""
    s = singular_values(x)
    return float(s[0]) if s.size else 0.0


def lp_norm(v, p):
    """Entrywise l_p norm of a vector, p >= 1."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    v = np.asarray(v, dtype=np.float64).ravel()
    return float(np.sum(np.abs(v) ** p) ** (1.0 / p))


def best_rank_r(x, r):
    """Split X into its best rank-r approximation and the residual.

    Returns (head, tail) with head = sum of the r leading singular triplets
    and tail = X - head.
    """
    a = _as_matrix(x)
    k = min(a.shape)
    if not 1 <= r <= k:
        raise ValueError(f"r must be in [1, {k}], got {r}")
    f = svd_factors(a)
    head = (f.u[:, :r] * f.s[:r]) @ f.vt[:r, :]
    tail = a - head
    return head, tail


def svt(x, tau):
    """Singular value soft-thresholding, the proximal map of tau * ||.||_*.

    Solves min_Z tau*||Z||_* + 0.5*||Z - X||_F^2.
    """
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    a = _as_matrix(x)
    if tau == 0.0:
        return a.copy()
    f = svd_factors(a)
    s = np.maximum(f.s - tau, 0.0)
    return (f.u * s) @ f.vt


def sym_inv_sqrt(s, eig_floor=None, return_info=False):
    """Inverse square root of a symmetric positive definite matrix.

    Eigenvalues below the floor are clamped to it before inversion; the
    floor defaults to 1e-12 times the largest eigenvalue. Clamping is
    reported through a warning (and in the info dict when requested)
    because it means the input was not safely positive definite.
    """
    a = _as_matrix(s, "s")
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got {a.shape}")
    asym = np.max(np.abs(a - a.T)) if a.size else 0.0
    if asym > 1e-10:
        raise ValueError(f"matrix is not symmetric: max |S - S^T| = {asym:.3e}")
    a = 0.5 * (a + a.T)
    evals, evecs = np.linalg.eigh(a)
    floor = eig_floor if eig_floor is not None else RANK_TOL * max(evals[-1], 0.0)
    if floor <= 0.0:
        floor = np.finfo(np.float64).tiny
    clamped = int(np.count_nonzero(evals < floor))
    if clamped:
        warnings.warn(
            f"sym_inv_sqrt: {clamped} eigenvalue(s) below floor {floor:.3e} "
            f"were clamped (min eigenvalue {evals[0]:.3e})",
            RuntimeWarning,
            stacklevel=2,
        )
    evals_c = np.maximum(evals, floor)
    p = (evecs / np.sqrt(evals_c)) @ evecs.T
    p = 0.5 * (p + p.T)
    if return_info:
        return p, {"min_eig": float(evals[0]), "clamped": clamped, "floor": float(floor)}
    return p


def numerical_rank(x):
    """Rank with singular values below RANK_TOL * sigma_max treated as zero."""
    s = singular_values(x)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > RANK_TOL * s[0]))
