"""Small helpers for 3x3 matrices (batched along leading axes).

All functions accept arrays of shape (..., 3, 3) and broadcast over the
leading axes.  Rotations always mean proper rotations (determinant +1).
"""
from __future__ import annotations

import numpy as np

IDENTITY = np.eye(3)


def sym(F: np.ndarray) -> np.ndarray:
    """Symmetric part (F + F^T)/2."""
    return 0.5 * (F + np.swapaxes(F, -1, -2))


def antisym(F: np.ndarray) -> np.ndarray:
    """Antisymmetric part (F - F^T)/2."""
    return 0.5 * (F - np.swapaxes(F, -1, -2))


def frobenius_norm(F: np.ndarray) -> np.ndarray:
    return np.linalg.norm(F, axis=(-2, -1))


def dist_to_rotations(F: np.ndarray) -> np.ndarray:
    """Distance from F to the set of proper rotations.

    Computed from the singular values: with det F > 0 this equals
    sqrt(sum (sigma_i - 1)^2); with det F <= 0 the smallest singular
    value enters with a sign flip.
    """
    s = np.linalg.svd(F, compute_uv=False)
    d = np.linalg.det(F)
    flip = np.where(d < 0.0, -1.0, 1.0)
    s = np.concatenate([s[..., :2], (flip[..., None] * s[..., 2:])], axis=-1)
    return np.sqrt(np.sum((s - 1.0) ** 2, axis=-1))


def nearest_rotation(F: np.ndarray) -> np.ndarray:
    """Polar projection of F onto proper rotations (sign-fixed SVD).

    Raises ValueError if some input has a zero singular value, where the
    projection is not defined.
    """
    U, s, Vt = np.linalg.svd(F)
    if np.any(s[..., -1] <= 0.0):
        raise ValueError("rotation undefined: zero singular value in polar projection")
    det = np.linalg.det(U @ Vt)
    fix = np.ones_like(s)
    fix[..., -1] = np.sign(det)
    return (U * fix[..., None, :]) @ Vt


def random_rotation(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Rotations from QR of a standard Gaussian matrix with sign correction."""
    shape = (3, 3) if size is None else (size, 3, 3)
    G = rng.standard_normal(shape)
    Q, R = np.linalg.qr(G)
    # make the factorization unique, then force det = +1
    sgn = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    sgn = np.where(sgn == 0.0, 1.0, sgn)
    Q = Q * sgn[..., None, :]
    det = np.linalg.det(Q)
    flip = np.ones_like(sgn)
    flip[..., -1] = np.sign(det)
    return Q * flip[..., None, :]


def random_invertible(rng: np.random.Generator, size: int | None = None,
                      det_range: tuple[float, float] | None = None) -> np.ndarray:
    """Random matrices with positive determinant.

    Gaussian entries; a negative determinant is fixed by swapping two rows.
    When det_range=(lo, hi) is given, each sample is rescaled so its
    determinant is log-uniform in that range.
    """
    shape = (3, 3) if size is None else (size, 3, 3)
    F = rng.standard_normal(shape)
    d = np.linalg.det(F)
    # avoid the measure-zero singular case
    bad = np.abs(d) < 1e-12
    while np.any(bad):
        F = np.where(np.expand_dims(bad, (-2, -1)), rng.standard_normal(shape), F)
        d = np.linalg.det(F)
        bad = np.abs(d) < 1e-12
    if F.ndim == 2:
        if d < 0.0:
            F = F[[1, 0, 2], :]
    else:
        neg = d < 0.0
        F[neg] = F[neg][:, [1, 0, 2], :]
    d = np.abs(d)
    if det_range is not None:
        lo, hi = det_range
        target = np.exp(rng.uniform(np.log(lo), np.log(hi), size=d.shape))
        F = F * np.expand_dims((target / d) ** (1.0 / 3.0), (-2, -1))
    return F


def random_bounded_stretch(rng: np.random.Generator, size: int,
                           det_range: tuple[float, float] = (0.2, 5.0),
                           log_spread: float = 0.5) -> np.ndarray:
    """Random matrices R1 diag(s) R2^T with moderate principal stretches.

    Stretches are log-uniform with half-width ``log_spread``, then rescaled
    so the determinant is log-uniform in ``det_range``.  The bounded
    condition number keeps finite-difference comparisons of DW meaningful.
    """
    R1 = random_rotation(rng, size)
    R2 = random_rotation(rng, size)
    s = np.exp(rng.uniform(-log_spread, log_spread, size=(size, 3)))
    lo, hi = det_range
    target = np.exp(rng.uniform(np.log(lo), np.log(hi), size=size))
    c = (target / np.prod(s, axis=-1)) ** (1.0 / 3.0)
    s = s * c[:, None]
    return (R1 * s[:, None, :]) @ np.swapaxes(R2, -1, -2)


def random_near_rotation(rng: np.random.Generator, size: int, spread: float = 0.5) -> np.ndarray:
    """Samples R (Id + s N) with R random rotation, |N|=1, s uniform in (0, spread]."""
    R = random_rotation(rng, size)
    N = rng.standard_normal((size, 3, 3))
    N /= frobenius_norm(N)[..., None, None]
    s = rng.uniform(0.0, spread, size=size)
    F = R @ (IDENTITY + s[:, None, None] * N)
    d = np.linalg.det(F)
    keep = d > 1e-8
    return F[keep]
