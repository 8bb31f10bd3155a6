"""Stored-energy densities with a single well at the rotation group.

Built-in laws (``F`` is the deformation gradient, ``U = (F^T F)^(1/2)``):

``logdet``   W(F) = |U - Id|^2 + |log det F|^p
``invdet``   W(F) = |U - Id|^2 + |1/det F - 1|^p
``svk``      W(F) = mu |E|^2 + (lam/2) (tr E)^2,  E = (F^T F - Id)/2

All of them are extended by +inf where det F <= 0.  ``logdet`` and
``invdet`` blow up as det F -> 0+ and satisfy the stress growth bound
|DW(F) F^T| <= k (W(F) + 1); ``svk`` stays finite under compression and is
kept as a comparison case.  A ``custom`` kind accepts user callables.

The module also extracts the quadratic forms of the linearization at the
identity: the full 3x3 form (``tangent_at_identity``) and its plane-stress
reduction to 2x2 arguments (``plane_stress_reduction``), plus empirical
checks of frame indifference, coercivity, stress growth and derivative
consistency.  Checks are pure and deterministic given their seed.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .matrices import (
    IDENTITY,
    dist_to_rotations,
    frobenius_norm,
    random_bounded_stretch,
    random_invertible,
    random_near_rotation,
    random_rotation,
)

BUILTIN_KINDS = ("logdet", "invdet", "svk")

# central finite-difference steps (relative to 1 + |F|)
FD_STEP_FIRST = 1e-5
FD_STEP_SECOND = 1e-4


class DomainError(ValueError):
    """Raised when an operation is evaluated outside det F > 0."""


class DegenerateRelaxationError(RuntimeError):
    """Raised when the plane-stress stationarity system is singular."""

    def __init__(self, direction: np.ndarray):
        self.direction = direction
        super().__init__(
            "relaxation degenerate along basis direction\n%r" % (direction,)
        )


@dataclass(frozen=True)
class EnergyDensity:
    """A stored-energy law with optional analytic derivative.

    Parameters
    ----------
    kind : str
        One of ``logdet``, ``invdet``, ``svk`` or ``custom``.
    p : float
        Growth exponent of the determinant term (built-ins need p >= 2 to
        stay C^2 at the identity).
    delta : float
        Radius of the neighbourhood of the rotation group on which W is
        taken to be C^2; only used by diagnostic branching.
    mu, lam : float
        Moduli of the ``svk`` kind; ignored otherwise.
    ball_k : float or None
        Empirical stress-growth constant, filled in by
        :func:`check_stress_growth` via ``with_growth_constant``.
    analytic_derivative : bool
        Use the closed-form derivative when available; otherwise central
        finite differences of the energy.
    w_fn, dw_fn : callables, optional
        For ``kind="custom"``: ``w_fn(F) -> float`` on det F > 0 and an
        optional ``dw_fn(F) -> (3, 3)``.
    """

    kind: str = "logdet"
    p: float = 2.0
    delta: float = 0.5
    mu: float = 1.0
    lam: float = 1.0
    ball_k: float | None = None
    analytic_derivative: bool = True
    w_fn: Callable[[np.ndarray], float] | None = field(default=None, repr=False)
    dw_fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in BUILTIN_KINDS + ("custom",):
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.kind == "custom" and self.w_fn is None:
            raise ValueError("custom density requires w_fn")
        if self.kind in ("logdet", "invdet") and self.p < 2.0:
            raise ValueError("built-in densities require p >= 2 (C^2 at the identity)")
        if self.delta <= 0.0:
            raise ValueError("smoothness radius delta must be positive")

    def params(self) -> dict:
        out = {"p": self.p, "delta": self.delta}
        if self.kind == "svk":
            out.update(mu=self.mu, lam=self.lam)
        return out

    def with_growth_constant(self, k: float) -> "EnergyDensity":
        return dataclasses.replace(self, ball_k=k)


def stored_energy_many(density: EnergyDensity, F: np.ndarray) -> np.ndarray:
    """W evaluated on a stack of matrices; +inf where det F <= 0."""
    F = np.asarray(F, dtype=float)
    det = np.linalg.det(F)
    ok = det > 0.0
    out = np.full(det.shape, np.inf)
    if not np.any(ok):
        return out
    Fg = F[ok]
    if density.kind == "custom":
        vals = np.array([float(density.w_fn(M)) for M in Fg.reshape(-1, 3, 3)])
        out[ok] = vals.reshape(Fg.shape[:-2])
        return out
    dg = det[ok]
    if density.kind == "svk":
        E = 0.5 * (np.swapaxes(Fg, -1, -2) @ Fg - IDENTITY)
        tr = np.trace(E, axis1=-2, axis2=-1)
        out[ok] = density.mu * np.sum(E * E, axis=(-2, -1)) + 0.5 * density.lam * tr**2
        return out
    s = np.linalg.svd(Fg, compute_uv=False)
    well = np.sum((s - 1.0) ** 2, axis=-1)
    if density.kind == "logdet":
        out[ok] = well + np.abs(np.log(dg)) ** density.p
    else:  # invdet
        out[ok] = well + np.abs(1.0 / dg - 1.0) ** density.p
    return out


def stored_energy(density: EnergyDensity, F: np.ndarray) -> float:
    """W(F) for a single 3x3 matrix (extended real; +inf iff det F <= 0)."""
    return float(stored_energy_many(density, np.asarray(F, dtype=float)[None])[0])


def _fd_derivative_single(density: EnergyDensity, F: np.ndarray) -> np.ndarray:
    step = FD_STEP_FIRST * (1.0 + np.linalg.norm(F))
    DW = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            Fp = F.copy(); Fp[i, j] += step
            Fm = F.copy(); Fm[i, j] -= step
            DW[i, j] = (stored_energy(density, Fp) - stored_energy(density, Fm)) / (2.0 * step)
    return DW


def stored_energy_derivative_many(density: EnergyDensity, F: np.ndarray) -> np.ndarray:
    """DW on a stack of matrices with det F > 0 (raises otherwise)."""
    F = np.asarray(F, dtype=float)
    det = np.linalg.det(F)
    if np.any(det <= 0.0):
        raise DomainError("derivative undefined: det F <= 0")
    if density.kind == "custom":
        if density.dw_fn is not None and density.analytic_derivative:
            flat = F.reshape(-1, 3, 3)
            return np.array([density.dw_fn(M) for M in flat]).reshape(F.shape)
        flat = F.reshape(-1, 3, 3)
        return np.array([_fd_derivative_single(density, M) for M in flat]).reshape(F.shape)
    if not density.analytic_derivative:
        flat = F.reshape(-1, 3, 3)
        return np.array([_fd_derivative_single(density, M) for M in flat]).reshape(F.shape)
    if density.kind == "svk":
        Ften = 0.5 * (np.swapaxes(F, -1, -2) @ F - IDENTITY)
        tr = np.trace(Ften, axis1=-2, axis2=-1)
        S = 2.0 * density.mu * Ften + density.lam * tr[..., None, None] * IDENTITY
        return F @ S
    # |U - Id|^2 = |F|^2 - 2 sum(sigma) + 3, whose gradient is 2F - 2 polar(F)
    U, s, Vt = np.linalg.svd(F)
    R = U @ Vt  # in SO(3) because det F > 0
    FinvT = np.swapaxes(np.linalg.inv(F), -1, -2)
    p = density.p
    if density.kind == "logdet":
        t = np.log(det)
        coef = p * np.abs(t) ** (p - 1.0) * np.sign(t)
    else:  # invdet
        t = 1.0 / det - 1.0
        coef = -p * np.abs(t) ** (p - 1.0) * np.sign(t) / det
    return 2.0 * (F - R) + coef[..., None, None] * FinvT


def stored_energy_derivative(density: EnergyDensity, F: np.ndarray) -> np.ndarray:
    """DW(F) for a single matrix; rejects det F <= 0."""
    return stored_energy_derivative_many(density, np.asarray(F, dtype=float)[None])[0]


# ---------------------------------------------------------------------------
# quadratic forms of the linearization at the identity

def _vec(F: np.ndarray) -> np.ndarray:
    return np.asarray(F, dtype=float).reshape(F.shape[:-2] + (9,))


_SYM_PROJECTOR = None


def _sym_projector() -> np.ndarray:
    # 9x9 projector onto vectorized symmetric matrices
    global _SYM_PROJECTOR
    if _SYM_PROJECTOR is None:
        P = np.zeros((9, 9))
        for i in range(3):
            for j in range(3):
                P[3 * i + j, 3 * i + j] += 0.5
                P[3 * i + j, 3 * j + i] += 0.5
        _SYM_PROJECTOR = P
    return _SYM_PROJECTOR


@dataclass(frozen=True)
class Tensor4:
    """Symmetric bilinear form on 3x3 matrices, stored as 9x9 on vec(F).

    Self-adjoint by construction, positive semidefinite on symmetric
    matrices for admissible densities, and annihilates antisymmetric
    matrices (linearized frame indifference).
    """

    array: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.array, dtype=float)
        if A.shape != (9, 9):
            raise ValueError("Tensor4 expects a 9x9 array")
        object.__setattr__(self, "array", A)

    def quad(self, F: np.ndarray) -> float | np.ndarray:
        v = _vec(F)
        return np.einsum("...i,ij,...j->...", v, self.array, v)

    def bilinear(self, F: np.ndarray, G: np.ndarray) -> float | np.ndarray:
        return np.einsum("...i,ij,...j->...", _vec(F), self.array, _vec(G))

    def apply(self, F: np.ndarray) -> np.ndarray:
        """L F as a 3x3 matrix (stacked over leading axes)."""
        v = _vec(F) @ self.array.T
        return v.reshape(F.shape[:-2] + (3, 3))

    def max_asymmetry(self) -> float:
        return float(np.max(np.abs(self.array - self.array.T)))


SQRT2 = np.sqrt(2.0)

# orthonormal symmetric 2x2 basis used for the reduced quadratic form:
# (G11, G22, sqrt(2) * sym G12)
_BASIS2 = (
    np.array([[1.0, 0.0], [0.0, 0.0]]),
    np.array([[0.0, 0.0], [0.0, 1.0]]),
    np.array([[0.0, 1.0 / SQRT2], [1.0 / SQRT2, 0.0]]),
)


@dataclass(frozen=True)
class QuadForm2:
    """Quadratic form on 2x2 matrices acting through their symmetric part.

    Stored as a symmetric 3x3 array in the (G11, G22, sqrt2*sym G12)
    coordinates.
    """

    array: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.array, dtype=float)
        if A.shape != (3, 3):
            raise ValueError("QuadForm2 expects a 3x3 array")
        object.__setattr__(self, "array", 0.5 * (A + A.T))

    def _coords(self, G: np.ndarray) -> np.ndarray:
        G = np.asarray(G, dtype=float)
        g12 = 0.5 * (G[..., 0, 1] + G[..., 1, 0])
        return np.stack([G[..., 0, 0], G[..., 1, 1], SQRT2 * g12], axis=-1)

    def quad(self, G: np.ndarray) -> float | np.ndarray:
        w = self._coords(G)
        return np.einsum("...i,ij,...j->...", w, self.array, w)

    def apply(self, G: np.ndarray) -> np.ndarray:
        """The symmetric 2x2 matrix L2 sym G."""
        s = self._coords(G) @ self.array.T
        out = np.zeros(np.asarray(G).shape[:-2] + (2, 2))
        out[..., 0, 0] = s[..., 0]
        out[..., 1, 1] = s[..., 1]
        out[..., 0, 1] = out[..., 1, 0] = s[..., 2] / SQRT2
        return out

    def coefficient_matrix(self) -> np.ndarray:
        """3x3 matrix C with Q(G) = m^T C m for m = (G11, G22, sym G12)."""
        A = self.array
        T = np.diag([1.0, 1.0, SQRT2])
        return T @ A @ T

    def is_positive_definite(self) -> bool:
        return bool(np.all(np.linalg.eigvalsh(self.array) > 0.0))


def tangent_at_identity(density: EnergyDensity) -> Tensor4:
    """Second derivative of W at the identity as a 9x9 quadratic form.

    Central finite differences of the first derivative (step 1e-4), then
    symmetrized and projected onto the symmetric subspace, which is exact
    for frame-indifferent densities and removes FD noise on antisymmetric
    arguments.
    """
    step = FD_STEP_SECOND
    H = np.empty((9, 9))
    for a in range(9):
        E = np.zeros(9)
        E[a] = step
        E = E.reshape(3, 3)
        Dp = stored_energy_derivative(density, IDENTITY + E)
        Dm = stored_energy_derivative(density, IDENTITY - E)
        H[:, a] = ((Dp - Dm) / (2.0 * step)).reshape(9)
    H = 0.5 * (H + H.T)
    P = _sym_projector()
    return Tensor4(P.T @ H @ P)


def isotropic_tangent(mu: float, lam: float) -> Tensor4:
    """The quadratic form 2 mu |sym F|^2 + lam (tr F)^2 as a Tensor4."""
    P = _sym_projector()
    tr = np.zeros((9, 9))
    for i in range(3):
        for j in range(3):
            tr[3 * i + i, 3 * j + j] = 1.0
    return Tensor4(2.0 * mu * P + lam * tr)


def _embed2(G: np.ndarray) -> np.ndarray:
    out = np.zeros((3, 3))
    out[:2, :2] = G
    return out


_RELAX_DIRS = (
    np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
    np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]),
    np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
)


def _relaxed_minimizer(L: Tensor4, G2: np.ndarray) -> np.ndarray:
    """Minimizer of L over the out-of-plane entries at fixed 2x2 block.

    The free entries are the symmetric completions F13=F31, F23=F32, F33;
    antisymmetric directions can be dropped because L annihilates them.
    """
    M = np.array([[L.bilinear(Di, Dj) for Dj in _RELAX_DIRS] for Di in _RELAX_DIRS])
    Ghat = _embed2(G2)
    r = np.array([L.bilinear(Ghat, Di) for Di in _RELAX_DIRS])
    if np.linalg.cond(M) > 1e12:
        w, V = np.linalg.eigh(M)
        bad = sum(c * D for c, D in zip(V[:, 0], _RELAX_DIRS))
        raise DegenerateRelaxationError(bad)
    x = np.linalg.solve(M, -r)
    return Ghat + sum(c * D for c, D in zip(x, _RELAX_DIRS))


def plane_stress_reduction(L: Tensor4) -> QuadForm2:
    """Reduce a 3x3 quadratic form to 2x2 arguments by relaxing the
    out-of-plane entries.

    For each symmetric 2x2 direction the stationarity system in the three
    free symmetric entries is solved exactly; the reduced bilinear form is
    evaluated on the lifted minimizers, which is what the Schur complement
    of the constrained minimization gives.
    """
    lifted = [_relaxed_minimizer(L, B) for B in _BASIS2]
    A = np.array([[L.bilinear(Fi, Fj) for Fj in lifted] for Fi in lifted])
    return QuadForm2(A)


# ---------------------------------------------------------------------------
# empirical checks

@dataclass
class CheckReport:
    """Outcome of one empirical density check, serializable as JSON."""

    check: str
    density: str
    params: dict
    statistic: float
    threshold: float
    passed: bool
    details: dict = field(default_factory=dict)

    def record(self) -> dict:
        return {
            "check": self.check,
            "density": self.density,
            "params": self.params,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "pass": self.passed,
            **({"details": self.details} if self.details else {}),
        }


def check_frame_indifference(density: EnergyDensity, n_samples: int = 1000,
                             seed: int = 0) -> CheckReport:
    """Max relative violation of W(RF) = W(F) over random samples."""
    rng = np.random.default_rng(seed)
    F = random_invertible(rng, n_samples, det_range=(0.1, 10.0))
    R = random_rotation(rng, n_samples)
    w = stored_energy_many(density, F)
    wr = stored_energy_many(density, R @ F)
    viol = np.abs(wr - w) / (1.0 + w)
    stat = float(np.max(viol))
    return CheckReport("frame_indifference", density.kind, density.params(),
                       stat, 1e-10, stat <= 1e-10,
                       details={"n_samples": n_samples, "seed": seed})


def check_coercivity(density: EnergyDensity, n_samples: int = 1000,
                     seed: int = 0) -> CheckReport:
    """Min of W(F) / dist^2(F, SO(3)) over samples, skipping the well set."""
    rng = np.random.default_rng(seed)
    F = np.concatenate([
        random_invertible(rng, n_samples // 2, det_range=(0.1, 10.0)),
        random_near_rotation(rng, n_samples - n_samples // 2, spread=1.0),
    ])
    d2 = dist_to_rotations(F) ** 2
    keep = d2 >= 1e-16  # dist >= 1e-8
    w = stored_energy_many(density, F[keep])
    ratio = w / d2[keep]
    stat = float(np.min(ratio))
    return CheckReport("coercivity", density.kind, density.params(),
                       stat, 0.0, stat > 0.0,
                       details={"n_samples": int(np.count_nonzero(keep)), "seed": seed})


def check_stress_growth(density: EnergyDensity,
                        det_sequence: tuple[float, ...] = tuple(10.0 ** -j for j in range(1, 7)),
                        n_samples: int = 1000, seed: int = 0) -> CheckReport:
    """Empirical growth constant k = max |DW(F) F^T| / (W(F) + 1).

    Samples include matrices driven toward zero determinant along
    diag(t, 1, 1) with t from ``det_sequence``; the ratios along that scan
    are recorded as the trend, which must stay within a factor 2 of its
    first value for a density compatible with the growth condition.
    """
    rng = np.random.default_rng(seed)
    F = random_invertible(rng, n_samples, det_range=(0.1, 10.0))

    def ratio(Fs):
        dw = stored_energy_derivative_many(density, Fs)
        num = frobenius_norm(dw @ np.swapaxes(Fs, -1, -2))
        return num / (stored_energy_many(density, Fs) + 1.0)

    sample_ratios = ratio(F)
    scan = np.array([np.diag([t, 1.0, 1.0]) for t in det_sequence])
    scan_ratios = ratio(scan)
    k = float(max(np.max(sample_ratios), np.max(scan_ratios)))
    growth = float(np.max(scan_ratios) / scan_ratios[0])
    ok = np.isfinite(k) and growth <= 2.0
    return CheckReport("stress_growth", density.kind, density.params(),
                       k, 2.0, bool(ok),
                       details={"trend": [float(r) for r in scan_ratios],
                                "trend_growth": growth,
                                "det_sequence": [float(t) for t in det_sequence],
                                "n_samples": n_samples, "seed": seed})


def check_derivative_consistency(density: EnergyDensity, n_samples: int = 100,
                                 seed: int = 0) -> CheckReport:
    """Max relative error of DW against central differences of W.

    Samples have determinant in [0.2, 5] and moderate principal stretches,
    so the FD oracle stays accurate at the documented step.
    """
    rng = np.random.default_rng(seed)
    F = random_bounded_stretch(rng, n_samples, det_range=(0.2, 5.0))
    worst = 0.0
    for M in F:
        exact = stored_energy_derivative(density, M)
        fd = _fd_derivative_single(density, M)
        err = np.linalg.norm(exact - fd) / max(np.linalg.norm(fd), 1e-12)
        worst = max(worst, float(err))
    return CheckReport("derivative_consistency", density.kind, density.params(),
                       worst, 1e-6, worst <= 1e-6,
                       details={"n_samples": n_samples, "seed": seed})


def run_all_checks(density: EnergyDensity, seed: int = 0) -> list[CheckReport]:
    return [
        check_frame_indifference(density, seed=seed),
        check_coercivity(density, seed=seed),
        check_stress_growth(density, seed=seed),
        check_derivative_consistency(density, seed=seed),
    ]
