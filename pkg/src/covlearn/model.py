"""Complex Gaussian covariance model for jointly sparse (MMV) recovery.

The measurement model is Y = A X + E with a known dictionary A whose columns
(atoms) mix zero-mean circular Gaussian sources of per-atom power gamma_i on
top of white noise of variance sigma2, so the snapshot covariance is

    Sigma = A diag(gamma) A^H + sigma2 * I.

This module holds the model types, the negative log-likelihood and its
gradient, the rank-one (leave-one-atom-out) identities used by the solvers,
and the closed-form maximum-likelihood refits on a fixed support.

All functions are pure; arrays inside the frozen dataclasses are marked
read-only so states can be shared across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NumericError(ArithmeticError):
    """A numerically impossible or non-finite intermediate was encountered."""


class DegenerateDowndateError(NumericError):
    """gamma_i * a_i^H Theta a_i is too close to 1 for a rank-one downdate."""


class RankDeficientError(np.linalg.LinAlgError):
    """A matrix that must have full column rank does not."""


def hermitize(Z: np.ndarray) -> np.ndarray:
    """Symmetrize a square matrix after floating-point accumulation."""
    return (Z + Z.conj().T) / 2.0


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dictionary:
    """Known N x M complex dictionary whose columns are atoms.

    Parameters
    ----------
    atoms : ndarray, shape (n_sensors, n_atoms)
        Complex atom matrix. Copied and frozen at construction.
    norm_mode : {"unit", "array", None}
        Optional normalization contract. "unit" asserts each column has
        unit Euclidean norm (compressed-sensing convention); "array"
        asserts ||a_i||^2 == n_sensors (sensor-array convention).
    """

    atoms: np.ndarray
    norm_mode: str | None = None

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=np.complex128)
        if atoms.ndim != 2 or atoms.shape[0] < 1 or atoms.shape[1] < 1:
            raise ValueError("dictionary must be a non-empty 2-D matrix")
        if not np.isfinite(atoms).all():
            raise ValueError("dictionary entries must be finite")
        if self.norm_mode not in (None, "unit", "array"):
            raise ValueError(f"unknown norm_mode {self.norm_mode!r}")
        norms2 = np.sum(np.abs(atoms) ** 2, axis=0)
        if self.norm_mode == "unit" and not np.allclose(norms2, 1.0, atol=3e-12, rtol=0.0):
            raise ValueError("unit mode requires unit-norm atoms")
        if self.norm_mode == "array" and not np.allclose(norms2, atoms.shape[0], atol=1e-9, rtol=0.0):
            raise ValueError("array mode requires ||a_i||^2 == n_sensors")
        object.__setattr__(self, "atoms", _readonly(atoms))

    @property
    def n_sensors(self) -> int:
        return self.atoms.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]

    def atom(self, i: int) -> np.ndarray:
        """Column i of the dictionary."""
        return self.atoms[:, i]

    def take(self, indices) -> np.ndarray:
        """Submatrix restricted to the given atom indices (in that order)."""
        return self.atoms[:, list(indices)]


@dataclass(frozen=True)
class CovarianceState:
    """Model covariance Sigma = A diag(gamma) A^H + sigma2 I with caches.

    Built through :func:`build_covariance`; holds the dictionary, the
    nonnegative power vector, the positive noise variance, and the cached
    covariance and its inverse (theta).
    """

    dictionary: Dictionary
    gamma: np.ndarray
    sigma2: float
    sigma: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)


def sample_covariance(Y: np.ndarray) -> np.ndarray:
    """Sample covariance (1/L) Y Y^H of an N x L snapshot matrix.

    Hermitian by construction (explicitly symmetrized after the product).
    """
    Y = np.asarray(Y, dtype=np.complex128)
    if Y.ndim != 2 or Y.shape[0] < 1 or Y.shape[1] < 1:
        raise ValueError("snapshot matrix must be non-empty and 2-D")
    if not np.isfinite(Y).all():
        raise ValueError("snapshot matrix entries must be finite")
    return hermitize(Y @ Y.conj().T / Y.shape[1])


def build_covariance(dictionary: Dictionary, gamma, sigma2: float) -> CovarianceState:
    """Assemble Sigma = sum_i gamma_i a_i a_i^H + sigma2 I and cache its inverse.

    Raises
    ------
    ValueError
        If any gamma_i < 0, gamma has the wrong length, or sigma2 <= 0.
    NumericError
        If the factorization of Sigma fails (cannot happen for sigma2 > 0
        with finite atoms, but guarded).
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    A = dictionary.atoms
    if gamma.shape != (dictionary.n_atoms,):
        raise ValueError("gamma must have one entry per atom")
    if not np.all(np.isfinite(gamma)) or np.any(gamma < 0.0):
        raise ValueError("signal powers must be finite and nonnegative")
    if not (np.isfinite(sigma2) and sigma2 > 0.0):
        raise ValueError("noise variance must be positive")
    sigma = hermitize((A * gamma) @ A.conj().T)
    sigma[np.diag_indices_from(sigma)] += sigma2
    try:
        theta = hermitize(np.linalg.inv(sigma))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - sigma2 > 0 prevents this
        raise NumericError("model covariance is numerically singular") from exc
    return CovarianceState(
        dictionary=dictionary,
        gamma=_readonly(gamma),
        sigma2=float(sigma2),
        sigma=_readonly(sigma),
        theta=_readonly(theta),
    )


def negative_llf(state: CovarianceState, scm: np.ndarray) -> float:
    """Scaled negative log-likelihood tr(Sigma^-1 Shat) + log|Sigma|.

    Natural logarithm throughout; additive constants dropped.
    """
    val = np.einsum("ij,ji->", state.theta, scm).real
    sign, logdet = np.linalg.slogdet(state.sigma)
    out = float(val + logdet)
    if sign.real <= 0 or not np.isfinite(out):
        raise NumericError("non-finite negative log-likelihood")
    return out


def atom_quadratic_forms(state: CovarianceState, scm: np.ndarray):
    """Per-atom quadratic forms (q, r) = (a^H Theta a, a^H Theta Shat Theta a).

    Evaluated for all atoms at once through V = Theta A, so the cost is two
    N x N by N x M products rather than M separate solves.
    """
    A = state.dictionary.atoms
    V = state.theta @ A
    q = np.einsum("ij,ij->j", A.conj(), V).real
    r = np.einsum("ij,ij->j", V.conj(), scm @ V).real
    return q, r


def nll_gradient(state: CovarianceState, scm: np.ndarray):
    """Gradient of the negative log-likelihood in (gamma, sigma2).

    Returns
    -------
    (grad_gamma, grad_sigma2)
        grad_gamma[i] = -a_i^H Theta Shat Theta a_i + a_i^H Theta a_i and
        grad_sigma2 = -tr(Theta (Shat - Sigma) Theta). Both vanish when the
        sample covariance equals the model covariance.
    """
    q, r = atom_quadratic_forms(state, scm)
    theta = state.theta
    tr_tst = np.einsum("ij,ji->", theta @ scm, theta).real
    grad_sigma2 = -(tr_tst - np.trace(theta).real)
    return q - r, float(grad_sigma2)


def loo_quadratic_form(state: CovarianceState, i: int, b: np.ndarray) -> complex:
    """a_i^H Sigma_{without i}^-1 b from the cached full inverse.

    Uses the rank-one downdate identity
    a_i^H (Sigma - gamma_i a_i a_i^H)^-1 b = a_i^H Theta b / (1 - gamma_i a_i^H Theta a_i),
    avoiding any explicit matrix update.
    """
    a = state.dictionary.atom(i)
    ta = state.theta @ a
    denom = 1.0 - state.gamma[i] * np.vdot(a, ta).real
    if abs(denom) < 1e-14:
        raise DegenerateDowndateError(
            f"gamma_{i} * a^H Theta a is too close to 1 (denominator {denom:.3e})"
        )
    return complex(np.vdot(a, state.theta @ np.asarray(b, dtype=np.complex128)) / denom)


def _qr_full_rank(B: np.ndarray, cond_limit: float = 1e6):
    """Reduced QR of B after verifying full column rank (cond(B) < cond_limit)."""
    B = np.asarray(B, dtype=np.complex128)
    if B.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    s = np.linalg.svd(B, compute_uv=False)
    if s[-1] <= 0.0 or s[0] / s[-1] >= cond_limit:
        raise RankDeficientError("matrix does not have (numerical) full column rank")
    Q, R = np.linalg.qr(B)
    return Q, R


def pseudo_inverse_apply(B: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Left pseudo-inverse application (B^H B)^-1 B^H Z via QR.

    B must have full column rank; the normal equations are never formed.
    """
    Q, R = _qr_full_rank(B)
    return np.linalg.solve(R, Q.conj().T @ np.asarray(Z, dtype=np.complex128))


def noise_mle(scm: np.ndarray, support_atoms: np.ndarray, n_sensors: int) -> float:
    """Noise-variance MLE on a fixed support: tr((I - P) Shat) / (N - k).

    P is the orthogonal projector onto the span of the support atoms; an
    empty support gives tr(Shat)/N. The result is clamped below at
    1e-15 * tr(Shat)/N so downstream covariances stay positive definite.
    """
    scm = np.asarray(scm, dtype=np.complex128)
    tr_scm = np.trace(scm).real
    B = np.asarray(support_atoms, dtype=np.complex128)
    if B.ndim == 1:
        B = B[:, None]
    k = B.shape[1] if B.size else 0
    if k >= n_sensors:
        raise ValueError(f"support size {k} must be smaller than n_sensors={n_sensors}")
    if k == 0:
        resid = tr_scm
    else:
        Q, _ = _qr_full_rank(B)
        resid = tr_scm - np.einsum("ij,ij->", Q.conj(), scm @ Q).real
    return max(resid / (n_sensors - k), 1e-15 * tr_scm / n_sensors)


def provisional_mle(scm: np.ndarray, support_atoms: np.ndarray, n_sensors: int):
    """Closed-form (gamma_support, sigma2) fit on a fixed support.

    sigma2 is the projector-residual MLE of :func:`noise_mle`; the support
    powers are diag(B^+ (Shat - sigma2 I) B^+H) with negative entries
    clipped to zero (consistent, though not exactly the constrained MLE).
    """
    scm = np.asarray(scm, dtype=np.complex128)
    B = np.asarray(support_atoms, dtype=np.complex128)
    if B.ndim == 1:
        B = B[:, None]
    sigma2 = noise_mle(scm, B, n_sensors)
    Q, R = _qr_full_rank(B)
    pinv = np.linalg.solve(R, Q.conj().T)
    shift = scm - sigma2 * np.eye(n_sensors)
    G = pinv @ shift @ pinv.conj().T
    gamma = np.maximum(np.diag(G).real, 0.0)
    return gamma, sigma2
