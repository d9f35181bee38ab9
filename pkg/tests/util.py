"""Shared helpers: random problem instances and independent numeric oracles.

Oracle code here deliberately avoids the library's own evaluation paths
(explicit inverses, slogdet, double loops, scalar line searches) so the
tests cross-check the implementation rather than echo it.
"""

import numpy as np

from covlearn import Dictionary, build_covariance


def random_unit_dictionary(rng, n, m):
    atoms = (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2)
    return Dictionary(atoms / np.linalg.norm(atoms, axis=0), norm_mode="unit")


def random_pdh(rng, n, ridge=0.1):
    """Random positive definite Hermitian matrix."""
    W = (rng.standard_normal((n, n + 2)) + 1j * rng.standard_normal((n, n + 2))) / np.sqrt(2)
    return W @ W.conj().T / (n + 2) + ridge * np.eye(n)


def random_state(rng, n, m, min_gamma=0.0):
    """Random consistent covariance state over a random unit-norm dictionary."""
    A = random_unit_dictionary(rng, n, m)
    gamma = min_gamma + rng.uniform(0.0, 2.0, size=m)
    sigma2 = rng.uniform(0.5, 2.0)
    return build_covariance(A, gamma, sigma2)


def direct_nll(sigma, scm):
    """Independent NLL evaluation: tr(solve(Sigma, Shat)) + log det Sigma."""
    val = np.trace(np.linalg.solve(sigma, scm)).real
    sign, logdet = np.linalg.slogdet(sigma)
    assert sign.real > 0
    return val + logdet


def golden_section_min(f, lo, hi, tol=1e-12, max_iter=300):
    """Golden-section search for the minimizer of a unimodal scalar function."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol * max(1.0, abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2.0
