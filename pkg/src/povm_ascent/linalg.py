"""Dense complex matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Functions that
accept a single matrix take shape ``(N, N)``; the ``dagger`` helper also
works on stacks of shape ``(K, N, N)``.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy.special import xlogy

from .errors import NotHermitian, NotPSD

CMatrix = NDArray[np.complex128]

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
FLOOR_FACTOR = 1e-12

RNG_ALGORITHM = "PCG64"


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator used for every random draw in a run."""
    return np.random.Generator(np.random.PCG64(seed))


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dagger(m))


def hermiticity_defect(m: np.ndarray) -> float:
    """Largest entrywise magnitude of ``m - m^dagger``."""
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - dagger(m))))


def _check_square(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"Expected a non-empty square matrix, got shape {m.shape}")


def hermitian_eig(m: np.ndarray) -> tuple[np.ndarray, CMatrix]:
    """Eigenvalues (ascending) and unitary eigenvectors of a hermitian matrix.

    The input is symmetrized before decomposition so round-off drift in the
    anti-hermitian part does not leak into the spectrum.

    Raises:
        NotHermitian: if ``max|m - m^dagger|`` exceeds 1e-10.
    """
    m = np.asarray(m, dtype=np.complex128)
    _check_square(m)
    defect = hermiticity_defect(m)
    if defect > HERMITIAN_TOL:
        raise NotHermitian(f"Matrix is not hermitian (max |m - m^dagger| = {defect:.3e})")
    eigenvalues, eigenvectors = np.linalg.eigh(hermitian_part(m))
    return eigenvalues, eigenvectors


def _spectral_function(m: np.ndarray, fn) -> CMatrix:
    eigenvalues, vecs = hermitian_eig(m)
    return (vecs * fn(eigenvalues)) @ dagger(vecs)


def inv_sqrt_psd(m: np.ndarray, floor: float | None = None) -> CMatrix:
    """Pseudo-inverse square root of a positive semidefinite matrix.

    Eigenvalues at or below ``floor`` map to 0. The default floor is
    1e-12 times the largest eigenvalue.

    Raises:
        NotPSD: if an eigenvalue is below -1e-10.
    """
    eigenvalues, vecs = hermitian_eig(m)
    if eigenvalues[0] < -PSD_TOL:
        raise NotPSD(f"Matrix has negative eigenvalue {eigenvalues[0]:.3e}")
    if floor is None:
        floor = FLOOR_FACTOR * max(float(eigenvalues[-1]), 0.0)
    scale = np.zeros_like(eigenvalues)
    keep = eigenvalues > floor
    scale[keep] = 1.0 / np.sqrt(eigenvalues[keep])
    return (vecs * scale) @ dagger(vecs)


def sqrt_psd(m: np.ndarray) -> CMatrix:
    """Hermitian PSD square root; round-off negatives are clipped to 0."""
    eigenvalues, _ = hermitian_eig(m)
    if eigenvalues[0] < -PSD_TOL:
        raise NotPSD(f"Matrix has negative eigenvalue {eigenvalues[0]:.3e}")
    return _spectral_function(m, lambda lam: np.sqrt(np.clip(lam, 0.0, None)))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in bits of a (not necessarily normalized) PSD matrix's spectrum."""
    eigenvalues, _ = hermitian_eig(rho)
    lam = np.clip(eigenvalues, 0.0, None)
    return float(-np.sum(xlogy(lam, lam)) / np.log(2.0))


def random_gaussian_matrix(dim: int, rng: np.random.Generator) -> CMatrix:
    """Complex matrix with independent standard-normal real and imaginary parts.

    Real parts are drawn first, then imaginary parts, each as one
    ``(dim, dim)`` block in row-major order.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    real = rng.standard_normal((dim, dim))
    imag = rng.standard_normal((dim, dim))
    return real + 1j * imag
