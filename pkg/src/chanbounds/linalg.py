"""Dense complex linear algebra helpers.

Matrices are plain numpy arrays; these functions validate their inputs and
fix the tolerances used throughout the package.
"""
import numpy as np

from .errors import InvalidInput, NotHermitian, NotPSD, ShapeError

HERMITIAN_RTOL = 1e-10
CLAMP_FLOOR = -1e-10
PSD_FLOOR = -1e-8


def as_matrix(a, name="matrix"):
    """Coerce to a finite 2-d complex array."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInput(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def _gram_eigvals(a):
    # singular values squared, via the smaller Gram matrix
    if a.shape[0] < a.shape[1]:
        g = a @ dagger(a)
    else:
        g = dagger(a) @ a
    return np.clip(np.linalg.eigvalsh(g), 0.0, None)


def spectral_norm(a):
    """Largest singular value."""
    a = as_matrix(a)
    return float(np.sqrt(_gram_eigvals(a)[-1]))


def trace_norm(a):
    """Sum of singular values."""
    a = as_matrix(a)
    return float(np.sum(np.sqrt(_gram_eigvals(a))))


def frobenius_norm(a):
    a = as_matrix(a)
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


class HermitianEig:
    """Ascending eigenvalues with orthonormal eigenvectors in the columns."""

    __slots__ = ("eigenvalues", "eigenvectors")

    def __init__(self, eigenvalues, eigenvectors):
        self.eigenvalues = eigenvalues
        self.eigenvectors = eigenvectors

    def __iter__(self):
        return iter((self.eigenvalues, self.eigenvectors))

    def projectors(self):
        """Rank-one projectors onto each eigenvector."""
        v = self.eigenvectors
        return [np.outer(v[:, k], np.conj(v[:, k])) for k in range(v.shape[1])]

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def hermitian_part(a):
    return 0.5 * (a + dagger(a))


def check_hermitian(a, name="matrix", rtol=HERMITIAN_RTOL):
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")
    scale = max(spectral_norm(a), 1.0)
    if spectral_norm(a - dagger(a)) > rtol * scale:
        raise NotHermitian(f"{name} is not Hermitian")
    return hermitian_part(a)


def eig_hermitian(a):
    h = check_hermitian(a)
    w, v = np.linalg.eigh(h)
    return HermitianEig(w, v)


def psd_sqrt(a):
    """Principal square root of a positive semidefinite matrix."""
    w, v = eig_hermitian(a)
    if w[0] < PSD_FLOOR:
        raise NotPSD(f"matrix has eigenvalue {w[0]:.3e} < 0")
    w = np.where(w < CLAMP_FLOOR, 0.0, np.clip(w, 0.0, None))
    return (v * np.sqrt(w)) @ dagger(v)


def max_entangled_vector(d):
    """Unnormalized sum_i |i>|i> as a d^2 x 1 column."""
    if int(d) != d or d < 1:
        raise InvalidInput(f"dimension must be a positive integer, got {d}")
    d = int(d)
    return np.eye(d, dtype=complex).reshape(d * d, 1)


def partial_trace(rho, dims, keep):
    """Trace out every tensor factor not listed in ``keep``."""
    dims = list(dims)
    keep = [keep] if isinstance(keep, (int, np.integer)) else list(keep)
    k = len(dims)
    t = np.asarray(rho).reshape(dims + dims)
    traced = [i for i in range(k) if i not in keep]
    # trace from the highest axis down so earlier indices stay valid
    for i in sorted(traced, reverse=True):
        cur = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + cur)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(d, d)


def random_unitary(d, rng):
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_pure_state(d, rng):
    """Haar-random unit vector from a normalized complex Gaussian."""
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)
