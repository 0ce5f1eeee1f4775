"""Fidelity, Bures distance and SLD Fisher information of density operators."""
import math

import numpy as np

from .errors import InvalidInput, NotPSD, OutOfDomain, ShapeError, SingularState
from .linalg import as_matrix, check_hermitian, dagger, psd_sqrt, trace_norm

STATE_TOL = 1e-10
SINGULAR_FLOOR = 1e-9
NOISE_MIX = 1e-6


def density(rho, name="state"):
    """Validate a density matrix and return its Hermitian part."""
    rho = check_hermitian(as_matrix(rho, name), name)
    w = np.linalg.eigvalsh(rho)
    if w[0] < -STATE_TOL:
        raise NotPSD(f"{name} has eigenvalue {w[0]:.3e}")
    if abs(np.trace(rho).real - 1.0) > STATE_TOL:
        raise InvalidInput(f"{name} has trace {np.trace(rho).real:.12f}")
    return rho


def pure(psi):
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, np.conj(psi))


def root_fidelity_states(rho, sigma):
    rho, sigma = density(rho, "rho"), density(sigma, "sigma")
    if rho.shape != sigma.shape:
        raise ShapeError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    return min(1.0, trace_norm(psd_sqrt(rho) @ psd_sqrt(sigma)))


def fidelity_states(rho, sigma):
    """F = ||sqrt(rho) sqrt(sigma)||_1^2."""
    return root_fidelity_states(rho, sigma) ** 2


def bures_distance_states(rho, sigma):
    return math.sqrt(max(0.0, 2.0 * (1.0 - root_fidelity_states(rho, sigma))))


class StateFamily:
    """Smooth theta -> rho_theta with its derivative."""

    def __init__(self, rho_fn, drho_fn, theta_domain=(-math.inf, math.inf)):
        self._rho = rho_fn
        self._drho = drho_fn
        self.theta_domain = tuple(theta_domain)

    def check_theta(self, theta):
        lo, hi = self.theta_domain
        if not lo < theta < hi:
            raise OutOfDomain(f"theta={theta} outside ({lo}, {hi})")

    def rho_at(self, theta):
        self.check_theta(theta)
        return density(self._rho(theta))

    def drho_at(self, theta):
        self.check_theta(theta)
        d = check_hermitian(as_matrix(self._drho(theta)), "derivative")
        if abs(np.trace(d)) > 1e-9:
            raise InvalidInput("derivative of a state family must be traceless")
        return d


def _spectral(rho, drho, allow_singular=False, mix_noise=False):
    d = rho.shape[0]
    if mix_noise:
        rho = (1 - NOISE_MIX) * rho + NOISE_MIX * np.eye(d) / d
        drho = (1 - NOISE_MIX) * drho
    w, v = np.linalg.eigh(rho)
    if w[0] < SINGULAR_FLOOR and not allow_singular:
        raise SingularState(f"state has eigenvalue {w[0]:.3e}; Fisher formulas need a full-rank state")
    w = np.clip(w, 0.0, None)
    return w, v, dagger(v) @ drho @ v


def sld_fisher(rho, drho, allow_singular=False, mix_noise=False):
    """Spectral sum 2/(l_i + l_j) |<i|drho|j>|^2.

    With ``allow_singular`` the sum runs over pairs whose eigenvalue sum is
    positive, which is the usual extension when the rank is locally constant.
    """
    w, _, dd = _spectral(rho, drho, allow_singular, mix_noise)
    s = w[:, None] + w[None, :]
    mask = s > 1e-12 * max(1.0, w[-1])
    return float(np.sum(2.0 * np.abs(dd[mask]) ** 2 / s[mask]))


def sld_fisher_states(fam, theta, allow_singular=False, mix_noise=False):
    return sld_fisher(fam.rho_at(theta), fam.drho_at(theta), allow_singular, mix_noise)


def sqrt_derivative(rho, drho):
    """d sqrt(rho) from the first divided difference 1/(sqrt(x)+sqrt(y))."""
    w, v, dd = _spectral(rho, drho)
    s = np.sqrt(w)
    return v @ (dd / (s[:, None] + s[None, :])) @ dagger(v)


def optimal_hamiltonian(rho, drho):
    """Hermitian H solving rho H + H rho = i [d sqrt(rho), sqrt(rho)]."""
    w, v, dd = _spectral(rho, drho)
    s = np.sqrt(w)
    num = s[:, None] - s[None, :]
    den = (w[:, None] + w[None, :]) * (s[:, None] + s[None, :])
    h = -1j * (num / den) * dd
    h = v @ h @ dagger(v)
    return 0.5 * (h + dagger(h))


def sld_optimal_hamiltonian(fam, theta):
    return optimal_hamiltonian(fam.rho_at(theta), fam.drho_at(theta))


def bloch_rotation_family(r=0.9):
    """rho = (I + r (cos t Z + sin t X)) / 2."""
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    return StateFamily(lambda t: 0.5 * (np.eye(2) + r * (math.cos(t) * z + math.sin(t) * x)),
                       lambda t: 0.5 * r * (-math.sin(t) * z + math.cos(t) * x))


def classical_family():
    """diag(t, 1 - t) on (0, 1)."""
    return StateFamily(lambda t: np.diag([t, 1 - t]).astype(complex),
                       lambda t: np.diag([1.0, -1.0]).astype(complex), (0.0, 1.0))
