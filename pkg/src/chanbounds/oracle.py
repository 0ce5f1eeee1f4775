"""Independent references for the bounds: exact diamond norms at tiny n,
random-probe sampling, finite differences and exhaustive integer scans.

None of these reuse the contraction or Hamiltonian formulations of
:mod:`chanbounds.metrics`.
"""
from dataclasses import asdict, dataclass, field
import math

import numpy as np

from .channels import choi_of_channel, tensor_channel
from .errors import InvalidInput, TooLarge
from .linalg import dagger, random_pure_state
from .sdp import SdpProblem, solve
from .states import StateFamily, bures_distance_states, root_fidelity_states, sld_fisher

DIAMOND_DIM_CAP = 16


@dataclass
class OracleReport:
    quantity: str
    value: float
    method: str
    samples: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _rng(seed):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# diamond norm
# ---------------------------------------------------------------------------

def diamond_norm_exact(p, ch1, q, ch2, n=1):
    """||p N1^(x)n - q N2^(x)n|| in the diamond norm.

    For a Hermiticity-preserving map with Choi operator J this is
    min ||Tr_out Z|| over Z with -Z <= J <= Z.
    """
    if n not in (1, 2):
        raise TooLarge("exact diamond norms are limited to n <= 2")
    if ch1.d_in != ch2.d_in or ch1.d_out != ch2.d_out:
        raise InvalidInput("channels must share input and output dimensions")
    d_in, d_out = ch1.d_in ** n, ch1.d_out ** n
    if d_in * d_out > DIAMOND_DIM_CAP:
        raise TooLarge(f"Choi dimension {d_in * d_out} exceeds {DIAMOND_DIM_CAP}")
    big1 = tensor_channel(*[ch1] * n)
    big2 = tensor_channel(*[ch2] * n)
    j = p * choi_of_channel(big1).matrix - q * choi_of_channel(big2).matrix
    dim = d_in * d_out
    prob = SdpProblem(dim_cap=2 * dim + d_in)
    z = prob.hermitian("Z", dim)
    t = prob.real("t")
    prob.psd(z - j)
    prob.psd(z + j)
    # partial trace over the output factor, written as sum_b (I (x) <b|) Z (I (x) |b>)
    red = None
    for b in range(d_out):
        e = np.zeros((dim, d_in))
        e[np.arange(d_in) * d_out + b, np.arange(d_in)] = 1.0
        term = e.T @ z @ e
        red = term if red is None else red + term
    prob.psd(t.kron(np.eye(d_in)) - red)
    prob.minimize(t)
    sol = solve(prob)
    if sol.status != "optimal":
        raise RuntimeError(f"diamond norm SDP ended with status {sol.status}")
    return float(sol.objective_value)


def exact_parallel_error(p, ch1, ch2, n=1):
    """(1 - ||p N1^n - q N2^n||_diamond) / 2."""
    return 0.5 * (1.0 - diamond_norm_exact(p, ch1, 1 - p, ch2, n))


# ---------------------------------------------------------------------------
# probe sampling
# ---------------------------------------------------------------------------

def _output(ch, psi, d_ref):
    """(id_R (x) N)(|psi><psi|) for psi on R (x) A."""
    m = psi.reshape(d_ref, ch.d_in)
    outs = [m @ k.T for k in ch.kraus]
    return sum(np.outer(o.reshape(-1), np.conj(o.reshape(-1))) for o in outs)


def probe_root_fidelity(ch1, ch2, samples=10_000, seed=0, d_ref=None):
    """Smallest output root fidelity over Haar-random pure probes (an upper
    bound on the channel root fidelity)."""
    rng = _rng(seed)
    d_ref = ch1.d_in if d_ref is None else d_ref
    unitary = len(ch1.kraus) == 1 and len(ch2.kraus) == 1
    best = math.inf
    for _ in range(samples):
        psi = random_pure_state(d_ref * ch1.d_in, rng)
        if unitary:
            m = psi.reshape(d_ref, ch1.d_in)
            val = abs(np.vdot((m @ ch1.kraus[0].T).reshape(-1), (m @ ch2.kraus[0].T).reshape(-1)))
        else:
            val = root_fidelity_states(_output(ch1, psi, d_ref), _output(ch2, psi, d_ref))
        best = min(best, val)
    return OracleReport("root_fidelity", float(best), "min over Haar-random probes", samples)


def probe_bures_sq(ch1, ch2, samples=2000, seed=0, d_ref=1):
    """Largest output d_B^2 over random probes; a lower bound on the channel value."""
    rng = _rng(seed)
    best = 0.0
    for _ in range(samples):
        psi = random_pure_state(d_ref * ch1.d_in, rng)
        if len(ch1.kraus) == 1 and len(ch2.kraus) == 1:
            m = psi.reshape(d_ref, ch1.d_in)
            rf = abs(np.vdot((m @ ch1.kraus[0].T).reshape(-1), (m @ ch2.kraus[0].T).reshape(-1)))
            val = 2 * (1 - min(1.0, rf))
        else:
            val = bures_distance_states(_output(ch1, psi, d_ref), _output(ch2, psi, d_ref)) ** 2
        best = max(best, val)
    return OracleReport("bures_sq", float(best), "max over Haar-random probes", samples)


def _probe_fisher(kraus, dkraus, psi, d_ref, d_in):
    m = psi.reshape(d_ref, d_in)
    outs = [(m @ k.T).reshape(-1) for k in kraus]
    douts = [(m @ k.T).reshape(-1) for k in dkraus]
    rho = sum(np.outer(o, np.conj(o)) for o in outs)
    drho = sum(np.outer(do, np.conj(o)) for o, do in zip(outs, douts))
    drho = drho + dagger(drho)
    return sld_fisher(rho, drho, allow_singular=True)


def probe_fisher_max(fam, theta, samples=10_000, seed=0, refine=True):
    """Largest output SLD Fisher information over Haar-random probes with a
    reference system as large as the input.

    With ``refine`` the best probes are polished by Nelder-Mead in the probe
    amplitudes; every value is still the Fisher information of an actual
    probe, so the result stays a lower bound on the channel quantity.
    """
    from scipy.optimize import minimize

    rng = _rng(seed)
    kraus = fam.kraus_at(theta).kraus
    dkraus = fam.dkraus_at(theta)
    d = fam.d_in
    dim = d * d
    vals = []
    probes = []
    for _ in range(samples):
        psi = random_pure_state(dim, rng)
        vals.append(_probe_fisher(kraus, dkraus, psi, d, d))
        probes.append(psi)
    order = np.argsort(vals)[::-1]
    best = float(vals[order[0]])
    method = "max over Haar-random probes"
    if refine and best > 0:
        def neg(x):
            z = x[:dim] + 1j * x[dim:]
            return -_probe_fisher(kraus, dkraus, z / np.linalg.norm(z), d, d)
        for idx in order[:3]:
            x0 = np.concatenate([probes[idx].real, probes[idx].imag])
            res = minimize(neg, x0, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
            best = max(best, -float(res.fun))
        method += ", polished by Nelder-Mead"
    return OracleReport("sld_fisher", best, method, samples, {"theta": theta})


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def _bures_sq_channels_sdp(fam, t1, t2):
    from .estimation import pair_at
    from .metrics import bures_sq_channels
    return bures_sq_channels(pair_at(fam, t1, t2)).value


def finite_diff_bures_fisher(fam, theta, deltas=(1e-2, 1e-3)):
    """4 d_B^2(theta, theta + delta) / delta^2 for each delta, with a
    two-point Richardson limit assuming a residual linear in delta."""
    deltas = [float(x) for x in deltas]
    if any(not 0 < x <= 0.1 for x in deltas):
        raise InvalidInput("finite-difference steps must lie in (0, 0.1]")
    seq = []
    for dl in deltas:
        if isinstance(fam, StateFamily):
            d2 = bures_distance_states(fam.rho_at(theta), fam.rho_at(theta + dl)) ** 2
        else:
            d2 = _bures_sq_channels_sdp(fam, theta, theta + dl)
        seq.append(4 * d2 / dl ** 2)
    limit, slope = seq[-1], 0.0
    if len(seq) >= 2 and deltas[-1] != deltas[-2]:
        d1, d2 = deltas[-2], deltas[-1]
        slope = (seq[-2] - seq[-1]) / (d1 - d2)
        limit = seq[-1] - slope * d2
    return OracleReport("fisher_from_bures", float(limit), "Richardson on 4 d_B^2 / delta^2",
                        len(deltas), {"deltas": deltas, "sequence": seq, "slope": slope})


def finite_diff_kraus(fam, theta, h=1e-5):
    """Largest deviation of the supplied Kraus derivatives from a central
    difference, relative to the largest derivative norm."""
    if not 1e-7 <= h <= 1e-3:
        raise InvalidInput("step must lie in [1e-7, 1e-3]")
    dk = fam.dkraus_at(theta)
    up = fam.kraus_at(theta + h).kraus
    down = fam.kraus_at(theta - h).kraus
    scale = max(np.abs(k).max() for k in dk)
    worst = max(np.abs(d - (u - w) / (2 * h)).max() for d, u, w in zip(dk, up, down))
    if scale == 0:
        return float(worst)
    return float(worst / scale)


# ---------------------------------------------------------------------------
# exhaustive scans
# ---------------------------------------------------------------------------

def scan_min_n(a, b, c, mode="parallel", limit=10 ** 7):
    """Least n >= 1 with n (a + (n - 1) s) >= c, s = b or sqrt(a b), by stepping n."""
    s = b if mode == "parallel" else math.sqrt(a * b)
    n = 1
    while n * (a + (n - 1) * s) < c:
        n += 1
        if n > limit:
            raise RuntimeError("scan limit reached")
    return n


def linear_scan(value_at, target, n_max):
    """First n in 1..n_max whose value n g(n) reaches the target (n_max if none)."""
    for n in range(1, int(n_max) + 1):
        if value_at(n) >= target:
            return n
    return int(n_max)


def pair_scan_query(fam, grid, delta, eps, mode="parallel"):
    """Maximum over all grid pairs farther than 2 delta apart of the
    linear-scan discrimination query bound at equal priors."""
    from .discrimination import UNIT_FIDELITY, DiscriminationInstance, n_max_upper
    from .estimation import pair_at
    from .metrics import adaptive_bures_bound, parallel_bures_bound, root_fidelity_channels

    bound = parallel_bures_bound if mode == "parallel" else adaptive_bures_bound
    target = 1 - 4 * eps * (1 - eps)
    best = 0
    g = sorted(float(t) for t in grid)
    for i in range(len(g)):
        for j in range(i + 1, len(g)):
            if g[j] - g[i] <= 2 * delta:
                continue
            pair = pair_at(fam, g[i], g[j])
            if root_fidelity_channels(pair).value >= UNIT_FIDELITY:
                return math.inf
            n_max = n_max_upper(DiscriminationInstance(pair, 0.5, eps))
            best = max(best, linear_scan(lambda n: bound(pair, n).value, target, n_max))
    return best
