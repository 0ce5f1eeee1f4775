"""Quantum channels as Kraus lists, Choi operators and isometric extensions,
plus smooth one-parameter channel families with analytic derivatives."""
from dataclasses import dataclass
import json
import math
import os

import numpy as np

from .errors import (InvalidInput, InvalidParam, KrausCountMismatch, NotCPTP,
                     NotPSD, OutOfDomain, ShapeError, UnknownChannel)
from .linalg import as_matrix, check_hermitian, dagger, partial_trace

CPTP_TOL = 1e-8
RANK_CUTOFF = 1e-12

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class KrausChannel:
    """CPTP map rho -> sum_i K_i rho K_i^dagger with K_i of shape (d_out, d_in)."""

    def __init__(self, kraus, d_in=None, d_out=None, check=True):
        kraus = [as_matrix(k, "Kraus operator") for k in kraus]
        if not kraus:
            raise InvalidInput("a channel needs at least one Kraus operator")
        d_out_k, d_in_k = kraus[0].shape
        self.d_in = d_in_k if d_in is None else int(d_in)
        self.d_out = d_out_k if d_out is None else int(d_out)
        for k in kraus:
            if k.shape != (self.d_out, self.d_in):
                raise ShapeError(f"Kraus operator shape {k.shape} != ({self.d_out}, {self.d_in})")
        self.kraus = tuple(kraus)
        if check:
            err = cptp_error(self.kraus)
            if err > CPTP_TOL:
                raise NotCPTP(f"sum K^dagger K deviates from identity by {err:.3e}")

    def __len__(self):
        return len(self.kraus)

    def apply(self, rho):
        return sum(k @ rho @ dagger(k) for k in self.kraus)

    def apply_on_output_of(self, rho_ra, d_ref):
        """(id_R (x) N)(rho_RA)."""
        ident = np.eye(d_ref)
        return sum(np.kron(ident, k) @ rho_ra @ dagger(np.kron(ident, k)) for k in self.kraus)

    def __repr__(self):
        return f"KrausChannel(d_in={self.d_in}, d_out={self.d_out}, kraus={len(self.kraus)})"


def cptp_error(kraus):
    d_in = kraus[0].shape[1]
    s = sum(dagger(k) @ k for k in kraus)
    return float(np.abs(s - np.eye(d_in)).max())


@dataclass(frozen=True)
class ChoiOperator:
    """(id (x) N)(|Gamma><Gamma|), input factor first."""
    matrix: np.ndarray
    d_in: int
    d_out: int

    def __post_init__(self):
        m = self.matrix
        n = self.d_in * self.d_out
        if m.shape != (n, n):
            raise ShapeError(f"Choi matrix must be {n}x{n}")
        red = partial_trace(m, [self.d_in, self.d_out], keep=[0])
        if np.abs(red - np.eye(self.d_in)).max() > CPTP_TOL:
            raise NotCPTP("partial trace of the Choi operator over the output is not the identity")


@dataclass(frozen=True)
class IsometricExtension:
    """V = sum_i |i> (x) K_i, rows indexed by e * d_out + b."""
    v: np.ndarray
    d_in: int
    d_out: int
    d_env: int

    def __post_init__(self):
        if self.v.shape != (self.d_env * self.d_out, self.d_in):
            raise ShapeError("isometry shape does not match its dimensions")
        if np.abs(dagger(self.v) @ self.v - np.eye(self.d_in)).max() > CPTP_TOL:
            raise NotCPTP("V^dagger V is not the identity")

    def kraus(self):
        return [self.v[e * self.d_out:(e + 1) * self.d_out] for e in range(self.d_env)]

    def channel(self):
        return KrausChannel(self.kraus(), self.d_in, self.d_out)


def _vec(k):
    # (I (x) K)|Gamma> has entry K[b, i] at i * d_out + b
    return k.T.reshape(-1)


def choi_of_channel(ch):
    if cptp_error(ch.kraus) > CPTP_TOL:
        raise NotCPTP("channel is not trace preserving")
    vecs = np.array([_vec(k) for k in ch.kraus])
    return ChoiOperator(vecs.T @ np.conj(vecs), ch.d_in, ch.d_out)


def canonical_kraus(choi):
    """Kraus operators from the Choi eigendecomposition, zero-padded to d_in*d_out."""
    d_in, d_out = choi.d_in, choi.d_out
    h = 0.5 * (choi.matrix + dagger(choi.matrix))
    w, v = np.linalg.eigh(h)
    if w[0] < -CPTP_TOL:
        raise NotPSD(f"Choi operator has eigenvalue {w[0]:.3e}")
    order = np.argsort(w)[::-1]
    kraus = []
    for idx in order:
        lam = w[idx]
        if lam < RANK_CUTOFF:
            kraus.append(np.zeros((d_out, d_in), dtype=complex))
        else:
            # column-major unvectorization
            kraus.append(math.sqrt(lam) * v[:, idx].reshape(d_in, d_out).T)
    return KrausChannel(kraus, d_in, d_out)


def isometric_extension(ch):
    if len(ch.kraus) != ch.d_in * ch.d_out:
        raise KrausCountMismatch(
            f"expected {ch.d_in * ch.d_out} Kraus operators, got {len(ch.kraus)}; canonicalize first")
    return IsometricExtension(np.vstack(ch.kraus), ch.d_in, ch.d_out, len(ch.kraus))


def canonical_isometry(ch):
    """Shortcut: re-canonicalize through the Choi operator, then extend."""
    return isometric_extension(canonical_kraus(choi_of_channel(ch)))


def pad_kraus(kraus, count):
    kraus = list(kraus)
    if len(kraus) > count:
        raise KrausCountMismatch(f"{len(kraus)} Kraus operators exceed environment size {count}")
    zero = np.zeros_like(kraus[0])
    return kraus + [zero] * (count - len(kraus))


def tensor_channel(*channels):
    """Kraus form of N_1 (x) N_2 (x) ..."""
    kraus = [np.ones((1, 1), dtype=complex)]
    for ch in channels:
        kraus = [np.kron(a, b) for a in kraus for b in ch.kraus]
    d_in = int(np.prod([c.d_in for c in channels]))
    d_out = int(np.prod([c.d_out for c in channels]))
    return KrausChannel(kraus, d_in, d_out)


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

class ChannelFamily:
    """theta -> N_theta with a fixed number of Kraus operators and their derivatives."""

    def __init__(self, name, kraus_fn, dkraus_fn, theta_domain, d_in, d_out):
        lo, hi = theta_domain
        if not lo < hi:
            raise InvalidInput("theta domain must be a nonempty open interval")
        self.name = name
        self.theta_domain = (float(lo), float(hi))
        self._kraus = kraus_fn
        self._dkraus = dkraus_fn
        self.d_in = d_in
        self.d_out = d_out

    def check_theta(self, theta):
        lo, hi = self.theta_domain
        if not (lo < theta < hi) or not math.isfinite(theta):
            raise OutOfDomain(f"theta={theta} outside ({lo}, {hi})")

    def kraus_at(self, theta):
        self.check_theta(theta)
        return KrausChannel(self._kraus(theta), self.d_in, self.d_out)

    def dkraus_at(self, theta):
        self.check_theta(theta)
        return [np.asarray(k, dtype=complex) for k in self._dkraus(theta)]

    def __repr__(self):
        return f"ChannelFamily({self.name!r}, domain={self.theta_domain})"


def family_isometry_and_derivative(fam, theta):
    """Isometric extension of N_theta (environment padded to d_in*d_out) and dV/dtheta."""
    ch = fam.kraus_at(theta)
    dk = fam.dkraus_at(theta)
    if len(dk) != len(ch.kraus):
        raise KrausCountMismatch("derivative list length differs from the Kraus count")
    d_env = fam.d_in * fam.d_out
    kr = pad_kraus(ch.kraus, max(d_env, len(ch.kraus)))
    dk = pad_kraus(dk, len(kr))
    iso = IsometricExtension(np.vstack(kr), fam.d_in, fam.d_out, len(kr))
    return iso, np.vstack(dk)


# ---------------------------------------------------------------------------
# builtins
# ---------------------------------------------------------------------------

def rz(theta):
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _need(params, count, name):
    if len(params) != count:
        raise InvalidParam(f"{name} takes {count} parameter(s), got {len(params)}")
    vals = [float(p) for p in params]
    if not all(math.isfinite(v) for v in vals):
        raise InvalidParam(f"{name} parameters must be finite")
    return vals


def _in_range(value, lo, hi, name):
    if not lo <= value <= hi:
        raise InvalidParam(f"{name} parameter {value} outside [{lo}, {hi}]")


def _depolarizing(p):
    _in_range(p, 0.0, 4.0 / 3.0, "depolarizing")
    return [math.sqrt(1 - 3 * p / 4) * PAULI_I, math.sqrt(p / 4) * PAULI_X,
            math.sqrt(p / 4) * PAULI_Y, math.sqrt(p / 4) * PAULI_Z]


def _dephasing(q):
    _in_range(q, 0.0, 1.0, "dephasing")
    return [math.sqrt(1 - q) * PAULI_I, math.sqrt(q) * PAULI_Z]


def _amplitude_damping(g):
    _in_range(g, 0.0, 1.0, "amplitude_damping")
    return [np.array([[1, 0], [0, math.sqrt(1 - g)]], dtype=complex),
            np.array([[0, math.sqrt(g)], [0, 0]], dtype=complex)]


BUILTIN_CHANNELS = ("identity", "depolarizing", "dephasing", "amplitude_damping",
                    "unitary_rz", "unitary_given")


def builtin_channel(name, params=()):
    """Named qubit channels; ``identity`` optionally takes a dimension."""
    params = list(params)
    if name == "identity":
        d = int(_need(params, 1, name)[0]) if params else 2
        if d < 1:
            raise InvalidParam("identity dimension must be positive")
        return KrausChannel([np.eye(d, dtype=complex)])
    if name == "depolarizing":
        return KrausChannel(_depolarizing(*_need(params, 1, name)))
    if name == "dephasing":
        return KrausChannel(_dephasing(*_need(params, 1, name)))
    if name == "amplitude_damping":
        return KrausChannel(_amplitude_damping(*_need(params, 1, name)))
    if name == "unitary_rz":
        return KrausChannel([rz(*_need(params, 1, name))])
    if name == "unitary_given":
        if len(params) != 1:
            raise InvalidParam("unitary_given takes one matrix parameter")
        u = _complex_matrix(params[0])
        if u.shape[0] != u.shape[1] or np.abs(dagger(u) @ u - np.eye(u.shape[0])).max() > CPTP_TOL:
            raise InvalidParam("unitary_given needs a square unitary matrix")
        return KrausChannel([u])
    raise UnknownChannel(f"unknown channel {name!r}; choose from {', '.join(BUILTIN_CHANNELS)}")


BUILTIN_FAMILIES = ("rz", "dephasing", "amplitude_damping", "constant")


def builtin_family(name, params=(), theta_domain=None):
    """Named families.  ``constant`` wraps a fixed builtin channel given by params."""
    params = list(params)
    if name in ("rz", "unitary_rz"):
        dom = theta_domain or (-2 * math.pi, 2 * math.pi)
        return ChannelFamily("rz", lambda t: [rz(t)],
                             lambda t: [-0.5j * PAULI_Z @ rz(t)], dom, 2, 2)
    if name == "dephasing":
        dom = theta_domain or (0.0, 1.0)
        _check_domain(dom, 0.0, 1.0, name)
        return ChannelFamily(
            "dephasing", _dephasing,
            lambda t: [-0.5 / math.sqrt(1 - t) * PAULI_I, 0.5 / math.sqrt(t) * PAULI_Z],
            dom, 2, 2)
    if name == "amplitude_damping":
        dom = theta_domain or (0.0, 1.0)
        _check_domain(dom, 0.0, 1.0, name)

        def dk(g):
            return [np.array([[0, 0], [0, -0.5 / math.sqrt(1 - g)]], dtype=complex),
                    np.array([[0, 0.5 / math.sqrt(g)], [0, 0]], dtype=complex)]
        return ChannelFamily("amplitude_damping", _amplitude_damping, dk, dom, 2, 2)
    if name == "constant":
        base = builtin_channel(params[0], params[1:]) if params else builtin_channel("identity")
        dom = theta_domain or (-math.inf, math.inf)
        zeros = [np.zeros_like(k) for k in base.kraus]
        return ChannelFamily("constant", lambda t: list(base.kraus), lambda t: zeros,
                             dom, base.d_in, base.d_out)
    raise UnknownChannel(f"unknown family {name!r}; choose from {', '.join(BUILTIN_FAMILIES)}")


def _check_domain(dom, lo, hi, name):
    if dom[0] < lo or dom[1] > hi:
        raise InvalidParam(f"{name} family domain must lie inside ({lo}, {hi})")


def random_channel(d_in, d_out, n_kraus, rng):
    """Random CPTP map from a Gaussian isometry (QR of a complex Gaussian)."""
    g = rng.standard_normal((n_kraus * d_out, d_in)) + 1j * rng.standard_normal((n_kraus * d_out, d_in))
    q, _ = np.linalg.qr(g)
    return KrausChannel([q[i * d_out:(i + 1) * d_out] for i in range(n_kraus)], d_in, d_out)


def noisy_rotation_family(channel, generator):
    """theta -> exp(-i theta G) N(.) exp(i theta G): a fixed channel followed
    by a rotation about the Hermitian generator G."""
    from scipy.linalg import expm

    g = check_hermitian(generator, "generator")
    if g.shape != (channel.d_out, channel.d_out):
        raise ShapeError(f"generator must be {channel.d_out}x{channel.d_out}")
    base = list(channel.kraus)

    def kraus(t):
        u = expm(-1j * t * g)
        return [u @ k for k in base]

    def dkraus(t):
        u = expm(-1j * t * g)
        return [-1j * g @ u @ k for k in base]
    return ChannelFamily("noisy_rotation", kraus, dkraus, (-math.inf, math.inf),
                         channel.d_in, channel.d_out)


# ---------------------------------------------------------------------------
# textual and JSON descriptions
# ---------------------------------------------------------------------------

_ALIASES = {"rz": "unitary_rz", "id": "identity", "dephase": "dephasing", "ad": "amplitude_damping"}


def _complex_matrix(rows):
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed matrix: {exc}") from exc
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return as_matrix(arr[..., 0] + 1j * arr[..., 1])
    if arr.ndim == 2:
        return as_matrix(arr)
    raise InvalidInput("matrices are lists of rows of [re, im] pairs")


def _load(source):
    if isinstance(source, dict):
        return source
    if isinstance(source, str) and (source.endswith(".json") or os.path.isfile(source)):
        try:
            with open(source) as fh:
                return json.load(fh)
        except OSError as exc:
            raise InvalidInput(f"cannot read {source}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{source}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    if isinstance(source, str):
        name, _, rest = source.partition(":")
        params = [float(x) for x in rest.split(",") if x] if rest else []
        return {"kind": name, "params": params}
    raise InvalidInput(f"unsupported channel description {source!r}")


def parse_channel(source):
    """Build a channel from ``name[:p1,p2]``, a JSON path, or a parsed JSON dict."""
    try:
        obj = _load(source)
    except ValueError as exc:
        if isinstance(exc, InvalidInput):
            raise
        raise InvalidInput(f"bad channel description {source!r}: {exc}") from exc
    if "kraus" in obj:
        kraus = [_complex_matrix(k) for k in obj["kraus"]]
        ch = KrausChannel(kraus, obj.get("d_in"), obj.get("d_out"))
    else:
        if "kind" not in obj:
            raise InvalidInput("channel description needs either 'kind' or 'kraus'")
        kind = _ALIASES.get(obj["kind"], obj["kind"])
        ch = builtin_channel(kind, obj.get("params", []))
    for key in ("d_in", "d_out"):
        if key in obj and getattr(ch, key) != int(obj[key]):
            raise ShapeError(f"{key}={obj[key]} does not match the channel ({getattr(ch, key)})")
    return ch


def parse_family(source):
    """Family from ``name[:params]``, ``constant:<channel>[:params]``, or JSON.

    JSON objects may carry a ``theta_domain`` of ``[lo, hi]``.
    """
    if isinstance(source, str) and source.startswith("constant:") and not os.path.isfile(source):
        parts = source.split(":")
        params = [parts[1]] + ([float(x) for x in parts[2].split(",") if x] if len(parts) > 2 else [])
        return builtin_family("constant", params)
    obj = _load(source)
    if "kind" not in obj:
        raise InvalidInput("family description needs a 'kind'")
    dom = obj.get("theta_domain")
    if dom is not None:
        if len(dom) != 2:
            raise InvalidInput("theta_domain is [lo, hi]")
        dom = (float(dom[0]), float(dom[1]))
    return builtin_family(obj["kind"], obj.get("params", []), dom)
