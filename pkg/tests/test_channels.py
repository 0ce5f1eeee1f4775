import json
import math

import numpy as np
import pytest

from chanbounds.channels import (PAULI_X, PAULI_Z, builtin_channel, builtin_family,
                                 canonical_isometry, canonical_kraus, parse_channel,
                                 choi_of_channel, parse_family,
                                 family_isometry_and_derivative, isometric_extension,
                                 noisy_rotation_family, random_channel, tensor_channel)
from chanbounds.errors import (InvalidInput, InvalidParam, KrausCountMismatch, NotCPTP,
                               NotPSD, OutOfDomain, UnknownChannel)
from chanbounds.channels import ChoiOperator, KrausChannel
from chanbounds.linalg import partial_trace, random_pure_state
from chanbounds.oracle import finite_diff_kraus


def test_choi_examples():
    c = choi_of_channel(builtin_channel("identity")).matrix
    assert np.linalg.matrix_rank(c, tol=1e-10) == 1
    assert np.trace(c).real == pytest.approx(2)
    assert np.allclose(choi_of_channel(builtin_channel("depolarizing", [1.0])).matrix, np.eye(4) / 2)
    w = np.linalg.eigvalsh(choi_of_channel(builtin_channel("dephasing", [0.3])).matrix)
    assert np.allclose(sorted(w)[-2:], [0.6, 1.4])


def test_choi_rejects_non_cptp():
    bad = KrausChannel([np.eye(2) * 1.1], check=False)
    with pytest.raises(NotCPTP):
        choi_of_channel(bad)
    with pytest.raises(NotCPTP):
        KrausChannel([np.eye(2) * 1.1])


def test_canonical_kraus_identity_and_dephasing():
    ks = canonical_kraus(choi_of_channel(builtin_channel("identity"))).kraus
    assert len(ks) == 4
    assert np.allclose(ks[0] @ ks[0].conj().T, np.eye(2))
    assert all(np.allclose(k, 0) for k in ks[1:])
    ks = canonical_kraus(choi_of_channel(builtin_channel("dephasing", [0.3]))).kraus
    norms = sorted((np.linalg.norm(k) ** 2 for k in ks), reverse=True)
    assert norms[:2] == pytest.approx([1.4, 0.6])
    assert norms[2:] == pytest.approx([0, 0], abs=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_choi_round_trip(d, rng):
    ch = random_channel(d, d, 3, rng)
    c = choi_of_channel(ch).matrix
    again = choi_of_channel(canonical_kraus(choi_of_channel(ch))).matrix
    assert np.abs(again - c).max() <= 1e-8


def test_canonical_kraus_rejects_negative():
    c = choi_of_channel(builtin_channel("identity")).matrix
    bad = c - 0.01 * np.eye(4) + 0.005 * np.eye(4)
    with pytest.raises((NotPSD, NotCPTP)):
        canonical_kraus(ChoiOperator(bad, 2, 2))


def test_isometric_extension(rng):
    with pytest.raises(KrausCountMismatch):
        isometric_extension(builtin_channel("identity"))
    iso = canonical_isometry(builtin_channel("identity"))
    assert np.allclose(iso.v.conj().T @ iso.v, np.eye(2))
    ch = random_channel(2, 2, 2, rng)
    iso = canonical_isometry(ch)
    psi = random_pure_state(2, rng)
    full = iso.v @ np.outer(psi, psi.conj()) @ iso.v.conj().T
    out = partial_trace(full, (iso.d_env, 2), keep=[1])
    assert np.allclose(out, ch.apply(np.outer(psi, psi.conj())), atol=1e-12)


def test_builtin_channels():
    dep = builtin_channel("depolarizing", [0.0])
    assert np.allclose(choi_of_channel(dep).matrix, choi_of_channel(builtin_channel("identity")).matrix)
    deph = builtin_channel("dephasing", [1.0])
    rho = np.array([[0.3, 0.2], [0.2, 0.7]])
    assert np.allclose(deph.apply(rho), PAULI_Z @ rho @ PAULI_Z)
    builtin_channel("amplitude_damping", [0.1])
    with pytest.raises(UnknownChannel):
        builtin_channel("teleporter")
    with pytest.raises(InvalidParam):
        builtin_channel("dephasing", [1.5])
    with pytest.raises(InvalidParam):
        builtin_channel("unitary_given", [[[1, 0], [0, 2]]])


def test_family_derivatives():
    rzf = builtin_family("rz")
    v, dv = family_isometry_and_derivative(rzf, 0.7)
    assert np.allclose(dv, np.kron(np.eye(4)[:, :1], -0.5j * PAULI_Z) @ v.v[:2])
    _, dv = family_isometry_and_derivative(builtin_family("dephasing"), 0.25)
    assert np.allclose(dv[:2], -1 / (2 * math.sqrt(0.75)) * np.eye(2))
    assert np.allclose(dv[2:4], 1 / (2 * math.sqrt(0.25)) * PAULI_Z)
    assert finite_diff_kraus(builtin_family("amplitude_damping"), 0.1) <= 1e-6
    assert finite_diff_kraus(rzf, 0.3) <= 1e-8
    assert finite_diff_kraus(builtin_family("dephasing"), 0.5) <= 1e-6
    assert finite_diff_kraus(builtin_family("constant"), 0.5) == 0
    with pytest.raises(OutOfDomain):
        family_isometry_and_derivative(builtin_family("dephasing"), 1.2)


def test_noisy_rotation_family(rng):
    g = PAULI_X + 0.3 * PAULI_Z
    fam = noisy_rotation_family(random_channel(2, 2, 2, rng), g)
    assert finite_diff_kraus(fam, -0.4) <= 1e-6


def test_tensor_channel():
    t = tensor_channel(builtin_channel("identity"), builtin_channel("dephasing", [0.2]))
    assert (t.d_in, t.d_out, len(t)) == (4, 4, 2)


def test_specs(tmp_path):
    assert parse_channel("rz:0.5").d_in == 2
    assert len(parse_channel("dephasing:0.3")) == 2
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"kraus": [[[[0, 0], [1, 0]], [[1, 0], [0, 0]]]]}))
    ch = parse_channel(str(path))
    assert np.allclose(ch.kraus[0], PAULI_X)
    path.write_text("{not json")
    with pytest.raises(InvalidInput, match="malformed JSON"):
        parse_channel(str(path))
    with pytest.raises(InvalidInput):
        parse_channel("dephasing:abc")
    fam = parse_family("constant:dephasing:0.3")
    assert fam.name == "constant"
    fam = parse_family({"kind": "dephasing", "theta_domain": [0.1, 0.9]})
    assert fam.theta_domain == (0.1, 0.9)
