import math

import numpy as np
import pytest

from chanbounds import metrics
from chanbounds.channels import builtin_channel, builtin_family, tensor_channel
from chanbounds.metrics import (ChannelPair, adaptive_bures_bound, adaptive_fisher_bound,
                                adaptive_value, bures_sq_channels, fisher_sql_denominator,
                                fisher_terms, line_search_1d, overlap_terms,
                                parallel_bures_bound, parallel_fisher_bound, parallel_value,
                                root_fidelity_channels, sld_fisher_channel)
from chanbounds.channels import family_isometry_and_derivative
from chanbounds.oracle import probe_bures_sq

from conftest import random_pair

IDENT = builtin_channel("identity")


def rz_pair(theta):
    return ChannelPair.from_channels(IDENT, builtin_channel("unitary_rz", [theta]))


def same_pair(rng):
    from chanbounds.channels import random_channel
    ch = random_channel(2, 2, 2, rng)
    return ChannelPair.from_channels(ch, ch)


def test_root_fidelity_examples(rng):
    rep = root_fidelity_channels(same_pair(rng))
    assert rep.value == pytest.approx(1, abs=1e-6)
    assert rep.theorem_tag == "root_fidelity_sdp"
    assert root_fidelity_channels(rz_pair(math.pi / 2)).value == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    assert root_fidelity_channels(rz_pair(math.pi)).value <= 1e-6


def test_bures_examples(rng):
    assert bures_sq_channels(same_pair(rng)).value == pytest.approx(0, abs=1e-6)
    assert bures_sq_channels(rz_pair(math.pi / 2)).value == pytest.approx(2 - math.sqrt(2), abs=1e-6)
    pair = random_pair(rng)
    rep = bures_sq_channels(pair)
    assert rep.value == pytest.approx(2 * (1 - root_fidelity_channels(pair).value), abs=1e-6)
    assert 2 * max(abs(x) for x in np.linalg.eigvalsh(
        np.eye(2) - 0.5 * (pair.overlap(rep.witness["W"]) + pair.overlap(rep.witness["W"]).conj().T))
    ) == pytest.approx(rep.value, abs=1e-9)


def test_parallel_bures(rng):
    pair = same_pair(rng)
    for n in (1, 3):
        assert parallel_bures_bound(pair, n).value == pytest.approx(0, abs=1e-6)
    pair = random_pair(rng)
    assert parallel_bures_bound(pair, 1).value == pytest.approx(bures_sq_channels(pair).value, abs=1e-6)
    rep = parallel_bures_bound(rz_pair(math.pi / 4), 4)
    a, b = overlap_terms(rz_pair(math.pi / 4), rep.witness["W"])
    assert parallel_value(a, b, 4) == pytest.approx(rep.value, abs=1e-9)
    u4 = tensor_channel(*[builtin_channel("unitary_rz", [math.pi / 4])] * 4)
    i4 = tensor_channel(*[IDENT] * 4)
    probe = probe_bures_sq(i4, u4, samples=2000, seed=1)
    assert rep.value >= probe.value - 1e-6
    with pytest.raises(ValueError):
        parallel_bures_bound(pair, 0)


def test_adaptive_bures(rng):
    pair = random_pair(rng)
    ada = adaptive_bures_bound(pair, 1)
    assert ada.value == pytest.approx(bures_sq_channels(pair).value, abs=1e-6)
    assert adaptive_bures_bound(same_pair(rng), 4).value == pytest.approx(0, abs=1e-6)
    ada = adaptive_bures_bound(pair, 5)
    assert ada.value >= parallel_bures_bound(pair, 5).value - 1e-6
    a, b = overlap_terms(pair, ada.witness["W"])
    assert adaptive_value(a, b, 5) == pytest.approx(ada.value, abs=1e-12)
    assert metrics.spectral_norm(ada.witness["W"]) <= 1 + 1e-12


def test_sql_denominator(rng):
    rep = metrics.bures_sql_denominator(same_pair(rng))
    assert rep.value == pytest.approx(0, abs=1e-6)
    rep = metrics.bures_sql_denominator(rz_pair(0.7))
    assert rep.solver_status == "infeasible" and rep.value == math.inf


def test_fisher_examples():
    assert sld_fisher_channel(builtin_family("rz"), 0.4).value == pytest.approx(1, abs=1e-6)
    assert sld_fisher_channel(builtin_family("constant"), 0.4).value == pytest.approx(0, abs=1e-7)
    rep = sld_fisher_channel(builtin_family("dephasing"), 0.25)
    assert rep.value == pytest.approx(16 / 3, rel=1e-6)
    h = rep.witness["H"]
    assert np.allclose(h, h.conj().T)
    v, dv = family_isometry_and_derivative(builtin_family("dephasing"), 0.25)
    assert 4 * fisher_terms(v, dv, h)[0] == pytest.approx(rep.value, abs=1e-12)


@pytest.mark.parametrize("name,theta", [("dephasing", 0.25), ("amplitude_damping", 0.1), ("rz", 0.3)])
def test_fisher_bounds_consistent(name, theta):
    fam = builtin_family(name)
    one = sld_fisher_channel(fam, theta).value
    assert parallel_fisher_bound(fam, theta, 1).value == pytest.approx(one, abs=1e-6)
    assert adaptive_fisher_bound(fam, theta, 1).value == pytest.approx(one, abs=1e-6)
    par = parallel_fisher_bound(fam, theta, 4).value
    ada = adaptive_fisher_bound(fam, theta, 4).value
    assert par >= 4 * one - 1e-6
    assert ada >= par - 1e-6


def test_fisher_constant_family():
    fam = builtin_family("constant")
    assert adaptive_fisher_bound(fam, 0.0, 3).value == pytest.approx(0, abs=1e-6)
    rep = fisher_sql_denominator(fam, 0.0)
    assert rep.value == pytest.approx(0, abs=1e-7)
    assert np.abs(rep.witness["H"]).max() <= 1e-5


def test_fisher_sql_denominator():
    assert fisher_sql_denominator(builtin_family("rz"), 0.3).solver_status == "infeasible"
    rep = fisher_sql_denominator(builtin_family("dephasing"), 0.25)
    assert math.isfinite(rep.value)
    assert rep.value >= sld_fisher_channel(builtin_family("dephasing"), 0.25).value / 4 - 1e-6
    assert rep.value == pytest.approx(4 / 3, rel=1e-5)


def test_line_search_examples():
    nu, val = line_search_1d(lambda v: v + 1 / v)
    assert nu == pytest.approx(1) and val == pytest.approx(2)
    nu, val = line_search_1d(lambda v: (v - 0.3) ** 2)
    assert nu == pytest.approx(0.3, abs=1e-6)

    def two_basins(v):
        return min((math.log10(v) + 3) ** 2 + 0.1, 5 * (v - 0.6) ** 2)
    nu, val = line_search_1d(two_basins)
    dense = np.geomspace(1e-4, 1, 10_000)
    best = min(two_basins(x) for x in dense)
    assert val <= best + 1e-9
    assert nu == pytest.approx(0.6, abs=1e-4)


def test_report_serializes(rng):
    rep = bures_sq_channels(random_pair(rng))
    d = rep.to_dict()
    assert d["theorem_tag"] == "bures_sq_sdp"
    assert len(d["witness"]["W"]) == 4
