import math

import pytest
from hypothesis import given, settings, strategies as st

from chanbounds import discrimination as disc
from chanbounds.channels import builtin_channel
from chanbounds.discrimination import (INFINITE, DiscriminationInstance, Trivial, binary_search,
                                       error_prob_floor, floor_from_bound, n_max_upper,
                                       quadratic_min_n, query_lower_closed_form,
                                       trivial_case_check)
from chanbounds.errors import InvalidInput, NoFiniteN
from chanbounds.metrics import ChannelPair
from chanbounds.oracle import exact_parallel_error, linear_scan, scan_min_n

IDENT = builtin_channel("identity")


def rz(theta):
    return builtin_channel("unitary_rz", [theta])


def rz_pair(theta):
    return ChannelPair.from_channels(IDENT, rz(theta))


def test_trivial_cases():
    inst = DiscriminationInstance(rz_pair(math.pi / 2), 0.5, 0.5)
    res = trivial_case_check(inst)
    assert res == 1 and isinstance(res, Trivial) and repr(res) == "Trivial(1)"
    assert isinstance(trivial_case_check(DiscriminationInstance(rz_pair(math.pi), 0.5, 0.0)), Trivial)
    assert trivial_case_check(DiscriminationInstance(rz_pair(math.pi / 2), 0.5, 0.01)) is None


def test_instance_validation():
    with pytest.raises(InvalidInput):
        DiscriminationInstance(rz_pair(1.0), 1.0, 0.1)
    with pytest.raises(InvalidInput):
        DiscriminationInstance(rz_pair(1.0), 0.5, -0.1)


def test_error_floor_examples():
    same = ChannelPair.from_channels(rz(0.3), rz(0.3))
    for n in (1, 3):
        assert error_prob_floor(same, n, 0.5) == pytest.approx(0.5, abs=1e-4)
    assert floor_from_bound(1.2, 0.5) == 0.0
    assert floor_from_bound(1.0, 0.3) == 0.0
    pair = rz_pair(math.pi / 4)
    for mode in disc.MODES:
        assert error_prob_floor(pair, 2, 0.5, mode) <= exact_parallel_error(0.5, IDENT, rz(math.pi / 4), 2) + 1e-6


def test_floor_inverts_condition():
    for p in (0.2, 0.5):
        for b in (0.1, 0.5, 0.9):
            pe = floor_from_bound(b, p)
            assert 1 - pe * (1 - pe) / (p * (1 - p)) == pytest.approx(b, abs=1e-12)
            assert 0 <= pe <= min(p, 1 - p)


def test_quadratic_examples():
    assert quadratic_min_n(1, 0, 3) == 3
    assert quadratic_min_n(2, 1, 6) == 2
    assert quadratic_min_n(2, 1, 0) == 1
    with pytest.raises(NoFiniteN):
        quadratic_min_n(0, 0, 1)
    with pytest.raises(InvalidInput):
        quadratic_min_n(1, 2, 1)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-4, 10), st.floats(0, 1), st.floats(0, 200), st.sampled_from(disc.MODES))
def test_quadratic_matches_scan(a, frac, c, mode):
    b = a * frac
    assert quadratic_min_n(a, b, c, mode) == scan_min_n(a, b, c, mode)


def test_integer_roots_are_exact():
    # n (a + (n - 1) b) = c exactly at n = 5
    assert quadratic_min_n(1.0, 0.5, 15.0) == 5
    assert quadratic_min_n(0.1, 0.1, 2.5) == 5


def test_n_max_examples():
    same = ChannelPair.from_channels(rz(0.3), rz(0.3))
    assert n_max_upper(DiscriminationInstance(same, 0.5, 0.1)) == INFINITE
    assert n_max_upper(DiscriminationInstance(rz_pair(math.pi / 2), 0.5, 0.1)) == 5
    assert n_max_upper(DiscriminationInstance(rz_pair(math.pi / 2), 0.5, 0.5)) == 1
    with pytest.warns(RuntimeWarning):
        assert n_max_upper(DiscriminationInstance(rz_pair(math.pi / 2), 0.5, 0.0)) == disc.N_MAX_CAP


def test_closed_form_examples():
    same = ChannelPair.from_channels(rz(0.3), rz(0.3))
    assert query_lower_closed_form(DiscriminationInstance(same, 0.5, 0.1)).lower_bound == INFINITE
    assert query_lower_closed_form(DiscriminationInstance(rz_pair(1.0), 0.3, 0.3)).lower_bound == 1
    inst = DiscriminationInstance(rz_pair(math.pi / 2), 0.5, 0.0)
    for mode in disc.MODES:
        lb = query_lower_closed_form(inst, mode).lower_bound
        assert 1 <= lb <= 2


def test_binary_search_synthetic():
    inst = DiscriminationInstance(rz_pair(math.pi / 4), 0.5, 0.01)
    n_max = n_max_upper(inst)
    calls = []

    def value_at(n):
        calls.append(n)
        return 1.0 if n >= 7 else 0.0
    res = binary_search(inst, "parallel", value_at)
    assert res.lower_bound == 7
    assert len(calls) <= math.ceil(math.log2(n_max)) + 1
    assert binary_search(inst, "parallel", lambda n: 1.0).lower_bound == 1


def test_binary_search_matches_scan():
    inst = DiscriminationInstance(rz_pair(math.pi / 4), 0.5, 0.05)
    par = binary_search(inst, "parallel")
    g = disc.g_parallel(inst.pair)
    assert par.lower_bound == linear_scan(g, inst.target, n_max_upper(inst))
    ada = binary_search(inst, "adaptive")
    assert ada.lower_bound <= par.lower_bound


def test_binary_search_identical_is_infinite():
    same = ChannelPair.from_channels(rz(0.3), rz(0.3))
    res = binary_search(DiscriminationInstance(same, 0.5, 0.1), "adaptive")
    assert res.is_infinite


def test_query_result_rejects_fractions():
    with pytest.raises(ValueError):
        disc.QueryBoundResult(2.5, "parallel", "x")
