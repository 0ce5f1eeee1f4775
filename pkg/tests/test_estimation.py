import math

import numpy as np
import pytest

from chanbounds import estimation as est
from chanbounds.channels import builtin_family
from chanbounds.discrimination import INFINITE, error_prob_floor
from chanbounds.errors import InvalidInput, NoAdmissiblePair, OutOfDomain
from chanbounds.estimation import (EstimationInstance, admissible_pairs, classify_scaling,
                                   est_query_lower, fisher_minimax_floor, minimax_error_floor,
                                   pair_at, sql_query_lower)
from chanbounds.oracle import pair_scan_query

RZ = builtin_family("rz")
CONST = builtin_family("constant")
DEPH = builtin_family("dephasing")


def test_instance_validation():
    with pytest.raises(InvalidInput):
        EstimationInstance(RZ, 0.0)
    with pytest.raises(InvalidInput):
        EstimationInstance(RZ, 0.1, 0.7)
    with pytest.raises(OutOfDomain):
        EstimationInstance(DEPH, 0.1, 0.1, [0.5, 1.5])


def test_admissible_pairs():
    inst = EstimationInstance(RZ, 0.1, 0.05, [0.0, 0.1, 0.25, 0.5])
    econ = admissible_pairs(inst)
    assert all(t2 - t1 > 0.2 for t1, t2 in econ)
    assert len(econ) == 4
    grid = admissible_pairs(inst, "grid")
    assert (0.0, 0.25) in grid and (0.0, 0.1) not in grid
    with pytest.raises(NoAdmissiblePair):
        admissible_pairs(EstimationInstance(DEPH, 0.6, 0.05, [0.5]))
    with pytest.raises(InvalidInput):
        admissible_pairs(inst, "random")


def test_constant_family():
    inst = EstimationInstance(CONST, 0.1, 0.05, [0.0, 1.0])
    assert minimax_error_floor(inst, 3) == pytest.approx(0.5, abs=1e-4)
    assert fisher_minimax_floor(inst, 3) == pytest.approx(0.5, abs=1e-6)
    assert est_query_lower(inst).lower_bound == INFINITE
    assert est_query_lower(EstimationInstance(CONST, 0.1, 0.5, [0.0])).lower_bound == 1


def test_rz_floor_is_pair_floor():
    delta = math.pi / 8
    inst = EstimationInstance(RZ, delta, 0.05, [0.2])
    t2 = 0.2 + 2 * delta * (1 + est.PAIR_MARGIN)
    assert minimax_error_floor(inst, 1) == pytest.approx(
        error_prob_floor(pair_at(RZ, 0.2, t2), 1, 0.5), abs=1e-12)


def test_rz_query_matches_pair_scan():
    grid = np.linspace(0.0, 1.2, 5)
    inst = EstimationInstance(RZ, math.pi / 16, 0.05, grid)
    res = est_query_lower(inst, "parallel", pairing="grid")
    assert res.lower_bound == pair_scan_query(RZ, grid, math.pi / 16, 0.05, "parallel")
    assert res.lower_bound < INFINITE


def test_fisher_route_tracks_reduction():
    gaps = []
    for delta in (1e-1, 1e-2):
        inst = EstimationInstance(DEPH, delta, 0.05, [0.3, 0.5])
        gaps.append(abs(minimax_error_floor(inst, 2) - fisher_minimax_floor(inst, 2)))
    assert gaps[1] < gaps[0]


def test_classification():
    rz = classify_scaling(RZ, [0.3, 1.0])
    assert rz.kind == "Heisenberg_possible" and rz.sql_denominator == math.inf
    assert rz.heis_coefficient == pytest.approx(0.25, abs=1e-6)
    deph = classify_scaling(DEPH, [0.25, 0.5])
    assert deph.kind == "SQL_capped"
    assert deph.sql_denominator == pytest.approx(1.0, rel=1e-5)
    const = classify_scaling(CONST, [0.0])
    assert const.kind == "SQL_capped" and const.details["degenerate"]
    with pytest.raises(InvalidInput):
        classify_scaling(RZ, [])


def test_sql_query_lower():
    inst = EstimationInstance(DEPH, 0.01, 0.1, [0.25, 0.5])
    res = sql_query_lower(inst)
    expect = math.ceil((1 - 0.36) / (4 * 1e-4 * 1.0))
    assert res.lower_bound == pytest.approx(expect, abs=1)
    assert sql_query_lower(EstimationInstance(RZ, 0.01, 0.1, [0.3])).lower_bound == 1
