import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chanbounds.errors import NotHermitian, ShapeError, TooLarge
from chanbounds.sdp import (SdpProblem, compile_problem, embed_hermitian_real, format_problem,
                            norm_epigraph_psd, solve)


def test_embedding_examples():
    assert np.allclose(embed_hermitian_real(np.eye(2)), np.eye(4))
    assert np.allclose(embed_hermitian_real(np.diag([1.0, -1.0])), np.diag([1, -1, 1, -1]))
    with pytest.raises(NotHermitian):
        embed_hermitian_real([[0, 1], [0, 0]])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_embedding_preserves_spectrum(seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    h = g + g.conj().T
    w = np.linalg.eigvalsh(h)
    assert np.allclose(np.linalg.eigvalsh(embed_hermitian_real(h)), np.sort(np.repeat(w, 2)))


@pytest.mark.parametrize("mode,expected", [("squared", 4.0), ("norm", 2.0)])
def test_norm_epigraph(mode, expected):
    prob = SdpProblem()
    lam = prob.real("lam")
    prob.psd(norm_epigraph_psd(lam, np.diag([2.0, 1.0]), mode))
    prob.minimize(lam)
    sol = solve(prob)
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(expected, abs=1e-6)


def test_norm_epigraph_hermitian_mode():
    prob = SdpProblem()
    lam = prob.real("lam")
    prob.psd(norm_epigraph_psd(lam, np.diag([0.5, -3.0]), "hermitian"))
    prob.minimize(lam)
    assert solve(prob).objective_value == pytest.approx(3.0, abs=1e-6)
    with pytest.raises(ShapeError):
        norm_epigraph_psd(lam, np.ones((2, 3)), "hermitian")


def test_lp_as_sdp():
    prob = SdpProblem()
    lam = prob.real("lam")
    prob.psd(lam - 3.0)
    prob.minimize(lam)
    assert solve(prob).objective_value == pytest.approx(3.0, abs=1e-7)


def test_bounded_operator():
    prob = SdpProblem()
    x = prob.hermitian("X", 2)
    prob.psd(x)
    prob.psd(np.eye(2) - x)
    prob.minimize((x @ np.diag([0.7, 0.3])).trace())
    sol = solve(prob)
    assert sol.objective_value == pytest.approx(0.0, abs=1e-6)
    assert np.abs(sol.variable_values["X"]).max() <= 1e-5


def test_complex_variable_and_equalities():
    # maximize Re tr(W) with ||W|| <= 1 and W[0, 1] = 0.5i
    prob = SdpProblem()
    w = prob.complex("W", 2)
    prob.psd(norm_epigraph_psd(1.0, w, "norm"))
    e01 = np.array([[1.0], [0.0]])
    e1 = np.array([[0.0, 1.0]])
    prob.eq(e01.T @ w @ e1.T - 0.5j)
    prob.maximize(w.trace().herm())
    sol = solve(prob)
    assert sol.status == "optimal"
    val = sol.variable_values["W"]
    assert val[0, 1] == pytest.approx(0.5j, abs=1e-7)
    assert np.linalg.norm(val, 2) <= 1 + 1e-6
    # the best trace with that off-diagonal entry is 2 sqrt(1 - 1/4)
    assert sol.objective_value == pytest.approx(2 * np.sqrt(0.75), abs=1e-5)


def test_infeasible_and_unbounded():
    prob = SdpProblem()
    lam = prob.real("lam")
    prob.psd(lam - 2.0)
    prob.psd(1.0 - lam)
    prob.minimize(lam)
    assert solve(prob).status == "infeasible"

    prob = SdpProblem()
    lam = prob.real("lam")
    prob.psd(lam - 1.0)
    prob.maximize(lam)
    assert solve(prob).status == "unbounded"

    prob = SdpProblem()
    lam = prob.real("lam")
    prob.eq(lam - 1.0)
    prob.eq(lam - 2.0)
    prob.minimize(lam)
    assert solve(prob).status == "infeasible"


def test_rejects_non_hermitian_block():
    prob = SdpProblem()
    x = prob.complex("X", 2)
    with pytest.raises(NotHermitian):
        prob.psd(x)


def test_dimension_cap():
    prob = SdpProblem(dim_cap=2)
    x = prob.hermitian("X", 3)
    prob.psd(x)
    prob.minimize(x.trace())
    with pytest.raises(TooLarge):
        solve(prob)


def test_compiled_problem_reuse():
    prob = SdpProblem()
    a, b = prob.real("a"), prob.real("b")
    prob.psd(a - 1.0)
    prob.psd(b - 2.0)
    prob.minimize(a + b)
    comp = compile_problem(prob)
    assert comp.run().objective_value == pytest.approx(3.0, abs=1e-6)
    assert comp.run(a + 3 * b, "min").objective_value == pytest.approx(7.0, abs=1e-6)


def test_dump(tmp_path, monkeypatch):
    prob = SdpProblem()
    lam = prob.real("lam")
    prob.psd(norm_epigraph_psd(lam, np.diag([2.0, 1.0])))
    prob.minimize(lam)
    text = format_problem(prob)
    assert "\nvar lam real-scalar" in text
    assert "psd 0" in text
    monkeypatch.setenv("CHANBOUNDS_DUMP_SDP", str(tmp_path))
    solve(prob)
    files = list(tmp_path.iterdir())
    assert len(files) == 1 and files[0].read_text() == text
