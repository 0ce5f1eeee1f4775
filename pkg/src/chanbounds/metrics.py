"""Channel distinguishability and Fisher quantities through SDPs on the
isometric extensions.

Every bound returns a :class:`BoundReport` whose ``value`` is recomputed from
the witness by plain norm evaluation, so it does not rely on the solver's
reported objective.  The objective is kept alongside for comparison.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import minimize_scalar

from .channels import IsometricExtension, canonical_isometry, family_isometry_and_derivative
from .errors import ShapeError, SolverFailure
from .linalg import dagger, spectral_norm
from .sdp import SdpProblem, bmat, compile_problem, norm_epigraph_psd, DEFAULT_TOL

REPORT_TOL = 1e-6
NU_RANGE = (1e-4, 1.0)
COARSE_TOL = 1e-5


@dataclass
class BoundReport:
    value: float
    witness: dict
    theorem_tag: str
    solver_status: str
    objective: float = math.nan
    details: dict = field(default_factory=dict)

    def witness_norm(self):
        for key in ("W", "H"):
            if key in self.witness:
                return spectral_norm(self.witness[key])
        return math.nan

    def to_dict(self):
        wit = {}
        for k, val in self.witness.items():
            if isinstance(val, np.ndarray):
                wit[k] = [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(val)]
            else:
                wit[k] = float(val)
        return {"value": float(self.value), "theorem_tag": self.theorem_tag,
                "solver_status": self.solver_status, "objective": float(self.objective),
                "witness": wit}


class ChannelPair:
    """Two isometric extensions sharing input, output and environment sizes."""

    def __init__(self, v1, v2):
        if not isinstance(v1, IsometricExtension) or not isinstance(v2, IsometricExtension):
            raise ShapeError("a channel pair needs two isometric extensions")
        if (v1.d_in, v1.d_out, v1.d_env) != (v2.d_in, v2.d_out, v2.d_env):
            raise ShapeError("channels in a pair must have identical dimensions")
        self.v1, self.v2 = v1, v2
        self.d_in, self.d_out, self.d_env = v1.d_in, v1.d_out, v1.d_env

    @classmethod
    def from_channels(cls, ch1, ch2):
        return cls(canonical_isometry(ch1), canonical_isometry(ch2))

    def overlap(self, contraction):
        """M_W = V1^dagger (W (x) I) V2 for a constant W."""
        return dagger(self.v1.v) @ np.kron(contraction, np.eye(self.d_out)) @ self.v2.v

    def overlap_expr(self, contraction):
        return dagger(self.v1.v) @ contraction.kron(np.eye(self.d_out)) @ self.v2.v


# ---------------------------------------------------------------------------
# direct evaluation of the norm expressions at a witness
# ---------------------------------------------------------------------------

def as_contraction(contraction):
    """Scale ``w`` back into the unit ball if solver round-off left it outside."""
    nrm = spectral_norm(contraction)
    return contraction / nrm if nrm > 1.0 else contraction


def overlap_terms(pair, contraction):
    """(a, b) = (2 ||I - Re M||, ||I - M||^2) at the given contraction."""
    overlap = pair.overlap(contraction)
    eye = np.eye(pair.d_in)
    re = 0.5 * (overlap + dagger(overlap))
    a = 2.0 * float(np.abs(np.linalg.eigvalsh(eye - re)).max())
    b = spectral_norm(eye - overlap) ** 2
    return a, b


def fisher_terms(iso, d_iso, ham):
    """(a, b) = (||M_H||^2, ||V^dagger M_H||^2) with M_H = dV - i (H (x) I) V."""
    resid = fisher_residual(iso, d_iso, ham)
    return spectral_norm(resid) ** 2, spectral_norm(dagger(iso.v) @ resid) ** 2


def fisher_residual(iso, d_iso, ham):
    return d_iso - 1j * np.kron(ham, np.eye(iso.d_out)) @ iso.v


def parallel_value(a, b, n):
    return n * (a + (n - 1) * b)


def adaptive_value(a, b, n):
    return n * (a + (n - 1) * math.sqrt(max(a * b, 0.0)))


# ---------------------------------------------------------------------------
# SDP builders
# ---------------------------------------------------------------------------

def _require(sol, what):
    if sol.status != "optimal":
        raise SolverFailure(f"{what}: solver status {sol.status}", sol)
    return sol


def _contraction(prob, d):
    contraction = prob.complex("W", d)
    prob.psd(bmat([[np.eye(d), contraction], [contraction.H, np.eye(d)]]))
    return contraction


def _bures_problem(pair, with_mu, fix_identity=False):
    """Variables lam, (mu), W with lam >= 2||I - Re M_W|| and mu >= ||I - M_W||^2."""
    prob = SdpProblem()
    lam = prob.real("lam")
    contraction = _contraction(prob, pair.d_env)
    overlap = pair.overlap_expr(contraction)
    gap = np.eye(pair.d_in) - overlap
    prob.psd(norm_epigraph_psd(lam, gap.herm() * 2.0, mode="hermitian"))
    mu = None
    if with_mu:
        mu = prob.real("mu")
        prob.psd(norm_epigraph_psd(mu, gap, mode="squared"))
    if fix_identity:
        prob.eq(gap)
    return prob, lam, mu


def root_fidelity_channels(pair, tol=DEFAULT_TOL):
    """sup lam subject to Re M_W >= lam I over contractions W."""
    prob = SdpProblem()
    lam = prob.real("lam")
    contraction = _contraction(prob, pair.d_env)
    prob.psd(pair.overlap_expr(contraction).herm() - lam.kron(np.eye(pair.d_in)))
    prob.maximize(lam)
    sol = _require(compile_problem(prob, tol).run(), "root fidelity")
    contraction = as_contraction(sol.variable_values["W"])
    overlap = pair.overlap(contraction)
    direct = float(np.linalg.eigvalsh(0.5 * (overlap + dagger(overlap)))[0])
    value = min(1.0, max(0.0, direct))
    return _certified(BoundReport(value, {"W": contraction, "lam": direct}, "root_fidelity_sdp",
                                  sol.status, sol.objective_value), clip=(0.0, 1.0))


def bures_sq_channels(pair, tol=DEFAULT_TOL):
    """inf over contractions of 2 ||I - Re M_W||."""
    prob, lam, _ = _bures_problem(pair, with_mu=False)
    prob.minimize(lam)
    sol = _require(compile_problem(prob, tol).run(), "Bures distance")
    contraction = as_contraction(sol.variable_values["W"])
    a, b = overlap_terms(pair, contraction)
    return _certified(BoundReport(a, {"W": contraction, "lam": a, "a": a, "b": b}, "bures_sq_sdp",
                                  sol.status, sol.objective_value))


def parallel_bures_bound(pair, n, tol=DEFAULT_TOL):
    """n inf_W {a_W + (n-1) b_W}, an upper bound on d_B^2 of the n-fold tensor powers."""
    n = _check_n(n)
    prob, lam, mu = _bures_problem(pair, with_mu=n > 1)
    prob.minimize(lam + (n - 1) * mu if n > 1 else lam)
    sol = _require(compile_problem(prob, tol).run(), "parallel Bures bound")
    contraction = as_contraction(sol.variable_values["W"])
    a, b = overlap_terms(pair, contraction)
    rep = BoundReport(parallel_value(a, b, n), {"W": contraction, "lam": a, "mu": b, "a": a, "b": b},
                      "parallel_bures_tensor_power", sol.status, n * sol.objective_value,
                      {"n": n, "g": a + (n - 1) * b})
    return _certified(rep)


def bures_sql_denominator(pair, tol=DEFAULT_TOL):
    """inf {a_W : ||W|| <= 1, M_W = I}; ``inf`` value when infeasible."""
    prob, lam, _ = _bures_problem(pair, with_mu=False, fix_identity=True)
    prob.minimize(lam)
    sol = compile_problem(prob, tol).run()
    if sol.status == "infeasible":
        return BoundReport(math.inf, {}, "disc_sql_denominator", "infeasible")
    _require(sol, "discrimination SQL denominator")
    contraction = sol.variable_values["W"]
    a, b = overlap_terms(pair, contraction)
    return BoundReport(a, {"W": contraction, "a": a, "b": b}, "disc_sql_denominator", sol.status,
                       sol.objective_value, {"equality_residual": math.sqrt(b)})


def adaptive_bures_bound(pair, n, tol=DEFAULT_TOL, coarse_points=25):
    """n inf_W {a_W + (n-1) sqrt(a_W b_W)} through the geometric-mean split in nu."""
    n = _check_n(n)
    if n == 1:
        rep = bures_sq_channels(pair, tol)
        rep.theorem_tag = "adaptive_bures_n_query"
        return rep
    prob, lam, mu = _bures_problem(pair, with_mu=True)
    comp = compile_problem(prob, tol)
    witnesses = []

    def objective(nu, coarse=False):
        expr = lam * (1 + (n - 1) * nu / 2) + mu * ((n - 1) / (2 * nu))
        sol = _require(comp.run(expr, "min", COARSE_TOL if coarse else None),
                       "adaptive Bures bound")
        witnesses.append(as_contraction(sol.variable_values["W"]))
        return sol.objective_value

    nu_star, j_star = line_search_1d(objective, coarse_points,
                                     coarse_f=lambda nu: objective(nu, coarse=True))
    zero = bures_sql_denominator(pair, tol)
    if zero.solver_status == "optimal":
        witnesses.append(as_contraction(zero.witness["W"]))
    return _best_adaptive(witnesses, lambda contraction: overlap_terms(pair, contraction), n,
                          "adaptive_bures_n_query", "W", n * min(j_star, zero.value),
                          nu_star)


def _best_adaptive(witnesses, terms, n, tag, key, objective, nu_star):
    best = None
    for wit in witnesses:
        a, b = terms(wit)
        val = adaptive_value(a, b, n)
        if best is None or val < best[0]:
            best = (val, wit, a, b)
    val, wit, a, b = best
    nu_opt = math.sqrt(b / a) if a > 0 else 0.0
    rep = BoundReport(val, {key: wit, "a": a, "b": b, "nu": nu_opt}, tag, "optimal", objective,
                      {"n": n, "nu_search": nu_star, "g": val / n, "probes": len(witnesses)})
    return rep


# ---------------------------------------------------------------------------
# Fisher information
# ---------------------------------------------------------------------------

def _fisher_problem(iso, d_iso, with_mu, sql=False):
    prob = SdpProblem()
    lam = prob.real("lam")
    ham = prob.hermitian("H", iso.d_env)
    resid = d_iso - 1j * (ham.kron(np.eye(iso.d_out)) @ iso.v)
    prob.psd(norm_epigraph_psd(lam, resid, mode="squared"))
    projected = dagger(iso.v) @ resid
    mu = None
    if with_mu:
        mu = prob.real("mu")
        prob.psd(norm_epigraph_psd(mu, projected, mode="squared"))
    if sql:
        prob.eq(projected)
    return prob, lam, mu


def _hermitian(ham):
    return 0.5 * (ham + dagger(ham))


def sld_fisher_channel(fam, theta, tol=DEFAULT_TOL):
    """I_F = 4 inf_H ||dV - i (H (x) I) V||^2."""
    iso, d_iso = family_isometry_and_derivative(fam, theta)
    prob, lam, _ = _fisher_problem(iso, d_iso, with_mu=False)
    prob.minimize(lam)
    sol = _require(compile_problem(prob, tol).run(), "channel Fisher information")
    ham = _hermitian(sol.variable_values["H"])
    a, b = fisher_terms(iso, d_iso, ham)
    rep = BoundReport(4 * a, {"H": ham, "lam": a, "a": a, "b": b}, "sld_fisher_isometric",
                      sol.status, 4 * sol.objective_value, {"theta": theta})
    return _certified(rep, scale=4.0)


def parallel_fisher_bound(fam, theta, n, tol=DEFAULT_TOL):
    """4 n inf_H {||M_H||^2 + (n-1) ||V^dagger M_H||^2}."""
    n = _check_n(n)
    iso, d_iso = family_isometry_and_derivative(fam, theta)
    prob, lam, mu = _fisher_problem(iso, d_iso, with_mu=n > 1)
    prob.minimize(lam + (n - 1) * mu if n > 1 else lam)
    sol = _require(compile_problem(prob, tol).run(), "parallel Fisher bound")
    ham = _hermitian(sol.variable_values["H"])
    a, b = fisher_terms(iso, d_iso, ham)
    rep = BoundReport(4 * parallel_value(a, b, n), {"H": ham, "lam": a, "mu": b, "a": a, "b": b},
                      "parallel_fisher_tensor_power", sol.status, 4 * n * sol.objective_value,
                      {"n": n, "theta": theta})
    return _certified(rep, scale=4.0)


def fisher_sql_denominator(fam, theta, tol=DEFAULT_TOL):
    """inf_H {||M_H||^2 : V^dagger M_H = 0}; value ``inf`` when infeasible."""
    iso, d_iso = family_isometry_and_derivative(fam, theta)
    prob, lam, _ = _fisher_problem(iso, d_iso, with_mu=False, sql=True)
    prob.minimize(lam)
    sol = compile_problem(prob, tol).run()
    if sol.status == "infeasible":
        return BoundReport(math.inf, {}, "fisher_sql_denominator", "infeasible",
                           details={"theta": theta, **sol.residuals})
    _require(sol, "Fisher SQL denominator")
    ham = _hermitian(sol.variable_values["H"])
    a, b = fisher_terms(iso, d_iso, ham)
    return BoundReport(a, {"H": ham, "a": a, "b": b}, "fisher_sql_denominator", sol.status,
                       sol.objective_value, {"theta": theta, "equality_residual": math.sqrt(b)})


def adaptive_fisher_bound(fam, theta, n, tol=DEFAULT_TOL, coarse_points=25):
    """4 n inf_H {||M_H||^2 + (n-1) ||V^dagger M_H|| ||M_H||} via the nu split."""
    n = _check_n(n)
    if n == 1:
        rep = sld_fisher_channel(fam, theta, tol)
        rep.theorem_tag = "adaptive_fisher_n_query"
        return rep
    iso, d_iso = family_isometry_and_derivative(fam, theta)
    prob, lam, mu = _fisher_problem(iso, d_iso, with_mu=True)
    comp = compile_problem(prob, tol)
    witnesses = []

    def objective(nu, coarse=False):
        expr = lam * (1 + (n - 1) * nu / 2) + mu * ((n - 1) / (2 * nu))
        sol = _require(comp.run(expr, "min", COARSE_TOL if coarse else None),
                       "adaptive Fisher bound")
        witnesses.append(_hermitian(sol.variable_values["H"]))
        return sol.objective_value

    nu_star, j_star = line_search_1d(objective, coarse_points,
                                     coarse_f=lambda nu: objective(nu, coarse=True))
    zero = fisher_sql_denominator(fam, theta, tol)
    if zero.solver_status == "optimal":
        witnesses.append(zero.witness["H"])
    rep = _best_adaptive(witnesses, lambda ham: fisher_terms(iso, d_iso, ham), n,
                         "adaptive_fisher_n_query", "H", 4 * n * min(j_star, zero.value), nu_star)
    rep.value *= 4
    rep.details["theta"] = theta
    return rep


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def line_search_1d(f, coarse_points=25, bounds=NU_RANGE, xatol=1e-7, max_refine=40,
                   coarse_f=None):
    """Log-spaced coarse grid, then bounded Brent on the bracket around the best point.

    ``coarse_f`` may be a cheaper, less accurate stand-in for ``f`` on the
    grid; it only picks the bracket.  Returns the best (nu, f(nu)) over the
    evaluations of ``f``.
    """
    lo, hi = bounds
    grid = np.geomspace(lo, hi, max(int(coarse_points), 2))
    seen = {}

    def g(x):
        x = float(x)
        if x not in seen:
            seen[x] = float(f(x))
        return seen[x]

    rough = coarse_f or g
    vals = [float(rough(float(x))) for x in grid]
    k = int(np.argmin(vals))
    left = grid[max(k - 1, 0)]
    right = grid[min(k + 1, len(grid) - 1)]
    g(grid[k])
    if right > left:
        minimize_scalar(g, bounds=(left, right), method="bounded",
                        options={"xatol": xatol, "maxiter": max_refine})
    best = min(seen, key=seen.get)
    return best, seen[best]


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    return int(n)


def _certified(rep, scale=1.0, clip=None):
    """The witness value must agree with the solver objective."""
    obj = rep.objective
    if clip is not None:
        obj = min(clip[1], max(clip[0], obj))
    if math.isfinite(obj) and abs(rep.value - obj) > REPORT_TOL * scale * max(1.0, abs(obj)):
        raise SolverFailure(
            f"{rep.theorem_tag}: witness value {rep.value:.10g} disagrees with objective {obj:.10g}")
    return rep
