"""Minimax error and query lower bounds for estimating the parameter of a
channel family, through pairwise discrimination and through the
small-window Fisher expansion."""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .channels import family_isometry_and_derivative
from .discrimination import (INFINITE, DiscriminationInstance, QueryBoundResult, Trivial,
                             binary_search, floor_from_bound)
from .errors import InvalidInput, NoAdmissiblePair, SolverFailure
from .metrics import (ChannelPair, adaptive_bures_bound, adaptive_fisher_bound,
                      fisher_sql_denominator, fisher_terms, parallel_bures_bound,
                      parallel_fisher_bound)
from .sdp import SdpProblem, compile_problem, norm_epigraph_psd
from .linalg import dagger

DEFAULT_GRID_POINTS = 33
PAIR_MARGIN = 1e-6
PAIRINGS = ("economical", "grid")


def default_grid(fam, points=DEFAULT_GRID_POINTS):
    """Evenly spaced interior points; unbounded ends are clipped to +-pi."""
    lo, hi = fam.theta_domain
    lo = max(lo, -math.pi) if math.isinf(lo) else lo
    hi = min(hi, math.pi) if math.isinf(hi) else hi
    return np.linspace(lo, hi, points + 2)[1:-1]


@dataclass
class EstimationInstance:
    fam: object
    delta: float
    eps: float = 0.05
    grid: np.ndarray = None

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidInput(f"window half-width must be positive, got {self.delta}")
        if not 0.0 < self.eps <= 0.5:
            raise InvalidInput(f"error threshold must lie in (0, 1/2], got {self.eps}")
        if self.grid is None:
            self.grid = default_grid(self.fam)
        self.grid = np.sort(np.asarray(self.grid, dtype=float))
        if self.grid.size == 0:
            raise InvalidInput("theta grid is empty")
        for t in self.grid:
            self.fam.check_theta(t)


def admissible_pairs(inst, pairing="economical"):
    """Parameter pairs more than 2 delta apart.

    ``economical`` pairs every grid point with theta + 2 delta (1 + 1e-6);
    ``grid`` takes every pair of grid points that is far enough apart.
    """
    if pairing not in PAIRINGS:
        raise InvalidInput(f"pairing must be one of {PAIRINGS}")
    gap = 2 * inst.delta
    lo, hi = inst.fam.theta_domain
    out = []
    if pairing == "economical":
        for t in inst.grid:
            t2 = t + gap * (1 + PAIR_MARGIN)
            if lo < t2 < hi:
                out.append((float(t), float(t2)))
    else:
        g = inst.grid
        for i in range(len(g)):
            for j in range(i + 1, len(g)):
                if g[j] - g[i] > gap:
                    out.append((float(g[i]), float(g[j])))
    if not out:
        raise NoAdmissiblePair(f"no parameter pair is more than {gap} apart inside the domain")
    return out


def pair_at(fam, t1, t2):
    v1, _ = family_isometry_and_derivative(fam, t1)
    v2, _ = family_isometry_and_derivative(fam, t2)
    return ChannelPair(v1, v2)


@dataclass
class FloorReport:
    value: float
    theorem_tag: str
    argmax: tuple
    details: dict = field(default_factory=dict)


def minimax_error_floor_report(inst, n, mode="parallel", pairing="economical"):
    bound = parallel_bures_bound if mode == "parallel" else adaptive_bures_bound
    best = None
    per_pair = []
    for t1, t2 in admissible_pairs(inst, pairing):
        b = bound(pair_at(inst.fam, t1, t2), n).value
        floor = floor_from_bound(b, 0.5)
        per_pair.append((t1, t2, b, floor))
        if best is None or floor > best[0]:
            best = (floor, (t1, t2))
    return FloorReport(best[0], f"estimation_reduction_{mode}", best[1],
                       {"pairs": per_pair, "n": n})


def minimax_error_floor(inst, n, mode="parallel", pairing="economical"):
    """Largest pairwise discrimination floor (equal priors) over admissible pairs."""
    return minimax_error_floor_report(inst, n, mode, pairing).value


def est_query_lower(inst, mode="parallel", pairing="economical"):
    """Largest pairwise discrimination query bound over admissible pairs."""
    if inst.eps >= 0.5:
        return QueryBoundResult(Trivial(1), mode, "binary_search", {"trivial": True})
    best, arg = 1, None
    per_pair = []
    for t1, t2 in admissible_pairs(inst, pairing):
        res = binary_search(DiscriminationInstance(pair_at(inst.fam, t1, t2), 0.5, inst.eps), mode)
        per_pair.append((t1, t2, res.lower_bound))
        if arg is None or res.lower_bound > best:
            best, arg = res.lower_bound, (t1, t2)
    return QueryBoundResult(best, mode, "binary_search", {"argmax": arg, "pairs": per_pair})


def fisher_minimax_floor_report(inst, n, mode="parallel"):
    """Error floor from the leading small-delta term.

    Pairs sit 2 delta apart, so d_B^2 of the n-fold uses is approximated by
    (2 delta)^2 / 4 times the Fisher bound, i.e. delta^2 times it.  Higher
    order terms are dropped; the result is labelled asymptotic.
    """
    bound = parallel_fisher_bound if mode == "parallel" else adaptive_fisher_bound
    vals = [(float(t), bound(inst.fam, t, n).value) for t in inst.grid]
    t_min, f_min = min(vals, key=lambda tv: tv[1])
    b = inst.delta ** 2 * f_min
    return FloorReport(floor_from_bound(b, 0.5), f"fisher_small_window_{mode}_asymptotic",
                       (t_min,), {"fisher_by_theta": vals, "bound": b, "n": n})


def fisher_minimax_floor(inst, n, mode="parallel"):
    return fisher_minimax_floor_report(inst, n, mode).value


@dataclass
class ScalingClassification:
    kind: str
    sql_denominator: float
    heis_coefficient: float
    heis_coefficient_adaptive: float = math.nan
    details: dict = field(default_factory=dict)


def _heis_coefficient(fam, theta):
    """inf_H ||V^dagger M_H||^2 and sqrt(a b) at the minimizer."""
    iso, d_iso = family_isometry_and_derivative(fam, theta)
    prob = SdpProblem()
    mu = prob.real("mu")
    ham = prob.hermitian("H", iso.d_env)
    resid = d_iso - 1j * (ham.kron(np.eye(iso.d_out)) @ iso.v)
    prob.psd(norm_epigraph_psd(mu, dagger(iso.v) @ resid, mode="squared"))
    prob.minimize(mu)
    sol = compile_problem(prob).run()
    if sol.status != "optimal":
        raise SolverFailure(f"Heisenberg coefficient SDP: {sol.status}", sol)
    ham = sol.variable_values["H"]
    a, b = fisher_terms(iso, d_iso, 0.5 * (ham + dagger(ham)))
    return b, math.sqrt(a * b)


def classify_scaling(fam, grid=None):
    """SQL_capped when some grid point admits V^dagger M_H = 0, else Heisenberg_possible."""
    grid = default_grid(fam) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InvalidInput("theta grid is empty")
    per_point, heis, heis_ad, skipped = [], [], [], []
    for t in grid:
        t = float(t)
        try:
            rep = fisher_sql_denominator(fam, t)
            b, gm = _heis_coefficient(fam, t)
        except SolverFailure as exc:
            warnings.warn(f"theta={t}: {exc}; point skipped", RuntimeWarning)
            skipped.append(t)
            continue
        per_point.append((t, rep.value))
        heis.append(b)
        heis_ad.append(gm)
    if not per_point:
        return ScalingClassification("Indeterminate", math.nan, math.nan, math.nan,
                                     {"skipped": skipped})
    den = min(val for _, val in per_point)
    kind = "SQL_capped" if math.isfinite(den) else "Heisenberg_possible"
    details = {"per_theta": per_point, "skipped": skipped, "grid_approximate": True,
               "degenerate": math.isfinite(den) and den <= 1e-12}
    return ScalingClassification(kind, den, min(heis), min(heis_ad), details)


def sql_query_lower(inst, classification=None):
    """ceil((1 - 4 eps (1 - eps)) / (delta^2 * 4 * denominator)) when SQL capped.

    Pairs 2 delta apart give d_B^2 about delta^2 I_F, and I_F of n uses is at
    most 4 n times the denominator, which fixes the constant.
    """
    cls = classification or classify_scaling(inst.fam, inst.grid)
    c = 1.0 - 4.0 * inst.eps * (1.0 - inst.eps)
    if cls.kind != "SQL_capped":
        return QueryBoundResult(1, "parallel", "closed_form_sql", {"kind": cls.kind})
    if cls.sql_denominator <= 1e-12:
        return QueryBoundResult(INFINITE, "parallel", "closed_form_sql", {"degenerate": True})
    n = max(1, math.ceil(c / (4.0 * inst.delta ** 2 * cls.sql_denominator) - 1e-9))
    return QueryBoundResult(n, "parallel", "closed_form_sql",
                            {"asymptotic": True, "denominator": cls.sql_denominator})
