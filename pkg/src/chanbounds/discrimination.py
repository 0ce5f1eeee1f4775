"""Error-probability and query-complexity lower bounds for telling two
channels apart, in the parallel and the adaptive access models."""
from dataclasses import dataclass, field
import math
import warnings

from .errors import InvalidInput, NoFiniteN
from .metrics import (ChannelPair, adaptive_bures_bound, bures_sq_channels,
                      bures_sql_denominator, overlap_terms, parallel_bures_bound,
                      root_fidelity_channels)

ZERO_FIDELITY = 1e-9
# root fidelities this close to 1 are within solver accuracy of it
UNIT_FIDELITY = 1.0 - 1e-7
NUDGE = 1e-9
N_MAX_CAP = 2 ** 16
MODES = ("parallel", "adaptive")

INFINITE = math.inf


class Trivial(int):
    """Query count settled without any SDP (always 1)."""

    def __new__(cls, value=1):
        return super().__new__(cls, value)

    def __repr__(self):
        return f"Trivial({int(self)})"


@dataclass
class DiscriminationInstance:
    pair: ChannelPair
    p: float = 0.5
    eps: float = 0.0
    _root_fidelity: float = field(default=None, repr=False)

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise InvalidInput(f"prior p must lie in (0, 1), got {self.p}")
        if not 0.0 <= self.eps <= 1.0:
            raise InvalidInput(f"error threshold must lie in [0, 1], got {self.eps}")

    @property
    def q(self):
        return 1.0 - self.p

    @property
    def target(self):
        """1 - eps (1 - eps) / (p q): what n g(n) has to reach."""
        return 1.0 - self.eps * (1.0 - self.eps) / (self.p * self.q)

    def root_fidelity(self):
        if self._root_fidelity is None:
            self._root_fidelity = root_fidelity_channels(self.pair).value
        return self._root_fidelity


@dataclass
class QueryBoundResult:
    lower_bound: object
    mode: str
    method: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_infinite(self):
        return self.lower_bound == INFINITE

    def __post_init__(self):
        lb = self.lower_bound
        if lb != INFINITE and (int(lb) != lb or lb < 1):
            raise ValueError(f"finite query bounds are integers >= 1, got {lb}")


def _check_mode(mode):
    if mode not in MODES:
        raise InvalidInput(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def _ceil(x):
    return max(1, math.ceil(x - NUDGE))


def trivial_case_check(inst):
    """Trivial(1) when eps >= min(p, q) or the channels have zero fidelity."""
    if inst.eps >= min(inst.p, inst.q):
        return Trivial(1)
    if inst.root_fidelity() <= ZERO_FIDELITY:
        return Trivial(1)
    return None


def floor_from_bound(bound, p):
    """Smallest p_e with 1 - p_e (1 - p_e) / (p q) <= bound."""
    pq = p * (1.0 - p)
    slack = 1.0 - bound
    if slack <= 0:
        return 0.0
    return 0.5 * (1.0 - math.sqrt(max(0.0, 1.0 - 4.0 * pq * slack)))


def error_prob_floor(pair, n, p=0.5, mode="parallel"):
    """Lower bound on the n-query error probability from the Bures bounds."""
    _check_mode(mode)
    if not 0.0 < p < 1.0:
        raise InvalidInput(f"prior p must lie in (0, 1), got {p}")
    rep = parallel_bures_bound(pair, n) if mode == "parallel" else adaptive_bures_bound(pair, n)
    return floor_from_bound(rep.value, p)


def _holds(n, a, b, c, mode):
    step = b if mode == "parallel" else math.sqrt(a * b)
    return n * (a + (n - 1) * step) >= c


def quadratic_min_n(a, b, c, mode="parallel"):
    """Least integer n >= 1 with n (a + (n - 1) b) >= c.

    In adaptive mode ``b`` is replaced by sqrt(a b).  The closed form is
    checked against its integer neighbours so floating round-off near an
    integer root cannot shift the answer.
    """
    _check_mode(mode)
    if a < 0 or b < 0 or c < 0:
        raise InvalidInput("a, b and c must be nonnegative")
    if b > a * (1 + 1e-12):
        raise InvalidInput(f"need b <= a, got a={a}, b={b}")
    if c == 0:
        return 1
    if a == 0:
        raise NoFiniteN("a = 0 with c > 0 admits no finite n")
    step = b if mode == "parallel" else math.sqrt(a * b)
    if step == 0:
        n = _ceil(c / a)
    else:
        disc = (step - a) ** 2 + 4 * step * c
        n = _ceil((step - a + math.sqrt(disc)) / (2 * step))
    while n > 1 and _holds(n - 1, a, b, c, mode):
        n -= 1
    while not _holds(n, a, b, c, mode):
        n += 1
    return n


def n_max_upper(inst):
    """ceil(ln(sqrt(pq)/eps) / (-ln sqrt F)); an achievable query count."""
    rf = inst.root_fidelity()
    if rf >= UNIT_FIDELITY:
        return INFINITE
    if rf <= ZERO_FIDELITY:
        return 1
    if inst.eps == 0:
        warnings.warn(f"eps = 0: search range capped at {N_MAX_CAP} queries", RuntimeWarning)
        return N_MAX_CAP
    num = math.log(math.sqrt(inst.p * inst.q) / inst.eps)
    if num <= 0:
        return 1
    return _ceil(num / -math.log(rf))


def query_lower_closed_form(inst, mode="parallel"):
    """Closed-form lower bounds at a few SDP witnesses plus the SQL form."""
    _check_mode(mode)
    c = inst.target
    if c <= 0:
        return QueryBoundResult(1, mode, "closed_form_heis", {"target": c})
    pair = inst.pair
    witnesses = [("n1", bures_sq_channels(pair).witness["W"]),
                 ("g2", parallel_bures_bound(pair, 2).witness["W"])]
    if mode == "adaptive":
        witnesses.append(("gA2", adaptive_bures_bound(pair, 2).witness["W"]))
    best, method, diag = 1, "closed_form_heis", {"target": c, "candidates": {}}
    for label, w in witnesses:
        a, b = overlap_terms(pair, w)
        b = min(b, a)
        try:
            n = quadratic_min_n(a, b, c, mode)
        except NoFiniteN:
            n = INFINITE
        diag["candidates"][label] = {"a": a, "b": b, "n": n}
        if n > best:
            best = n
    sql = bures_sql_denominator(pair)
    diag["sql_denominator"] = sql.value
    if sql.solver_status == "optimal":
        n = INFINITE if sql.value <= 1e-12 else _ceil(c / sql.value)
        diag["candidates"]["sql"] = {"a": sql.value, "n": n}
        if n > best:
            best, method = n, "closed_form_sql"
    return QueryBoundResult(best, mode, method, diag)


def g_parallel(pair):
    return lambda n: parallel_bures_bound(pair, n).value


def g_adaptive(pair):
    return lambda n: adaptive_bures_bound(pair, n).value


def binary_search(inst, mode="parallel", value_at=None):
    """Least n in [1, n_max] with n g(n) >= target, by bisection.

    ``value_at(n)`` returns n g(n); it defaults to the parallel or adaptive
    Bures bound of the instance's pair.
    """
    _check_mode(mode)
    triv = trivial_case_check(inst)
    if triv is not None:
        return QueryBoundResult(triv, mode, "binary_search", {"trivial": True})
    n_hi = n_max_upper(inst)
    diag = {"n_max": n_hi, "capped": inst.eps == 0 and n_hi == N_MAX_CAP,
            "target": inst.target, "probes": []}
    if n_hi == INFINITE:
        sql = bures_sql_denominator(inst.pair)
        diag["sql_denominator"] = sql.value
        if sql.value <= 1e-9:
            diag["reason"] = "root fidelity is 1 and M_W = I is attainable"
            return QueryBoundResult(INFINITE, mode, "binary_search", diag)
        # fidelity within solver accuracy of 1 but the channels differ: the
        # search range is unbounded, so fall back to the SQL closed form
        diag["reason"] = "root fidelity numerically 1; SQL closed form used"
        return QueryBoundResult(_ceil(inst.target / sql.value) if sql.value < math.inf else 1,
                                mode, "closed_form_sql", diag)
    if value_at is None:
        value_at = g_parallel(inst.pair) if mode == "parallel" else g_adaptive(inst.pair)
    c = inst.target
    n_lo = 1
    while n_lo < n_hi:
        mid = (n_lo + n_hi) // 2
        val = value_at(mid)
        diag["probes"].append((mid, val))
        if val >= c:
            n_hi = mid
        else:
            n_lo = mid + 1
    return QueryBoundResult(n_lo, mode, "binary_search", diag)


def binary_search_parallel(inst, value_at=None):
    return binary_search(inst, "parallel", value_at)


def binary_search_adaptive(inst, value_at=None):
    return binary_search(inst, "adaptive", value_at)
