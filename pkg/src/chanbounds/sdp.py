"""Small dense semidefinite programs over complex matrices.

A problem is written in terms of real scalar decision variables.  Matrix
variables (Hermitian, general complex, real scalar) expand into those scalars,
and every expression is an :class:`Affine` map from them to a complex matrix.
Before solving, each Hermitian PSD block is embedded as a real symmetric block
``[[Re, -Im], [Im, Re]]``.  Equality rows are eliminated through a null-space
parameterization, and the reduced linear matrix inequality goes to cvxopt's
primal-dual interior-point ``solvers.sdp``.
"""
from dataclasses import dataclass, field
import os

import numpy as np

from .errors import InvalidInput, NotHermitian, ShapeError, TooLarge
from .linalg import dagger

DEFAULT_TOL = 1e-8
DEFAULT_DIM_CAP = 512


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------

class Affine:
    """Complex matrix ``const + sum_k x_k coef_k`` in real scalars ``x``.

    ``terms`` maps a variable id to an array of shape (size, rows, cols).
    """

    __array_priority__ = 100

    def __init__(self, const, terms=None):
        self.const = np.asarray(const, dtype=complex)
        if self.const.ndim != 2:
            raise ShapeError("affine expressions are matrices")
        self.terms = dict(terms or {})

    @property
    def shape(self):
        return self.const.shape

    @staticmethod
    def lift(x, shape=None):
        if isinstance(x, Affine):
            return x
        arr = np.asarray(x, dtype=complex)
        if arr.ndim == 0:
            if shape is None:
                arr = arr.reshape(1, 1)
            else:
                arr = arr * np.eye(shape[0], shape[1])
        return Affine(arr)

    def _combine(self, other, sign):
        other = Affine.lift(other, self.shape)
        if other.shape != self.shape:
            raise ShapeError(f"shape mismatch {self.shape} vs {other.shape}")
        terms = dict(self.terms)
        for key, coef in other.terms.items():
            terms[key] = terms[key] + sign * coef if key in terms else sign * coef
        return Affine(self.const + sign * other.const, terms)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __radd__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __rsub__(self, other):
        return (-self)._combine(other, 1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, s):
        if not np.isscalar(s):
            raise ShapeError("use @ for matrix products")
        return Affine(self.const * s, {k: v * s for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, m):
        m = np.asarray(m, dtype=complex)
        if m.ndim != 2 or m.shape[0] != self.shape[1]:
            raise ShapeError(f"cannot multiply {self.shape} by {m.shape}")
        return Affine(self.const @ m, {k: v @ m for k, v in self.terms.items()})

    def __rmatmul__(self, m):
        m = np.asarray(m, dtype=complex)
        if m.ndim != 2 or m.shape[1] != self.shape[0]:
            raise ShapeError(f"cannot multiply {m.shape} by {self.shape}")
        return Affine(m @ self.const, {k: m @ v for k, v in self.terms.items()})

    @property
    def H(self):
        return Affine(dagger(self.const), {k: dagger(v) for k, v in self.terms.items()})

    def kron(self, b):
        """``self (x) b`` for a constant matrix ``b``."""
        b = np.asarray(b, dtype=complex)
        r, c = self.shape
        p, q = b.shape
        terms = {
            k: np.einsum("mrc,ij->mricj", v, b).reshape(v.shape[0], r * p, c * q)
            for k, v in self.terms.items()
        }
        return Affine(np.kron(self.const, b), terms)

    def trace(self):
        """1x1 expression holding the trace."""
        return Affine(np.trace(self.const).reshape(1, 1),
                      {k: np.trace(v, axis1=1, axis2=2).reshape(-1, 1, 1) for k, v in self.terms.items()})

    def herm(self):
        """``(A + A^dagger) / 2``."""
        return (self + self.H) * 0.5

    def value(self, x_of):
        """Evaluate given a mapping from variable id to its real scalar vector."""
        out = self.const.copy()
        for k, v in self.terms.items():
            out = out + np.tensordot(x_of[k], v, axes=1)
        return out


def bmat(blocks):
    """Assemble a block matrix from Affine, ndarray, scalar or ``None`` entries."""
    rows = len(blocks)
    cols = len(blocks[0])
    heights = [None] * rows
    widths = [None] * cols
    for i, row in enumerate(blocks):
        if len(row) != cols:
            raise ShapeError("ragged block matrix")
        for j, b in enumerate(row):
            if b is None or np.isscalar(b):
                continue
            shp = b.shape
            if heights[i] not in (None, shp[0]) or widths[j] not in (None, shp[1]):
                raise ShapeError("inconsistent block sizes")
            heights[i], widths[j] = shp[0], shp[1]
    if None in heights or None in widths:
        raise ShapeError("every block row and column needs one sized entry")
    off_r = np.concatenate([[0], np.cumsum(heights)])
    off_c = np.concatenate([[0], np.cumsum(widths)])
    const = np.zeros((off_r[-1], off_c[-1]), dtype=complex)
    terms = {}
    sizes = {}
    for row in blocks:
        for b in row:
            if isinstance(b, Affine):
                for k, v in b.terms.items():
                    sizes[k] = v.shape[0]
    for k, m in sizes.items():
        terms[k] = np.zeros((m, off_r[-1], off_c[-1]), dtype=complex)
    for i, row in enumerate(blocks):
        rs = slice(off_r[i], off_r[i + 1])
        for j, b in enumerate(row):
            if b is None:
                continue
            cs = slice(off_c[j], off_c[j + 1])
            if np.isscalar(b):
                if heights[i] != widths[j]:
                    raise ShapeError("scalar blocks must be square")
                const[rs, cs] = b * np.eye(heights[i])
                continue
            b = Affine.lift(b)
            const[rs, cs] = b.const
            for k, v in b.terms.items():
                terms[k][:, rs, cs] = v
    return Affine(const, terms)


# ---------------------------------------------------------------------------
# problem and solution
# ---------------------------------------------------------------------------

KINDS = ("hermitian", "general-complex", "real-scalar")


@dataclass(frozen=True)
class Variable:
    id: str
    kind: str
    shape: tuple
    size: int


def _basis(kind, shape):
    """Coefficient stack mapping the real scalars of a variable to its matrix."""
    r, c = shape
    if kind == "real-scalar":
        return np.ones((1, 1, 1), dtype=complex)
    if kind == "general-complex":
        eye = np.eye(r * c).reshape(r * c, r, c)
        return np.concatenate([eye, 1j * eye]).astype(complex)
    mats = []
    for i in range(r):
        e = np.zeros((r, r), dtype=complex)
        e[i, i] = 1.0
        mats.append(e)
    for i in range(r):
        for j in range(i + 1, r):
            e = np.zeros((r, r), dtype=complex)
            e[i, j] = e[j, i] = 1.0
            mats.append(e)
            e = np.zeros((r, r), dtype=complex)
            e[i, j], e[j, i] = 1j, -1j
            mats.append(e)
    return np.array(mats)


class SdpProblem:
    """Linear objective over affine Hermitian PSD blocks and equality rows."""

    def __init__(self, dim_cap=DEFAULT_DIM_CAP):
        self.variables = []
        self.psd_constraints = []
        self.eq_constraints = []
        self.objective = None
        self.sense = "min"
        self.dim_cap = dim_cap
        self._bases = {}

    def _add(self, vid, kind, shape):
        if any(v.id == vid for v in self.variables):
            raise InvalidInput(f"duplicate variable id {vid!r}")
        basis = _basis(kind, shape)
        var = Variable(vid, kind, tuple(shape), basis.shape[0])
        self.variables.append(var)
        self._bases[vid] = basis
        return Affine(np.zeros(shape, dtype=complex), {vid: basis})

    def real(self, vid):
        return self._add(vid, "real-scalar", (1, 1))

    def hermitian(self, vid, d):
        return self._add(vid, "hermitian", (d, d))

    def complex(self, vid, rows, cols=None):
        return self._add(vid, "general-complex", (rows, rows if cols is None else cols))

    def minimize(self, expr):
        self.objective, self.sense = Affine.lift(expr), "min"

    def maximize(self, expr):
        self.objective, self.sense = Affine.lift(expr), "max"

    def psd(self, expr):
        """Require ``expr >= 0``; the expression is symmetrized."""
        expr = Affine.lift(expr)
        if expr.shape[0] != expr.shape[1]:
            raise ShapeError("PSD constraints need square expressions")
        # catch blocks that are far from Hermitian before symmetrizing
        skew = expr - expr.H
        scale = max(1.0, np.abs(expr.const).max(),
                    max((np.abs(v).max() for v in expr.terms.values()), default=0.0))
        worst = max([np.abs(skew.const).max()]
                    + [np.abs(v).max() for v in skew.terms.values()])
        if worst > 1e-8 * scale:
            raise NotHermitian("PSD constraint expression is not Hermitian")
        self.psd_constraints.append(expr.herm())

    def eq(self, expr):
        """Require ``expr == 0`` entrywise."""
        self.eq_constraints.append(Affine.lift(expr))

    def total_psd_dim(self):
        return sum(c.shape[0] for c in self.psd_constraints)

    def offsets(self):
        out, k = {}, 0
        for v in self.variables:
            out[v.id] = (k, v.size)
            k += v.size
        return out, k

    def split(self, x):
        offs, _ = self.offsets()
        return {vid: x[o:o + s] for vid, (o, s) in offs.items()}

    def matrix_values(self, x):
        parts = self.split(x)
        return {vid: np.tensordot(parts[vid], self._bases[vid], axes=1) for vid in parts}


@dataclass
class SdpSolution:
    status: str
    objective_value: float
    variable_values: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    iterations: int = 0

    @property
    def optimal(self):
        return self.status == "optimal"


def embed_hermitian_real(h):
    """Real symmetric ``[[Re, -Im], [Im, Re]]`` of a Hermitian matrix."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ShapeError("embedding needs a square matrix")
    scale = max(1.0, np.abs(h).max())
    if np.abs(h - dagger(h)).max() > 1e-10 * scale:
        raise NotHermitian("embedding needs a Hermitian matrix")
    h = 0.5 * (h + dagger(h))
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def _embed_stack(coefs):
    re, im = coefs.real, coefs.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def norm_epigraph_psd(lam, a, mode="squared"):
    """Schur-complement block bounding a spectral norm by ``lam``.

    ``squared``: ``[[lam I, A], [A^dagger, I]] >= 0`` iff ``||A||^2 <= lam``.
    ``norm``: ``[[lam I, A], [A^dagger, lam I]] >= 0`` iff ``||A|| <= lam``.
    ``hermitian``: ``[[lam I - A, 0], [0, lam I + A]]``, the two-sided form for
    Hermitian ``A``.
    """
    a = Affine.lift(a)
    lam = Affine.lift(lam)
    if lam.shape != (1, 1):
        raise ShapeError("lam must be a scalar expression")
    r, c = a.shape
    lam_r = lam.kron(np.eye(r))
    if mode == "squared":
        return bmat([[lam_r, a], [a.H, np.eye(c)]])
    if mode == "norm":
        return bmat([[lam_r, a], [a.H, lam.kron(np.eye(c))]])
    if mode == "hermitian":
        if r != c:
            raise ShapeError("hermitian mode needs a square expression")
        return _block_diag([lam_r - a, lam_r + a])
    raise InvalidInput(f"unknown epigraph mode {mode!r}")


def _block_diag(parts):
    n = len(parts)
    grid = [[None] * n for _ in range(n)]
    for i, p in enumerate(parts):
        grid[i][i] = p
    for i in range(n):
        for j in range(n):
            if grid[i][j] is None:
                grid[i][j] = np.zeros((parts[i].shape[0], parts[j].shape[1]))
    return bmat(grid)


# ---------------------------------------------------------------------------
# compilation and solve
# ---------------------------------------------------------------------------

def _dense_columns(expr, offs, nvar):
    """Constant and per-scalar coefficient stack (nvar, r, c) for an expression."""
    r, c = expr.shape
    coef = np.zeros((nvar, r, c), dtype=complex)
    for vid, v in expr.terms.items():
        o, s = offs[vid]
        coef[o:o + s] += v
    return expr.const, coef


def _null_space(a, rtol=1e-10):
    # only the right singular vectors matter; avoid building a tall U
    _, s, vt = np.linalg.svd(a, full_matrices=a.shape[0] < a.shape[1])
    if s.size == 0:
        return np.eye(a.shape[1]), 0
    rank = int(np.sum(s > rtol * max(s[0], 1.0)))
    return vt[rank:].T, rank


def solve(problem, tol=DEFAULT_TOL, max_iters=100, dump_dir=None):
    """Solve ``problem``; infeasible or unbounded inputs come back as a status."""
    if problem.objective is None:
        raise InvalidInput("problem has no objective")
    return compile_problem(problem, tol, max_iters, dump_dir).run()


def compile_problem(problem, tol=DEFAULT_TOL, max_iters=100, dump_dir=None):
    """Reduce the constraints once so several objectives can share them."""
    if problem.total_psd_dim() > problem.dim_cap:
        raise TooLarge(f"total PSD dimension {problem.total_psd_dim()} exceeds cap {problem.dim_cap}")
    dump_dir = dump_dir or os.environ.get("CHANBOUNDS_DUMP_SDP")
    if dump_dir and problem.objective is not None:
        dump_problem(problem, dump_dir)
    return CompiledSdp(problem, tol, max_iters)


class CompiledSdp:
    """Constraints of an :class:`SdpProblem` after equality elimination and
    removal of directions that no PSD block depends on."""

    def __init__(self, problem, tol, max_iters):
        self.problem = problem
        self.tol = tol
        self.max_iters = max_iters
        self.offs, self.nvar = problem.offsets()
        self.failure = None
        self.eq_res = 0.0

        rows, rhs = [], []
        for e in problem.eq_constraints:
            k, coef = _dense_columns(e, self.offs, self.nvar)
            flat = coef.reshape(self.nvar, -1).T
            rows += [flat.real, flat.imag]
            rhs += [-k.reshape(-1).real, -k.reshape(-1).imag]
        x0 = np.zeros(self.nvar)
        basis = np.eye(self.nvar)
        if rows:
            a = np.vstack(rows)
            b = np.concatenate(rhs)
            x0 = np.linalg.lstsq(a, b, rcond=None)[0]
            self.eq_res = float(np.abs(a @ x0 - b).max()) if b.size else 0.0
            if self.eq_res > 1e-9 * max(1.0, np.abs(b).max()):
                self.failure = SdpSolution(
                    "infeasible", np.nan,
                    residuals={"equality": self.eq_res, "reason": "inconsistent equalities"})
                return
            basis, _ = _null_space(a)

        blocks = []
        for con in problem.psd_constraints:
            k, coef = _dense_columns(con, self.offs, self.nvar)
            fk = _embed_stack(coef)
            f0 = embed_hermitian_real(k) + np.tensordot(x0, fk, axes=1)
            blocks.append((f0, np.tensordot(basis.T, fk, axes=1)))

        # blocks that no longer depend on any variable are checked right away
        live = []
        for f0, fk in blocks:
            if fk.size and np.abs(fk).max() > 0:
                live.append((f0, fk))
            elif np.linalg.eigvalsh(f0)[0] < -tol:
                self.failure = SdpSolution(
                    "infeasible", np.nan,
                    residuals={"psd_min_eig": float(np.linalg.eigvalsh(f0)[0]),
                               "reason": "constant block is not PSD"})
                return
        blocks = live

        # directions that no block sees; the objective must not move along them
        self.free = np.zeros((basis.shape[0], 0))
        nred = basis.shape[1]
        if blocks and nred:
            gstack = np.concatenate([fk.reshape(nred, -1) for _, fk in blocks], axis=1)
            null, _ = _null_space(gstack.T)
            if null.shape[1]:
                self.free = basis @ null
                keep = _null_space(null.T)[0]
                basis = basis @ keep
                blocks = [(f0, np.tensordot(keep.T, fk, axes=1)) for f0, fk in blocks]
        elif not blocks:
            self.free = basis
            basis = np.zeros((self.nvar, 0))
        self.x0, self.basis, self.blocks = x0, basis, blocks

    def run(self, objective=None, sense=None, tol=None):
        import cvxopt
        from cvxopt import solvers

        if self.failure is not None:
            return self.failure
        problem = self.problem
        objective = problem.objective if objective is None else Affine.lift(objective)
        sense = sense or problem.sense
        sign = 1.0 if sense == "min" else -1.0
        c0, cvec = _dense_columns(objective, self.offs, self.nvar)
        c0 = sign * float(np.real(c0[0, 0]))
        cvec = sign * np.real(cvec[:, 0, 0])
        if self.free.shape[1] and np.abs(self.free.T @ cvec).max() > 1e-10 * max(1.0, np.abs(cvec).max()):
            return SdpSolution("unbounded", -np.inf * sign,
                               residuals={"reason": "objective moves along a free direction"})
        c_red = self.basis.T @ cvec
        c_off = c0 + cvec @ self.x0
        nred = self.basis.shape[1]
        blocks = self.blocks

        if nred == 0:
            worst = min((float(np.linalg.eigvalsh(f0)[0]) for f0, _ in blocks), default=0.0)
            status = "optimal" if worst >= -self.tol else "infeasible"
            return _finish(problem, self.x0, status, sign * c_off,
                           {"psd_min_eig": worst, "equality": self.eq_res}, 0)

        if not hasattr(self, "_gs"):
            self._gs, self._hs = [], []
            for f0, fk in blocks:
                n = f0.shape[0]
                self._gs.append(cvxopt.matrix(-fk.transpose(0, 2, 1).reshape(nred, n * n).T.copy()))
                self._hs.append(cvxopt.matrix(f0.T.copy()))
        tol = self.tol if tol is None else tol
        t = tol * 1e-1
        opts = {"show_progress": False, "abstol": t, "reltol": t, "feastol": t,
                "maxiters": self.max_iters}
        try:
            # unit-scale objective; large coefficients otherwise trip false certificates
            c_scale = float(np.abs(c_red).max()) or 1.0
            res = solvers.sdp(cvxopt.matrix(c_red / c_scale), Gs=self._gs, hs=self._hs,
                              options=opts)
        except (ValueError, ArithmeticError) as exc:
            return SdpSolution("numerical_failure", np.nan, residuals={"reason": str(exc)})

        status = res["status"]
        iters = res.get("iterations", 0)
        if status == "primal infeasible":
            return SdpSolution("infeasible", np.nan, residuals={"reason": "solver certificate"},
                               iterations=iters)
        if status == "dual infeasible":
            return SdpSolution("unbounded", -np.inf * sign, residuals={"reason": "solver certificate"},
                               iterations=iters)
        y = np.array(res["x"]).ravel()
        x = self.x0 + self.basis @ y
        worst = min(float(np.linalg.eigvalsh(f0 + np.tensordot(y, fk, axes=1))[0]) for f0, fk in blocks)
        gap, rel = res.get("gap"), res.get("relative gap")
        resid = {"psd_min_eig": worst, "equality": self.eq_res,
                 "gap": float(gap) if gap is not None else np.nan,
                 "relative_gap": float(rel) if rel is not None else np.nan,
                 "primal_infeasibility": float(res.get("primal infeasibility") or 0.0),
                 "dual_infeasibility": float(res.get("dual infeasibility") or 0.0)}
        if status == "optimal":
            out = "optimal"
        else:
            # cvxopt reports "unknown" when it stalls near the optimum; keep the
            # point if it is feasible and the duality gap is small
            slack = max(1e-6, 10 * tol)
            near = (worst >= -1e-7 and gap is not None
                    and (abs(gap) <= slack or (rel is not None and abs(rel) <= slack)))
            out = "optimal" if near else "numerical_failure"
        value = sign * (c_off + float(c_red @ y))
        return _finish(problem, x, out, value, resid, iters)


def _finish(problem, x, status, value, resid, iters):
    return SdpSolution(status, float(value), problem.matrix_values(x), resid, iters)


# ---------------------------------------------------------------------------
# debug dump
# ---------------------------------------------------------------------------

def _entries(m, cut=0.0):
    out = []
    for (i, j), v in np.ndenumerate(m):
        if abs(v) > cut:
            out.append(f"{i},{j}:{v.real:.17g}{v.imag:+.17g}j")
    return " ".join(out)


def format_problem(problem):
    """Sparse text form, one block per line.

    Lines are ``var <id> <kind> <rows>x<cols> <offset>``, ``objective <sense>
    <terms>``, ``psd <k> <dim> <terms>`` and ``eq <k> <rows>x<cols> <terms>``.
    Terms are ``c[entries]`` for the constant and ``x<index>[entries]`` per
    real scalar, each entry written ``i,j:re+imj``.
    """
    offs, nvar = problem.offsets()
    lines = [f"# chanbounds-sdp v1 scalars={nvar}"]
    for v in problem.variables:
        lines.append(f"var {v.id} {v.kind} {v.shape[0]}x{v.shape[1]} {offs[v.id][0]}")

    def terms(expr):
        k, coef = _dense_columns(expr, offs, nvar)
        parts = []
        if np.any(k):
            parts.append(f"c[{_entries(k)}]")
        for idx in range(nvar):
            if np.any(coef[idx]):
                parts.append(f"x{idx}[{_entries(coef[idx])}]")
        return " ".join(parts)

    lines.append(f"objective {problem.sense} {terms(problem.objective)}")
    for n, con in enumerate(problem.psd_constraints):
        lines.append(f"psd {n} {con.shape[0]} {terms(con)}")
    for n, con in enumerate(problem.eq_constraints):
        lines.append(f"eq {n} {con.shape[0]}x{con.shape[1]} {terms(con)}")
    return "\n".join(lines) + "\n"


_dump_counter = [0]


def dump_problem(problem, directory):
    os.makedirs(directory, exist_ok=True)
    _dump_counter[0] += 1
    path = os.path.join(directory, f"sdp_{os.getpid()}_{_dump_counter[0]:06d}.txt")
    with open(path, "w") as fh:
        fh.write(format_problem(problem))
    return path
