"""Linear-program solving.

``solve_lp`` minimizes ``c @ x`` subject to ``A_ub @ x <= b_ub``,
``A_eq @ x == b_eq`` and ``lb <= x <= ub``. Two backends sit behind it:

* ``"simplex"``: the bounded-variable revised simplex in this module
  (two phases, geometric-mean equilibration, Dantzig pricing with a Bland
  fallback against cycling). Dense linear algebra, meant for problems up to
  a few hundred rows.
* ``"highs"``: the HiGHS dual simplex shipped with SciPy, used for the
  full-year dispatch/sizing programs (thousands of rows).

Dual values follow the SciPy ``marginals`` convention: the sensitivity of
the optimal objective to each right-hand side or bound.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, TextIO, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, lu_factor, lu_solve

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"
NUMERICAL = "numerical_error"

SIMPLEX_MAX_CELLS = 120_000  # rows x columns handled by "auto" with the in-house simplex


class LPError(RuntimeError):
    """Raised by callers that need an optimal solution and did not get one."""

    def __init__(self, result: "LPResult"):
        super().__init__(f"LP {result.status}: {result.message}")
        self.result = result


@dataclass(frozen=True)
class Tolerances:
    primal: float = 1e-9
    dual: float = 1e-9
    rel_gap: float = 1e-7
    pivot: float = 1e-11
    max_iter: int = 50_000


@dataclass
class LPResult:
    status: str
    x: Optional[np.ndarray]
    fun: Optional[float]
    dual_ub: Optional[np.ndarray] = None
    dual_eq: Optional[np.ndarray] = None
    dual_lower: Optional[np.ndarray] = None
    dual_upper: Optional[np.ndarray] = None
    dual_objective: Optional[float] = None
    iterations: int = 0
    method: str = ""
    message: str = ""
    certificate: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    @property
    def duality_gap(self) -> float:
        return abs(self.fun - self.dual_objective)


@dataclass
class LinearProgram:
    """An LP in inequality/equality form with explicit variable bounds."""

    c: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    @classmethod
    def build(cls, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None) -> "LinearProgram":
        c = np.asarray(c, dtype=float).ravel()
        n = c.size

        def mat(A, b):
            if A is None:
                return sp.csr_matrix((0, n)), np.zeros(0)
            A = sp.csr_matrix(A, dtype=float)
            b = np.asarray(b, dtype=float).ravel()
            if A.shape != (b.size, n):
                raise ValueError(f"constraint matrix shape {A.shape} inconsistent with {b.size} rows x {n} columns")
            return A, b

        A_ub, b_ub = mat(A_ub, b_ub)
        A_eq, b_eq = mat(A_eq, b_eq)
        lb, ub = _bounds(bounds, n)
        for name, arr in (("c", c), ("b_ub", b_ub), ("b_eq", b_eq), ("A_ub", A_ub.data), ("A_eq", A_eq.data)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite coefficient in {name}")
        if np.any(np.isnan(lb)) or np.any(np.isnan(ub)) or np.any(lb == np.inf) or np.any(ub == -np.inf):
            raise ValueError("invalid variable bounds")
        return cls(c, A_ub, b_ub, A_eq, b_eq, lb, ub)

    @property
    def n(self) -> int:
        return self.c.size

    def dump(self, out: Union[str, Path, TextIO]) -> None:
        """Write the plain-text dump format (see :func:`load_lp`)."""
        if isinstance(out, (str, Path)):
            with open(out, "w") as fh:
                self.dump(fh)
            return
        w = out.write
        w(f"LP {self.n} {self.b_ub.size} {self.b_eq.size}\n")
        for j in np.flatnonzero(self.c):
            w(f"OBJ {j} {float(self.c[j])!r}\n")
        for tag, A, b in (("UB", self.A_ub, self.b_ub), ("EQ", self.A_eq, self.b_eq)):
            coo = A.tocoo()
            order = np.lexsort((coo.col, coo.row))
            for i, rhs in enumerate(b):
                w(f"{tag} {i} {float(rhs)!r}\n")
            for k in order:
                w(f"A{tag} {coo.row[k]} {coo.col[k]} {float(coo.data[k])!r}\n")
        for j in range(self.n):
            if self.lb[j] != 0 or self.ub[j] != np.inf:
                w(f"BND {j} {float(self.lb[j])!r} {float(self.ub[j])!r}\n")
        w("END\n")

    def dumps(self) -> str:
        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()


def load_lp(src: Union[str, Path, TextIO]) -> LinearProgram:
    """Parse the dump format.

    One record per line: ``LP n m_ub m_eq`` header, then ``OBJ j v``,
    ``UB i rhs``, ``EQ i rhs``, ``AUB i j v``, ``AEQ i j v`` and
    ``BND j lb ub`` (default bounds ``[0, inf)``), closed by ``END``.
    """
    if isinstance(src, (str, Path)) and Path(src).exists():
        with open(src) as fh:
            return load_lp(fh)
    lines = (src.splitlines() if isinstance(src, str) else src.read().splitlines())
    head = lines[0].split()
    if head[0] != "LP":
        raise ValueError("not an LP dump: missing 'LP' header")
    n, mu, me = map(int, head[1:4])
    c = np.zeros(n)
    b_ub, b_eq = np.zeros(mu), np.zeros(me)
    lb, ub = np.zeros(n), np.full(n, np.inf)
    trip = {"AUB": ([], [], []), "AEQ": ([], [], [])}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts or parts[0] == "END":
            continue
        tag = parts[0]
        try:
            if tag == "OBJ":
                c[int(parts[1])] = float(parts[2])
            elif tag == "UB":
                b_ub[int(parts[1])] = float(parts[2])
            elif tag == "EQ":
                b_eq[int(parts[1])] = float(parts[2])
            elif tag in trip:
                r, col, v = trip[tag]
                r.append(int(parts[1]))
                col.append(int(parts[2]))
                v.append(float(parts[3]))
            elif tag == "BND":
                j = int(parts[1])
                lb[j], ub[j] = float(parts[2]), float(parts[3])
            else:
                raise ValueError(f"unknown record {tag!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    A_ub = sp.csr_matrix((trip["AUB"][2], (trip["AUB"][0], trip["AUB"][1])), shape=(mu, n))
    A_eq = sp.csr_matrix((trip["AEQ"][2], (trip["AEQ"][0], trip["AEQ"][1])), shape=(me, n))
    return LinearProgram(c, A_ub, b_ub, A_eq, b_eq, lb, ub)


def _bounds(bounds, n):
    lb, ub = np.zeros(n), np.full(n, np.inf)
    if bounds is None:
        return lb, ub
    if isinstance(bounds, tuple) and len(bounds) == 2 and np.ndim(bounds[0]) == 0 and np.ndim(bounds[1]) == 0:
        bounds = [bounds] * n
    if isinstance(bounds, tuple) and len(bounds) == 2 and np.ndim(bounds[0]) == 1:
        lo, hi = (np.asarray(b, dtype=float) for b in bounds)
        return lo.copy(), hi.copy()
    for j, (lo, hi) in enumerate(bounds):
        lb[j] = -np.inf if lo is None else lo
        ub[j] = np.inf if hi is None else hi
    return lb, ub


def solve_lp(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    bounds=None,
    method: str = "auto",
    tol: Tolerances = Tolerances(),
) -> LPResult:
    """Minimize ``c @ x``; see the module docstring for the problem form.

    ``bounds`` is ``None`` (all ``x >= 0``), a single ``(lo, hi)`` pair, a
    sequence of pairs (``None`` meaning unbounded), or a ``(lb_array, ub_array)``
    tuple. ``method`` is ``"simplex"``, ``"highs"`` or ``"auto"``.
    """
    lp = c if isinstance(c, LinearProgram) else LinearProgram.build(c, A_ub, b_ub, A_eq, b_eq, bounds)
    if method == "auto":
        m = lp.b_ub.size + lp.b_eq.size
        method = "simplex" if m * (lp.n + lp.b_ub.size) <= SIMPLEX_MAX_CELLS else "highs"
    if method == "simplex":
        res = _RevisedSimplex(lp, tol).solve()
    elif method == "highs":
        res = _solve_highs(lp, tol)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if res.ok:
        res.diagnostics.update(_residuals(lp, res))
    return res


def _dual_objective(lp: LinearProgram, y_ub, y_eq, z_lo, z_hi) -> float:
    val = lp.b_ub @ y_ub + lp.b_eq @ y_eq
    fl, fu = np.isfinite(lp.lb), np.isfinite(lp.ub)
    return float(val + lp.lb[fl] @ z_lo[fl] + lp.ub[fu] @ z_hi[fu])


def _residuals(lp: LinearProgram, res: LPResult) -> dict:
    x = res.x
    r_ub = np.max(lp.A_ub @ x - lp.b_ub, initial=0.0)
    r_eq = np.max(np.abs(lp.A_eq @ x - lp.b_eq), initial=0.0)
    r_bd = max(np.max(lp.lb - x, initial=0.0), np.max(x - lp.ub, initial=0.0))
    d = lp.c - lp.A_ub.T @ res.dual_ub - lp.A_eq.T @ res.dual_eq - res.dual_lower - res.dual_upper
    return {
        "primal_residual": float(max(r_ub, r_eq, r_bd)),
        "dual_residual": float(np.max(np.abs(d), initial=0.0)),
        "duality_gap": res.duality_gap,
    }


def _split_reduced_costs(lp: LinearProgram, x, d, tol):
    z_lo = np.where(np.isfinite(lp.lb) & (d > 0), d, 0.0)
    z_hi = np.where(np.isfinite(lp.ub) & (d < 0), d, 0.0)
    return z_lo, z_hi


def _solve_highs(lp: LinearProgram, tol: Tolerances) -> LPResult:
    from scipy.optimize import linprog

    kw = {}
    if lp.b_ub.size:
        kw.update(A_ub=lp.A_ub, b_ub=lp.b_ub)
    if lp.b_eq.size:
        kw.update(A_eq=lp.A_eq, b_eq=lp.b_eq)
    bounds = np.column_stack([np.where(np.isfinite(lp.lb), lp.lb, -np.inf), lp.ub])
    r = linprog(
        lp.c,
        bounds=bounds,
        method="highs-ds",
        options={"primal_feasibility_tolerance": tol.primal, "dual_feasibility_tolerance": tol.dual, "presolve": True},
        **kw,
    )
    status = {0: OPTIMAL, 1: ITERATION_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}.get(r.status, NUMERICAL)
    if status != OPTIMAL:
        return LPResult(status, None, None, method="highs", message=r.message, iterations=int(r.nit or 0))
    y_ub = r.ineqlin.marginals if lp.b_ub.size else np.zeros(0)
    y_eq = r.eqlin.marginals if lp.b_eq.size else np.zeros(0)
    z_lo, z_hi = np.asarray(r.lower.marginals), np.asarray(r.upper.marginals)
    return LPResult(
        OPTIMAL,
        np.asarray(r.x),
        float(r.fun),
        dual_ub=np.asarray(y_ub),
        dual_eq=np.asarray(y_eq),
        dual_lower=z_lo,
        dual_upper=z_hi,
        dual_objective=_dual_objective(lp, y_ub, y_eq, z_lo, z_hi),
        iterations=int(r.nit),
        method="highs",
        message=r.message,
    )


class _RevisedSimplex:
    """Bounded-variable primal revised simplex on ``min c z, A z = b, 0 <= z <= u``."""

    def __init__(self, lp: LinearProgram, tol: Tolerances):
        self.lp = lp
        self.tol = tol
        self.iterations = 0
        self._standardize()

    # -- problem transformation -------------------------------------------------
    def _standardize(self):
        lp = self.lp
        n, mu, me = lp.n, lp.b_ub.size, lp.b_eq.size
        A = sp.vstack([lp.A_ub, lp.A_eq]).toarray() if mu + me else np.zeros((0, n))
        b = np.concatenate([lp.b_ub, lp.b_eq])
        cols, cost, upper = [], [], []
        # column map: original j -> list of (standard column, sign)
        self.colmap = []
        shift = np.zeros(n)
        for j in range(n):
            lo, hi = lp.lb[j], lp.ub[j]
            if np.isfinite(lo):
                shift[j] = lo
                self.colmap.append([(len(cols), 1.0)])
                cols.append(A[:, j])
                cost.append(lp.c[j])
                upper.append(hi - lo)
            elif np.isfinite(hi):
                shift[j] = hi
                self.colmap.append([(len(cols), -1.0)])
                cols.append(-A[:, j])
                cost.append(-lp.c[j])
                upper.append(np.inf)
            else:
                self.colmap.append([(len(cols), 1.0), (len(cols) + 1, -1.0)])
                cols += [A[:, j], -A[:, j]]
                cost += [lp.c[j], -lp.c[j]]
                upper += [np.inf, np.inf]
        self.shift = shift
        self.n_struct = len(cols)
        m = b.size
        for i in range(mu):  # slacks
            e = np.zeros(m)
            e[i] = 1.0
            cols.append(e)
            cost.append(0.0)
            upper.append(np.inf)
        A_std = np.column_stack(cols) if cols else np.zeros((m, 0))
        b_std = b - A @ shift if m else b
        if np.any(np.asarray(upper) < 0):
            self.trivially_infeasible = True
        else:
            self.trivially_infeasible = False
        self.A0 = A_std
        self.b0 = b_std
        self.c0 = np.asarray(cost, dtype=float)
        self.u0 = np.asarray(upper, dtype=float)
        self._scale()

    def _scale(self):
        A = self.A0
        m, n = A.shape
        R, C = np.ones(m), np.ones(n)
        S = np.abs(A)
        for _ in range(8):
            nz = S > 0
            with np.errstate(divide="ignore", invalid="ignore"):
                rmax = np.where(nz.any(1), np.max(np.where(nz, S, 0), 1, initial=0.0), 1.0)
                rmin = np.where(nz.any(1), np.min(np.where(nz, S, np.inf), 1, initial=np.inf), 1.0)
                rf = 1.0 / np.sqrt(rmax * rmin)
            S = S * rf[:, None]
            R *= rf
            nz = S > 0
            with np.errstate(divide="ignore", invalid="ignore"):
                cmax = np.where(nz.any(0), np.max(np.where(nz, S, 0), 0, initial=0.0), 1.0)
                cmin = np.where(nz.any(0), np.min(np.where(nz, S, np.inf), 0, initial=np.inf), 1.0)
                cf = 1.0 / np.sqrt(cmax * cmin)
            S = S * cf[None, :]
            C *= cf
        # powers of two keep the scaling exact
        R = np.exp2(np.round(np.log2(R)))
        C = np.exp2(np.round(np.log2(C)))
        self.R, self.C = R, C
        self.A = A * R[:, None] * C[None, :]
        self.b = self.b0 * R
        self.c = self.c0 * C
        self.u = self.u0 / C

    # -- core iteration -----------------------------------------------------------
    def _iterate(self, A, b, c, u, basis, at_upper, x, allowed):
        """Run primal simplex from a feasible basis. Returns (status, y, ray)."""
        tol = self.tol
        m = A.shape[0]
        degenerate_run = 0
        bland = False
        while True:
            if self.iterations >= tol.max_iter:
                return ITERATION_LIMIT, None, None
            self.iterations += 1
            if m == 0:
                d = c.copy()
                improve = np.where(at_upper, d > tol.dual, d < -tol.dual) & allowed & (u > 0)
                cand = np.flatnonzero(improve)
                if cand.size == 0:
                    return OPTIMAL, np.zeros(0), None
                j = int(cand[0])
                if not np.isfinite(u[j]):
                    ray = np.zeros(A.shape[1])
                    ray[j] = 1.0
                    return UNBOUNDED, np.zeros(0), ray
                at_upper[j] = not at_upper[j]
                x[j] = u[j] if at_upper[j] else 0.0
                continue
            B = A[:, basis]
            try:
                lu = lu_factor(B, check_finite=False)
            except (LinAlgError, ValueError):
                return NUMERICAL, None, None
            if np.any(np.abs(np.diag(lu[0])) < 1e-13):
                self.cond = np.linalg.cond(B)
                return NUMERICAL, None, None
            nonbasic = np.ones(A.shape[1], dtype=bool)
            nonbasic[basis] = False
            xN = np.where(nonbasic, x, 0.0)
            x[basis] = lu_solve(lu, b - A @ xN, check_finite=False)
            y = lu_solve(lu, c[basis], trans=1, check_finite=False) if m else np.zeros(0)
            d = c - A.T @ y
            improve = np.where(at_upper, d > tol.dual, d < -tol.dual) & nonbasic & allowed & (u > 0)
            cand = np.flatnonzero(improve)
            if cand.size == 0:
                return OPTIMAL, y, None
            if bland:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(np.abs(d[cand]))])
            direction = -1.0 if at_upper[j] else 1.0
            alpha = lu_solve(lu, A[:, j], check_finite=False)
            delta = direction * alpha  # x_B decreases by theta * delta
            theta, leave = self._ratio_test(x[basis], u[basis], delta, u[j], basis, bland)
            if not np.isfinite(theta):
                ray = np.zeros(A.shape[1])
                ray[j] = direction
                ray[basis] = -delta
                return UNBOUNDED, y, ray
            if theta <= tol.primal:
                degenerate_run += 1
                if degenerate_run > 50:
                    bland = True
            else:
                degenerate_run = 0
                bland = False
            x[j] += direction * theta
            x[basis] -= theta * delta
            if leave < 0:
                at_upper[j] = not at_upper[j]
                x[j] = u[j] if at_upper[j] else 0.0
                continue
            out = basis[leave]
            hit_upper = delta[leave] < 0
            x[out] = u[out] if hit_upper else 0.0
            at_upper[out] = hit_upper
            basis[leave] = j
            at_upper[j] = False

    def _ratio_test(self, xb, ub_b, delta, u_enter, basis, bland):
        """Two-pass (Harris) ratio test; returns (step, leaving position or -1 for a bound flip)."""
        piv, feas = self.tol.pivot, self.tol.primal
        dec = delta > piv
        inc = (delta < -piv) & np.isfinite(ub_b)
        t = np.full(delta.size, np.inf)
        t_relaxed = np.full(delta.size, np.inf)
        t[dec] = np.maximum(xb[dec], 0.0) / delta[dec]
        t_relaxed[dec] = (np.maximum(xb[dec], 0.0) + feas) / delta[dec]
        t[inc] = np.maximum(ub_b[inc] - xb[inc], 0.0) / -delta[inc]
        t_relaxed[inc] = (np.maximum(ub_b[inc] - xb[inc], 0.0) + feas) / -delta[inc]
        theta_max = t_relaxed.min(initial=np.inf)
        if u_enter <= theta_max:
            return u_enter, -1
        if not np.isfinite(theta_max):
            return np.inf, -1
        eligible = np.flatnonzero(t <= theta_max)
        if bland:
            i = int(eligible[np.argmin(np.asarray(basis)[eligible])])
        else:
            i = int(eligible[np.argmax(np.abs(delta[eligible]))])
        return float(t[i]), i

    def solve(self) -> LPResult:
        lp, tol = self.lp, self.tol
        if self.trivially_infeasible:
            return LPResult(INFEASIBLE, None, None, method="simplex", message="a variable has lb > ub")
        A, b, c, u = self.A, self.b, self.c, self.u
        m, n = A.shape
        sign = np.where(b < 0, -1.0, 1.0)
        A1 = np.hstack([A * sign[:, None], np.eye(m)])
        b1 = b * sign
        c1 = np.concatenate([np.zeros(n), np.ones(m)])
        u1 = np.concatenate([u, np.full(m, np.inf)])
        x = np.concatenate([np.zeros(n), b1])
        basis = list(range(n, n + m))
        at_upper = np.zeros(n + m, dtype=bool)
        allowed = np.ones(n + m, dtype=bool)
        status, y1, _ = self._iterate(A1, b1, c1, u1, basis, at_upper, x, allowed)
        if status != OPTIMAL:
            return self._fail(status)
        infeas = x[n:].sum()
        if infeas > tol.primal * max(1.0, np.abs(b1).max(initial=0.0)):
            cert = y1 * sign * self.R
            return LPResult(
                INFEASIBLE, None, None, method="simplex", iterations=self.iterations,
                message=f"phase 1 ended with infeasibility {infeas:.3e}", certificate=cert,
            )
        # drive artificials out of the basis; rows where that fails are redundant
        keep_rows = np.ones(m, dtype=bool)
        for pos in range(m):
            k = basis[pos]
            if k < n:
                continue
            B = A1[:, basis]
            lu = lu_factor(B, check_finite=False)
            e = np.zeros(m)
            e[pos] = 1.0
            row = lu_solve(lu, e, trans=1, check_finite=False) @ A1[:, :n]
            row[[k2 for k2 in basis if k2 < n]] = 0.0
            cand = [j for j in np.flatnonzero(np.abs(row) > 1e-9) if j < n]
            if cand:
                basis[pos] = int(cand[np.argmax(np.abs(row[cand]))])
            else:
                keep_rows[k - n] = False
        rows = np.flatnonzero(keep_rows)
        basis = [k for k in basis if k < n]
        A2 = A1[rows][:, :n]
        b2 = b1[rows]
        x2 = x[:n].copy()
        at2 = at_upper[:n].copy()
        status, y2, ray = self._iterate(A2, b2, c, u, basis, at2, x2, np.ones(n, dtype=bool))
        if status == UNBOUNDED:
            return LPResult(
                UNBOUNDED, None, None, method="simplex", iterations=self.iterations,
                message="objective unbounded below", certificate=self._unmap(ray * self.C, shift=False),
            )
        if status != OPTIMAL:
            return self._fail(status)
        y = np.zeros(m)
        y[rows] = y2
        y = y * sign * self.R  # duals of the unscaled standard rows
        z = x2 * self.C
        xo = self._unmap(z)
        mu = lp.b_ub.size
        y_ub, y_eq = y[:mu], y[mu:]
        d = lp.c - lp.A_ub.T @ y_ub - lp.A_eq.T @ y_eq
        z_lo, z_hi = _split_reduced_costs(lp, xo, d, tol.dual)
        return LPResult(
            OPTIMAL,
            xo,
            float(lp.c @ xo),
            dual_ub=y_ub,
            dual_eq=y_eq,
            dual_lower=z_lo,
            dual_upper=z_hi,
            dual_objective=_dual_objective(lp, y_ub, y_eq, z_lo, z_hi),
            iterations=self.iterations,
            method="simplex",
            message="optimal",
        )

    def _unmap(self, z, shift=True):
        x = self.shift.copy() if shift else np.zeros(self.lp.n)
        for j, parts in enumerate(self.colmap):
            for k, s in parts:
                x[j] += s * z[k]
        return x

    def _fail(self, status):
        diag = {}
        if status == NUMERICAL:
            diag["basis_condition"] = getattr(self, "cond", float("inf"))
        return LPResult(
            status, None, None, method="simplex", iterations=self.iterations,
            message=f"simplex stopped: {status}", diagnostics=diag,
        )
