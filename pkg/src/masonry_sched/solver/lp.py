"""Bounded-variable dual simplex (revised form, sparse LU with eta updates).

Problem form::

    min c.x   s.t.  row_lo <= A x <= row_hi,  col_lo <= x <= col_hi

One logical variable ``w = A x`` is attached to every row so the system
becomes ``K z = 0`` with ``K = [A  -I]`` and bounds on every entry of ``z``.
The all-logical basis is the cold start; nonbasic variables are parked at
whichever bound keeps their reduced cost dual feasible. Infinite bounds that
would be needed for that are replaced by a large artificial box, and an
optimum that still leans on an artificial bound is reported as unbounded.

Pricing picks the most infeasible basic variable; the ratio test is Harris'
two-pass rule. After ``DEGENERATE_LIMIT`` consecutive degenerate pivots the
engine switches to Bland's smallest-index rule for the rest of the solve.
Pivots that are tiny relative to their column are refused. A basis that
still turns out singular is repaired by swapping its dependent columns for
slacks. Reduced costs are re-checked on a fresh factorisation before
optimality is reported.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import qr
from scipy.sparse.linalg import splu

BASIC, AT_LO, AT_UP, FREE = 0, 1, 2, 3

PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-7
DEGENERATE_LIMIT = 50
REFACTOR_EVERY = 64
REL_PIVOT_TOL = 1e-9
RANK_TOL = 1e-11
CLEANUP_TOL = 1e-7  # dual infeasibility that triggers re-parking at termination
MAX_CLEANUPS = 20  # relative to the largest R diagonal in basis repair


class LPError(RuntimeError):
    pass


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit" | "time_limit" | "numerical_failure"
    x: np.ndarray | None = None
    objective: float = math.nan
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


@dataclass
class Basis:
    head: np.ndarray  # variable index basic in each row
    status: np.ndarray  # per-variable BASIC / AT_LO / AT_UP / FREE

    def copy(self) -> "Basis":
        return Basis(self.head.copy(), self.status.copy())


def scale_factors(A, passes: int = 4):
    """Power-of-two row and column factors from geometric-mean scaling, then row equilibration."""
    m, n = A.shape
    rs, cs = np.ones(m), np.ones(n)
    absA = abs(sp.csr_matrix(A))
    if absA.nnz == 0:
        return rs, cs

    def pow2(v):
        return np.exp2(np.round(np.log2(v)))

    for _ in range(passes):
        S = sp.diags(rs) @ absA @ sp.diags(cs)
        S = sp.csr_matrix(S)
        rmax = S.max(axis=1).toarray().ravel()
        rmin = _nonzero_min(S, axis=1)
        ok = rmax > 0
        rs[ok] /= pow2(np.sqrt(rmax[ok] * rmin[ok]))
        S = sp.csc_matrix(sp.diags(rs) @ absA @ sp.diags(cs))
        cmax = S.max(axis=0).toarray().ravel()
        cmin = _nonzero_min(S, axis=0)
        ok = cmax > 0
        cs[ok] /= pow2(np.sqrt(cmax[ok] * cmin[ok]))
    S = sp.csr_matrix(sp.diags(rs) @ absA @ sp.diags(cs))
    rmax = S.max(axis=1).toarray().ravel()
    ok = rmax > 0
    rs[ok] /= pow2(rmax[ok])
    return rs, cs


def _nonzero_min(S, axis):
    """Smallest nonzero magnitude per row (axis=1) or column (axis=0); 0 where empty."""
    S = sp.csr_matrix(S) if axis == 1 else sp.csc_matrix(S)
    out = np.zeros(S.shape[0] if axis == 1 else S.shape[1])
    for k in range(len(out)):
        seg = S.data[S.indptr[k]:S.indptr[k + 1]]
        seg = seg[seg > 0]
        if seg.size:
            out[k] = seg.min()
    return out


class _Factor:
    """B^-1 as a sparse LU of the last refactorised basis plus a list of eta columns."""

    def __init__(self, B):
        try:
            self.lu = splu(sp.csc_matrix(B))
        except RuntimeError as exc:
            raise LPError("singular basis") from exc
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, b):
        x = self.lu.solve(np.asarray(b, dtype=float))
        for r, a in self.etas:
            xr = x[r] / a[r]
            x -= a * xr
            x[r] = xr
        return x

    def btran(self, e):
        y = np.array(e, dtype=float)
        for r, a in reversed(self.etas):
            y[r] = (y[r] - (a @ y - a[r] * y[r])) / a[r]
        return self.lu.solve(y, trans="T")

    def update(self, r: int, col):
        self.etas.append((r, col))


class DualSimplex:
    def __init__(
        self, A, row_lo, row_hi, c, artificial_bound: float = 1e6, max_iter: int = 200000, deadline=None
    ):
        A = sp.csr_matrix(A, dtype=float)
        self.m, self.n = A.shape
        rs, cs = scale_factors(A)
        self.col_scale = cs  # x = col_scale * x_scaled
        A = sp.diags(rs) @ A @ sp.diags(cs)
        self.K = sp.hstack([A, -sp.identity(self.m, format="csr")], format="csc")
        self.KT = self.K.T.tocsr()
        self.c = np.concatenate([np.asarray(c, dtype=float) * cs, np.zeros(self.m)])
        self.row_lo = np.asarray(row_lo, dtype=float) * rs
        self.row_hi = np.asarray(row_hi, dtype=float) * rs
        self.big0 = float(artificial_bound)
        self.max_iter = max_iter
        self.deadline = deadline  # time.monotonic() value after which solves give up
        self.basis: Basis | None = None
        self.factor: _Factor | None = None
        self.d = None
        self.z = None

    # -- setup -----------------------------------------------------------------

    def _set_bounds(self, col_lo, col_hi):
        cs = self.col_scale
        self.true_lo = np.concatenate([np.asarray(col_lo, float) / cs, self.row_lo])
        self.true_hi = np.concatenate([np.asarray(col_hi, float) / cs, self.row_hi])
        self.lo = self.true_lo.copy()
        self.hi = self.true_hi.copy()

    def slack_basis(self) -> Basis:
        nt = self.n + self.m
        head = np.arange(self.n, nt)
        status = np.full(nt, AT_LO, dtype=np.int8)
        status[head] = BASIC
        return Basis(head, status)

    def _refactor(self):
        self.factor = _Factor(self.K[:, self.basis.head])
        y = self.factor.btran(self.c[self.basis.head])
        self.d = self.c - self.KT @ y
        self.d[self.basis.head] = 0.0

    def _place_nonbasic(self):
        """Put every nonbasic variable on a bound that keeps it dual feasible."""
        st, lo, hi, d = self.basis.status, self.lo, self.hi, self.d
        self.z = np.zeros(self.n + self.m)
        for j in np.flatnonzero(st != BASIC):
            if lo[j] == hi[j]:
                st[j] = AT_LO
            elif d[j] > DUAL_TOL:
                if not math.isfinite(lo[j]):
                    lo[j] = -self.big if not math.isfinite(hi[j]) else hi[j] - self.big
                st[j] = AT_LO
            elif d[j] < -DUAL_TOL:
                if not math.isfinite(hi[j]):
                    hi[j] = self.big if not math.isfinite(lo[j]) else lo[j] + self.big
                st[j] = AT_UP
            elif st[j] == AT_UP and math.isfinite(hi[j]):
                pass
            elif math.isfinite(lo[j]):
                st[j] = AT_LO
            elif math.isfinite(hi[j]):
                st[j] = AT_UP
            else:
                st[j] = FREE
            if st[j] == AT_LO:
                self.z[j] = lo[j]
            elif st[j] == AT_UP:
                self.z[j] = hi[j]

    def _primal_basic(self):
        z = self.z
        z[self.basis.head] = 0.0
        z[self.basis.head] = self.factor.ftran(-(self.K @ z))

    # -- main loop -------------------------------------------------------------

    def solve(self, col_lo, col_hi, basis: Basis | None = None) -> LPResult:
        """Solve with the given column bounds, optionally warm-starting from ``basis``."""
        self._set_bounds(col_lo, col_hi)
        if np.any(self.true_lo > self.true_hi + PRIMAL_TOL):
            return LPResult("infeasible")
        self.big = self.big0
        self.basis = basis.copy() if basis is not None else self.slack_basis()
        try:
            self._refactor()
        except LPError:
            if basis is None:
                raise
            self.basis = self.slack_basis()
            self._refactor()
        self._place_nonbasic()
        res = self._iterate()
        if res.status != "optimal":
            return res
        # bounded LPs must not rest on the artificial box
        for _ in range(3):
            st = self.basis.status
            art = [
                j for j in np.flatnonzero(st != BASIC)
                if abs(self.d[j]) > DUAL_TOL
                and ((st[j] == AT_LO and not math.isfinite(self.true_lo[j]))
                     or (st[j] == AT_UP and not math.isfinite(self.true_hi[j])))
            ]
            if not art:
                break
            if any(self._is_ray(j) for j in art):
                return LPResult("unbounded", iterations=res.iterations)
            self.big *= 1e3
            self.lo = self.true_lo.copy()
            self.hi = self.true_hi.copy()
            self._place_nonbasic()
            res = self._iterate()
            if res.status == "infeasible":
                # a point inside the smaller box was feasible, so this is round-off
                return LPResult("numerical_failure", iterations=res.iterations)
            if res.status != "optimal":
                return res
        else:
            return LPResult("unbounded", iterations=res.iterations)
        return res

    def _is_ray(self, j: int) -> bool:
        """Whether pushing nonbasic ``j`` past its artificial bound stays feasible forever."""
        s = 1.0 if self.basis.status[j] == AT_UP else -1.0
        step = -s * self.factor.ftran(self.K[:, [j]].toarray().ravel())  # change of the basics
        head = self.basis.head
        up = step > PIVOT_TOL
        down = step < -PIVOT_TOL
        return not (np.any(np.isfinite(self.true_hi[head[up]])) or np.any(np.isfinite(self.true_lo[head[down]])))

    def _safe_refactor(self):
        """Refactorise; a singular basis is repaired by swapping in slacks."""
        try:
            self._refactor()
        except LPError:
            self.restarts += 1
            if self.restarts > 10:
                raise
            if not self._repair_basis():
                fresh = self.slack_basis()
                self.basis.head[:] = fresh.head
                self.basis.status[:] = fresh.status
            self._refactor()
            self._place_nonbasic()
        self._primal_basic()

    def _repair_basis(self) -> bool:
        """Replace dependent basic columns by the slacks of the rows they leave uncovered.

        Rank-revealing QR on the dense basis picks the independent columns; a second
        QR on their transpose picks rows they span, and the remaining rows get their
        slack. Returns False when no deficiency is found.
        """
        head, st = self.basis.head, self.basis.status
        B = self.K[:, head].toarray()
        R, piv = qr(B, mode="r", pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > RANK_TOL * diag[0])) if diag.size else 0
        if rank == self.m:
            return False
        keep = head[np.sort(piv[:rank])]
        _, rows = qr(B[:, np.sort(piv[:rank])].T, mode="r", pivoting=True)
        slacks = self.n + np.sort(rows[rank:])
        for k in piv[rank:]:
            st[head[k]] = AT_LO  # _place_nonbasic picks the dual feasible bound
        st[slacks] = BASIC
        head[:] = np.concatenate([keep, slacks])
        return True

    def _dual_infeasible(self) -> np.ndarray:
        st, d = self.basis.status, self.d
        movable = (st != BASIC) & (self.lo != self.hi)
        return movable & (
            ((st == AT_LO) & (d < -CLEANUP_TOL))
            | ((st == AT_UP) & (d > CLEANUP_TOL))
            | ((st == FREE) & (np.abs(d) > CLEANUP_TOL))
        )

    def _iterate(self) -> LPResult:
        self.restarts = 0
        head, st = self.basis.head, self.basis.status
        lo, hi = self.lo, self.hi
        self._primal_basic()
        degenerate = 0
        cleanups = 0
        bland = False
        skip = np.zeros(self.m, dtype=bool)  # rows whose every pivot was rejected
        for it in range(self.max_iter):
            if self.deadline is not None and it % 20 == 0 and time.monotonic() > self.deadline:
                return LPResult("time_limit", iterations=it)
            zb = self.z[head]
            below = lo[head] - zb
            above = zb - hi[head]
            infeas = np.maximum(below, above)
            cand = np.flatnonzero((infeas > PRIMAL_TOL * (1.0 + np.abs(zb))) & ~skip)
            if cand.size == 0:
                if skip.any():
                    if not self.factor.etas:
                        return LPResult("numerical_failure", iterations=it)
                    skip[:] = False
                    self._safe_refactor()
                    continue
                if self.factor.etas:
                    # confirm on a fresh factorisation before declaring optimality
                    self._safe_refactor()
                    continue
                if self._dual_infeasible().any() and cleanups < MAX_CLEANUPS:
                    # rejected pivots can leave reduced costs of the wrong sign; re-park and go on
                    cleanups += 1
                    self._place_nonbasic()
                    self._primal_basic()
                    continue
                return self._finish(it)
            if bland:
                r = cand[np.argmin(head[cand])]
            else:
                r = cand[np.argmax(infeas[cand])]
            to_lower = below[r] > above[r]
            e = np.zeros(self.m)
            e[r] = 1.0
            alpha = self.KT @ self.factor.btran(e)
            alpha[head] = 0.0
            alpha[head[r]] = 1.0
            movable = (st != BASIC) & (lo != hi)
            if to_lower:
                # basic var must increase: z_leave = -sum alpha_j z_j
                elig = movable & (
                    ((st == AT_LO) & (alpha < -PIVOT_TOL))
                    | ((st == AT_UP) & (alpha > PIVOT_TOL))
                    | ((st == FREE) & (np.abs(alpha) > PIVOT_TOL))
                )
            else:
                elig = movable & (
                    ((st == AT_LO) & (alpha > PIVOT_TOL))
                    | ((st == AT_UP) & (alpha < -PIVOT_TOL))
                    | ((st == FREE) & (np.abs(alpha) > PIVOT_TOL))
                )
            if not elig.any():
                if self.factor.etas:
                    self._safe_refactor()
                    continue
                return LPResult("infeasible", iterations=it)
            outcome = None
            while outcome not in ("ok", "refactor"):
                js = np.flatnonzero(elig)
                if js.size == 0:
                    break
                abs_a = np.abs(alpha[js])
                abs_d = np.abs(self.d[js])
                ratios = abs_d / abs_a
                if bland:
                    best = ratios.min()
                    q = js[ratios <= best + 1e-12 * (1.0 + best)].min()
                else:
                    # Harris: allow a small dual infeasibility in exchange for a larger pivot
                    bound = ((abs_d + DUAL_TOL) / abs_a).min()
                    pool = np.flatnonzero(ratios <= bound)
                    k = pool[np.argmax(abs_a[pool])]
                    q, best = js[k], ratios[k]
                outcome = self._pivot(r, q, alpha, to_lower)
                if outcome == "reject":
                    elig[q] = False
            if outcome != "ok" and outcome != "refactor":
                skip[r] = True  # no acceptable pivot in this row; try another one
                continue
            if outcome == "refactor":
                skip[:] = False
                self._safe_refactor()
                continue
            skip[:] = False
            if best <= 1e-12:
                degenerate += 1
                if degenerate > DEGENERATE_LIMIT:
                    bland = True
            else:
                degenerate = 0
            if len(self.factor.etas) >= REFACTOR_EVERY:
                self._safe_refactor()
        return LPResult("iteration_limit", iterations=self.max_iter)

    def _pivot(self, r: int, q: int, alpha_row, to_lower: bool):
        head, st = self.basis.head, self.basis.status
        leave = head[r]
        col = self.factor.ftran(self.K[:, [q]].toarray().ravel())
        alpha_rq = col[r]
        if abs(alpha_rq - alpha_row[q]) > 1e-7 * (1.0 + abs(alpha_rq)) or abs(alpha_rq) < PIVOT_TOL:
            # row and column disagree: accumulated error in the eta file
            return "refactor" if self.factor.etas else "reject"
        if abs(alpha_rq) < REL_PIVOT_TOL * np.abs(col).max():
            return "reject"  # tiny relative to the column: the new basis would be near singular
        target = self.lo[leave] if to_lower else self.hi[leave]
        delta = (self.z[leave] - target) / alpha_rq
        self.z[head] -= col * delta
        self.z[q] += delta
        theta_d = self.d[q] / alpha_row[q]
        self.d -= theta_d * alpha_row
        self.d[q] = 0.0
        self.d[leave] = -theta_d
        self.factor.update(r, col)
        head[r] = q
        st[q] = BASIC
        if to_lower:
            st[leave] = AT_LO
            self.z[leave] = self.lo[leave]
        else:
            st[leave] = AT_UP
            self.z[leave] = self.hi[leave]
        return "ok"

    def _finish(self, it: int) -> LPResult:
        xs = self.z[: self.n]
        x = xs * self.col_scale
        return LPResult("optimal", x, float(self.c[: self.n] @ xs), it)


def model_arrays(model):
    """``(A sparse, row_lo, row_hi, c, col_lo, col_hi, is_int)`` for a ``MilpModel``."""
    n, m = model.n_cols, model.n_rows
    rows, cols, vals = [], [], []
    lo = np.full(m, -math.inf)
    hi = np.full(m, math.inf)
    for i, row in enumerate(model.rows):
        for j, v in row.coefs.items():
            rows.append(i)
            cols.append(j)
            vals.append(v)
        if row.sense in (">=", "="):
            lo[i] = row.rhs
        if row.sense in ("<=", "="):
            hi[i] = row.rhs
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    c = np.zeros(n)
    for j, v in model.objective.items():
        c[j] = v
    col_lo = np.array([col.lb for col in model.columns], dtype=float)
    col_hi = np.array([col.ub for col in model.columns], dtype=float)
    is_int = np.array([col.kind != "C" for col in model.columns], dtype=bool)
    return A, lo, hi, c, col_lo, col_hi, is_int


def solve_lp(model, col_lo=None, col_hi=None) -> LPResult:
    """Solve the continuous relaxation of a ``MilpModel``."""
    A, lo, hi, c, clo, chi, _ = model_arrays(model)
    if col_lo is not None:
        clo = np.asarray(col_lo, float)
    if col_hi is not None:
        chi = np.asarray(col_hi, float)
    if model.n_cols == 0:
        feasible = np.all(lo <= PRIMAL_TOL) and np.all(hi >= -PRIMAL_TOL)
        if not feasible:
            return LPResult("infeasible")
        return LPResult("optimal", np.zeros(0), model.obj_constant, 0)
    res = DualSimplex(A, lo, hi, c).solve(clo, chi)
    if res.ok:
        res.objective += model.obj_constant
    return res
