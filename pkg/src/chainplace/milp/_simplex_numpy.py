"""Pure numpy/scipy revised simplex core (fallback for environments without
numba, selected with CHAINPLACE_KERNEL=numpy).

Same algorithm as `_simplex_numba` — two-phase bounded-variable simplex,
Dantzig pricing with Bland fallback, product-form eta updates — but the basis
factorization is a dense LAPACK LU and the per-iteration work is vectorized
instead of jitted. Slower on large bases, identical contracts.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ._simplex_numba import INFEASIBLE, ITERLIM, NUMERIC, OPTIMAL, UNBOUNDED

_AT_LB = 0
_AT_UB = 1
_BASIC = 2


class _Basis:
    """Dense LU of the basis plus the eta file accumulated since refactor."""

    def __init__(self, dense_b):
        self.lu = sla.lu_factor(dense_b, check_finite=False)
        self.etas: list[tuple[int, float, np.ndarray, np.ndarray]] = []

    def ftran(self, rhs):
        x = sla.lu_solve(self.lu, rhs, check_finite=False)
        for r, piv, idx, val in self.etas:
            xr = x[r] / piv
            if xr != 0.0:
                x[idx] -= val * xr
            x[r] = xr
        return x

    def btran(self, rhs):
        y = rhs.copy()
        for r, piv, idx, val in reversed(self.etas):
            y[r] = (y[r] - val @ y[idx]) / piv
        return sla.lu_solve(self.lu, y, trans=1, check_finite=False)

    def push_eta(self, w, r):
        mask = w != 0.0
        mask[r] = False
        idx = np.nonzero(mask)[0]
        self.etas.append((r, w[r], idx, w[idx].copy()))


def solve_assembled(asm, params):
    m, n = asm.m, asm.n
    big_n = asm.ap.size - 1
    n_slack_end = n + m
    lb = asm.lb.copy()
    ub = asm.ub.copy()
    vstat = asm.vstat.copy().astype(np.int64)
    basis = asm.basis.copy()
    b = asm.b
    c_real = asm.c

    a_csc = sp.csc_matrix((asm.ax, asm.ai, asm.ap), shape=(max(m, 1), big_n))
    a_csr_t = a_csc.T.tocsr()
    a_dense_cols = a_csc  # column extraction for ftran

    x = np.where(vstat == _AT_LB, lb, np.where(vstat == _AT_UB, ub, 0.0))
    x[~np.isfinite(x)] = 0.0

    phase = 1 if asm.phase1_needed else 2
    if phase == 1:
        cost = np.zeros(big_n)
        art = np.arange(n_slack_end, big_n)
        cost[art[ub[art] > 0.0]] = 1.0
    else:
        cost = c_real.copy()

    bnorm = 1.0 if m == 0 else max(1.0, float(np.max(np.abs(b))))
    col_scale = np.where(np.abs(cost) < 1e4, 1.0, 1e-4 * np.abs(cost))

    status = ITERLIM
    it = 0
    degen_streak = 0
    bland = False
    need_refactor = True
    fb: _Basis | None = None
    xb = np.zeros(m)
    y = np.zeros(m)

    feas_tol = params.feas_tol
    opt_tol = params.opt_tol
    piv_tol = params.piv_tol
    max_iter = params.max_iter
    bland_limit = params.bland_limit
    refactor_every = params.refactor_every

    while True:
        if need_refactor or (fb is not None and len(fb.etas) >= refactor_every):
            dense_b = a_dense_cols[:, basis].toarray() if m else np.zeros((0, 0))
            try:
                fb = _Basis(dense_b)
            except (ValueError, np.linalg.LinAlgError):
                status = NUMERIC
                break
            if m and not np.all(np.isfinite(fb.lu[0])):
                status = NUMERIC
                break
            need_refactor = False
            nb = vstat != _BASIC
            xnz = np.where(nb, x, 0.0)
            rhs = b - a_csc @ xnz
            xb = fb.ftran(rhs) if m else np.zeros(0)

        cb = cost[basis]
        y = fb.btran(cb.copy()) if m else np.zeros(0)

        d = cost - (a_csr_t @ y if m else 0.0)
        tolv = opt_tol * col_scale
        viol = np.full(big_n, -np.inf)
        movable = (vstat != _BASIC) & (ub - lb > 0.0)
        lo_sel = movable & (vstat == _AT_LB)
        up_sel = movable & (vstat == _AT_UB)
        viol[lo_sel] = -d[lo_sel] - tolv[lo_sel]
        viol[up_sel] = d[up_sel] - tolv[up_sel]

        if bland:
            cand = np.nonzero(viol > 0.0)[0]
            best_j = int(cand[0]) if cand.size else -1
        else:
            best_j = int(np.argmax(viol))
            if viol[best_j] <= 0.0:
                best_j = -1

        if best_j < 0:
            if phase == 1:
                inf1 = float(cb @ xb) if m else 0.0
                if inf1 > feas_tol * (1.0 + bnorm):
                    status = INFEASIBLE
                    break
                phase = 2
                cost = c_real.copy()
                ub[n_slack_end:] = 0.0
                col_scale = np.where(np.abs(cost) < 1e4, 1.0, 1e-4 * np.abs(cost))
                continue
            status = OPTIMAL
            break

        q = best_j
        dirn = 1.0 if vstat[q] == _AT_LB else -1.0
        col = np.zeros(m)
        s, e = asm.ap[q], asm.ap[q + 1]
        col[asm.ai[s:e]] = asm.ax[s:e]
        w = fb.ftran(col) if m else np.zeros(0)

        g = dirn * w
        lbb = lb[basis]
        ubb = ub[basis]
        lim = np.full(m, np.inf)
        dec = (g > piv_tol) & (lbb > -np.inf)
        inc = (g < -piv_tol) & (ubb < np.inf)
        lim[dec] = (xb[dec] - lbb[dec] + feas_tol) / g[dec]
        lim[inc] = (ubb[inc] - xb[inc] + feas_tol) / (-g[inc])
        theta_rel = float(lim.min()) if m else np.inf
        own_gap = ub[q] - lb[q]

        if not np.isfinite(theta_rel) and not np.isfinite(own_gap):
            status = UNBOUNDED
            break

        if own_gap <= theta_rel:
            xb -= dirn * own_gap * w
            if vstat[q] == _AT_LB:
                vstat[q] = _AT_UB
                x[q] = ub[q]
            else:
                vstat[q] = _AT_LB
                x[q] = lb[q]
            it += 1
            degen_streak = degen_streak + 1 if own_gap <= 1e-11 else 0
            bland = bland if own_gap <= 1e-11 else False
            if degen_streak > bland_limit:
                bland = True
            if it >= max_iter:
                status = ITERLIM
                break
            continue

        lim_exact = np.full(m, np.inf)
        lim_exact[dec] = np.maximum(0.0, (xb[dec] - lbb[dec]) / g[dec])
        lim_exact[inc] = np.maximum(0.0, (ubb[inc] - xb[inc]) / (-g[inc]))
        elig = lim_exact <= theta_rel
        if not elig.any():
            if fb.etas:
                need_refactor = True
                continue
            status = NUMERIC
            break
        if bland:
            cand = np.nonzero(elig)[0]
            r = int(cand[np.argmin(basis[cand])])
        else:
            aw = np.where(elig, np.abs(w), -np.inf)
            r = int(np.argmax(aw))
        wr = w[r]
        if abs(wr) < 10.0 * piv_tol and fb.etas:
            need_refactor = True
            continue
        if abs(wr) < 1e-12:
            status = NUMERIC
            break

        jb = basis[r]
        gr = dirn * wr
        if gr > 0.0:
            theta = max(0.0, (xb[r] - lb[jb]) / gr)
            leave_ub = False
        else:
            theta = max(0.0, (ub[jb] - xb[r]) / (-gr))
            leave_ub = True

        xb -= dirn * theta * w
        enter_val = x[q] + dirn * theta
        if leave_ub:
            x[jb] = ub[jb]
            vstat[jb] = _AT_UB
        else:
            x[jb] = lb[jb]
            vstat[jb] = _AT_LB
        basis[r] = q
        vstat[q] = _BASIC
        xb[r] = enter_val
        fb.push_eta(w, r)

        it += 1
        degen_streak = degen_streak + 1 if theta <= 1e-11 else 0
        bland = bland if theta <= 1e-11 else False
        if degen_streak > bland_limit:
            bland = True
        if it >= max_iter:
            status = ITERLIM
            break

    x[basis] = xb
    obj = float(c_real @ x)
    return int(status), obj, x, y, int(it)
