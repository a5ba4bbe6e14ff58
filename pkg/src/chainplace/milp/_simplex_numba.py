"""Numba-compiled revised simplex core (the hot path of the kernel).

Bounded-variable primal simplex with a two-phase artificial start, sparse LU
factorization of the basis (left-looking, partial pivoting) refactorized every
few pivots, and product-form eta updates in between. Pricing is Dantzig's rule
with a Bland's-rule fallback once a degenerate streak exceeds the configured
limit. `_simplex_numpy` implements the identical algorithm without numba.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# vstat codes (match standardize.py)
_AT_LB = 0
_AT_UB = 1
_BASIC = 2

# status codes
OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
ITERLIM = 3
NUMERIC = 4


@njit(cache=True)
def _grow_i64(a):
    b = np.empty(a.size * 2, np.int64)
    b[: a.size] = a
    return b


@njit(cache=True)
def _grow_f64(a):
    b = np.empty(a.size * 2, np.float64)
    b[: a.size] = a
    return b


@njit(cache=True)
def _factor(m, bp, bi, bx):
    """Sparse LU of the basis matrix with partial pivoting.

    L is unit lower (strict part stored, original row indices, values already
    divided by the pivot); U is strict upper by column with the pivot-step row
    index; `ud` holds the diagonal. Row pivot order in `prow`/`pinv`.
    """
    cap0 = 4 * (bp[m] + m) + 16
    li = np.empty(cap0, np.int64)
    lx = np.empty(cap0, np.float64)
    ui = np.empty(cap0, np.int64)
    ux = np.empty(cap0, np.float64)
    lp_ = np.zeros(m + 1, np.int64)
    up_ = np.zeros(m + 1, np.int64)
    ud = np.zeros(m, np.float64)
    prow = np.empty(m, np.int64)
    pinv = np.full(m, -1, np.int64)
    w = np.zeros(m, np.float64)
    mark = np.zeros(m, np.uint8)
    touched = np.empty(m, np.int64)
    nl = 0
    nu = 0
    ok = True
    for k in range(m):
        nt = 0
        for p in range(bp[k], bp[k + 1]):
            i = bi[p]
            if mark[i] == 0:
                mark[i] = 1
                touched[nt] = i
                nt += 1
            w[i] += bx[p]
        for j in range(k):
            pj = prow[j]
            uval = w[pj]
            if uval != 0.0:
                if nu >= ui.size:
                    ui = _grow_i64(ui)
                    ux = _grow_f64(ux)
                ui[nu] = j
                ux[nu] = uval
                nu += 1
                for p in range(lp_[j], lp_[j + 1]):
                    i = li[p]
                    if mark[i] == 0:
                        mark[i] = 1
                        touched[nt] = i
                        nt += 1
                    w[i] -= uval * lx[p]
                w[pj] = 0.0
        up_[k + 1] = nu
        piv_i = -1
        piv_a = 0.0
        for t in range(nt):
            i = touched[t]
            if pinv[i] == -1:
                a = abs(w[i])
                if a > piv_a:
                    piv_a = a
                    piv_i = i
        if piv_i < 0 or piv_a < 1e-12:
            ok = False
            for t in range(nt):
                w[touched[t]] = 0.0
                mark[touched[t]] = 0
            break
        piv = w[piv_i]
        ud[k] = piv
        prow[k] = piv_i
        pinv[piv_i] = k
        for t in range(nt):
            i = touched[t]
            if pinv[i] == -1 and w[i] != 0.0:
                if nl >= li.size:
                    li = _grow_i64(li)
                    lx = _grow_f64(lx)
                li[nl] = i
                lx[nl] = w[i] / piv
                nl += 1
        lp_[k + 1] = nl
        for t in range(nt):
            w[touched[t]] = 0.0
            mark[touched[t]] = 0
    return ok, lp_, li, lx, up_, ui, ux, ud, prow, pinv


@njit(cache=True)
def _lu_ftran(m, lp_, li, lx, up_, ui, ux, ud, prow, rhs, out):
    """Solve B out = rhs (rhs in original row space, destroyed; out in basis
    slot space)."""
    for k in range(m):
        val = rhs[prow[k]]
        out[k] = val
        if val != 0.0:
            for p in range(lp_[k], lp_[k + 1]):
                rhs[li[p]] -= val * lx[p]
    for k in range(m - 1, -1, -1):
        xk = out[k] / ud[k]
        out[k] = xk
        if xk != 0.0:
            for p in range(up_[k], up_[k + 1]):
                out[ui[p]] -= ux[p] * xk


@njit(cache=True)
def _ftran(m, lp_, li, lx, up_, ui, ux, ud, prow,
           n_eta, e_start, e_r, e_piv, e_i, e_x, rhs, out):
    _lu_ftran(m, lp_, li, lx, up_, ui, ux, ud, prow, rhs, out)
    for e in range(n_eta):
        r = e_r[e]
        xr = out[r] / e_piv[e]
        if xr != 0.0:
            for p in range(e_start[e], e_start[e + 1]):
                out[e_i[p]] -= e_x[p] * xr
        out[r] = xr


@njit(cache=True)
def _btran(m, lp_, li, lx, up_, ui, ux, ud, prow, pinv,
           n_eta, e_start, e_r, e_piv, e_i, e_x, vec, z, v, y):
    """Solve B^T y = vec (vec in basis slot space, destroyed; y in original
    row space)."""
    for e in range(n_eta - 1, -1, -1):
        r = e_r[e]
        s = vec[r]
        for p in range(e_start[e], e_start[e + 1]):
            s -= e_x[p] * vec[e_i[p]]
        vec[r] = s / e_piv[e]
    for k in range(m):
        s = vec[k]
        for p in range(up_[k], up_[k + 1]):
            s -= ux[p] * z[ui[p]]
        z[k] = s / ud[k]
    for k in range(m - 1, -1, -1):
        s = z[k]
        for p in range(lp_[k], lp_[k + 1]):
            s -= lx[p] * v[pinv[li[p]]]
        v[k] = s
    for k in range(m):
        y[prow[k]] = v[k]


@njit(cache=True)
def lp_core(m, n_struct, ap, ai, ax, b, c_real, lb, ub, vstat, basis,
            phase1_needed, feas_tol, opt_tol, piv_tol, max_iter,
            bland_limit, refactor_every):
    big_n = ap.size - 1
    n_slack_end = n_struct + m

    x = np.zeros(big_n)
    for j in range(big_n):
        if vstat[j] == _AT_LB:
            x[j] = lb[j]
        elif vstat[j] == _AT_UB:
            x[j] = ub[j]

    cost = np.zeros(big_n)
    phase = 2
    if phase1_needed:
        phase = 1
        for j in range(n_slack_end, big_n):
            if ub[j] > 0.0:
                cost[j] = 1.0
    else:
        for j in range(big_n):
            cost[j] = c_real[j]

    bnorm = 1.0
    for i in range(m):
        a = abs(b[i])
        if a > bnorm:
            bnorm = a

    eta_cap = refactor_every * max(m, 1) + 16
    e_i = np.empty(eta_cap, np.int64)
    e_x = np.empty(eta_cap, np.float64)
    e_start = np.zeros(refactor_every + 1, np.int64)
    e_r = np.empty(refactor_every, np.int64)
    e_piv = np.empty(refactor_every, np.float64)
    n_eta = 0

    xb = np.zeros(m)
    y = np.zeros(m)
    cb = np.zeros(m)
    wk_z = np.zeros(m)
    wk_v = np.zeros(m)
    w = np.zeros(m)

    # dummy factor holders (replaced at first refactorization)
    lp_ = np.zeros(1, np.int64)
    li = np.zeros(1, np.int64)
    lx = np.zeros(1, np.float64)
    up_ = np.zeros(1, np.int64)
    ui = np.zeros(1, np.int64)
    ux = np.zeros(1, np.float64)
    ud = np.zeros(1, np.float64)
    prow = np.zeros(1, np.int64)
    pinv = np.zeros(1, np.int64)

    status = ITERLIM
    it = 0
    degen_streak = 0
    bland = False
    need_refactor = True

    while True:
        if need_refactor or n_eta >= refactor_every:
            nnzb = 0
            for k in range(m):
                jb = basis[k]
                nnzb += ap[jb + 1] - ap[jb]
            bp = np.empty(m + 1, np.int64)
            bi = np.empty(max(nnzb, 1), np.int64)
            bx = np.empty(max(nnzb, 1), np.float64)
            bp[0] = 0
            q0 = 0
            for k in range(m):
                jb = basis[k]
                for p in range(ap[jb], ap[jb + 1]):
                    bi[q0] = ai[p]
                    bx[q0] = ax[p]
                    q0 += 1
                bp[k + 1] = q0
            ok, lp_, li, lx, up_, ui, ux, ud, prow, pinv = _factor(m, bp, bi, bx)
            if not ok:
                status = NUMERIC
                break
            n_eta = 0
            need_refactor = False
            rhs = b.copy()
            for j in range(big_n):
                if vstat[j] != _BASIC:
                    xj = x[j]
                    if xj != 0.0:
                        for p in range(ap[j], ap[j + 1]):
                            rhs[ai[p]] -= ax[p] * xj
            _lu_ftran(m, lp_, li, lx, up_, ui, ux, ud, prow, rhs, xb)

        for k in range(m):
            cb[k] = cost[basis[k]]
        _btran(m, lp_, li, lx, up_, ui, ux, ud, prow, pinv,
               n_eta, e_start, e_r, e_piv, e_i, e_x, cb, wk_z, wk_v, y)

        best_j = -1
        best_viol = 0.0
        for j in range(big_n):
            st = vstat[j]
            if st == _BASIC:
                continue
            if ub[j] - lb[j] <= 0.0:
                continue
            d = cost[j]
            for p in range(ap[j], ap[j + 1]):
                d -= y[ai[p]] * ax[p]
            cj = abs(cost[j])
            tol_j = opt_tol * (1.0 if cj < 1e4 else 1e-4 * cj)
            if st == _AT_LB:
                viol = -d - tol_j
            else:
                viol = d - tol_j
            if viol > 0.0:
                if bland:
                    best_j = j
                    break
                if viol > best_viol:
                    best_viol = viol
                    best_j = j

        if best_j < 0:
            if phase == 1:
                inf1 = 0.0
                for k in range(m):
                    inf1 += cost[basis[k]] * xb[k]
                if inf1 > feas_tol * (1.0 + bnorm):
                    status = INFEASIBLE
                    break
                phase = 2
                for j in range(big_n):
                    cost[j] = c_real[j]
                for j in range(n_slack_end, big_n):
                    ub[j] = 0.0
                continue
            status = OPTIMAL
            break

        q = best_j
        dirn = 1.0 if vstat[q] == _AT_LB else -1.0

        rhs = np.zeros(m)
        for p in range(ap[q], ap[q + 1]):
            rhs[ai[p]] = ax[p]
        _ftran(m, lp_, li, lx, up_, ui, ux, ud, prow,
               n_eta, e_start, e_r, e_piv, e_i, e_x, rhs, w)

        theta_rel = np.inf
        for k in range(m):
            g = dirn * w[k]
            jb = basis[k]
            if g > piv_tol:
                if lb[jb] > -np.inf:
                    lim = (xb[k] - lb[jb] + feas_tol) / g
                    if lim < theta_rel:
                        theta_rel = lim
            elif g < -piv_tol:
                if ub[jb] < np.inf:
                    lim = (ub[jb] - xb[k] + feas_tol) / (-g)
                    if lim < theta_rel:
                        theta_rel = lim
        own_gap = ub[q] - lb[q]

        if theta_rel == np.inf and own_gap == np.inf:
            status = UNBOUNDED
            break

        if own_gap <= theta_rel:
            for k in range(m):
                xb[k] -= dirn * own_gap * w[k]
            if vstat[q] == _AT_LB:
                vstat[q] = _AT_UB
                x[q] = ub[q]
            else:
                vstat[q] = _AT_LB
                x[q] = lb[q]
            it += 1
            if own_gap <= 1e-11:
                degen_streak += 1
            else:
                degen_streak = 0
                bland = False
            if degen_streak > bland_limit:
                bland = True
            if it >= max_iter:
                status = ITERLIM
                break
            continue

        r = -1
        best_w = 0.0
        best_idx = -1
        for k in range(m):
            g = dirn * w[k]
            jb = basis[k]
            if g > piv_tol:
                if lb[jb] <= -np.inf:
                    continue
                lim = (xb[k] - lb[jb]) / g
            elif g < -piv_tol:
                if ub[jb] >= np.inf:
                    continue
                lim = (ub[jb] - xb[k]) / (-g)
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            if lim <= theta_rel:
                if bland:
                    if best_idx < 0 or jb < best_idx:
                        best_idx = jb
                        r = k
                else:
                    aw = abs(w[k])
                    if aw > best_w:
                        best_w = aw
                        r = k
        if r < 0:
            if n_eta > 0:
                need_refactor = True
                continue
            status = NUMERIC
            break
        wr = w[r]
        if abs(wr) < 10.0 * piv_tol and n_eta > 0:
            need_refactor = True
            continue
        if abs(wr) < 1e-12:
            status = NUMERIC
            break

        g = dirn * wr
        jb = basis[r]
        if g > 0.0:
            theta = (xb[r] - lb[jb]) / g
            leave_ub = False
        else:
            theta = (ub[jb] - xb[r]) / (-g)
            leave_ub = True
        if theta < 0.0:
            theta = 0.0

        for k in range(m):
            xb[k] -= dirn * theta * w[k]
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

        cnt = e_start[n_eta]
        for k in range(m):
            if k != r and w[k] != 0.0:
                e_i[cnt] = k
                e_x[cnt] = w[k]
                cnt += 1
        e_start[n_eta + 1] = cnt
        e_r[n_eta] = r
        e_piv[n_eta] = wr
        n_eta += 1

        it += 1
        if theta <= 1e-11:
            degen_streak += 1
        else:
            degen_streak = 0
            bland = False
        if degen_streak > bland_limit:
            bland = True
        if it >= max_iter:
            status = ITERLIM
            break

    for k in range(m):
        x[basis[k]] = xb[k]
    obj = 0.0
    for j in range(big_n):
        obj += c_real[j] * x[j]
    return status, obj, x, y, it


def solve_assembled(asm, params):
    """Run the numba core on an Assembled problem (see standardize)."""
    status, obj, x, y, iters = lp_core(
        asm.m,
        asm.n,
        asm.ap,
        asm.ai,
        asm.ax,
        asm.b,
        asm.c,
        asm.lb.copy(),
        asm.ub.copy(),
        asm.vstat.copy(),
        asm.basis.copy(),
        asm.phase1_needed,
        params.feas_tol,
        params.opt_tol,
        params.piv_tol,
        params.max_iter,
        params.bland_limit,
        params.refactor_every,
    )
    return int(status), float(obj), x, y, int(iters)
