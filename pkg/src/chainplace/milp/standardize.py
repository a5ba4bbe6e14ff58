"""Compile a MilpModel into the array form the simplex cores consume.

Columns are laid out as [structural | row slacks | row artificials]. Slack
bounds encode the row sense (<=: [0, inf), >=: (-inf, 0], =: fixed 0). The
start basis puts each row's slack basic when it can absorb the initial
residual, otherwise a signed artificial with unit phase-1 cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import BINARY, EQ, GE, LE, MilpModel

AT_LB = np.int8(0)
AT_UB = np.int8(1)
BASIC = np.int8(2)

SENSE_LE = 0
SENSE_EQ = 1
SENSE_GE = 2

_SENSE_CODE = {LE: SENSE_LE, EQ: SENSE_EQ, GE: SENSE_GE}


@dataclass
class Standardized:
    """Structural part of the problem in CSC arrays (rows m, columns n)."""

    m: int
    n: int
    ap: np.ndarray
    ai: np.ndarray
    ax: np.ndarray
    b: np.ndarray
    senses: np.ndarray
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    is_binary: np.ndarray
    var_names: list[str]
    con_names: list[str]


def standardize(model: MilpModel) -> Standardized:
    n = model.num_variables
    m = model.num_constraints
    c = np.array([v.obj for v in model.variables], dtype=np.float64)
    lb = np.array([v.lb for v in model.variables], dtype=np.float64)
    ub = np.array([v.ub for v in model.variables], dtype=np.float64)
    is_binary = np.array([v.kind == BINARY for v in model.variables], dtype=np.bool_)
    b = np.array([con.rhs for con in model.constraints], dtype=np.float64)
    senses = np.array([_SENSE_CODE[con.sense] for con in model.constraints], dtype=np.int8)

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i, con in enumerate(model.constraints):
        for var, coef in con.coeffs.items():
            if coef != 0.0:
                rows.append(i)
                cols.append(model.var_index(var))
                vals.append(coef)
    mat = sp.coo_matrix(
        (np.array(vals, dtype=np.float64), (np.array(rows), np.array(cols))),
        shape=(max(m, 1), max(n, 1)),
    ).tocsc()
    mat.sum_duplicates()
    return Standardized(
        m=m,
        n=n,
        ap=mat.indptr.astype(np.int64)[: n + 1],
        ai=mat.indices.astype(np.int64),
        ax=mat.data.astype(np.float64),
        b=b,
        senses=senses,
        c=c,
        lb=lb,
        ub=ub,
        is_binary=is_binary,
        var_names=[v.name for v in model.variables],
        con_names=[con.name for con in model.constraints],
    )


@dataclass
class Assembled:
    """Extended arrays (structural + slack + artificial columns) plus the
    start basis, ready for a simplex core."""

    m: int
    n: int  # structural count
    ap: np.ndarray
    ai: np.ndarray
    ax: np.ndarray
    b: np.ndarray
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    vstat: np.ndarray
    basis: np.ndarray
    phase1_needed: bool


def assemble(std: Standardized, lb_s: np.ndarray, ub_s: np.ndarray) -> Assembled:
    """Build the extended problem for the given structural bounds."""
    m, n = std.m, std.n
    big_n = n + 2 * m

    lb = np.empty(big_n)
    ub = np.empty(big_n)
    c = np.zeros(big_n)
    lb[:n] = lb_s
    ub[:n] = ub_s
    c[:n] = std.c

    # Slack bounds by sense.
    sl_lb = np.where(std.senses == SENSE_GE, -np.inf, 0.0)
    sl_ub = np.where(std.senses == SENSE_LE, np.inf, 0.0)
    lb[n : n + m] = sl_lb
    ub[n : n + m] = sl_ub

    # Initial structural point: nearest finite bound.
    x0 = np.where(np.isfinite(lb_s), lb_s, ub_s)
    vstat = np.empty(big_n, dtype=np.int8)
    vstat[:n] = np.where(np.isfinite(lb_s), AT_LB, AT_UB)

    acts = _activities(std, x0)
    resid = std.b - acts

    slack_val = np.clip(resid, sl_lb, sl_ub)
    excess = resid - slack_val
    art_needed = np.abs(excess) > 0.0
    sigma = np.where(excess >= 0.0, 1.0, -1.0)

    basis = np.empty(m, dtype=np.int64)
    for i in range(m):
        if art_needed[i]:
            basis[i] = n + m + i
            vstat[n + m + i] = BASIC
            vstat[n + i] = AT_LB if slack_val[i] <= sl_lb[i] else AT_UB
            # >= rows clamp at the upper bound 0, <=/= rows at the lower one.
            if not np.isfinite(sl_lb[i]):
                vstat[n + i] = AT_UB
        else:
            basis[i] = n + i
            vstat[n + i] = BASIC
            vstat[n + m + i] = AT_LB

    lb[n + m :] = 0.0
    ub[n + m :] = np.where(art_needed, np.inf, 0.0)

    nnz = len(std.ax)
    ap = np.empty(big_n + 1, dtype=np.int64)
    ai = np.empty(nnz + 2 * m, dtype=np.int64)
    ax = np.empty(nnz + 2 * m, dtype=np.float64)
    ap[: n + 1] = std.ap
    ai[:nnz] = std.ai
    ax[:nnz] = std.ax
    for i in range(m):
        ap[n + i + 1] = nnz + i + 1
        ai[nnz + i] = i
        ax[nnz + i] = 1.0
    for i in range(m):
        ap[n + m + i + 1] = nnz + m + i + 1
        ai[nnz + m + i] = i
        ax[nnz + m + i] = sigma[i]

    return Assembled(
        m=m,
        n=n,
        ap=ap,
        ai=ai,
        ax=ax,
        b=std.b.copy(),
        c=c,
        lb=lb,
        ub=ub,
        vstat=vstat,
        basis=basis,
        phase1_needed=bool(art_needed.any()),
    )


def _activities(std: Standardized, x: np.ndarray) -> np.ndarray:
    acts = np.zeros(std.m)
    for j in range(std.n):
        xj = x[j]
        if xj != 0.0:
            s, e = std.ap[j], std.ap[j + 1]
            np.add.at(acts, std.ai[s:e], std.ax[s:e] * xj)
    return acts
