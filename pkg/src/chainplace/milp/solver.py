"""LP and MILP entry points over the simplex cores.

`solve_lp` relaxes integrality and returns duals; `solve_milp` runs
best-first branch-and-bound on the binary variables, bounding each node with
an LP relaxation solved from scratch. The hot kernel is selected by the
CHAINPLACE_KERNEL environment variable ("numba" by default when importable,
"numpy" otherwise).
"""

from __future__ import annotations

import heapq
import math
import os
import time
from dataclasses import dataclass, replace

import numpy as np

from .model import MilpModel, MilpSolution
from .standardize import Standardized, assemble, standardize

_STATUS_NAMES = {
    0: "optimal",
    1: "infeasible",
    2: "unbounded",
    3: "iteration-limit",
}


class KernelNumericalError(RuntimeError):
    """The simplex core lost the basis numerically; indicates a pathological
    model rather than an expected outcome."""


@dataclass(frozen=True)
class SolverParams:
    feas_tol: float = 1e-7
    opt_tol: float = 1e-7
    piv_tol: float = 1e-9
    int_tol: float = 1e-6
    refactor_every: int = 50
    bland_limit: int = 0  # 0 means auto: 10 * (rows + cols)
    max_iter: int = 0  # 0 means auto
    node_limit: int = 1_000_000
    time_limit: float | None = None


def _resolve_backend(name: str | None):
    if name is None:
        name = os.environ.get("CHAINPLACE_KERNEL", "").strip().lower() or None
    if name in (None, "numba"):
        try:
            from . import _simplex_numba

            return _simplex_numba
        except ImportError:
            if name == "numba":
                raise
    from . import _simplex_numpy

    return _simplex_numpy


def backend_name(backend: str | None = None) -> str:
    mod = _resolve_backend(backend)
    return "numba" if mod.__name__.endswith("_numba") else "numpy"


def _effective(params: SolverParams, std: Standardized) -> SolverParams:
    size = std.m + std.n
    updates = {}
    if params.bland_limit <= 0:
        # 10*(rows+cols) lets large degenerate models stall for tens of
        # thousands of pivots before the anti-cycling rule engages; cap it.
        updates["bland_limit"] = min(10 * size, 1000)
    if params.max_iter <= 0:
        updates["max_iter"] = 40 * size + 10_000
    return replace(params, **updates) if updates else params


def _solve_std(std: Standardized, lb_s, ub_s, params: SolverParams, core):
    asm = assemble(std, lb_s, ub_s)
    return core.solve_assembled(asm, params)


def solve_lp(
    model: MilpModel,
    params: SolverParams | None = None,
    backend: str | None = None,
) -> MilpSolution:
    """LP-relaxation optimum with dual prices.

    Binary variables are treated as continuous on [0,1]. Dual sign convention
    for the minimization: <= rows have dual <= 0, >= rows >= 0, = rows free.
    """
    params = params or SolverParams()
    core = _resolve_backend(backend)
    std = standardize(model)
    params = _effective(params, std)
    t0 = time.perf_counter()
    status, obj, x, y, iters = _solve_std(std, std.lb, std.ub, params, core)
    if status == 4:
        raise KernelNumericalError("simplex basis became singular")
    name = _STATUS_NAMES[status]
    primal = {std.var_names[j]: float(x[j]) for j in range(std.n)}
    duals = {}
    if name == "optimal":
        duals = {std.con_names[i]: float(y[i]) for i in range(std.m)}
    return MilpSolution(
        status=name,
        objective=float(obj) if name == "optimal" else None,
        primal=primal if name in ("optimal", "iteration-limit") else {},
        duals=duals,
        stats={"iterations": iters, "wall_time": time.perf_counter() - t0},
    )


def solve_milp(
    model: MilpModel,
    params: SolverParams | None = None,
    backend: str | None = None,
) -> MilpSolution:
    """Provably optimal MILP solve: best-first branch-and-bound with LP
    bounding, branching on the most fractional binary (ties by declaration
    order). Duals are not populated."""
    params = params or SolverParams()
    core = _resolve_backend(backend)
    std = standardize(model)
    params = _effective(params, std)
    t0 = time.perf_counter()
    bin_idx = np.nonzero(std.is_binary)[0]
    priorities = np.array([v.branch_priority for v in model.variables], dtype=np.int64)

    total_lp_iters = 0
    nodes = 0

    def node_solve(lb_s, ub_s):
        nonlocal total_lp_iters
        status, obj, x, y, iters = _solve_std(std, lb_s, ub_s, params, core)
        total_lp_iters += iters
        if status == 4:
            raise KernelNumericalError("simplex basis became singular")
        return status, obj, x

    def finish(status_name, best_obj, best_x):
        primal = {}
        objective = None
        if best_x is not None:
            primal = {std.var_names[j]: float(best_x[j]) for j in range(std.n)}
            objective = float(std.c @ best_x[: std.n])
        return MilpSolution(
            status=status_name,
            objective=objective,
            primal=primal,
            duals={},
            stats={
                "nodes": nodes,
                "iterations": total_lp_iters,
                "wall_time": time.perf_counter() - t0,
            },
        )

    status, obj, x = node_solve(std.lb, std.ub)
    nodes = 1
    if status == 1:
        return finish("infeasible", None, None)
    if status == 2:
        return finish("unbounded", None, None)
    if status == 3:
        return finish("iteration-limit", None, None)

    best_obj = math.inf
    best_x = None
    counter = 0
    heap: list[tuple[float, int, np.ndarray, np.ndarray, float, np.ndarray]] = []

    def push(bound, lb_s, ub_s, xrel):
        nonlocal counter
        counter += 1
        heapq.heappush(heap, (bound, -counter, lb_s, ub_s, bound, xrel))

    def frac_var(xv):
        """Most fractional binary within the lowest branch-priority class
        that still has fractional entries, ties by declaration order; -1 when
        every binary is integral."""
        best_j = -1
        best_frac = params.int_tol
        best_prio = None
        for j in bin_idx:
            f = min(abs(xv[j] - round(xv[j])), 0.5)
            if f <= params.int_tol:
                continue
            p = priorities[j]
            if best_prio is None or p < best_prio or (p == best_prio and f > best_frac):
                best_prio = p
                best_frac = f
                best_j = int(j)
        return best_j

    def accept(xv, bound):
        nonlocal best_obj, best_x
        xi = xv.copy()
        xi[bin_idx] = np.round(xi[bin_idx])
        obj_int = float(std.c @ xi[: std.n])
        if obj_int < best_obj - 1e-9:
            best_obj = obj_int
            best_x = xi

    j0 = frac_var(x)
    if j0 < 0:
        accept(x, obj)
        return finish("optimal", best_obj, best_x)
    push(obj, std.lb.copy(), std.ub.copy(), x)

    limit_hit = False
    while heap:
        if nodes >= params.node_limit:
            limit_hit = True
            break
        if params.time_limit is not None and time.perf_counter() - t0 > params.time_limit:
            limit_hit = True
            break
        bound, _, lb_s, ub_s, _, xrel = heapq.heappop(heap)
        if bound >= best_obj - 1e-9:
            continue
        j = frac_var(xrel)
        if j < 0:
            accept(xrel, bound)
            continue
        for fix in (0.0, 1.0):
            lb_c = lb_s.copy()
            ub_c = ub_s.copy()
            lb_c[j] = fix
            ub_c[j] = fix
            status, obj, x = node_solve(lb_c, ub_c)
            nodes += 1
            if status == 1:
                continue
            if status == 3:
                limit_hit = True
                break
            if status == 2:
                # child of a bounded parent cannot be unbounded
                raise KernelNumericalError("unbounded branch below bounded root")
            if obj >= best_obj - 1e-9:
                continue
            jj = frac_var(x)
            if jj < 0:
                accept(x, obj)
            else:
                push(obj, lb_c, ub_c, x)
        if limit_hit:
            break

    if limit_hit:
        return finish("iteration-limit", best_obj, best_x)
    if best_x is None:
        return finish("infeasible", None, None)
    return finish("optimal", best_obj, best_x)
