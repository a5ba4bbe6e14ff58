"""Column-generation driver: seed the pool, alternate master LP solves with
round-robin pricing until no chain prices out, then solve the final master as
an ILP over the generated columns (price-and-branch) and decode the result.
"""

from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass, field

from .master import ColumnPool, DualPrices, build_rmp, extract_duals
from .milp import MilpModel, MilpSolution, SolverParams, solve_lp, solve_milp
from .model import (
    ChainConfiguration,
    Instance,
    hop_distances_from,
    hop_distances_to,
    make_configuration,
)
from . import pricing as pp

log = logging.getLogger("chainplace.cg")

OPTIMAL_HEURISTIC = "optimal-heuristic"
INFEASIBLE = "infeasible"
INCONCLUSIVE = "inconclusive"


class SeedingInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class CgParams:
    epsilon: float = 1e-6
    max_iterations: int = 10_000
    time_limit: float = 600.0
    backend: str | None = None
    node_limit: int = 1_000_000


@dataclass(frozen=True)
class RouteDecode:
    """Per-demand walk: source, access legs, and the chain's segments."""

    chain: str
    source: str
    destination: str
    nodes: tuple[str, ...]
    links: tuple[str, ...]


@dataclass
class CgReport:
    status: str
    lp_lower_bound: float | None
    ilp_objective: float | None
    gap: float | None
    iterations: int
    columns_generated: dict[str, int]
    routes: list[RouteDecode]
    placements: dict[str, list[str]]
    wall_time_ms: float
    lp_history: list[float] = field(default_factory=list)
    detail: str = ""


@dataclass
class CgState:
    """Internals exposed for verification: the pool, the terminal duals, and
    the final master solution."""

    pool: ColumnPool | None = None
    terminal_duals: DualPrices | None = None
    final_lp: MilpSolution | None = None
    final_ilp: MilpSolution | None = None
    final_ilp_model: MilpModel | None = None
    selected: dict[str, ChainConfiguration] = field(default_factory=dict)


def seed_columns(instance: Instance) -> ColumnPool:
    """One greedy all-at-one-node configuration per chain (the NFV-PoP with
    the smallest total access hop count over the chain's demands, ties
    lexicographic), segments empty. Core/capacity feasibility is left to the
    master rows. The artificial column per chain is implicit in the pool."""
    if instance.demands and not instance.topology.nfv_nodes:
        raise SeedingInfeasible("no NFV-PoP nodes available")
    pool = ColumnPool(instance)
    dist_from: dict[str, dict] = {}
    dist_to: dict[str, dict] = {}
    for chain in instance.chains:
        demands = instance.demands_of(chain.id)
        best_v = None
        best_total = None
        for v in instance.nfv_nodes_sorted:
            total = 0
            feasible = True
            for d in demands:
                if d.source not in dist_from:
                    dist_from[d.source] = hop_distances_from(instance.topology, d.source)
                if d.destination not in dist_to:
                    dist_to[d.destination] = hop_distances_to(instance.topology, d.destination)
                h1 = dist_from[d.source][v]
                h2 = dist_to[d.destination][v]
                if h1 is None or h2 is None:
                    feasible = False
                    break
                total += h1 + h2
            if feasible and (best_total is None or total < best_total):
                best_total = total
                best_v = v
        if best_v is None:
            raise SeedingInfeasible(
                f"no NFV-PoP reachable for every demand of chain {chain.id}"
            )
        config = make_configuration(
            instance,
            chain.id,
            [(best_v, f) for f in chain.distinct_vnfs],
            [() for _ in range(chain.length - 1)],
        )
        pool.add(config)
    return pool


def run(instance: Instance, params: CgParams | None = None) -> CgReport:
    return run_with_state(instance, params)[0]


def run_with_state(
    instance: Instance, params: CgParams | None = None
) -> tuple[CgReport, CgState]:
    params = params or CgParams()
    t0 = time.monotonic()
    deadline = t0 + params.time_limit
    state = CgState()

    def elapsed_ms() -> float:
        return (time.monotonic() - t0) * 1000.0

    def report(status, lp=None, ilp=None, gap=None, iters=0, detail=""):
        cols = dict(generated) if state.pool is not None else {}
        return CgReport(
            status=status,
            lp_lower_bound=lp,
            ilp_objective=ilp,
            gap=gap,
            iterations=iters,
            columns_generated=cols,
            routes=routes,
            placements=placements,
            wall_time_ms=elapsed_ms(),
            lp_history=list(lp_history),
            detail=detail,
        )

    routes: list[RouteDecode] = []
    placements: dict[str, list[str]] = {}
    lp_history: list[float] = []
    generated: dict[str, int] = {c.id: 0 for c in instance.chains}

    try:
        pool = seed_columns(instance)
    except SeedingInfeasible as exc:
        return report(INFEASIBLE, detail=str(exc)), state
    state.pool = pool

    demanded = [c for c in instance.chains if instance.chain_rate(c.id) > 0]
    order = deque(range(len(demanded)))
    iterations = 0
    lp_val = None
    duals = None
    solver = SolverParams(node_limit=params.node_limit)

    while True:
        model = build_rmp(instance, pool, integer=False)
        sol = solve_lp(model, params=solver, backend=params.backend)
        if sol.status == "infeasible":
            return report(INFEASIBLE, iters=iterations, detail="master LP infeasible"), state
        if sol.status != "optimal":
            return report(INCONCLUSIVE, iters=iterations, detail="master LP hit limits"), state
        lp_val = sol.objective
        lp_history.append(lp_val)
        state.final_lp = sol
        duals = extract_duals(model, sol)
        state.terminal_duals = duals

        if iterations >= params.max_iterations:
            return report(INCONCLUSIVE, lp=lp_val, iters=iterations,
                          detail="iteration cap reached"), state
        if time.monotonic() > deadline:
            return report(INCONCLUSIVE, lp=lp_val, iters=iterations,
                          detail="time limit reached"), state

        added = 0
        min_rc = 0.0
        last_producer = None
        for idx in list(order):
            chain = demanded[idx]
            pm = pp.build_pricing(instance, chain, duals)
            res = pp.solve_pricing(
                pm, instance, chain, duals, epsilon=params.epsilon,
                params=solver, backend=params.backend,
            )
            if res.status == pp.INCONCLUSIVE:
                return report(INCONCLUSIVE, lp=lp_val, iters=iterations,
                              detail=f"pricing for {chain.id} hit kernel limits"), state
            if res.status == pp.INFEASIBLE:
                return report(INFEASIBLE, lp=lp_val, iters=iterations,
                              detail=f"no feasible placement exists for chain {chain.id}"), state
            min_rc = min(min_rc, res.reduced_cost)
            if res.status == pp.IMPROVING and pool.add(res.configuration):
                added += 1
                generated[chain.id] += 1
                last_producer = idx
        iterations += 1
        log.info(
            "cg iteration %d: rmp_lp=%.6f columns_added=%d min_reduced_cost=%.6g",
            iterations, lp_val, added, min_rc,
        )
        if added == 0:
            break
        if last_producer is not None:
            while order[0] != last_producer:
                order.rotate(-1)
            order.rotate(-1)

    ilp_model = build_rmp(instance, pool, integer=True)
    state.final_ilp_model = ilp_model
    remaining = max(1.0, deadline - time.monotonic())
    ilp_sol = solve_milp(
        ilp_model,
        params=SolverParams(node_limit=params.node_limit, time_limit=remaining),
        backend=params.backend,
    )
    state.final_ilp = ilp_sol
    if ilp_sol.status == "infeasible":
        return report(INFEASIBLE, lp=lp_val, iters=iterations,
                      detail="final master ILP infeasible"), state
    if ilp_sol.status != "optimal":
        return report(INCONCLUSIVE, lp=lp_val, iters=iterations,
                      detail="final master ILP hit limits"), state
    art_used = [
        cid for name, cid in ilp_model.meta["art"].items() if ilp_sol.primal[name] > 0.5
    ]
    if art_used:
        return report(INFEASIBLE, lp=lp_val, iters=iterations,
                      detail=f"artificial column selected for: {', '.join(sorted(art_used))}"), state

    selected, decoded_routes, node_placements = decode_solution(instance, pool, ilp_model, ilp_sol)
    state.selected = selected
    routes.extend(decoded_routes)
    placements.update(node_placements)
    ilp_obj = ilp_sol.objective
    gap = (ilp_obj - lp_val) / max(lp_val, params.epsilon)
    log.info("cg done: lp=%.6f ilp=%.6f gap=%.3g iterations=%d", lp_val, ilp_obj, gap, iterations)
    return report(OPTIMAL_HEURISTIC, lp=lp_val, ilp=ilp_obj, gap=gap, iters=iterations), state


def decode_solution(
    instance: Instance, pool: ColumnPool, model: MilpModel, sol: MilpSolution
) -> tuple[dict[str, ChainConfiguration], list[RouteDecode], dict[str, list[str]]]:
    """Read the integral master solution back into domain terms."""
    selected: dict[str, ChainConfiguration] = {}
    for name, (cid, k) in model.meta["z"].items():
        if sol.primal[name] > 0.5:
            selected[cid] = pool.columns(cid)[k]

    placements: dict[str, list[str]] = {}
    for config in selected.values():
        for v, f in sorted(config.placements):
            placements.setdefault(v, []).append(f)
    for v in placements:
        placements[v] = sorted(set(placements[v]))

    y_vars = model.meta["y"]
    routes: list[RouteDecode] = []
    for d in instance.demands:
        chain = instance.chain(d.chain)
        config = selected.get(d.chain)
        if config is None:
            continue
        first_loc = config.location_of(chain.first)
        last_loc = config.location_of(chain.last)
        yf = {
            lk.id
            for lk in instance.topology.links
            if sol.primal[y_vars[("first", d.chain, d.source, d.destination, lk.id)]] > 0.5
        }
        yl = {
            lk.id
            for lk in instance.topology.links
            if sol.primal[y_vars[("last", d.chain, d.source, d.destination, lk.id)]] > 0.5
        }
        leg1 = pp.extract_walk(instance.topology, yf, d.source, first_loc)
        leg2 = pp.extract_walk(instance.topology, yl, last_loc, d.destination)
        links = list(leg1)
        for seg in config.segments:
            links.extend(seg)
        links.extend(leg2)
        nodes = [d.source]
        for lid in links:
            nodes.append(instance.topology.link(lid).head)
        routes.append(
            RouteDecode(
                chain=d.chain,
                source=d.source,
                destination=d.destination,
                nodes=tuple(nodes),
                links=tuple(links),
            )
        )
    return selected, routes, placements


def resimulate(instance: Instance, routes: list[RouteDecode], selected=None):
    """Independent re-simulation of decoded routes: recompute the objective
    and the per-link / per-node loads from scratch."""
    from fractions import Fraction

    objective = Fraction(0)
    link_loads: dict[str, Fraction] = {lk.id: Fraction(0) for lk in instance.topology.links}
    by_key = {(r.chain, r.source, r.destination): r for r in routes}
    for d in instance.demands:
        r = by_key.get((d.chain, d.source, d.destination))
        if r is None:
            continue
        objective += d.rate * len(r.links)
        for lid in r.links:
            link_loads[lid] += d.rate
    core_loads: dict[str, Fraction] = {v: Fraction(0) for v in instance.topology.nfv_nodes}
    if selected:
        for cid, config in selected.items():
            rate = instance.chain_rate(cid)
            for v, f in config.placements:
                core_loads[v] += instance.vnf(f).cores_per_gbps * rate
    return objective, link_loads, core_loads
