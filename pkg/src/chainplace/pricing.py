"""Per-chain pricing problem: generate the configuration with minimum reduced
cost under the master's dual prices.

The model places every VNF of the chain on an NFV-PoP and routes a unit flow
between consecutive locations, subject to the same core and capacity limits
the master enforces. A strictly negative optimal reduced cost yields a new
column for the pool.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .master import DualPrices
from .milp import BINARY, EQ, GE, LE, MilpModel, SolverParams, solve_milp
from .model import ChainConfiguration, Instance, ServiceChain, UNBOUNDED, make_configuration

IMPROVING = "improving"
NON_IMPROVING = "non-improving"
INFEASIBLE = "infeasible"
INCONCLUSIVE = "inconclusive"


class PricingDecodeError(RuntimeError):
    pass


@dataclass(frozen=True)
class PricingResult:
    reduced_cost: float
    configuration: ChainConfiguration | None
    status: str


def build_pricing(instance: Instance, chain: ServiceChain, duals: DualPrices) -> MilpModel:
    """Reduced-cost minimization model for one chain.

    Placement variables are indexed by (node, VNF type), so a chain repeating
    a type co-locates its occurrences; position rows are still emitted per
    occurrence, as the formulation states them.
    """
    topo = instance.topology
    nfv = instance.nfv_nodes_sorted
    seq = chain.vnf_sequence
    n = chain.length
    rate = float(instance.chain_rate(chain.id))

    m = MilpModel()
    a_vars: dict[tuple[str, str], str] = {}
    b_vars: dict[tuple[int, str], str] = {}
    m.meta["a"] = a_vars
    m.meta["b"] = b_vars
    m.meta["chain"] = chain.id

    for v in nfv:
        for f in chain.distinct_vnfs:
            nf = float(instance.vnf(f).cores_per_gbps)
            obj = (
                -duals.u_function.get(f, 0.0)
                + duals.u_core.get(v, 0.0) * nf * rate
                - duals.u_consist_lo.get((v, f), 0.0)
                + duals.u_consist_hi.get((v, f), 0.0)
            )
            name = m.add_variable(f"a[{v},{f}]", kind=BINARY, obj=obj)
            a_vars[(v, f)] = name
    for i in range(n - 1):
        for lk in topo.links:
            obj = rate * (1.0 + duals.u_capacity.get(lk.id, 0.0))
            name = m.add_variable(f"b[{i + 1},{lk.id}]", kind=BINARY, obj=obj)
            b_vars[(i, lk.id)] = name

    # Eq. (18): per-node core budget for this chain's own load.
    for v in nfv:
        budget = instance.core_budget[v]
        if budget is UNBOUNDED:
            continue
        coeffs = {
            a_vars[(v, f)]: float(instance.vnf(f).cores_per_gbps) * rate
            for f in chain.distinct_vnfs
        }
        m.add_constraint(f"core[{v}]", coeffs, LE, float(budget))

    # Eq. (19): per-link capacity for this chain's segment flows.
    for lk in topo.links:
        coeffs = {b_vars[(i, lk.id)]: rate for i in range(n - 1)}
        m.add_constraint(f"cap[{lk.id}]", coeffs, LE, float(lk.capacity))

    # Eq. (20): one location per chain position.
    for i in range(n):
        coeffs = {a_vars[(v, seq[i])]: 1.0 for v in nfv}
        m.add_constraint(f"pos[{i + 1}]", coeffs, EQ, 1.0)

    def flow_coeffs(i: int, links) -> dict[str, float]:
        return {b_vars[(i, lk.id)]: 1.0 for lk in links}

    # Eqs. (21)-(23): first segment starts at the host of position 1.
    for v in nfv:
        coeffs = flow_coeffs(0, topo.out_links(v))
        coeffs[a_vars[(v, seq[0])]] = coeffs.get(a_vars[(v, seq[0])], 0.0) - 1.0
        coeffs[a_vars[(v, seq[1])]] = coeffs.get(a_vars[(v, seq[1])], 0.0) + 1.0
        m.add_constraint(f"segout[{v}]", coeffs, GE, 0.0)
        coeffs = flow_coeffs(0, topo.out_links(v))
        coeffs[a_vars[(v, seq[1])]] = coeffs.get(a_vars[(v, seq[1])], 0.0) + 1.0
        m.add_constraint(f"segout2[{v}]", coeffs, LE, 1.0)
        coeffs = flow_coeffs(0, topo.in_links(v))
        coeffs[a_vars[(v, seq[0])]] = coeffs.get(a_vars[(v, seq[0])], 0.0) + 1.0
        m.add_constraint(f"segin1[{v}]", coeffs, LE, 1.0)

    # Eqs. (24)-(25): flow conservation on every segment.
    for i in range(n - 1):
        for v in nfv:
            coeffs = flow_coeffs(i, topo.out_links(v))
            for lk in topo.in_links(v):
                key = b_vars[(i, lk.id)]
                coeffs[key] = coeffs.get(key, 0.0) - 1.0
            fa = a_vars[(v, seq[i])]
            fb = a_vars[(v, seq[i + 1])]
            coeffs[fa] = coeffs.get(fa, 0.0) - 1.0
            coeffs[fb] = coeffs.get(fb, 0.0) + 1.0
            m.add_constraint(f"bal[{i + 1},{v}]", coeffs, EQ, 0.0)
        for v in sorted(topo.nodes - topo.nfv_nodes):
            coeffs = flow_coeffs(i, topo.out_links(v))
            for lk in topo.in_links(v):
                key = b_vars[(i, lk.id)]
                coeffs[key] = coeffs.get(key, 0.0) - 1.0
            m.add_constraint(f"con[{i + 1},{v}]", coeffs, EQ, 0.0)

    # Eqs. (26)-(27): last segment ends at the host of the final position.
    last_i = n - 2
    for v in nfv:
        coeffs = flow_coeffs(last_i, topo.in_links(v))
        coeffs[a_vars[(v, seq[-1])]] = coeffs.get(a_vars[(v, seq[-1])], 0.0) - 1.0
        coeffs[a_vars[(v, seq[-2])]] = coeffs.get(a_vars[(v, seq[-2])], 0.0) + 1.0
        m.add_constraint(f"segend[{v}]", coeffs, GE, 0.0)
        coeffs = flow_coeffs(last_i, topo.out_links(v))
        coeffs[a_vars[(v, seq[-1])]] = coeffs.get(a_vars[(v, seq[-1])], 0.0) + 1.0
        m.add_constraint(f"segend2[{v}]", coeffs, LE, 1.0)

    return m


def solve_pricing(
    model: MilpModel,
    instance: Instance,
    chain: ServiceChain,
    duals: DualPrices,
    epsilon: float = 1e-6,
    params: SolverParams | None = None,
    backend: str | None = None,
) -> PricingResult:
    """Solve to MILP optimality and decode an improving configuration."""
    sol = solve_milp(model, params=params, backend=backend)
    if sol.status == "infeasible":
        return PricingResult(reduced_cost=0.0, configuration=None, status=INFEASIBLE)
    if sol.status != "optimal":
        return PricingResult(reduced_cost=0.0, configuration=None, status=INCONCLUSIVE)
    reduced_cost = sol.objective - duals.u_convexity.get(chain.id, 0.0)
    if reduced_cost >= -epsilon:
        return PricingResult(reduced_cost=reduced_cost, configuration=None, status=NON_IMPROVING)
    config = decode_pricing_solution(model, sol, instance, chain)
    return PricingResult(reduced_cost=reduced_cost, configuration=config, status=IMPROVING)


def decode_pricing_solution(
    model: MilpModel, sol, instance: Instance, chain: ServiceChain
) -> ChainConfiguration:
    """Turn the a/b binaries into a ChainConfiguration.

    Any flow not on the walk between consecutive hosts is discarded; the
    recomputed cost must agree with the model's bandwidth term, since every
    link carries positive objective weight for a demanded chain.
    """
    a_vars = model.meta["a"]
    b_vars = model.meta["b"]
    placements = [(v, f) for (v, f), name in a_vars.items() if sol.primal[name] > 0.5]
    loc = {f: v for v, f in placements}
    segments = []
    model_hops = 0
    for i in range(chain.length - 1):
        chosen = {
            lid for (si, lid), name in b_vars.items() if si == i and sol.primal[name] > 0.5
        }
        model_hops += len(chosen)
        start = loc[chain.vnf_sequence[i]]
        end = loc[chain.vnf_sequence[i + 1]]
        segments.append(extract_walk(instance.topology, chosen, start, end))
    config = make_configuration(instance, chain.id, placements, segments)
    rate = float(instance.chain_rate(chain.id))
    if abs(float(config.cost) - rate * model_hops) > 1e-6 * max(1.0, rate * model_hops):
        raise PricingDecodeError(
            f"decoded cost {float(config.cost)} disagrees with model flow cost "
            f"{rate * model_hops} for chain {chain.id}"
        )
    return config


def extract_walk(topology, link_ids: set[str], start: str, end: str) -> tuple[str, ...]:
    if start == end:
        return ()
    adj: dict[str, list] = {}
    for lid in sorted(link_ids):
        lk = topology.link(lid)
        adj.setdefault(lk.tail, []).append(lk)
    prev = {start: None}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        if u == end:
            break
        for lk in adj.get(u, ()):
            if lk.head not in prev:
                prev[lk.head] = lk
                queue.append(lk.head)
    if end not in prev:
        raise PricingDecodeError(f"no decoded flow path from {start} to {end}")
    path = []
    cur = end
    while prev[cur] is not None:
        lk = prev[cur]
        path.append(lk.id)
        cur = lk.tail
    return tuple(reversed(path))
