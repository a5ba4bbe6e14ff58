"""Independent ground truth for small instances: a compact monolithic MILP of
the whole placement-and-routing problem, and a brute-force enumerator over
placements and k-shortest-path routings.

Both exist to validate the column-generation pipeline; neither is meant to
scale past a handful of nodes and chains.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .driver import RouteDecode
from .milp import BINARY, EQ, GE, LE, MilpModel, SolverParams, solve_milp
from .model import Instance, Topology, UNBOUNDED, hop_distances_to, shortest_path
from . import pricing as pp


class GuardExceeded(RuntimeError):
    pass


@dataclass
class OracleResult:
    status: str  # optimal | infeasible | inconclusive
    objective: float | None
    routes: list[RouteDecode]
    placements: dict[str, list[str]]
    certificate: bool = False
    note: str = ""


def solve_compact(
    instance: Instance,
    params: SolverParams | None = None,
    backend: str | None = None,
) -> OracleResult:
    """Exact optimum via one monolithic MILP: per-chain placement and segment
    flows replace the column structure, everything else matches the master."""
    topo = instance.topology
    nfv = instance.nfv_nodes_sorted
    nfv_set = topo.nfv_nodes
    m = MilpModel()
    rate = {c.id: float(instance.chain_rate(c.id)) for c in instance.chains}

    a = {}
    b = {}
    for chain in instance.chains:
        for v in nfv:
            for f in chain.distinct_vnfs:
                a[(chain.id, v, f)] = m.add_variable(f"a[{chain.id},{v},{f}]", kind=BINARY)
        for i in range(chain.length - 1):
            for lk in topo.links:
                b[(chain.id, i, lk.id)] = m.add_variable(
                    f"b[{chain.id},{i + 1},{lk.id}]", kind=BINARY, obj=rate[chain.id]
                )
    x = {}
    for f in instance.catalog:
        for v in nfv:
            x[(f.id, v)] = m.add_variable(f"x[{f.id},{v}]", kind=BINARY)
    y = {}
    for d in instance.demands:
        for lk in topo.links:
            tag = f"{d.chain},{d.source},{d.destination},{lk.id}"
            y[("first", d.chain, d.source, d.destination, lk.id)] = m.add_variable(
                f"yf[{tag}]", kind=BINARY, obj=float(d.rate)
            )
            y[("last", d.chain, d.source, d.destination, lk.id)] = m.add_variable(
                f"yl[{tag}]", kind=BINARY, obj=float(d.rate)
            )

    for f in instance.catalog:
        coeffs = {}
        for chain in instance.chains:
            if f.id in chain.distinct_vnfs:
                for v in nfv:
                    coeffs[a[(chain.id, v, f.id)]] = 1.0
        m.add_constraint(f"cover[{f.id}]", coeffs, GE, 1.0)

    for v in nfv:
        budget = instance.core_budget[v]
        if budget is UNBOUNDED:
            continue
        coeffs = {}
        for chain in instance.chains:
            for f in chain.distinct_vnfs:
                coeffs[a[(chain.id, v, f)]] = (
                    coeffs.get(a[(chain.id, v, f)], 0.0)
                    + float(instance.vnf(f).cores_per_gbps) * rate[chain.id]
                )
        m.add_constraint(f"core[{v}]", coeffs, LE, float(budget))

    for lk in topo.links:
        coeffs = {}
        for d in instance.demands:
            coeffs[y[("first", d.chain, d.source, d.destination, lk.id)]] = float(d.rate)
            coeffs[y[("last", d.chain, d.source, d.destination, lk.id)]] = float(d.rate)
        for chain in instance.chains:
            for i in range(chain.length - 1):
                coeffs[b[(chain.id, i, lk.id)]] = rate[chain.id]
        m.add_constraint(f"cap[{lk.id}]", coeffs, LE, float(lk.capacity))

    bigm = float(len(instance.chains))
    for f in instance.catalog:
        for v in nfv:
            users = [
                a[(chain.id, v, f.id)]
                for chain in instance.chains
                if f.id in chain.distinct_vnfs
            ]
            lo = {name: 1.0 for name in users}
            lo[x[(f.id, v)]] = -1.0
            m.add_constraint(f"lnklo[{f.id},{v}]", lo, GE, 0.0)
            hi = {name: 1.0 for name in users}
            hi[x[(f.id, v)]] = -bigm
            m.add_constraint(f"lnkhi[{f.id},{v}]", hi, LE, 0.0)

    # Per-chain copies of the placement/segment system.
    for chain in instance.chains:
        cid = chain.id
        seq = chain.vnf_sequence
        n = chain.length
        for v in nfv:
            budget = instance.core_budget[v]
            if budget is not UNBOUNDED:
                coeffs = {
                    a[(cid, v, f)]: float(instance.vnf(f).cores_per_gbps) * rate[cid]
                    for f in chain.distinct_vnfs
                }
                m.add_constraint(f"ccore[{cid},{v}]", coeffs, LE, float(budget))
        for lk in topo.links:
            coeffs = {b[(cid, i, lk.id)]: rate[cid] for i in range(n - 1)}
            m.add_constraint(f"ccap[{cid},{lk.id}]", coeffs, LE, float(lk.capacity))
        for i in range(n):
            coeffs = {a[(cid, v, seq[i])]: 1.0 for v in nfv}
            m.add_constraint(f"pos[{cid},{i + 1}]", coeffs, EQ, 1.0)

        def seg(i, links):
            return {b[(cid, i, lk.id)]: 1.0 for lk in links}

        def bump(coeffs, name, delta):
            coeffs[name] = coeffs.get(name, 0.0) + delta
            return coeffs

        for v in nfv:
            coeffs = seg(0, topo.out_links(v))
            bump(coeffs, a[(cid, v, seq[0])], -1.0)
            bump(coeffs, a[(cid, v, seq[1])], 1.0)
            m.add_constraint(f"segout[{cid},{v}]", coeffs, GE, 0.0)
            coeffs = seg(0, topo.out_links(v))
            bump(coeffs, a[(cid, v, seq[1])], 1.0)
            m.add_constraint(f"segout2[{cid},{v}]", coeffs, LE, 1.0)
            coeffs = seg(0, topo.in_links(v))
            bump(coeffs, a[(cid, v, seq[0])], 1.0)
            m.add_constraint(f"segin1[{cid},{v}]", coeffs, LE, 1.0)
        for i in range(n - 1):
            for v in nfv:
                coeffs = seg(i, topo.out_links(v))
                for lk in topo.in_links(v):
                    bump(coeffs, b[(cid, i, lk.id)], -1.0)
                bump(coeffs, a[(cid, v, seq[i])], -1.0)
                bump(coeffs, a[(cid, v, seq[i + 1])], 1.0)
                m.add_constraint(f"bal[{cid},{i + 1},{v}]", coeffs, EQ, 0.0)
            for v in sorted(topo.nodes - nfv_set):
                coeffs = seg(i, topo.out_links(v))
                for lk in topo.in_links(v):
                    bump(coeffs, b[(cid, i, lk.id)], -1.0)
                m.add_constraint(f"con[{cid},{i + 1},{v}]", coeffs, EQ, 0.0)
        for v in nfv:
            coeffs = seg(n - 2, topo.in_links(v))
            bump(coeffs, a[(cid, v, seq[-1])], -1.0)
            bump(coeffs, a[(cid, v, seq[-2])], 1.0)
            m.add_constraint(f"segend[{cid},{v}]", coeffs, GE, 0.0)
            coeffs = seg(n - 2, topo.out_links(v))
            bump(coeffs, a[(cid, v, seq[-1])], 1.0)
            m.add_constraint(f"segend2[{cid},{v}]", coeffs, LE, 1.0)

    # Access legs, identical to the master's rows (9)-(16).
    for d in instance.demands:
        chain = instance.chain(d.chain)
        first, last = chain.first, chain.last
        tag = f"{d.chain},{d.source},{d.destination}"

        def yn(leg, lid):
            return y[(leg, d.chain, d.source, d.destination, lid)]

        coeffs = {yn("first", lk.id): 1.0 for lk in topo.out_links(d.source)}
        if d.source in nfv_set:
            coeffs[x[(first, d.source)]] = 1.0
        m.add_constraint(f"src[{tag}]", coeffs, EQ, 1.0)
        for v in nfv:
            if v == d.source:
                continue
            coeffs = {yn("first", lk.id): 1.0 for lk in topo.in_links(v)}
            coeffs[x[(first, v)]] = -1.0
            m.add_constraint(f"fin[{tag},{v}]", coeffs, GE, 0.0)
            coeffs = {yn("first", lk.id): 1.0 for lk in topo.out_links(v)}
            for lk in topo.in_links(v):
                coeffs[yn("first", lk.id)] = coeffs.get(yn("first", lk.id), 0.0) - 1.0
            coeffs[x[(first, v)]] = 1.0
            m.add_constraint(f"fbal[{tag},{v}]", coeffs, EQ, 0.0)
        for v in sorted(topo.nodes - nfv_set):
            if v == d.source:
                continue
            coeffs = {yn("first", lk.id): 1.0 for lk in topo.out_links(v)}
            for lk in topo.in_links(v):
                coeffs[yn("first", lk.id)] = coeffs.get(yn("first", lk.id), 0.0) - 1.0
            m.add_constraint(f"fcon[{tag},{v}]", coeffs, EQ, 0.0)

        coeffs = {yn("last", lk.id): 1.0 for lk in topo.in_links(d.destination)}
        if d.destination in nfv_set:
            coeffs[x[(last, d.destination)]] = 1.0
        m.add_constraint(f"dst[{tag}]", coeffs, EQ, 1.0)
        for v in nfv:
            if v == d.destination:
                continue
            coeffs = {yn("last", lk.id): 1.0 for lk in topo.out_links(v)}
            coeffs[x[(last, v)]] = -1.0
            m.add_constraint(f"lout[{tag},{v}]", coeffs, GE, 0.0)
            coeffs = {yn("last", lk.id): 1.0 for lk in topo.out_links(v)}
            for lk in topo.in_links(v):
                coeffs[yn("last", lk.id)] = coeffs.get(yn("last", lk.id), 0.0) - 1.0
            coeffs[x[(last, v)]] = -1.0
            m.add_constraint(f"lbal[{tag},{v}]", coeffs, EQ, 0.0)
        for v in sorted(topo.nodes - nfv_set):
            if v == d.destination:
                continue
            coeffs = {yn("last", lk.id): 1.0 for lk in topo.out_links(v)}
            for lk in topo.in_links(v):
                coeffs[yn("last", lk.id)] = coeffs.get(yn("last", lk.id), 0.0) - 1.0
            m.add_constraint(f"lcon[{tag},{v}]", coeffs, EQ, 0.0)

    sol = solve_milp(m, params=params, backend=backend)
    if sol.status == "infeasible":
        return OracleResult("infeasible", None, [], {})
    if sol.status != "optimal":
        return OracleResult("inconclusive", None, [], {}, note=sol.status)

    placements: dict[str, list[str]] = {}
    loc: dict[tuple[str, str], str] = {}
    for (cid, v, f), name in a.items():
        if sol.primal[name] > 0.5:
            placements.setdefault(v, []).append(f)
            loc[(cid, f)] = v
    for v in placements:
        placements[v] = sorted(set(placements[v]))

    routes: list[RouteDecode] = []
    for d in instance.demands:
        chain = instance.chain(d.chain)
        links: list[str] = []
        yf = {
            lk.id
            for lk in topo.links
            if sol.primal[y[("first", d.chain, d.source, d.destination, lk.id)]] > 0.5
        }
        links.extend(pp.extract_walk(topo, yf, d.source, loc[(d.chain, chain.first)]))
        for i in range(chain.length - 1):
            chosen = {
                lk.id for lk in topo.links if sol.primal[b[(d.chain, i, lk.id)]] > 0.5
            }
            links.extend(
                pp.extract_walk(
                    topo, chosen, loc[(d.chain, chain.vnf_sequence[i])],
                    loc[(d.chain, chain.vnf_sequence[i + 1])],
                )
            )
        yl = {
            lk.id
            for lk in topo.links
            if sol.primal[y[("last", d.chain, d.source, d.destination, lk.id)]] > 0.5
        }
        links.extend(pp.extract_walk(topo, yl, loc[(d.chain, chain.last)], d.destination))
        nodes = [d.source]
        for lid in links:
            nodes.append(topo.link(lid).head)
        routes.append(RouteDecode(d.chain, d.source, d.destination, tuple(nodes), tuple(links)))
    return OracleResult("optimal", sol.objective, routes, placements)


def brute_force(instance: Instance, guard: int = 10_000_000, k_paths: int = 3) -> OracleResult:
    """Enumerate every placement of every chain over the NFV-PoPs and route
    each leg (inter-VNF segments plus both access legs) over its k shortest
    paths, discarding capacity and core violators.

    The result carries an optimality certificate when the best survivor's legs
    are all pure shortest paths and no link is saturated; refuses outright
    when the enumeration would exceed `guard` combinations.
    """
    topo = instance.topology
    nfv = instance.nfv_nodes_sorted
    chains = list(instance.chains)
    if instance.demands and not nfv:
        return OracleResult("infeasible", None, [], {}, note="no NFV-PoP nodes")

    combos = 1
    n_legs = sum(c.length - 1 for c in chains) + 2 * len(instance.demands)
    for c in chains:
        combos *= max(len(nfv), 1) ** len(c.distinct_vnfs)
    combos *= k_paths ** n_legs
    if combos > guard:
        raise GuardExceeded(
            f"brute force would enumerate ~{combos:.3g} combinations (guard {guard})"
        )

    rate = {c.id: instance.chain_rate(c.id) for c in chains}
    hop_to: dict[str, dict] = {}

    def hops(u: str, w: str) -> int | None:
        if w not in hop_to:
            hop_to[w] = hop_distances_to(topo, w)
        return hop_to[w][u]

    best_cost: Fraction | None = None
    best_assign = None
    best_combo = None
    best_legs = None

    placements_spaces = [list(product(nfv, repeat=len(c.distinct_vnfs))) for c in chains]
    for assign in product(*placements_spaces):
        loc: dict[tuple[str, str], str] = {}
        for c, nodes in zip(chains, assign):
            for f, v in zip(c.distinct_vnfs, nodes):
                loc[(c.id, f)] = v
        core: dict[str, Fraction] = {}
        for c in chains:
            for f in c.distinct_vnfs:
                v = loc[(c.id, f)]
                core[v] = core.get(v, Fraction(0)) + instance.vnf(f).cores_per_gbps * rate[c.id]
        ok = True
        for v, used in core.items():
            budget = instance.core_budget[v]
            if budget is not UNBOUNDED and used > budget:
                ok = False
                break
        if not ok:
            continue

        legs = []  # (kind, weight Fraction, endpoints, candidate paths)
        for c in chains:
            for i in range(c.length - 1):
                u = loc[(c.id, c.vnf_sequence[i])]
                w = loc[(c.id, c.vnf_sequence[i + 1])]
                legs.append((rate[c.id], u, w))
        for d in instance.demands:
            c = instance.chain(d.chain)
            legs.append((d.rate, d.source, loc[(d.chain, c.first)]))
            legs.append((d.rate, loc[(d.chain, c.last)], d.destination))

        candidates = []
        reachable = True
        for weight, u, w in legs:
            paths = k_shortest_paths(topo, u, w, k_paths)
            if not paths:
                reachable = False
                break
            candidates.append(paths)
        if not reachable:
            continue

        for combo in product(*candidates):
            loads: dict[str, Fraction] = {}
            cost = Fraction(0)
            for (weight, _, _), path in zip(legs, combo):
                cost += weight * len(path)
                for lid in path:
                    loads[lid] = loads.get(lid, Fraction(0)) + weight
            if best_cost is not None and cost >= best_cost:
                continue
            if any(load > topo.link(lid).capacity for lid, load in loads.items()):
                continue
            best_cost = cost
            best_assign = dict(loc)
            best_combo = combo
            best_legs = list(legs)

    if best_cost is None:
        return OracleResult("infeasible", None, [], {})

    shortest_legs = all(
        len(path) == hops(u, w) for (_, u, w), path in zip(best_legs, best_combo)
    )
    loads: dict[str, Fraction] = {}
    for (weight, _, _), path in zip(best_legs, best_combo):
        for lid in path:
            loads[lid] = loads.get(lid, Fraction(0)) + weight
    slack = all(load < topo.link(lid).capacity for lid, load in loads.items())
    certificate = shortest_legs and slack

    placements: dict[str, list[str]] = {}
    for (cid, f), v in best_assign.items():
        placements.setdefault(v, []).append(f)
    for v in placements:
        placements[v] = sorted(set(placements[v]))

    # Reassemble per-demand routes from the chosen leg paths.
    routes: list[RouteDecode] = []
    seg_paths: dict[tuple[str, int], tuple[str, ...]] = {}
    leg_idx = 0
    for c in chains:
        for i in range(c.length - 1):
            seg_paths[(c.id, i)] = tuple(best_combo[leg_idx])
            leg_idx += 1
    for d in instance.demands:
        first_leg = tuple(best_combo[leg_idx])
        last_leg = tuple(best_combo[leg_idx + 1])
        leg_idx += 2
        c = instance.chain(d.chain)
        links = list(first_leg)
        for i in range(c.length - 1):
            links.extend(seg_paths[(d.chain, i)])
        links.extend(last_leg)
        nodes = [d.source]
        for lid in links:
            nodes.append(topo.link(lid).head)
        routes.append(RouteDecode(d.chain, d.source, d.destination, tuple(nodes), tuple(links)))

    note = "certified: shortest-path legs, slack capacity" if certificate else ""
    return OracleResult("optimal", float(best_cost), routes, placements, certificate, note)


def k_shortest_paths(
    topology: Topology, src: str, dst: str, k: int
) -> list[tuple[str, ...]]:
    """Up to k loopless minimum-hop paths (Yen), deterministic: ranked by
    length then lexicographic node sequence. src == dst yields the empty path."""
    if src == dst:
        return [()]
    first = _sp_excluding(topology, src, dst, set(), set())
    if first is None:
        return []
    paths = [first]
    candidates: list[tuple[int, tuple[str, ...], tuple[str, ...]]] = []
    while len(paths) < k:
        prev = paths[-1]
        prev_nodes = _node_seq(topology, src, prev)
        for i in range(len(prev_nodes) - 1):
            spur = prev_nodes[i]
            root = prev[:i]
            banned_links = set()
            for p in paths:
                p_nodes = _node_seq(topology, src, p)
                if p_nodes[: i + 1] == prev_nodes[: i + 1] and len(p) > i:
                    banned_links.add(p[i])
            banned_nodes = set(prev_nodes[:i])
            tail = _sp_excluding(topology, spur, dst, banned_links, banned_nodes)
            if tail is None:
                continue
            total = root + tail
            entry = (len(total), _node_seq(topology, src, total), total)
            if total not in paths and entry not in candidates:
                candidates.append(entry)
        if not candidates:
            break
        candidates.sort()
        paths.append(candidates.pop(0)[2])
    return paths


def _node_seq(topology: Topology, src: str, path: tuple[str, ...]) -> tuple[str, ...]:
    nodes = [src]
    for lid in path:
        nodes.append(topology.link(lid).head)
    return tuple(nodes)


def _sp_excluding(topology, src, dst, banned_links, banned_nodes):
    """Shortest path avoiding the given links/nodes, same lexicographic
    tie-break as model.shortest_path."""
    from collections import deque

    if src == dst:
        return ()
    dist = {v: None for v in topology.nodes}
    dist[dst] = 0
    queue = deque([dst])
    while queue:
        v = queue.popleft()
        for lk in topology.in_links(v):
            if lk.id in banned_links or lk.tail in banned_nodes:
                continue
            if dist[lk.tail] is None:
                dist[lk.tail] = dist[v] + 1
                queue.append(lk.tail)
    if dist[src] is None:
        return None
    path = []
    cur = src
    while cur != dst:
        best = None
        for lk in topology.out_links(cur):
            if lk.id in banned_links or lk.head in banned_nodes:
                continue
            if dist[lk.head] is not None and dist[lk.head] == dist[cur] - 1:
                if best is None or lk.head < best.head:
                    best = lk
        if best is None:
            return None
        path.append(best.id)
        cur = best.head
    return tuple(path)
